// Command-line front end: run | sweep | analyze | review | report, all driven
// by one JSON config file. Any config value can be overridden with
// --set dotted.path=value; the common ones also have dedicated flags.
// Summaries go to stdout as single JSON objects; diagnostics go to stderr.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <lucid/lucid.hpp>

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string log_override;
    std::string report_dir_override;
    std::string prompt_dir_override;
    int jobs_override = 0;
    int gate_override = 0;
    std::string dream_context_override;
    int threshold_override = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "Engine config file (JSON)")->required();
    cmd->add_option("--set", args.overrides,
                    "Override any config value, e.g. --set roles.wake.model=foo");
    cmd->add_option("--log", args.log_override, "Override the run log path");
    cmd->add_option("--report-dir", args.report_dir_override, "Override the report directory");
    cmd->add_option("--prompt-dir", args.prompt_dir_override, "Override the prompt directory");
    cmd->add_option("--jobs", args.jobs_override, "Worker count for sweep/review");
    cmd->add_option("--gate-threshold", args.gate_override, "Judge consistency gate (1-5)");
    cmd->add_option("--dream-context", args.dream_context_override,
                    "Dream context mode: with_wake or prompt_only");
    cmd->add_option("--threshold", args.threshold_override,
                    "High-quality sum threshold for reports");
    cmd->fallthrough();
}

lucid::EngineConfig load_config(const CommonArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw lucid::ConfigError("cannot read config file: " + args.config_path);
    lucid::json doc = lucid::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw lucid::ConfigError("config file is not valid JSON: " + args.config_path);

    for (const std::string& kv : args.overrides) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw lucid::ConfigError("--set expects key=value, got: " + kv);
        lucid::apply_override(doc, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.log_override.empty()) doc["log"] = args.log_override;
    if (!args.report_dir_override.empty()) doc["report_dir"] = args.report_dir_override;
    if (!args.prompt_dir_override.empty()) doc["prompt_dir"] = args.prompt_dir_override;
    if (args.jobs_override > 0) doc["jobs"] = args.jobs_override;
    if (args.gate_override > 0) doc["gate_threshold"] = args.gate_override;
    if (!args.dream_context_override.empty()) doc["dream_context"] = args.dream_context_override;
    if (args.threshold_override > 0) doc["high_quality_threshold"] = args.threshold_override;

    return lucid::parse_engine_config(doc);
}

struct Engine {
    lucid::EngineConfig cfg;
    lucid::BackendRegistry registry;
    lucid::PromptPack pack;

    explicit Engine(const CommonArgs& args) : cfg(load_config(args)) {
        lucid::build_registry(cfg, registry);
        pack = lucid::load_prompts(cfg);
    }

    lucid::Pipeline pipeline() { return lucid::Pipeline(registry, pack, cfg.pipeline); }
};

int cmd_run(const CommonArgs& args, const std::string& pair_arg, int template_id, int words,
            double temp, std::uint64_t seed, std::int64_t run_id) {
    Engine engine(args);

    std::size_t comma = pair_arg.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == pair_arg.size())
        throw lucid::ConfigError("--pair expects two comma-separated concepts");

    lucid::RunConfig config;
    config.pair.x = pair_arg.substr(0, comma);
    config.pair.y = pair_arg.substr(comma + 1);
    config.pair.id = lucid::make_pair_id(config.pair.x, config.pair.y);
    config.template_id = template_id;
    config.word_limit = words;
    config.dream_temperature = temp;
    config.seed = seed;
    config.wake_temperature = engine.cfg.sweep.wake_temperature;
    config.judge_temperature = engine.cfg.sweep.judge_temperature;

    lucid::RunLogData existing = lucid::load_run_log_or_empty(engine.cfg.log_path);
    if (run_id >= 0) {
        config.run_id = run_id;
    } else {
        config.run_id = engine.cfg.sweep.run_id_base;
        for (const auto& r : existing.records)
            config.run_id = std::max(config.run_id, r.config.run_id + 1);
    }

    lucid::Pipeline pipeline = engine.pipeline();
    lucid::RunRecord record = pipeline.run(config);

    lucid::RunLogWriter writer =
        lucid::RunLogWriter::open(engine.cfg.log_path, lucid::make_header_payload(engine.cfg));
    writer.append(record);

    std::cout << lucid::json(record).dump(2) << "\n";
    return record.failed_stage ? 1 : 0;
}

int cmd_sweep(const CommonArgs& args, bool retry) {
    Engine engine(args);
    if (!engine.cfg.has_sweep)
        throw lucid::ConfigError("config has no sweep section");

    lucid::Pipeline pipeline = engine.pipeline();
    if (retry) {
        lucid::RetrySummary s =
            lucid::retry_failed(pipeline, engine.cfg.log_path, engine.cfg.jobs);
        std::cout << lucid::json{{"retried", s.retried}, {"still_failed", s.still_failed}}.dump()
                  << "\n";
        return s.still_failed > 0 ? 1 : 0;
    }
    lucid::SweepSummary s =
        lucid::execute_sweep(engine.cfg.sweep, pipeline, engine.cfg.log_path,
                             lucid::make_header_payload(engine.cfg), engine.cfg.jobs);
    std::cout << lucid::json{{"completed", s.completed},
                             {"failed", s.failed},
                             {"skipped", s.skipped}}
                     .dump()
              << "\n";
    return s.failed > 0 ? 1 : 0;
}

int cmd_analyze(const CommonArgs& args) {
    Engine engine(args);
    if (!engine.registry.has_embedder())
        throw lucid::ConfigError("analyze needs an embedding backend in the config");

    lucid::RunLogData data = lucid::load_run_log(engine.cfg.log_path);
    if (data.recovery_note) std::cerr << "note: " << *data.recovery_note << "\n";

    int attached = 0, skipped = 0, failed = 0;
    for (auto& record : data.records) {
        try {
            if (lucid::attach_similarity(record, engine.registry))
                ++attached;
            else
                ++skipped;
        } catch (const std::exception& e) {
            std::string note = std::string("embedding failed: ") + e.what();
            record.annotations.push_back(note);
            ++failed;
        }
    }
    lucid::rewrite_run_log(engine.cfg.log_path, data.header, data.records);
    std::cout << lucid::json{{"attached", attached}, {"skipped", skipped}, {"failed", failed}}
                     .dump()
              << "\n";
    return failed > 0 ? 1 : 0;
}

int cmd_review(const CommonArgs& args, bool overwrite) {
    Engine engine(args);

    lucid::RunLogData data = lucid::load_run_log(engine.cfg.log_path);
    if (data.recovery_note) std::cerr << "note: " << *data.recovery_note << "\n";

    lucid::ReviewOptions opts = engine.cfg.review;
    opts.overwrite = overwrite;
    lucid::ReviewSummary s = lucid::review_records(data.records, engine.registry, engine.pack,
                                                   opts, engine.cfg.jobs);
    lucid::rewrite_run_log(engine.cfg.log_path, data.header, data.records);
    std::cout << lucid::json{{"reviewed", s.reviewed},
                             {"skipped", s.skipped},
                             {"failed", s.failed}}
                     .dump()
              << "\n";
    return s.failed > 0 ? 1 : 0;
}

int cmd_report(const CommonArgs& args) {
    Engine engine(args);
    if (!engine.registry.has_embedder())
        throw lucid::ConfigError("report needs an embedding backend in the config");

    lucid::RunLogData data = lucid::load_run_log(engine.cfg.log_path);
    if (data.recovery_note) std::cerr << "note: " << *data.recovery_note << "\n";

    lucid::WakeWakeControl control = lucid::compute_wake_wake(data.records, engine.registry);
    for (const auto& w : control.warnings) std::cerr << "note: " << w << "\n";

    lucid::ReportOptions opts;
    opts.high_quality_threshold = engine.cfg.high_quality_threshold;
    std::vector<lucid::ReportFile> files = lucid::build_report(data.records, control, opts);
    lucid::write_reports(engine.cfg.report_dir, files);

    lucid::json names = lucid::json::array();
    for (const auto& f : files) names.push_back(f.name);
    std::cout << lucid::json{{"records", data.records.size()},
                             {"report_dir", engine.cfg.report_dir.string()},
                             {"files", names}}
                     .dump()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-stage ideation pipeline: wake, dream, judge, re-wake"};
    app.require_subcommand(1);

    CommonArgs common;

    auto* run = app.add_subcommand("run", "Execute a single pipeline run and append it");
    std::string pair_arg;
    int template_id = 1, words = 150;
    double temp = 1.0;
    std::uint64_t seed = 0;
    std::int64_t run_id = -1;
    run->add_option("--pair", pair_arg, "Concept pair as x,y")->required();
    run->add_option("--template", template_id, "Ideation template id (1-3)");
    run->add_option("--words", words, "Word limit Z");
    run->add_option("--temp", temp, "Dream temperature");
    run->add_option("--seed", seed, "Sampling seed");
    run->add_option("--id", run_id, "Run id (default: next free id)");
    add_common(run, common);

    auto* sweep = app.add_subcommand("sweep", "Execute or resume the configured grid");
    bool retry = false;
    sweep->add_flag("--retry-failed", retry, "Re-execute failed records instead of sweeping");
    add_common(sweep, common);

    auto* analyze = app.add_subcommand("analyze", "Attach wake-dream similarities to the log");
    add_common(analyze, common);

    auto* review = app.add_subcommand("review", "Score final outputs with the review backend");
    bool overwrite = false;
    review->add_flag("--overwrite", overwrite, "Re-score records that already have reviews");
    add_common(review, common);

    auto* report = app.add_subcommand("report", "Emit the CSV report bundle");
    add_common(report, common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(common, pair_arg, template_id, words, temp, seed, run_id);
        if (sweep->parsed()) return cmd_sweep(common, retry);
        if (analyze->parsed()) return cmd_analyze(common);
        if (review->parsed()) return cmd_review(common, overwrite);
        if (report->parsed()) return cmd_report(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
