#include <catch2/catch_amalgamated.hpp>

#include <set>

#include <lucid/sweep.hpp>

#include "support.hpp"

using namespace lucid;

namespace {

SweepSpec small_spec() {
    SweepSpec spec;
    spec.pairs = {{ConceptPair{"time", "space", ""}, std::nullopt}};
    spec.template_ids = {1, 3};
    spec.word_limits = {75, 150};
    spec.temperatures = {1.0, 10.0};
    spec.seeds = {0, 1};
    spec.run_id_base = 100;
    return spec;
}

// Offline deterministic profile: stochastic texts, hash-derived verdicts.
struct MockWorld {
    lucid::BackendRegistry registry;
    MockWorld() {
        auto gen = std::make_shared<SeededStochasticBackend>("gen-mock");
        registry.bind(Role::wake, gen);
        registry.bind(Role::dream, gen);
        registry.bind(Role::rewake, gen);
        registry.bind(Role::judge, std::make_shared<MockJudgeBackend>());
        registry.bind(Role::review, std::make_shared<MockReviewBackend>());
        registry.bind_embedder(std::make_shared<HashEmbeddingBackend>(64));
        registry.set_retry(0, std::chrono::milliseconds(0));
    }
};

json strip_timestamps(const RunRecord& r) {
    json j = r;
    j.erase("started_at");
    j.erase("finished_at");
    return j;
}

}  // namespace

TEST_CASE("enumerate_configs walks pair, template, word, temperature, seed") {
    auto configs = enumerate_configs(small_spec());
    REQUIRE(configs.size() == 16);

    // Sequential ids from the base.
    for (std::size_t i = 0; i < configs.size(); ++i)
        REQUIRE(configs[i].run_id == 100 + static_cast<std::int64_t>(i));

    // Seed is the innermost dimension, template the outermost after the pair.
    REQUIRE(configs[0].template_id == 1);
    REQUIRE(configs[0].word_limit == 75);
    REQUIRE(configs[0].dream_temperature == 1.0);
    REQUIRE(configs[0].seed == 0);
    REQUIRE(configs[1].seed == 1);
    REQUIRE(configs[2].dream_temperature == 10.0);
    REQUIRE(configs[2].seed == 0);
    REQUIRE(configs[4].word_limit == 150);
    REQUIRE(configs[8].template_id == 3);
    REQUIRE(configs[8].word_limit == 75);

    // Pair id was derived, shared temperatures applied.
    for (const auto& c : configs) {
        REQUIRE(c.pair.id == "time_space");
        REQUIRE(c.wake_temperature == 0.6);
        REQUIRE(c.judge_temperature == 0.0);
    }
}

TEST_CASE("default grid is 135 configurations per pair") {
    SweepSpec spec;
    spec.pairs = {{ConceptPair{"time", "space", ""}, std::nullopt}};
    REQUIRE(enumerate_configs(spec).size() == 135);  // 3 * 3 * 3 * 5

    spec.pairs.push_back({ConceptPair{"periodic table", "tarot divination", ""}, std::nullopt});
    auto configs = enumerate_configs(spec);
    REQUIRE(configs.size() == 270);
    // Without a per-pair base the counter keeps running.
    REQUIRE(configs[135].run_id == 135);
    REQUIRE(configs[135].pair.id == "periodic_table_tarot_divination");
}

TEST_CASE("per-pair run id bases restart the counter") {
    SweepSpec spec = small_spec();
    spec.pairs.push_back({ConceptPair{"periodic table", "tarot divination", ""}, 500});
    auto configs = enumerate_configs(spec);
    REQUIRE(configs.size() == 32);
    REQUIRE(configs[0].run_id == 100);
    REQUIRE(configs[16].run_id == 500);
    REQUIRE(configs[31].run_id == 515);
}

TEST_CASE("validate_spec rejects degenerate grids") {
    auto bad = small_spec();
    bad.pairs.clear();
    REQUIRE_THROWS_AS(enumerate_configs(bad), ConfigError);
    bad = small_spec();
    bad.template_ids = {4};
    REQUIRE_THROWS_AS(enumerate_configs(bad), ConfigError);
    bad = small_spec();
    bad.word_limits = {0};
    REQUIRE_THROWS_AS(enumerate_configs(bad), ConfigError);
    bad = small_spec();
    bad.temperatures = {0.0};
    REQUIRE_THROWS_AS(enumerate_configs(bad), ConfigError);
    bad = small_spec();
    bad.seeds.clear();
    REQUIRE_THROWS_AS(enumerate_configs(bad), ConfigError);
    bad = small_spec();
    bad.run_id_base = -1;
    REQUIRE_THROWS_AS(enumerate_configs(bad), ConfigError);
}

TEST_CASE("execute_sweep writes every configuration once, in order") {
    support::TempDir tmp;
    auto log = tmp / "sweep.jsonl";
    MockWorld world;
    Pipeline pipeline(world.registry, PromptPack::builtin());
    json header{{"config", {{"profile", "mock"}}}};

    auto summary = execute_sweep(small_spec(), pipeline, log, header);
    REQUIRE(summary.completed + summary.failed == 16);
    REQUIRE(summary.skipped == 0);

    auto data = load_run_log(log);
    REQUIRE(data.header == header);
    REQUIRE(data.records.size() == 16);
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        REQUIRE(data.records[i].config.run_id == 100 + static_cast<std::int64_t>(i));
        REQUIRE(validate_record(data.records[i]).empty());
        REQUIRE_FALSE(data.records[i].config_hash.empty());
    }

    SECTION("a second invocation skips everything") {
        auto again = execute_sweep(small_spec(), pipeline, log, header);
        REQUIRE(again.skipped == 16);
        REQUIRE(again.completed == 0);
        REQUIRE(again.failed == 0);
        REQUIRE(load_run_log(log).records.size() == 16);
    }
    SECTION("a pair appended to the grid runs only the new cells") {
        auto wider = small_spec();
        wider.pairs.push_back({ConceptPair{"tea", "clocks", ""}, std::nullopt});
        auto more = execute_sweep(wider, pipeline, log, header);
        REQUIRE(more.skipped == 16);
        REQUIRE(more.completed + more.failed == 16);
        auto all = load_run_log(log);
        REQUIRE(all.records.size() == 32);
        // Appended after the originals, still unique ids.
        std::set<std::int64_t> ids;
        for (const auto& r : all.records) ids.insert(r.config.run_id);
        REQUIRE(ids.size() == 32);
        REQUIRE(all.records[16].config.pair.id == "tea_clocks");
    }
    SECTION("widening an inner dimension renumbers cells and refuses to resume") {
        auto wider = small_spec();
        wider.seeds = {0, 1, 2};  // seed is innermost: run 102 would change meaning
        REQUIRE_THROWS_WITH(execute_sweep(wider, pipeline, log, header),
                            Catch::Matchers::ContainsSubstring("different configuration"));
    }
    SECTION("a changed engine option refuses to resume") {
        PipelineOptions opts;
        opts.gate_threshold = 5;
        Pipeline stricter(world.registry, PromptPack::builtin(), opts);
        REQUIRE_THROWS_WITH(execute_sweep(small_spec(), stricter, log, header),
                            Catch::Matchers::ContainsSubstring("different configuration"));
    }
}

TEST_CASE("execute_sweep resumes after an interrupted run") {
    support::TempDir tmp;
    auto log = tmp / "sweep.jsonl";
    MockWorld world;
    Pipeline pipeline(world.registry, PromptPack::builtin());
    json header{{"config", {{"profile", "mock"}}}};

    // Simulate an interruption: run the full sweep, then chop the log after
    // the header plus five records.
    execute_sweep(small_spec(), pipeline, log, header);
    auto original = load_run_log(log).records;
    auto full = support::read_file(log);
    std::size_t pos = 0;
    for (int newline = 0; newline < 6; ++newline) pos = full.find('\n', pos) + 1;
    support::write_file(log, full.substr(0, pos));

    auto resumed = execute_sweep(small_spec(), pipeline, log, header);
    REQUIRE(resumed.skipped == 5);
    REQUIRE(resumed.completed + resumed.failed == 11);

    auto after = load_run_log(log).records;
    REQUIRE(after.size() == original.size());
    for (std::size_t i = 0; i < after.size(); ++i)
        REQUIRE(strip_timestamps(after[i]) == strip_timestamps(original[i]));
}

TEST_CASE("parallel sweep output is identical to sequential modulo timestamps") {
    support::TempDir tmp;
    MockWorld w1, w4;
    Pipeline p1(w1.registry, PromptPack::builtin());
    Pipeline p4(w4.registry, PromptPack::builtin());
    json header{{"config", {{"profile", "mock"}}}};

    auto seq_log = tmp / "seq.jsonl";
    auto par_log = tmp / "par.jsonl";
    execute_sweep(small_spec(), p1, seq_log, header, 1);
    execute_sweep(small_spec(), p4, par_log, header, 4);

    auto seq = load_run_log(seq_log);
    auto par = load_run_log(par_log);
    REQUIRE(seq.records.size() == par.records.size());
    for (std::size_t i = 0; i < seq.records.size(); ++i)
        REQUIRE(strip_timestamps(seq.records[i]) == strip_timestamps(par.records[i]));

    REQUIRE_THROWS_AS(execute_sweep(small_spec(), p1, seq_log, header, 0), ConfigError);
}

TEST_CASE("retry_failed re-runs exactly the failed records") {
    support::TempDir tmp;
    auto log = tmp / "sweep.jsonl";
    json header{{"config", {{"profile", "scripted"}}}};

    // Scripted world: the dream stage fails only for the word-75 prompts.
    auto w = support::happy_world();
    w.dream->fail_transport("within 75 words");
    w.registry.set_retry(0, std::chrono::milliseconds(0));
    Pipeline pipeline(w.registry, PromptPack::builtin());

    auto spec = small_spec();
    auto summary = execute_sweep(spec, pipeline, log, header);
    REQUIRE(summary.failed == 8);  // two templates x one word limit x 2 temps x 2 seeds
    REQUIRE(summary.completed == 8);

    auto before = load_run_log(log);
    std::vector<std::int64_t> failed_ids;
    for (const auto& r : before.records)
        if (r.failed_stage) failed_ids.push_back(r.config.run_id);
    REQUIRE(failed_ids.size() == 8);

    SECTION("with the outage still on, retry reports still_failed") {
        auto rs = retry_failed(pipeline, log);
        REQUIRE(rs.retried == 8);
        REQUIRE(rs.still_failed == 8);
    }
    SECTION("after the outage clears, retry heals the log in place") {
        auto healed_world = support::happy_world();
        healed_world.registry.set_retry(0, std::chrono::milliseconds(0));
        Pipeline healed(healed_world.registry, PromptPack::builtin());
        auto rs = retry_failed(healed, log);
        REQUIRE(rs.retried == 8);
        REQUIRE(rs.still_failed == 0);

        auto after = load_run_log(log);
        REQUIRE(after.header == before.header);
        REQUIRE(after.records.size() == before.records.size());
        for (std::size_t i = 0; i < after.records.size(); ++i) {
            const auto& now = after.records[i];
            const auto& was = before.records[i];
            REQUIRE(now.config.run_id == was.config.run_id);  // order preserved
            REQUIRE_FALSE(now.failed_stage);
            if (!was.failed_stage) REQUIRE(now == was);  // healthy records untouched
        }
        // A second retry pass finds nothing to do.
        auto rs2 = retry_failed(healed, log);
        REQUIRE(rs2.retried == 0);
    }
    SECTION("a changed engine option refuses to retry") {
        PipelineOptions opts;
        opts.gate_threshold = 5;
        Pipeline stricter(w.registry, PromptPack::builtin(), opts);
        REQUIRE_THROWS_WITH(retry_failed(stricter, log),
                            Catch::Matchers::ContainsSubstring("refusing to retry"));
    }
}

TEST_CASE("sweep records from the mock profile carry similarities when gated") {
    support::TempDir tmp;
    auto log = tmp / "sweep.jsonl";
    MockWorld world;
    Pipeline pipeline(world.registry, PromptPack::builtin());
    execute_sweep(small_spec(), pipeline, log, json{{"config", json::object()}});

    auto data = load_run_log(log);
    int with_sim = 0;
    for (const auto& r : data.records) {
        if (r.idea_wake && r.idea_dream()) {
            REQUIRE(r.similarity.has_value());
            ++with_sim;
        } else {
            REQUIRE_FALSE(r.similarity.has_value());
        }
    }
    REQUIRE(with_sim > 0);
}
