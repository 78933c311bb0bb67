#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "lucid/backends.hpp"
#include "lucid/domain.hpp"
#include "lucid/errors.hpp"
#include "lucid/stats.hpp"

// Quantitative layer over a finished run log: attach wake-dream similarities,
// build the wake-wake negative control, grind out the correlation and
// distribution tests, and emit everything as plot-ready CSV tables.

namespace lucid {

// ---------------------------------------------------------------------------
// Similarity attachment
// ---------------------------------------------------------------------------

// Computes cosine(embed(idea_wake), embed(idea_dream)) and stores it on the
// record. Recomputes (and overwrites) when called again so the stored value
// always reflects the configured embedder. Records missing either idea are
// left unchanged apart from a one-time annotation.
inline bool attach_similarity(RunRecord& record, BackendRegistry& registry) {
    auto idea_dream = record.idea_dream();
    if (!record.idea_wake || !idea_dream) {
        std::string note = "similarity skipped: missing ";
        note += !record.idea_wake ? "idea_wake" : "idea_dream";
        if (std::find(record.annotations.begin(), record.annotations.end(), note) ==
            record.annotations.end())
            record.annotations.push_back(note);
        return false;
    }
    EmbeddingVector a = registry.embed(*record.idea_wake);
    EmbeddingVector b = registry.embed(*idea_dream);
    record.similarity = cosine_similarity(a.values, b.values);
    return true;
}

// ---------------------------------------------------------------------------
// Wake-wake negative control
// ---------------------------------------------------------------------------

struct WakeWakePair {
    std::string group;  // pair|template|word|wake_temperature
    std::int64_t id_a = 0;
    std::int64_t id_b = 0;
    double similarity = 0.0;
};

struct WakeWakeControl {
    std::vector<WakeWakePair> pairs;
    std::vector<std::string> warnings;  // singleton groups, noted and skipped
};

// Pairwise similarity of wake outputs produced under identical generation
// conditions. Dream temperature and seed vary within a group; nothing the
// wake stage sees does.
inline WakeWakeControl compute_wake_wake(const std::vector<RunRecord>& records,
                                         BackendRegistry& registry) {
    struct Member {
        std::int64_t id;
        const std::string* text;
    };
    std::map<std::string, std::vector<Member>> groups;
    for (const auto& r : records) {
        if (r.wake_out.empty()) continue;
        char key[160];
        std::snprintf(key, sizeof(key), "%s|t%d|w%d|wt%g", r.config.pair.id.c_str(),
                      r.config.template_id, r.config.word_limit, r.config.wake_temperature);
        groups[key].push_back({r.config.run_id, &r.wake_out});
    }

    WakeWakeControl out;
    for (auto& [key, members] : groups) {
        if (members.size() < 2) {
            out.warnings.push_back("group " + key + " has a single wake output; skipped");
            continue;
        }
        std::sort(members.begin(), members.end(),
                  [](const Member& a, const Member& b) { return a.id < b.id; });
        std::vector<EmbeddingVector> vecs;
        vecs.reserve(members.size());
        for (const auto& m : members) vecs.push_back(registry.embed(*m.text));
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j)
                out.pairs.push_back({key, members[i].id, members[j].id,
                                     cosine_similarity(vecs[i].values, vecs[j].values)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// High-quality filter
// ---------------------------------------------------------------------------

inline constexpr int kDefaultQualityThreshold = 14;

// Reviewed records with sum >= threshold, ordered by run id. Unreviewed
// records are simply not candidates.
inline std::vector<RunRecord> filter_high_quality(const std::vector<RunRecord>& records,
                                                  int threshold = kDefaultQualityThreshold) {
    std::vector<RunRecord> out;
    for (const auto& r : records)
        if (r.review && r.review->sum >= threshold) out.push_back(r);
    std::sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
        return a.config.run_id < b.config.run_id;
    });
    return out;
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

namespace detail_csv {

inline std::string escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline std::string row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

inline std::string num(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

// Reports round similarity to 3 decimals; storage keeps full precision.
inline std::string sim3(double v) { return num(v, "%.3f"); }
inline std::string stat(double v) { return num(v, "%.6g"); }
inline std::string temp(double v) { return num(v, "%g"); }

}  // namespace detail_csv

// ---------------------------------------------------------------------------
// Report bundle
// ---------------------------------------------------------------------------

struct ReportOptions {
    int high_quality_threshold = kDefaultQualityThreshold;
};

struct ReportFile {
    std::string name;
    std::string content;
};

// Emits the full table bundle. Pure over its inputs; empty inputs produce
// header-only files.
inline std::vector<ReportFile> build_report(const std::vector<RunRecord>& records,
                                            const WakeWakeControl& control,
                                            const ReportOptions& options = {}) {
    namespace csv = detail_csv;
    std::vector<ReportFile> files;

    std::vector<const RunRecord*> with_similarity;
    for (const auto& r : records)
        if (r.similarity) with_similarity.push_back(&r);
    std::sort(with_similarity.begin(), with_similarity.end(),
              [](const RunRecord* a, const RunRecord* b) {
                  return a->config.run_id < b->config.run_id;
              });

    // (a) wake-dream similarity, long form: one row per measured record.
    {
        std::string body =
            csv::row({"run_id", "pair", "template", "word", "temperature", "seed",
                      "similarity", "regime"});
        for (const RunRecord* r : with_similarity)
            body += csv::row({std::to_string(r->config.run_id), r->config.pair.id,
                              std::to_string(r->config.template_id),
                              std::to_string(r->config.word_limit),
                              csv::temp(r->config.dream_temperature),
                              std::to_string(r->config.seed), csv::sim3(*r->similarity),
                              regime_name(classify_similarity(*r->similarity))});
        files.push_back({"similarity_wake_dream.csv", std::move(body)});
    }

    // (b) wake-wake control pairs.
    {
        std::string body = csv::row({"group", "id_a", "id_b", "similarity"});
        for (const auto& p : control.pairs)
            body += csv::row({p.group, std::to_string(p.id_a), std::to_string(p.id_b),
                              csv::sim3(p.similarity)});
        files.push_back({"similarity_wake_wake.csv", std::move(body)});
    }

    // (c) score-vs-similarity scatter rows.
    {
        std::string body = csv::row(
            {"run_id", "pair", "similarity", "alignment", "coherence", "novelty", "sum"});
        for (const RunRecord* r : with_similarity) {
            if (!r->review) continue;
            body += csv::row({std::to_string(r->config.run_id), r->config.pair.id,
                              csv::sim3(*r->similarity), std::to_string(r->review->alignment),
                              std::to_string(r->review->coherence),
                              std::to_string(r->review->novelty),
                              std::to_string(r->review->sum)});
        }
        files.push_back({"scores_vs_similarity.csv", std::move(body)});
    }

    // (d) regime counts.
    {
        std::string body = csv::row({"regime", "count"});
        if (!with_similarity.empty()) {
            std::map<SimilarityRegime, int> counts{{SimilarityRegime::low, 0},
                                                   {SimilarityRegime::intermediate, 0},
                                                   {SimilarityRegime::high, 0}};
            for (const RunRecord* r : with_similarity)
                ++counts[classify_similarity(*r->similarity)];
            for (SimilarityRegime reg : {SimilarityRegime::low, SimilarityRegime::intermediate,
                                         SimilarityRegime::high})
                body += csv::row({regime_name(reg), std::to_string(counts[reg])});
        }
        files.push_back({"regime_counts.csv", std::move(body)});
    }

    // (e) Spearman rho per score dimension, pooled and per concept pair.
    {
        std::string body = csv::row({"scope", "dimension", "rho", "p_value", "method", "n"});
        struct Dim {
            const char* name;
            int ReviewScores::* member;
        };
        const Dim dims[] = {{"alignment", &ReviewScores::alignment},
                            {"coherence", &ReviewScores::coherence},
                            {"novelty", &ReviewScores::novelty},
                            {"sum", &ReviewScores::sum}};
        auto emit_scope = [&](const std::string& scope,
                              const std::vector<const RunRecord*>& subset) {
            for (const auto& dim : dims) {
                std::vector<double> xs, ys;
                for (const RunRecord* r : subset) {
                    if (!r->review) continue;
                    xs.push_back(*r->similarity);
                    ys.push_back(static_cast<double>(r->review.value().*dim.member));
                }
                if (xs.size() < 3) continue;
                try {
                    StatResult s = spearman(xs, ys);
                    body += csv::row({scope, dim.name, csv::stat(s.statistic),
                                      csv::stat(s.p_value.value_or(0.0)), s.method,
                                      std::to_string(s.n1)});
                } catch (const std::invalid_argument&) {
                    // Constant sample in this scope; no defined rho, no row.
                }
            }
        };
        emit_scope("pooled", with_similarity);
        std::map<std::string, std::vector<const RunRecord*>> by_pair;
        for (const RunRecord* r : with_similarity) by_pair[r->config.pair.id].push_back(r);
        for (const auto& [pair_id, subset] : by_pair) emit_scope(pair_id, subset);
        files.push_back({"spearman.csv", std::move(body)});
    }

    // (f) Mann-Whitney across dream temperatures, on similarity values.
    {
        std::string body = csv::row(
            {"temp_a", "temp_b", "u_statistic", "p_value", "method", "n1", "n2"});
        std::map<double, std::vector<double>> by_temp;
        for (const RunRecord* r : with_similarity)
            by_temp[r->config.dream_temperature].push_back(*r->similarity);
        std::vector<double> temps;
        for (const auto& [t, _] : by_temp) temps.push_back(t);
        for (std::size_t i = 0; i < temps.size(); ++i)
            for (std::size_t j = i + 1; j < temps.size(); ++j) {
                StatResult s = mann_whitney_u(by_temp[temps[i]], by_temp[temps[j]]);
                body += csv::row({csv::temp(temps[i]), csv::temp(temps[j]),
                                  csv::stat(s.statistic), csv::stat(s.p_value.value_or(0.0)),
                                  s.method, std::to_string(s.n1), std::to_string(s.n2)});
            }
        files.push_back({"mann_whitney_temperature.csv", std::move(body)});
    }

    // (g) high-quality subset, table-shaped.
    {
        std::string body =
            csv::row({"run_id", "pair", "template", "word", "temperature", "seed", "similarity",
                      "alignment", "coherence", "novelty", "sum", "rewake_out"});
        for (const auto& r : filter_high_quality(records, options.high_quality_threshold))
            body += csv::row({std::to_string(r.config.run_id), r.config.pair.id,
                              std::to_string(r.config.template_id),
                              std::to_string(r.config.word_limit),
                              csv::temp(r.config.dream_temperature),
                              std::to_string(r.config.seed),
                              r.similarity ? csv::sim3(*r.similarity) : std::string{},
                              std::to_string(r.review->alignment),
                              std::to_string(r.review->coherence),
                              std::to_string(r.review->novelty),
                              std::to_string(r.review->sum), r.rewake_out.value_or("")});
        files.push_back({"high_quality.csv", std::move(body)});
    }

    return files;
}

inline void write_reports(const std::filesystem::path& dir, const std::vector<ReportFile>& files) {
    std::filesystem::create_directories(dir);
    for (const auto& f : files) {
        std::ofstream out(dir / f.name, std::ios::trunc | std::ios::binary);
        if (!out) throw IoError("cannot write report file: " + (dir / f.name).string());
        out << f.content;
    }
}

}  // namespace lucid
