#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

// Statistics used by the analysis layer: cosine similarity between embeddings,
// Spearman rank correlation, and the Mann-Whitney U test. The U test switches
// between exact enumeration (small samples) and a tie-corrected normal
// approximation (everything else); the chosen method is reported back so the
// caller can print it.

namespace lucid {

struct StatResult {
    double statistic = 0.0;
    std::optional<double> p_value;
    std::string method;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

// ---------------------------------------------------------------------------
// Cosine similarity
// ---------------------------------------------------------------------------

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    if (a.empty()) throw std::invalid_argument("cosine_similarity: empty vectors");
    // Bitwise-identical inputs short-circuit to exactly 1.0 so self-similarity
    // never drifts by a rounding step.
    if (a == b) {
        bool all_zero = std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; });
        if (all_zero) throw std::invalid_argument("cosine_similarity: zero vector");
        return 1.0;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("cosine_similarity: zero vector");
    double v = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(v, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Ranking helpers
// ---------------------------------------------------------------------------

// Average ranks (1-based); ties share the mean of the ranks they span.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&x](std::size_t i, std::size_t j) { return x[i] < x[j]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double r = 0.5 * static_cast<double>(i + j) + 1.0;  // mean of ranks i+1..j+1
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson: need two equal-length samples of size >= 2");
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson: constant sample");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Spearman rank correlation
// ---------------------------------------------------------------------------

// rho from average ranks; two-sided p via the t approximation
// t = rho * sqrt((n-2) / (1-rho^2)) with n-2 degrees of freedom.
inline StatResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 3)
        throw std::invalid_argument("spearman: need at least 3 observations");
    StatResult res;
    res.n1 = res.n2 = x.size();
    res.method = "spearman_t_approx";
    double rho = pearson(average_ranks(x), average_ranks(y));
    res.statistic = rho;
    const double n = static_cast<double>(x.size());
    if (std::abs(rho) >= 1.0) {
        res.p_value = 0.0;
        return res;
    }
    double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
    boost::math::students_t dist(n - 2.0);
    res.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return res;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U
// ---------------------------------------------------------------------------

namespace detail_stats {

// Upper tail of the standard normal, numerically stable for large z.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// U statistic for the observations selected by mask (as sample a) against the
// rest, given precomputed average ranks of the pooled sample.
inline double u_from_ranks(const std::vector<double>& ranks, std::uint32_t mask,
                           std::size_t n1) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i)
        if (mask & (1u << i)) rank_sum += ranks[i];
    return rank_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
}

}  // namespace detail_stats

// Two-sided Mann-Whitney U test. U counts pairs (a_i, b_j) with a_i > b_j,
// ties counting half. For pooled sizes up to 12 the p-value is exact: every
// assignment of labels to the pooled sample is enumerated and we report the
// fraction with |U - mu| >= |U_obs - mu|. Larger samples use the normal
// approximation with tie correction and 0.5 continuity correction.
inline StatResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("mann_whitney_u: empty sample");
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

    std::vector<double> pooled;
    pooled.reserve(n);
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> ranks = average_ranks(pooled);

    double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(n1), 0.0);
    const double u_obs = rank_sum_a - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
    const double mu = 0.5 * static_cast<double>(n1) * static_cast<double>(n2);

    StatResult res;
    res.statistic = u_obs;
    res.n1 = n1;
    res.n2 = n2;

    if (n <= 12) {
        res.method = "mann_whitney_exact";
        const double target = std::abs(u_obs - mu);
        const double eps = 1e-9;
        std::uint64_t extreme = 0, total = 0;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != n1) continue;
            ++total;
            double u = detail_stats::u_from_ranks(ranks, mask, n1);
            if (std::abs(u - mu) >= target - eps) ++extreme;
        }
        res.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        return res;
    }

    res.method = "mann_whitney_normal";
    // Tie correction over groups of equal pooled values.
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double nd = static_cast<double>(n);
    double sigma2 = (static_cast<double>(n1) * static_cast<double>(n2) / 12.0) *
                    (nd + 1.0 - tie_term / (nd * (nd - 1.0)));
    if (sigma2 <= 0.0) {
        // All pooled values identical: no evidence either way.
        res.p_value = 1.0;
        return res;
    }
    double z = (std::abs(u_obs - mu) - 0.5) / std::sqrt(sigma2);
    if (z < 0.0) z = 0.0;
    res.p_value = std::min(1.0, 2.0 * detail_stats::normal_sf(z));
    return res;
}

// ---------------------------------------------------------------------------
// Similarity regimes
// ---------------------------------------------------------------------------

enum class SimilarityRegime { low, intermediate, high };

inline constexpr double kRegimeLowMax = 0.4;   // below this: low
inline constexpr double kRegimeHighMin = 0.7;  // above this: high

// Boundaries belong to the intermediate band.
inline SimilarityRegime classify_similarity(double s) {
    if (!std::isfinite(s) || s < -1.0 || s > 1.0)
        throw std::invalid_argument("similarity outside [-1,1]");
    if (s < kRegimeLowMax) return SimilarityRegime::low;
    if (s > kRegimeHighMin) return SimilarityRegime::high;
    return SimilarityRegime::intermediate;
}

inline const char* regime_name(SimilarityRegime r) {
    switch (r) {
        case SimilarityRegime::low: return "low";
        case SimilarityRegime::intermediate: return "intermediate";
        case SimilarityRegime::high: return "high";
    }
    return "?";
}

}  // namespace lucid
