#pragma once
// Brute-force reference implementations used only by the tests. They are
// deliberately independent of the library's algorithms: quadratic pair
// counting and direct evaluation of the definitions, no sorting tricks.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

struct PairCounts {
    std::uint64_t concordant = 0;   // P
    std::uint64_t discordant = 0;   // Q
    std::uint64_t ties_first = 0;   // T (joint ties count here too)
    std::uint64_t ties_second = 0;  // U (and here)
    std::uint64_t total = 0;        // N = k(k-1)/2
};

inline PairCounts count_pairs(const std::vector<double>& a, const std::vector<double>& b) {
    PairCounts c;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            ++c.total;
            const bool tie_a = a[i] == a[j];
            const bool tie_b = b[i] == b[j];
            if (tie_a) ++c.ties_first;
            if (tie_b) ++c.ties_second;
            if (tie_a || tie_b) continue;
            if ((a[i] < a[j]) == (b[i] < b[j]))
                ++c.concordant;
            else
                ++c.discordant;
        }
    }
    return c;
}

inline std::optional<double> kendall_tau(const std::vector<double>& a,
                                         const std::vector<double>& b) {
    const PairCounts c = count_pairs(a, b);
    const double nt = static_cast<double>(c.total) - static_cast<double>(c.ties_first);
    const double nu = static_cast<double>(c.total) - static_cast<double>(c.ties_second);
    if (nt <= 0.0 || nu <= 0.0) return std::nullopt;
    return (static_cast<double>(c.concordant) - static_cast<double>(c.discordant)) /
           std::sqrt(nt * nu);
}

inline std::optional<double> tau_distance(const std::vector<double>& a,
                                          const std::vector<double>& b) {
    const std::optional<double> tau = kendall_tau(a, b);
    if (!tau) return std::nullopt;
    return (1.0 - *tau) / 2.0;
}

// Fraction of (positive, negative) pairs ranked correctly, ties half credit.
inline std::optional<double> auroc(const std::vector<double>& scores,
                                   const std::vector<int>& gold) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (gold[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (gold[j] != 0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    if (pairs == 0.0) return std::nullopt;
    return wins / pairs;
}

// Average precision via its per-positive form: each positive contributes the
// precision of the prefix of all items scoring at least as high (block-end
// precision under ties, so every positive in a tied block gets the same
// prefix). Mean over positives.
inline std::optional<double> auprc(const std::vector<double>& scores,
                                   const std::vector<int>& gold) {
    std::size_t n_pos = 0;
    for (int g : gold) n_pos += (g == 1);
    if (n_pos == 0 || n_pos == gold.size()) return std::nullopt;
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (gold[i] != 1) continue;
        double at_least = 0.0, pos_at_least = 0.0;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (scores[j] >= scores[i]) {
                at_least += 1.0;
                if (gold[j] == 1) pos_at_least += 1.0;
            }
        }
        sum += pos_at_least / at_least;
    }
    return sum / static_cast<double>(n_pos);
}

// Tiny deterministic generator for randomized comparisons: splitmix64 core,
// independent of the library's hashing and of std distribution internals.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [lo, hi].
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
        return lo + next() % (hi - lo + 1);
    }
};

// Random score list; tied=true draws from a small grid so ties are common.
inline std::vector<double> random_scores(Rng& rng, std::size_t k, bool tied) {
    std::vector<double> scores(k);
    for (double& s : scores)
        s = tied ? static_cast<double>(rng.range(0, 7)) / 7.0 : rng.uniform();
    return scores;
}

}  // namespace oracle
