#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/predictions.hpp"

namespace aspectsum {

// 1-based ranks with average-rank tie handling; rank sum is k(k+1)/2.
std::vector<double> to_ranks(const std::vector<double>& values);
std::vector<double> to_ranks(const PredictionList& predictions);

// Tie-corrected (tau-b) rank correlation between two prediction lists over
// the same documents:
//
//   tau = (P - Q) / sqrt((N - T)(N - U)),   N = k(k-1)/2
//
// P and Q count concordant and discordant pairs; T and U count the pairs
// tied in the first and second list respectively (a pair tied in both lists
// counts toward both T and U, and toward neither P nor Q). This matches the
// standard tau-b convention of common scientific-computing libraries.
// tau and distance are empty when either list is entirely tied (zero
// radicand), never silently zero.
struct PairSimilarity {
    std::optional<double> tau;       // in [-1, 1]
    std::optional<double> distance;  // d = (1 - tau) / 2, in [0, 1]
    std::uint64_t concordant = 0;    // P
    std::uint64_t discordant = 0;    // Q
    std::uint64_t total_pairs = 0;   // N
    std::uint64_t ties_first = 0;    // T
    std::uint64_t ties_second = 0;   // U

    bool defined() const { return tau.has_value(); }
};

// O(k log k): lexicographic sort + merge-sort inversion count. The O(k^2)
// pair-counting oracle lives in the tests as the correctness reference.
PairSimilarity kendall_tau(const PredictionList& a, const PredictionList& b);
PairSimilarity kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

// Seeded repetitions of one training condition over the same documents.
struct RunGroup {
    std::string aspect;
    std::vector<PredictionList> runs;

    std::size_t size() const { return runs.size(); }
};

void check_group(const RunGroup& group);

// Mean tau-based distance over all n^2 ordered run pairs, zero diagonal
// included, so the value lies in [0, (n-1)/n]. n = 1 gives 0.
double intra_aspect_difference(const RunGroup& group);

// Off-diagonal variant: mean over the n(n-1) ordered pairs with i != j.
// Emitted alongside the n^2 form for transparency; 0 when n < 2.
double intra_aspect_difference_offdiag(const RunGroup& group);

// Mean distance over all n*m cross pairs; symmetric in its arguments.
double inter_aspect_difference(const RunGroup& group_a, const RunGroup& group_b);

struct PairDistanceRecord {
    std::string aspect_a;
    std::size_t run_a = 0;
    std::string aspect_b;
    std::size_t run_b = 0;
    bool intra = false;
    PairSimilarity similarity;
};

// Dataset-level difference scores plus the per-pair distances needed to
// redraw the box plot and bar chart. Box-plot records cover unordered
// off-diagonal intra pairs and all cross pairs per unordered aspect pair;
// the diagonal's guaranteed zeros are left out of the record list but kept
// in the n^2 intra score.
struct AspectDifferenceReport {
    std::vector<std::string> aspects;           // group order
    std::size_t k = 0;                          // documents per run
    std::vector<PairDistanceRecord> pairs;
    std::map<std::string, double> intra;          // n^2 denominator
    std::map<std::string, double> intra_offdiag;  // n(n-1) denominator
    std::map<std::string, double> inter;          // key "a|b", a before b in group order
};

AspectDifferenceReport build_difference_report(const std::vector<RunGroup>& groups);

std::string report_to_json(const AspectDifferenceReport& report);
void save_report(const AspectDifferenceReport& report, const std::filesystem::path& path);

// CSV exports for plotting: one row per pair distance, one row per D score.
std::string report_pairs_csv(const AspectDifferenceReport& report);
std::string report_scores_csv(const AspectDifferenceReport& report);

}  // namespace aspectsum
