#include "aspectsum/infodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "aspectsum/util.hpp"
#include "json.hpp"

namespace aspectsum {

namespace {

// Counts pairs (i < j) with values[i] > values[j], strictly, by merge sort.
std::uint64_t count_strict_inversions(std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<double> buffer(n);
    std::uint64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t left = 0; left + width < n; left += 2 * width) {
            const std::size_t mid = left + width;
            const std::size_t right = std::min(left + 2 * width, n);
            std::size_t i = left, j = mid, out = left;
            while (i < mid && j < right) {
                if (values[j] < values[i]) {
                    inversions += mid - i;
                    buffer[out++] = values[j++];
                } else {
                    buffer[out++] = values[i++];
                }
            }
            while (i < mid) buffer[out++] = values[i++];
            while (j < right) buffer[out++] = values[j++];
            std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(left),
                      buffer.begin() + static_cast<std::ptrdiff_t>(right),
                      values.begin() + static_cast<std::ptrdiff_t>(left));
        }
    }
    return inversions;
}

std::uint64_t tie_pair_count(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::uint64_t ties = 0;
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i + 1;
        while (j < values.size() && values[j] == values[i]) ++j;
        const std::uint64_t run = j - i;
        ties += run * (run - 1) / 2;
        i = j;
    }
    return ties;
}

}  // namespace

std::vector<double> to_ranks(const std::vector<double>& values) {
    if (values.empty()) throw std::runtime_error("cannot rank an empty list");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        // Average rank of positions i..j-1 (1-based).
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

std::vector<double> to_ranks(const PredictionList& predictions) {
    return to_ranks(predictions.probabilities());
}

PairSimilarity kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::runtime_error("kendall_tau: lists differ in length");
    const std::size_t k = a.size();
    if (k < 2) throw std::runtime_error("kendall_tau needs at least 2 elements");

    // Ranks and raw values give the same pair structure; ranks keep the
    // reported counts aligned with the rank-list definition.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    PairSimilarity sim;
    sim.total_pairs = static_cast<std::uint64_t>(k) * (k - 1) / 2;
    sim.ties_first = tie_pair_count(a);
    sim.ties_second = tie_pair_count(b);

    // Joint ties from runs of equal (a, b) in the lexicographic order.
    std::uint64_t joint_ties = 0;
    {
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i + 1;
            while (j < k && a[order[j]] == a[order[i]] && b[order[j]] == b[order[i]]) ++j;
            const std::uint64_t run = j - i;
            joint_ties += run * (run - 1) / 2;
            i = j;
        }
    }

    // After sorting by (a, b), discordant pairs are exactly the strict
    // inversions of the b sequence.
    std::vector<double> b_sorted(k);
    for (std::size_t i = 0; i < k; ++i) b_sorted[i] = b[order[i]];
    const std::uint64_t discordant = count_strict_inversions(b_sorted);

    sim.discordant = discordant;
    sim.concordant = sim.total_pairs - sim.ties_first - sim.ties_second + joint_ties - discordant;

    if (sim.ties_first == sim.total_pairs || sim.ties_second == sim.total_pairs) {
        // All-tied list: zero radicand, tau undefined.
        return sim;
    }
    const double rad1 = static_cast<double>(sim.total_pairs - sim.ties_first);
    const double rad2 = static_cast<double>(sim.total_pairs - sim.ties_second);
    const double tau = (static_cast<double>(sim.concordant) - static_cast<double>(sim.discordant)) /
                       std::sqrt(rad1 * rad2);
    sim.tau = std::clamp(tau, -1.0, 1.0);
    sim.distance = (1.0 - *sim.tau) / 2.0;
    return sim;
}

PairSimilarity kendall_tau(const PredictionList& a, const PredictionList& b) {
    if (!aligned(a, b))
        throw std::runtime_error("kendall_tau: prediction lists cover different documents");
    return kendall_tau(to_ranks(a), to_ranks(b));
}

void check_group(const RunGroup& group) {
    if (group.runs.empty()) throw std::runtime_error("run group '" + group.aspect + "' is empty");
    for (std::size_t i = 1; i < group.runs.size(); ++i)
        if (!aligned(group.runs[0], group.runs[i]))
            throw std::runtime_error("run group '" + group.aspect +
                                     "' has runs over different documents");
}

namespace {

double pair_distance(const PredictionList& a, const PredictionList& b) {
    const PairSimilarity sim = kendall_tau(a, b);
    if (!sim.defined())
        throw std::runtime_error("undefined tau distance (an all-tied prediction list)");
    return *sim.distance;
}

}  // namespace

double intra_aspect_difference(const RunGroup& group) {
    check_group(group);
    const std::size_t n = group.runs.size();
    // Ordered pairs including i = j; the diagonal contributes zeros but
    // stays in the n^2 denominator.
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            sum += 2.0 * pair_distance(group.runs[i], group.runs[j]);
    return sum / static_cast<double>(n * n);
}

double intra_aspect_difference_offdiag(const RunGroup& group) {
    check_group(group);
    const std::size_t n = group.runs.size();
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            sum += 2.0 * pair_distance(group.runs[i], group.runs[j]);
    return sum / static_cast<double>(n * (n - 1));
}

double inter_aspect_difference(const RunGroup& group_a, const RunGroup& group_b) {
    check_group(group_a);
    check_group(group_b);
    if (!aligned(group_a.runs[0], group_b.runs[0]))
        throw std::runtime_error("inter_aspect_difference: groups cover different documents");
    double sum = 0.0;
    for (const PredictionList& a : group_a.runs)
        for (const PredictionList& b : group_b.runs) sum += pair_distance(a, b);
    return sum / static_cast<double>(group_a.size() * group_b.size());
}

AspectDifferenceReport build_difference_report(const std::vector<RunGroup>& groups) {
    if (groups.size() < 2)
        throw std::runtime_error("difference report needs at least two groups");
    for (const RunGroup& g : groups) check_group(g);
    for (std::size_t i = 1; i < groups.size(); ++i)
        if (!aligned(groups[0].runs[0], groups[i].runs[0]))
            throw std::runtime_error("groups cover different documents");

    AspectDifferenceReport report;
    report.k = groups[0].runs[0].size();
    for (const RunGroup& g : groups) {
        if (std::find(report.aspects.begin(), report.aspects.end(), g.aspect) !=
            report.aspects.end())
            throw std::runtime_error("duplicate group label '" + g.aspect + "'");
        report.aspects.push_back(g.aspect);
    }

    for (const RunGroup& g : groups) {
        report.intra[g.aspect] = intra_aspect_difference(g);
        report.intra_offdiag[g.aspect] = intra_aspect_difference_offdiag(g);
        for (std::size_t i = 0; i < g.runs.size(); ++i)
            for (std::size_t j = i + 1; j < g.runs.size(); ++j)
                report.pairs.push_back(
                    {g.aspect, i, g.aspect, j, true, kendall_tau(g.runs[i], g.runs[j])});
    }
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        for (std::size_t gj = gi + 1; gj < groups.size(); ++gj) {
            const RunGroup& ga = groups[gi];
            const RunGroup& gb = groups[gj];
            report.inter[ga.aspect + "|" + gb.aspect] = inter_aspect_difference(ga, gb);
            for (std::size_t i = 0; i < ga.runs.size(); ++i)
                for (std::size_t j = 0; j < gb.runs.size(); ++j)
                    report.pairs.push_back(
                        {ga.aspect, i, gb.aspect, j, false, kendall_tau(ga.runs[i], gb.runs[j])});
        }
    }
    return report;
}

namespace {

nlohmann::json similarity_json(const PairSimilarity& sim) {
    nlohmann::json obj{{"P", sim.concordant},   {"Q", sim.discordant}, {"N", sim.total_pairs},
                       {"T", sim.ties_first},   {"U", sim.ties_second}};
    obj["tau"] = sim.tau ? nlohmann::json(*sim.tau) : nlohmann::json(nullptr);
    obj["d"] = sim.distance ? nlohmann::json(*sim.distance) : nlohmann::json(nullptr);
    return obj;
}

}  // namespace

std::string report_to_json(const AspectDifferenceReport& report) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const PairDistanceRecord& rec : report.pairs) {
        nlohmann::json obj = similarity_json(rec.similarity);
        obj["aspect_a"] = rec.aspect_a;
        obj["run_a"] = rec.run_a;
        obj["aspect_b"] = rec.aspect_b;
        obj["run_b"] = rec.run_b;
        obj["kind"] = rec.intra ? "intra" : "inter";
        pairs.push_back(std::move(obj));
    }
    nlohmann::json obj{{"aspects", report.aspects},
                       {"k", report.k},
                       {"pairs", pairs},
                       {"intra", report.intra},
                       {"intra_offdiag", report.intra_offdiag},
                       {"inter", report.inter}};
    return obj.dump(2) + "\n";
}

void save_report(const AspectDifferenceReport& report, const std::filesystem::path& path) {
    write_file(path, report_to_json(report));
}

std::string report_pairs_csv(const AspectDifferenceReport& report) {
    std::string out = "aspect_a,run_a,aspect_b,run_b,kind,tau,d\n";
    for (const PairDistanceRecord& rec : report.pairs) {
        out += rec.aspect_a + "," + std::to_string(rec.run_a) + "," + rec.aspect_b + "," +
               std::to_string(rec.run_b) + "," + (rec.intra ? "intra" : "inter") + ",";
        out += rec.similarity.tau ? format_probability(*rec.similarity.tau) : "undefined";
        out += ",";
        out += rec.similarity.distance ? format_probability(*rec.similarity.distance) : "undefined";
        out += "\n";
    }
    return out;
}

std::string report_scores_csv(const AspectDifferenceReport& report) {
    std::string out = "combination,kind,variant,D\n";
    for (const std::string& aspect : report.aspects) {
        out += aspect + "," + "intra,n2," + format_probability(report.intra.at(aspect)) + "\n";
        out += aspect + "," + "intra,offdiag," +
               format_probability(report.intra_offdiag.at(aspect)) + "\n";
    }
    for (const auto& [key, value] : report.inter)
        out += key + ",inter,cross," + format_probability(value) + "\n";
    return out;
}

}  // namespace aspectsum
