#include "aspectsum/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "aspectsum/infodiff.hpp"
#include "aspectsum/util.hpp"
#include "json.hpp"

namespace aspectsum {

GoldLabels gold_from_corpus(const Corpus& corpus) {
    GoldLabels gold;
    for (const Document& doc : corpus.documents()) gold[doc.doc_id] = doc.label;
    return gold;
}

GoldLabels gold_from_corpus(const Corpus& corpus, Split split) {
    GoldLabels gold;
    for (const Document& doc : corpus.documents())
        if (corpus.split_of(doc.doc_id) == split) gold[doc.doc_id] = doc.label;
    return gold;
}

namespace {

std::vector<int> gold_vector(const PredictionList& preds, const GoldLabels& gold) {
    std::vector<int> out;
    out.reserve(preds.size());
    for (const PredictionEntry& e : preds.entries) {
        auto it = gold.find(e.doc_id);
        if (it == gold.end())
            throw std::runtime_error("no gold label for predicted document '" + e.doc_id + "'");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

ConfusionCounts confusion_counts(const std::vector<int>& predicted,
                                 const std::vector<int>& gold) {
    if (predicted.size() != gold.size())
        throw std::runtime_error("confusion_counts: label lists differ in length");
    ConfusionCounts counts;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (gold[i] == 1)
            (predicted[i] == 1 ? counts.tp : counts.fn) += 1;
        else
            (predicted[i] == 1 ? counts.fp : counts.tn) += 1;
    }
    return counts;
}

ConfusionCounts confusion_counts(const PredictionList& preds, const GoldLabels& gold) {
    return confusion_counts(preds.labels(), gold_vector(preds, gold));
}

namespace {

double safe_ratio(double num, double den, bool& degenerate) {
    if (den == 0.0) {
        degenerate = true;
        return 0.0;
    }
    return num / den;
}

}  // namespace

F1Family f1_family(const ConfusionCounts& c) {
    F1Family f;
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    f.precision_pos = safe_ratio(tp, tp + fp, f.degenerate);
    f.recall_pos = safe_ratio(tp, tp + fn, f.degenerate);
    f.f1_pos = safe_ratio(2.0 * f.precision_pos * f.recall_pos, f.precision_pos + f.recall_pos,
                          f.degenerate);
    const double precision_neg = safe_ratio(tn, tn + fn, f.degenerate);
    const double recall_neg = safe_ratio(tn, tn + fp, f.degenerate);
    f.f1_neg =
        safe_ratio(2.0 * precision_neg * recall_neg, precision_neg + recall_neg, f.degenerate);
    f.f1_macro = (f.f1_pos + f.f1_neg) / 2.0;
    return f;
}

std::optional<double> auroc(const std::vector<double>& scores, const std::vector<int>& gold) {
    if (scores.size() != gold.size())
        throw std::runtime_error("auroc: scores and gold differ in length");
    if (scores.empty()) throw std::runtime_error("auroc: empty input");
    const std::uint64_t n_pos = static_cast<std::uint64_t>(std::count(gold.begin(), gold.end(), 1));
    const std::uint64_t n_neg = gold.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    // Average ranks give tied pairs their 0.5 credit automatically.
    const std::vector<double> ranks = to_ranks(scores);
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        if (gold[i] == 1) rank_sum_pos += ranks[i];
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::optional<double> auroc(const PredictionList& preds, const GoldLabels& gold) {
    if (preds.degenerate_probabilities) return std::nullopt;
    return auroc(preds.probabilities(), gold_vector(preds, gold));
}

std::optional<double> auprc(const std::vector<double>& scores, const std::vector<int>& gold) {
    if (scores.size() != gold.size())
        throw std::runtime_error("auprc: scores and gold differ in length");
    if (scores.empty()) throw std::runtime_error("auprc: empty input");
    const std::uint64_t n_pos = static_cast<std::uint64_t>(std::count(gold.begin(), gold.end(), 1));
    const std::uint64_t n_neg = gold.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];  // descending
    });

    double ap = 0.0;
    std::uint64_t tp = 0, seen = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::uint64_t block_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (gold[order[j]] == 1) ++block_pos;
            ++j;
        }
        tp += block_pos;
        seen += j - i;
        // Every positive in the tied block gets the block-end precision.
        ap += static_cast<double>(block_pos) * static_cast<double>(tp) /
              static_cast<double>(seen);
        i = j;
    }
    return ap / static_cast<double>(n_pos);
}

std::optional<double> auprc(const PredictionList& preds, const GoldLabels& gold) {
    if (preds.degenerate_probabilities) return std::nullopt;
    return auprc(preds.probabilities(), gold_vector(preds, gold));
}

double positive_ratio(const PredictionList& preds) {
    if (preds.entries.empty()) throw std::runtime_error("positive_ratio: empty prediction list");
    std::uint64_t positives = 0;
    for (const PredictionEntry& e : preds.entries) positives += e.label == 1 ? 1 : 0;
    return static_cast<double>(positives) / static_cast<double>(preds.size());
}

MetricsReport compute_metrics(const PredictionList& preds, const GoldLabels& gold) {
    if (preds.entries.empty()) throw std::runtime_error("compute_metrics: empty prediction list");
    MetricsReport report;
    report.k = preds.size();
    report.counts = confusion_counts(preds, gold);
    const F1Family f = f1_family(report.counts);
    report.precision_pos = f.precision_pos;
    report.recall_pos = f.recall_pos;
    report.f1_pos = f.f1_pos;
    report.f1_neg = f.f1_neg;
    report.f1_macro = f.f1_macro;
    report.f1_degenerate = f.degenerate;
    report.auroc = auroc(preds, gold);
    report.auprc = auprc(preds, gold);
    report.positive_prediction_ratio = positive_ratio(preds);
    return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& value) {
    return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) {
    nlohmann::json obj{{"AUROC", optional_json(report.auroc)},
                       {"AUPRC", optional_json(report.auprc)},
                       {"MaAvg F1", report.f1_macro},
                       {"Neg F1", report.f1_neg},
                       {"Pos F1", report.f1_pos},
                       {"positive_prediction_ratio", report.positive_prediction_ratio},
                       {"precision_pos", report.precision_pos},
                       {"recall_pos", report.recall_pos},
                       {"k", report.k},
                       {"threshold", report.threshold},
                       {"f1_degenerate", report.f1_degenerate},
                       {"confusion",
                        {{"tp", report.counts.tp},
                         {"fp", report.counts.fp},
                         {"tn", report.counts.tn},
                         {"fn", report.counts.fn}}}};
    return obj.dump(2) + "\n";
}

namespace {

std::string metric_row(const std::string& name, const std::optional<double>& value) {
    return name + "," + (value ? format_probability(*value) : "undefined") + "\n";
}

}  // namespace

std::string metrics_to_csv(const MetricsReport& report) {
    std::string out = "metric,value\n";
    out += metric_row("AUROC", report.auroc);
    out += metric_row("AUPRC", report.auprc);
    out += metric_row("MaAvg F1", report.f1_macro);
    out += metric_row("Neg F1", report.f1_neg);
    out += metric_row("Pos F1", report.f1_pos);
    out += metric_row("positive_prediction_ratio", report.positive_prediction_ratio);
    return out;
}

void save_metrics(const MetricsReport& report, const std::filesystem::path& path) {
    write_file(path, metrics_to_json(report));
}

MetricsReport metrics_from_json(const std::string& content, const std::string& origin) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(content);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
    MetricsReport report;
    try {
        if (!obj.at("AUROC").is_null()) report.auroc = obj["AUROC"].get<double>();
        if (!obj.at("AUPRC").is_null()) report.auprc = obj["AUPRC"].get<double>();
        report.f1_macro = obj.at("MaAvg F1").get<double>();
        report.f1_neg = obj.at("Neg F1").get<double>();
        report.f1_pos = obj.at("Pos F1").get<double>();
        report.positive_prediction_ratio = obj.at("positive_prediction_ratio").get<double>();
        report.precision_pos = obj.at("precision_pos").get<double>();
        report.recall_pos = obj.at("recall_pos").get<double>();
        report.k = obj.at("k").get<std::size_t>();
        report.threshold = obj.at("threshold").get<double>();
        report.f1_degenerate = obj.at("f1_degenerate").get<bool>();
        const nlohmann::json& c = obj.at("confusion");
        report.counts = {c.at("tp").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(),
                         c.at("tn").get<std::uint64_t>(), c.at("fn").get<std::uint64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
    return report;
}

MetricsReport load_metrics(const std::filesystem::path& path) {
    return metrics_from_json(read_file(path), path.string());
}

}  // namespace aspectsum
