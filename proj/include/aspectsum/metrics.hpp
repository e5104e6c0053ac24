#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/corpus.hpp"
#include "aspectsum/predictions.hpp"

namespace aspectsum {

// Gold labels keyed by doc_id. Built from a corpus (optionally restricted to
// one split) and looked up per prediction, so a full-corpus gold map works
// against test-split predictions.
using GoldLabels = std::map<std::string, int>;

GoldLabels gold_from_corpus(const Corpus& corpus);
GoldLabels gold_from_corpus(const Corpus& corpus, Split split);

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

// Errors if a predicted document has no gold label.
ConfusionCounts confusion_counts(const PredictionList& preds, const GoldLabels& gold);
ConfusionCounts confusion_counts(const std::vector<int>& predicted, const std::vector<int>& gold);

// Positive/negative/macro F1 at the fixed 0.5 threshold. Every 0/0 ratio
// resolves to 0 and raises `degenerate` instead of NaN-ing the report.
struct F1Family {
    double precision_pos = 0.0;
    double recall_pos = 0.0;
    double f1_pos = 0.0;
    double f1_neg = 0.0;
    double f1_macro = 0.0;
    bool degenerate = false;
};

F1Family f1_family(const ConfusionCounts& counts);

// Rank-sum (Mann-Whitney) AUROC: the fraction of (positive, negative) pairs
// ranked correctly, ties worth 0.5. Empty when gold is single-class. The
// PredictionList overload is also empty when the list is flagged degenerate
// (labels without real scores cannot be ranked).
std::optional<double> auroc(const std::vector<double>& scores, const std::vector<int>& gold);
std::optional<double> auroc(const PredictionList& preds, const GoldLabels& gold);

// Average precision with step interpolation; tied scores are processed as
// one block and every positive in the block gets the block-end precision.
// Empty when gold is single-class or the list is flagged degenerate.
std::optional<double> auprc(const std::vector<double>& scores, const std::vector<int>& gold);
std::optional<double> auprc(const PredictionList& preds, const GoldLabels& gold);

// Mean predicted label. Errors on an empty list.
double positive_ratio(const PredictionList& preds);

struct MetricsReport {
    std::optional<double> auroc;  // empty: single-class gold or degenerate scores
    std::optional<double> auprc;
    double precision_pos = 0.0;
    double recall_pos = 0.0;
    double f1_pos = 0.0;
    double f1_neg = 0.0;
    double f1_macro = 0.0;
    double positive_prediction_ratio = 0.0;
    std::size_t k = 0;
    double threshold = 0.5;
    bool f1_degenerate = false;
    ConfusionCounts counts;
};

MetricsReport compute_metrics(const PredictionList& preds, const GoldLabels& gold);

// JSON/CSV rows use the summary-table labels: AUROC, AUPRC, MaAvg F1,
// Neg F1, Pos F1, plus positive_prediction_ratio. Undefined ranking metrics
// serialize as null / "undefined".
std::string metrics_to_json(const MetricsReport& report);
std::string metrics_to_csv(const MetricsReport& report);
void save_metrics(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport metrics_from_json(const std::string& content,
                                const std::string& origin = "<string>");
MetricsReport load_metrics(const std::filesystem::path& path);

}  // namespace aspectsum
