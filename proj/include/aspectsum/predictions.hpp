#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aspectsum {

struct PredictionEntry {
    std::string doc_id;
    double probability = 0.0;  // in [0,1]
    int label = 0;             // in {0,1}

    bool operator==(const PredictionEntry&) const = default;
};

struct RunDescriptor {
    std::string aspect;      // or integration strategy name
    std::string model_kind;  // e.g. bow_svm, zero_shot, external
    std::int64_t seed = 0;

    bool operator==(const RunDescriptor&) const = default;
};

// Per-document probability + binary label output of one model run.
// degenerate_probabilities marks lists whose labels were produced without
// real-valued scores (probabilities are exactly 0 or 1); ranking metrics
// are undefined for such lists.
struct PredictionList {
    std::vector<PredictionEntry> entries;
    RunDescriptor source;
    bool degenerate_probabilities = false;
    bool threshold_inconsistent = false;  // some label != [p >= 0.5]

    std::size_t size() const { return entries.size(); }
    std::vector<std::string> doc_ids() const;
    std::vector<double> probabilities() const;
    std::vector<int> labels() const;
};

// True when both lists cover the same doc_ids in the same order.
bool aligned(const PredictionList& a, const PredictionList& b);

// CSV with header doc_id,probability,label. Probabilities are written with
// nine significant digits.
std::string predictions_to_csv(const PredictionList& preds);
void save_predictions(const PredictionList& preds, const std::filesystem::path& path);

// Validating CSV reader. Rejects probabilities outside [0,1], labels outside
// {0,1} and duplicate doc ids. Labels inconsistent with the inclusive 0.5
// threshold set threshold_inconsistent instead of failing. A list whose
// probabilities are all exactly 0 or 1 is flagged degenerate.
PredictionList ingest_predictions(const std::filesystem::path& path);
PredictionList predictions_from_csv(const std::string& content,
                                    const std::string& origin = "<string>");

}  // namespace aspectsum
