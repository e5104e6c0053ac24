#pragma once

#include <string>
#include <vector>

#include "aspectsum/predictions.hpp"
#include "aspectsum/summarize.hpp"

namespace aspectsum {

// The phrase placed between adjacent summaries of one merged record.
inline const std::string kMergedSeparator = " Another summary ";

struct MergedRecord {
    std::string doc_id;
    std::string text;  // plain + sep + riskfactor + sep + timeline
    std::size_t token_count = 0;
};

struct MergedDataset {
    std::vector<MergedRecord> records;  // one per document, corpus order

    std::size_t size() const { return records.size(); }
};

struct UnionRecord {
    std::string doc_id;
    Aspect aspect = Aspect::plain;
    std::size_t source_index = 0;  // position in the aspect's SummarySet
    std::string text;
    std::size_t token_count = 0;  // of the source summary
    bool truncated = false;
};

// All records of the three summary sets, aspect-tagged: all plain, then all
// riskfactor, then all timeline. 3k records for k documents.
struct UnionDataset {
    std::vector<UnionRecord> records;

    std::size_t size() const { return records.size(); }
    SummarySet filter(Aspect aspect) const;
};

// Per-index concatenation in fixed plain -> riskfactor -> timeline order;
// the separator appears exactly twice per record. Errors on misaligned or
// wrongly-tagged sets.
MergedDataset build_merged(const SummarySet& plain, const SummarySet& risk,
                           const SummarySet& time, const std::string& separator = kMergedSeparator);

// prepend_aspect_header=true prefixes each record's text with
// "<aspect> summary:" — off by default; the plain concatenation is the
// reference behavior.
UnionDataset build_union(const SummarySet& plain, const SummarySet& risk, const SummarySet& time,
                         bool prepend_aspect_header = false);

struct PooledPrediction {
    std::string doc_id;
    // Inputs in fixed aspect order plain, riskfactor, timeline.
    double p[3] = {0, 0, 0};
    int y[3] = {0, 0, 0};
    double pooled_p = 0.0;
    int pooled_y = 0;
};

struct VoteResult {
    PredictionList predictions;
    std::vector<PooledPrediction> detail;
    std::vector<std::string> warnings;
};

// Mean probability, inclusive 0.5 threshold. Errors on misalignment or a
// degenerate-flagged input.
VoteResult soft_vote(const PredictionList& plain, const PredictionList& risk,
                     const PredictionList& time);

// Max probability, OR of labels. Inputs whose labels disagree with the
// inclusive 0.5 threshold produce a warning (and are pooled as given).
VoteResult any_vote(const PredictionList& plain, const PredictionList& risk,
                    const PredictionList& time);

// Summary text in place of the original note, labels and splits preserved.
// Used to train on summaries, merged records, or union records.
Corpus corpus_with_texts(const Corpus& corpus, const SummarySet& set);
Corpus corpus_with_texts(const Corpus& corpus, const MergedDataset& merged);

}  // namespace aspectsum
