#include "aspectsum/integrate.hpp"

#include <algorithm>
#include <stdexcept>

#include "aspectsum/util.hpp"

namespace aspectsum {

namespace {

void check_set_aspect(const SummarySet& set, Aspect expected, const char* which) {
    if (set.aspect != expected)
        throw std::runtime_error(std::string("the ") + which + " argument is tagged '" +
                                 to_string(set.aspect) + "', expected '" + to_string(expected) +
                                 "'");
}

void check_sets_aligned(const SummarySet& a, const SummarySet& b) {
    if (a.records.size() != b.records.size())
        throw std::runtime_error("summary sets differ in size (" +
                                 std::to_string(a.records.size()) + " vs " +
                                 std::to_string(b.records.size()) + ")");
    for (std::size_t i = 0; i < a.records.size(); ++i)
        if (a.records[i].doc_id != b.records[i].doc_id)
            throw std::runtime_error("summary sets are misaligned at position " +
                                     std::to_string(i) + " ('" + a.records[i].doc_id + "' vs '" +
                                     b.records[i].doc_id + "')");
}

void check_unique_ids(const SummarySet& set) {
    std::vector<std::string> ids;
    ids.reserve(set.records.size());
    for (const SummaryRecord& rec : set.records) ids.push_back(rec.doc_id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw std::runtime_error("duplicate doc_id within one summary set");
}

void check_three(const SummarySet& plain, const SummarySet& risk, const SummarySet& time) {
    check_set_aspect(plain, Aspect::plain, "plain");
    check_set_aspect(risk, Aspect::riskfactor, "riskfactor");
    check_set_aspect(time, Aspect::timeline, "timeline");
    check_unique_ids(plain);
    check_sets_aligned(plain, risk);
    check_sets_aligned(plain, time);
}

}  // namespace

MergedDataset build_merged(const SummarySet& plain, const SummarySet& risk,
                           const SummarySet& time, const std::string& separator) {
    check_three(plain, risk, time);
    MergedDataset merged;
    merged.records.reserve(plain.records.size());
    for (std::size_t i = 0; i < plain.records.size(); ++i) {
        MergedRecord rec;
        rec.doc_id = plain.records[i].doc_id;
        rec.text = plain.records[i].summary_text + separator + risk.records[i].summary_text +
                   separator + time.records[i].summary_text;
        rec.token_count = count_ws_tokens(rec.text);
        merged.records.push_back(std::move(rec));
    }
    return merged;
}

UnionDataset build_union(const SummarySet& plain, const SummarySet& risk, const SummarySet& time,
                         bool prepend_aspect_header) {
    check_three(plain, risk, time);
    UnionDataset out;
    out.records.reserve(3 * plain.records.size());
    for (const SummarySet* set : {&plain, &risk, &time}) {
        for (std::size_t i = 0; i < set->records.size(); ++i) {
            const SummaryRecord& src = set->records[i];
            UnionRecord rec;
            rec.doc_id = src.doc_id;
            rec.aspect = src.aspect;
            rec.source_index = i;
            rec.text = prepend_aspect_header ? to_string(src.aspect) + " summary: " + src.summary_text
                                             : src.summary_text;
            rec.token_count = src.token_count;
            rec.truncated = src.truncated;
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

SummarySet UnionDataset::filter(Aspect aspect) const {
    SummarySet set;
    set.aspect = aspect;
    for (const UnionRecord& rec : records) {
        if (rec.aspect != aspect) continue;
        set.records.push_back(
            SummaryRecord{rec.doc_id, rec.aspect, rec.text, rec.token_count, rec.truncated});
    }
    return set;
}

namespace {

void check_lists_aligned(const PredictionList& a, const PredictionList& b) {
    if (!aligned(a, b))
        throw std::runtime_error("prediction lists cover different documents or orders");
}

VoteResult pooled(const PredictionList& plain, const PredictionList& risk,
                  const PredictionList& time, bool softvote) {
    check_lists_aligned(plain, risk);
    check_lists_aligned(plain, time);

    VoteResult result;
    result.predictions.source =
        RunDescriptor{softvote ? "softvote" : "anyvote", plain.source.model_kind,
                      plain.source.seed};

    for (const PredictionList* list : {&plain, &risk, &time})
        if (list->threshold_inconsistent)
            result.warnings.push_back("input list '" + list->source.aspect +
                                      "' has labels inconsistent with the 0.5 threshold");

    for (std::size_t i = 0; i < plain.entries.size(); ++i) {
        PooledPrediction pp;
        pp.doc_id = plain.entries[i].doc_id;
        const PredictionEntry* in[3] = {&plain.entries[i], &risk.entries[i], &time.entries[i]};
        for (int a = 0; a < 3; ++a) {
            pp.p[a] = in[a]->probability;
            pp.y[a] = in[a]->label;
        }
        if (softvote) {
            pp.pooled_p = (pp.p[0] + pp.p[1] + pp.p[2]) / 3.0;
            pp.pooled_y = pp.pooled_p >= 0.5 ? 1 : 0;
        } else {
            pp.pooled_p = std::max({pp.p[0], pp.p[1], pp.p[2]});
            pp.pooled_y = (pp.y[0] | pp.y[1] | pp.y[2]) != 0 ? 1 : 0;
            if (pp.pooled_y != (pp.pooled_p >= 0.5 ? 1 : 0))
                result.predictions.threshold_inconsistent = true;
        }
        result.predictions.entries.push_back(
            PredictionEntry{pp.doc_id, pp.pooled_p, pp.pooled_y});
        result.detail.push_back(std::move(pp));
    }
    return result;
}

}  // namespace

VoteResult soft_vote(const PredictionList& plain, const PredictionList& risk,
                     const PredictionList& time) {
    for (const PredictionList* list : {&plain, &risk, &time})
        if (list->degenerate_probabilities)
            throw std::runtime_error("soft voting needs real-valued probabilities; input '" +
                                     list->source.aspect + "' is flagged degenerate");
    return pooled(plain, risk, time, /*softvote=*/true);
}

VoteResult any_vote(const PredictionList& plain, const PredictionList& risk,
                    const PredictionList& time) {
    VoteResult result = pooled(plain, risk, time, /*softvote=*/false);
    if (plain.degenerate_probabilities && risk.degenerate_probabilities &&
        time.degenerate_probabilities)
        result.predictions.degenerate_probabilities = true;
    return result;
}

namespace {

Corpus with_replaced_texts(const Corpus& corpus,
                           const std::vector<std::pair<std::string, const std::string*>>& texts) {
    if (texts.size() != corpus.size())
        throw std::runtime_error("replacement texts do not cover the corpus");
    std::vector<Document> docs = corpus.documents();
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (texts[i].first != docs[i].doc_id)
            throw std::runtime_error("replacement texts are misaligned at position " +
                                     std::to_string(i));
        docs[i].text = *texts[i].second;
    }
    return Corpus(std::move(docs), corpus.split_assignment());
}

}  // namespace

Corpus corpus_with_texts(const Corpus& corpus, const SummarySet& set) {
    check_alignment(set, corpus);
    std::vector<std::pair<std::string, const std::string*>> texts;
    texts.reserve(set.records.size());
    for (const SummaryRecord& rec : set.records) texts.emplace_back(rec.doc_id, &rec.summary_text);
    return with_replaced_texts(corpus, texts);
}

Corpus corpus_with_texts(const Corpus& corpus, const MergedDataset& merged) {
    std::vector<std::pair<std::string, const std::string*>> texts;
    texts.reserve(merged.records.size());
    for (const MergedRecord& rec : merged.records) texts.emplace_back(rec.doc_id, &rec.text);
    return with_replaced_texts(corpus, texts);
}

}  // namespace aspectsum
