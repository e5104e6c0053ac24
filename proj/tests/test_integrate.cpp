#include <algorithm>
#include <string>
#include <vector>

#include "aspectsum/corpus.hpp"
#include "aspectsum/integrate.hpp"
#include "aspectsum/llm_client.hpp"
#include "aspectsum/summarize.hpp"
#include "aspectsum/util.hpp"
#include "doctest.h"

using namespace aspectsum;

namespace {

SummarySet set_of(Aspect aspect, const std::vector<std::string>& texts) {
    SummarySet set;
    set.aspect = aspect;
    for (std::size_t i = 0; i < texts.size(); ++i)
        set.records.push_back(SummaryRecord{"d" + std::to_string(i), aspect, texts[i],
                                            count_ws_tokens(texts[i]), false});
    return set;
}

PredictionList list_of(const std::vector<double>& probabilities,
                       const std::string& aspect) {
    PredictionList preds;
    for (std::size_t i = 0; i < probabilities.size(); ++i)
        preds.entries.push_back({"d" + std::to_string(i), probabilities[i],
                                 probabilities[i] >= 0.5 ? 1 : 0});
    preds.source = {aspect, "bow_svm", 101};
    return preds;
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

double median_tokens(const std::vector<std::size_t>& counts) {
    std::vector<std::size_t> sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    return n % 2 == 1 ? double(sorted[n / 2])
                      : (double(sorted[n / 2 - 1]) + double(sorted[n / 2])) / 2.0;
}

}  // namespace

TEST_SUITE("integrate") {

TEST_CASE("merged records concatenate in fixed order with the separator twice") {
    const SummarySet plain = set_of(Aspect::plain, {"A"});
    const SummarySet risk = set_of(Aspect::riskfactor, {"B"});
    const SummarySet time = set_of(Aspect::timeline, {"C"});
    const MergedDataset merged = build_merged(plain, risk, time);
    REQUIRE(merged.size() == 1);
    CHECK(merged.records[0].text == "A Another summary B Another summary C");
    CHECK(count_occurrences(merged.records[0].text, kMergedSeparator) == 2);
    CHECK(merged.records[0].token_count == 7);  // 1 + 1 + 1 + 4 separator tokens
    CHECK(merged.records[0].doc_id == "d0");
}

TEST_CASE("merged token count is the sum of parts plus four") {
    const SummarySet plain =
        set_of(Aspect::plain, {"one two three", "a b", "lone"});
    const SummarySet risk =
        set_of(Aspect::riskfactor, {"four five", "c", "wolf howls"});
    const SummarySet time =
        set_of(Aspect::timeline, {"six", "d e f g", "at dusk tonight"});
    const MergedDataset merged = build_merged(plain, risk, time);
    for (std::size_t i = 0; i < merged.size(); ++i) {
        const std::size_t expected = plain.records[i].token_count +
                                     risk.records[i].token_count +
                                     time.records[i].token_count + 4;
        CHECK(merged.records[i].token_count == expected);
        CHECK(count_occurrences(merged.records[i].text, kMergedSeparator) == 2);
    }

    SUBCASE("custom separator") {
        const MergedDataset custom = build_merged(plain, risk, time, " | ");
        CHECK(custom.records[0].text == "one two three | four five | six");
    }
    SUBCASE("empty input gives an empty dataset") {
        CHECK(build_merged(set_of(Aspect::plain, {}), set_of(Aspect::riskfactor, {}),
                           set_of(Aspect::timeline, {}))
                  .size() == 0);
    }
}

TEST_CASE("merged length sits around three times one aspect") {
    // Offline-generated summaries: per-record merged length is exactly the
    // sum, so the median ratio lands near 3.
    std::vector<Document> docs;
    std::map<std::string, Split> assignment;
    for (int i = 0; i < 9; ++i) {
        Document d;
        d.doc_id = "doc" + std::to_string(i);
        d.patient_id = "pat" + std::to_string(i);
        d.label = i % 2;
        d.text = "OVERVIEW: stable patient alpha" + std::to_string(i) +
                 " with unremarkable labs today. RISK FACTORS: diabetes and smoking marker" +
                 std::to_string(i) + " noted. COURSE TIMELINE: admitted then discharged event" +
                 std::to_string(i) + " quickly.";
        docs.push_back(d);
        assignment[d.doc_id] = Split::train;
    }
    const Corpus corpus(docs, assignment);
    MockLlmClient client(7);
    LlmEndpointConfig endpoint;
    const SummarySet plain =
        summarize_corpus(corpus, default_prompt(Aspect::plain), client, endpoint).set;
    const SummarySet risk =
        summarize_corpus(corpus, default_prompt(Aspect::riskfactor), client, endpoint).set;
    const SummarySet time =
        summarize_corpus(corpus, default_prompt(Aspect::timeline), client, endpoint).set;
    const MergedDataset merged = build_merged(plain, risk, time);

    std::vector<std::size_t> aspect_counts, merged_counts;
    for (const SummaryRecord& rec : plain.records) aspect_counts.push_back(rec.token_count);
    for (const MergedRecord& rec : merged.records) merged_counts.push_back(rec.token_count);
    const double ratio = median_tokens(merged_counts) / median_tokens(aspect_counts);
    CHECK(ratio >= 2.0);
    CHECK(ratio <= 4.0);
}

TEST_CASE("merged construction rejects bad inputs") {
    const SummarySet plain = set_of(Aspect::plain, {"A", "B"});
    const SummarySet risk = set_of(Aspect::riskfactor, {"C", "D"});
    const SummarySet time = set_of(Aspect::timeline, {"E", "F"});

    SUBCASE("size mismatch") {
        CHECK_THROWS_WITH(build_merged(plain, risk, set_of(Aspect::timeline, {"E"})),
                          doctest::Contains("differ in size"));
    }
    SUBCASE("document order mismatch") {
        SummarySet shuffled = risk;
        std::swap(shuffled.records[0], shuffled.records[1]);
        CHECK_THROWS_WITH(build_merged(plain, shuffled, time),
                          doctest::Contains("misaligned"));
    }
    SUBCASE("wrong aspect tag") {
        CHECK_THROWS_WITH(build_merged(risk, risk, time), doctest::Contains("tagged"));
    }
    SUBCASE("duplicate doc ids") {
        SummarySet dup = plain;
        dup.records[1].doc_id = dup.records[0].doc_id;
        SummarySet dup_r = risk, dup_t = time;
        dup_r.records[1].doc_id = dup_r.records[0].doc_id;
        dup_t.records[1].doc_id = dup_t.records[0].doc_id;
        CHECK_THROWS_WITH(build_merged(dup, dup_r, dup_t), doctest::Contains("duplicate"));
    }
}

TEST_CASE("union stacks the three sets and partitions back exactly") {
    const SummarySet plain = set_of(Aspect::plain, {"p0 text", "p1 text"});
    const SummarySet risk = set_of(Aspect::riskfactor, {"r0 text", "r1 text"});
    const SummarySet time = set_of(Aspect::timeline, {"t0 text", "t1 text"});
    const UnionDataset uni = build_union(plain, risk, time);
    REQUIRE(uni.size() == 6);

    CHECK(uni.records[0].aspect == Aspect::plain);
    CHECK(uni.records[2].aspect == Aspect::riskfactor);
    CHECK(uni.records[4].aspect == Aspect::timeline);
    CHECK(uni.records[1].source_index == 1);
    CHECK(uni.records[3].doc_id == "d1");
    CHECK(uni.records[0].text == "p0 text");

    // Filtering by aspect recovers each source set byte-for-byte.
    CHECK(summaries_to_jsonl(uni.filter(Aspect::plain)) == summaries_to_jsonl(plain));
    CHECK(summaries_to_jsonl(uni.filter(Aspect::riskfactor)) == summaries_to_jsonl(risk));
    CHECK(summaries_to_jsonl(uni.filter(Aspect::timeline)) == summaries_to_jsonl(time));

    SUBCASE("aspect headers are opt-in") {
        const UnionDataset tagged = build_union(plain, risk, time, true);
        CHECK(tagged.records[0].text == "plain summary: p0 text");
        CHECK(tagged.records[2].text == "riskfactor summary: r0 text");
        CHECK(tagged.records[4].text == "timeline summary: t0 text");
    }
    SUBCASE("misalignment is rejected like merged") {
        CHECK_THROWS(build_union(plain, risk, set_of(Aspect::timeline, {"only one"})));
    }
}

TEST_CASE("soft vote averages probabilities with an inclusive threshold") {
    const PredictionList plain = list_of({0.9, 0.2, 0.5, 0.6}, "plain");
    const PredictionList risk = list_of({0.6, 0.1, 0.5, 0.2}, "riskfactor");
    const PredictionList time = list_of({0.3, 0.3, 0.5, 0.1}, "timeline");
    const VoteResult vote = soft_vote(plain, risk, time);
    REQUIRE(vote.predictions.size() == 4);
    CHECK(vote.predictions.entries[0].probability ==
          doctest::Approx(0.6).epsilon(1e-12));
    CHECK(vote.predictions.entries[0].label == 1);
    CHECK(vote.predictions.entries[1].probability ==
          doctest::Approx(0.2).epsilon(1e-12));
    CHECK(vote.predictions.entries[1].label == 0);
    // (0.5, 0.5, 0.5) pools to exactly 0.5 and the threshold is inclusive.
    CHECK(vote.predictions.entries[2].probability == 0.5);
    CHECK(vote.predictions.entries[2].label == 1);
    CHECK(vote.predictions.entries[3].probability == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(vote.predictions.entries[3].label == 0);
    CHECK(vote.predictions.source.aspect == "softvote");
    CHECK(vote.warnings.empty());

    SUBCASE("detail rows carry the inputs in aspect order") {
        const PooledPrediction& pp = vote.detail[0];
        CHECK(pp.p[0] == 0.9);
        CHECK(pp.p[1] == 0.6);
        CHECK(pp.p[2] == 0.3);
        CHECK(pp.y[0] == 1);
        CHECK(pp.pooled_y == 1);
    }
    SUBCASE("pooled probability stays within the inputs' range") {
        for (const PooledPrediction& pp : vote.detail) {
            CHECK(pp.pooled_p >= std::min({pp.p[0], pp.p[1], pp.p[2]}));
            CHECK(pp.pooled_p <= std::max({pp.p[0], pp.p[1], pp.p[2]}));
        }
    }
    SUBCASE("the pooled mean is permutation invariant") {
        const VoteResult swapped = soft_vote(time, plain, risk);
        for (std::size_t i = 0; i < vote.predictions.size(); ++i) {
            CHECK(swapped.predictions.entries[i].probability ==
                  doctest::Approx(vote.predictions.entries[i].probability).epsilon(1e-12));
            CHECK(swapped.predictions.entries[i].label ==
                  vote.predictions.entries[i].label);
        }
    }
}

TEST_CASE("soft vote refuses degenerate inputs loudly") {
    const PredictionList plain = list_of({0.9, 0.2}, "plain");
    const PredictionList risk = list_of({0.6, 0.1}, "riskfactor");
    PredictionList flat = list_of({1.0, 0.0}, "timeline");
    flat.degenerate_probabilities = true;
    CHECK_THROWS_WITH(soft_vote(plain, risk, flat), doctest::Contains("degenerate"));
}

TEST_CASE("any vote takes the max probability and ORs the labels") {
    const PredictionList plain = list_of({0.9, 0.2, 0.4}, "plain");
    const PredictionList risk = list_of({0.1, 0.1, 0.3}, "riskfactor");
    const PredictionList time = list_of({0.2, 0.3, 0.45}, "timeline");
    const VoteResult vote = any_vote(plain, risk, time);
    CHECK(vote.predictions.entries[0].probability == 0.9);
    CHECK(vote.predictions.entries[0].label == 1);
    CHECK(vote.predictions.entries[1].probability == 0.3);
    CHECK(vote.predictions.entries[1].label == 0);
    CHECK(vote.predictions.entries[2].probability == 0.45);
    CHECK(vote.predictions.entries[2].label == 0);
    CHECK(vote.predictions.source.aspect == "anyvote");

    SUBCASE("positive-rate dominance: pooled flags at least every input's positives") {
        std::size_t pooled_pos = 0, max_single = 0;
        std::size_t singles[3] = {0, 0, 0};
        for (const PooledPrediction& pp : vote.detail) {
            pooled_pos += pp.pooled_y;
            for (int a = 0; a < 3; ++a) singles[a] += pp.y[a];
        }
        max_single = std::max({singles[0], singles[1], singles[2]});
        CHECK(pooled_pos >= max_single);
    }
    SUBCASE("degenerate only when every input is degenerate") {
        PredictionList dp = list_of({1.0, 0.0, 1.0}, "plain");
        PredictionList dr = list_of({0.0, 0.0, 1.0}, "riskfactor");
        PredictionList dt = list_of({1.0, 0.0, 0.0}, "timeline");
        dp.degenerate_probabilities = dr.degenerate_probabilities = true;
        CHECK(!any_vote(dp, dr, dt).predictions.degenerate_probabilities);
        dt.degenerate_probabilities = true;
        const VoteResult all_binary = any_vote(dp, dr, dt);
        CHECK(all_binary.predictions.degenerate_probabilities);
        CHECK(all_binary.predictions.entries[1].label == 0);
        CHECK(all_binary.predictions.entries[0].label == 1);
    }
    SUBCASE("threshold-inconsistent inputs produce warnings") {
        PredictionList odd = list_of({0.9, 0.2, 0.4}, "plain");
        odd.entries[0].label = 0;  // disagrees with p >= 0.5
        odd.threshold_inconsistent = true;
        const VoteResult warned = any_vote(odd, risk, time);
        REQUIRE(warned.warnings.size() == 1);
        CHECK(warned.warnings[0].find("plain") != std::string::npos);
        // The pooled label honors the given labels, OR semantics unchanged.
        CHECK(warned.predictions.entries[0].label == 0);
    }
}

TEST_CASE("votes reject misaligned prediction lists") {
    const PredictionList plain = list_of({0.9, 0.2}, "plain");
    const PredictionList risk = list_of({0.6, 0.1}, "riskfactor");
    PredictionList other = list_of({0.5, 0.5}, "timeline");
    other.entries[1].doc_id = "zz";
    CHECK_THROWS(soft_vote(plain, risk, other));
    CHECK_THROWS(any_vote(plain, risk, other));
    CHECK_THROWS(soft_vote(plain, risk, list_of({0.5}, "timeline")));
}

TEST_CASE("corpus_with_texts swaps texts and keeps labels and splits") {
    std::vector<Document> docs;
    std::map<std::string, Split> assignment;
    for (int i = 0; i < 3; ++i) {
        Document d;
        d.doc_id = "d" + std::to_string(i);
        d.patient_id = "p" + std::to_string(i);
        d.label = i == 1 ? 1 : 0;
        d.text = "original note " + std::to_string(i);
        docs.push_back(d);
        assignment[d.doc_id] = i == 2 ? Split::test : Split::train;
    }
    const Corpus corpus(docs, assignment);
    const SummarySet set = set_of(Aspect::plain, {"s zero", "s one", "s two"});
    const Corpus swapped = corpus_with_texts(corpus, set);
    CHECK(swapped.size() == 3);
    CHECK(swapped.documents()[1].text == "s one");
    CHECK(swapped.documents()[1].label == 1);
    CHECK(swapped.split_of("d2") == Split::test);
    CHECK(swapped.documents()[0].patient_id == "p0");

    SUBCASE("merged overload") {
        const MergedDataset merged =
            build_merged(set_of(Aspect::plain, {"a", "b", "c"}),
                         set_of(Aspect::riskfactor, {"d", "e", "f"}),
                         set_of(Aspect::timeline, {"g", "h", "i"}));
        const Corpus merged_corpus = corpus_with_texts(corpus, merged);
        CHECK(merged_corpus.documents()[0].text == "a Another summary d Another summary g");
        CHECK(merged_corpus.documents()[2].label == 0);
    }
    SUBCASE("wrong coverage is rejected") {
        SummarySet wrong = set;
        wrong.records[0].doc_id = "unknown";
        CHECK_THROWS(corpus_with_texts(corpus, wrong));
        SummarySet missing = set;
        missing.records.pop_back();
        CHECK_THROWS(corpus_with_texts(corpus, missing));
    }
}

}  // TEST_SUITE
