#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "aspectsum/corpus.hpp"
#include "aspectsum/llm_client.hpp"
#include "aspectsum/metrics.hpp"
#include "aspectsum/summarize.hpp"
#include "aspectsum/util.hpp"
#include "doctest.h"

using namespace aspectsum;

namespace {

// Sectioned notes so the offline client has material to route per aspect.
Corpus sectioned_corpus(int n) {
    std::vector<Document> docs;
    std::map<std::string, Split> assignment;
    for (int i = 0; i < n; ++i) {
        Document d;
        d.doc_id = "doc" + std::to_string(i);
        d.patient_id = "pat" + std::to_string(i);
        d.label = i % 2;
        d.text = "OVERVIEW: patient alpha" + std::to_string(i) +
                 " was stable with improving vitals and routine labs. "
                 "RISK FACTORS: diabetes hypertension marker" + std::to_string(i) +
                 " and prior medication issues. "
                 "COURSE TIMELINE: admitted day one, treated day two, discharged"
                 " day three event" + std::to_string(i) + ".";
        docs.push_back(d);
        assignment[d.doc_id] = i < n - 2 ? Split::train : Split::test;
    }
    return Corpus(docs, assignment);
}

LlmEndpointConfig mock_endpoint() {
    LlmEndpointConfig endpoint;
    endpoint.retries = 2;
    return endpoint;
}

}  // namespace

TEST_SUITE("summarize") {

TEST_CASE("render_prompt substitutes the placeholder exactly once") {
    const AspectPrompt prompt{Aspect::plain, "Summarize this:\n{note}\nReply briefly."};
    CHECK(render_prompt(prompt, "the note body") ==
          "Summarize this:\nthe note body\nReply briefly.");

    SUBCASE("placeholder-shaped text inside the note is left alone") {
        const std::string tricky = "starts {note} ends";
        const std::string rendered = render_prompt(prompt, tricky);
        CHECK(rendered == "Summarize this:\nstarts {note} ends\nReply briefly.");
    }
    SUBCASE("long notes pass through unclipped") {
        const std::string big(1000, 'x');
        const std::string rendered = render_prompt(prompt, big);
        CHECK(rendered.find(big) != std::string::npos);
        CHECK(rendered.size() == prompt.template_text.size() - 6 + big.size());
    }
    SUBCASE("errors") {
        CHECK_THROWS(render_prompt(prompt, ""));
        CHECK_THROWS(render_prompt(AspectPrompt{Aspect::plain, "no placeholder"}, "x"));
        CHECK_THROWS(render_prompt(AspectPrompt{Aspect::plain, "{note} and {note}"}, "x"));
    }
}

TEST_CASE("shipped templates are valid and aspect-specific") {
    for (Aspect a : kAllAspects) {
        const AspectPrompt prompt = default_prompt(a);
        CHECK(prompt.aspect == a);
        CHECK_NOTHROW(prompt.check());
    }
    CHECK(default_prompt(Aspect::riskfactor).template_text.find("risk factor") !=
          std::string::npos);
    CHECK(default_prompt(Aspect::timeline).template_text.find("chronological") !=
          std::string::npos);
    CHECK(default_zero_shot_prompt().find("Yes or No") != std::string::npos);
    CHECK_NOTHROW(AspectPrompt{Aspect::plain, default_zero_shot_prompt()}.check());

    CHECK(to_string(Aspect::riskfactor) == "riskfactor");
    CHECK(aspect_from_string("timeline") == Aspect::timeline);
    CHECK_THROWS(aspect_from_string("sideways"));
}

TEST_CASE("offline summarization is deterministic and covers every document") {
    const Corpus corpus = sectioned_corpus(8);
    MockLlmClient client(7);
    const SummarizeResult first =
        summarize_corpus(corpus, default_prompt(Aspect::plain), client, mock_endpoint());
    CHECK_NOTHROW(check_alignment(first.set, corpus));
    CHECK(first.failures.empty());
    CHECK(first.set.aspect == Aspect::plain);
    for (const SummaryRecord& rec : first.set.records) {
        CHECK(rec.aspect == Aspect::plain);
        CHECK(rec.token_count == count_ws_tokens(rec.summary_text));
        CHECK(rec.token_count >= 1);
    }

    MockLlmClient rerun(7);
    SummarizeOptions four_workers;
    four_workers.parallelism = 4;
    const SummarizeResult second = summarize_corpus(corpus, default_prompt(Aspect::plain),
                                                    rerun, mock_endpoint(), four_workers);
    CHECK(summaries_to_jsonl(first.set) == summaries_to_jsonl(second.set));

    MockLlmClient other_seed(8);
    const SummarizeResult third = summarize_corpus(corpus, default_prompt(Aspect::plain),
                                                   other_seed, mock_endpoint());
    // Section extraction is seed-independent; but the sets must still align.
    CHECK_NOTHROW(check_alignment(third.set, corpus));
}

TEST_CASE("each aspect reads its own section of the note") {
    const Corpus corpus = sectioned_corpus(4);
    MockLlmClient client(7);
    const SummarySet plain =
        summarize_corpus(corpus, default_prompt(Aspect::plain), client, mock_endpoint()).set;
    const SummarySet risk =
        summarize_corpus(corpus, default_prompt(Aspect::riskfactor), client, mock_endpoint())
            .set;
    const SummarySet timeline =
        summarize_corpus(corpus, default_prompt(Aspect::timeline), client, mock_endpoint())
            .set;

    CHECK(plain.records[0].summary_text.find("alpha0") != std::string::npos);
    CHECK(risk.records[0].summary_text.find("diabetes") != std::string::npos);
    CHECK(timeline.records[0].summary_text.find("admitted") != std::string::npos);
    CHECK(plain.records[0].summary_text != risk.records[0].summary_text);
    CHECK(plain.records[0].summary_text != timeline.records[0].summary_text);
}

TEST_CASE("note content cannot reroute the instruction") {
    // The note's own overview mentions risk factors; a plain-summary request
    // must still return the overview section.
    Document d;
    d.doc_id = "doc0";
    d.patient_id = "pat0";
    d.label = 0;
    d.text = "OVERVIEW: overview-body mentions a risk factor in passing. "
             "RISK FACTORS: riskbody smoking. COURSE TIMELINE: timelinebody admitted.";
    const Corpus corpus({d}, {{"doc0", Split::train}});
    MockLlmClient client(7);
    const SummarySet set =
        summarize_corpus(corpus, default_prompt(Aspect::plain), client, mock_endpoint()).set;
    CHECK(set.records[0].summary_text.find("overview-body") != std::string::npos);
    CHECK(set.records[0].summary_text.find("riskbody") == std::string::npos);
}

TEST_CASE("over-length replies are cut at the cap and flagged") {
    const Corpus corpus = sectioned_corpus(4);
    CallbackLlmClient wordy([](const std::string&, const std::string&) {
        std::string reply;
        for (int i = 0; i < 50; ++i) reply += "tok" + std::to_string(i) + " ";
        return reply;
    });
    SummarizeOptions options;
    options.max_summary_tokens = 10;
    const SummarizeResult result = summarize_corpus(corpus, default_prompt(Aspect::plain),
                                                    wordy, mock_endpoint(), options);
    CHECK(result.truncated_count == 4);
    for (const SummaryRecord& rec : result.set.records) {
        CHECK(rec.truncated);
        CHECK(rec.token_count == 10);
        CHECK(count_ws_tokens(rec.summary_text) == 10);
    }

    SUBCASE("a zero tolerance threshold turns truncation into failure") {
        options.truncation_failure_threshold = 0.0;
        CHECK_THROWS_WITH(summarize_corpus(corpus, default_prompt(Aspect::plain), wordy,
                                           mock_endpoint(), options),
                          doctest::Contains("over-length"));
    }
    SUBCASE("the threshold is a strict bound") {
        CallbackLlmClient half([](const std::string&, const std::string& user) {
            // Over-length only for even doc numbers.
            const bool wordy_doc = user.find("alpha0") != std::string::npos ||
                                   user.find("alpha2") != std::string::npos;
            std::string reply = "short answer";
            if (wordy_doc)
                for (int i = 0; i < 30; ++i) reply += " tok" + std::to_string(i);
            return reply;
        });
        options.truncation_failure_threshold = 0.5;  // 2 of 4 == bound: allowed
        CHECK_NOTHROW(summarize_corpus(corpus, default_prompt(Aspect::plain), half,
                                       mock_endpoint(), options));
        options.truncation_failure_threshold = 0.49;  // 2 of 4 > bound: failure
        CHECK_THROWS(summarize_corpus(corpus, default_prompt(Aspect::plain), half,
                                      mock_endpoint(), options));
    }
}

TEST_CASE("transient endpoint failures are retried per document") {
    const Corpus corpus = sectioned_corpus(5);
    LlmEndpointConfig endpoint = mock_endpoint();
    REQUIRE(endpoint.retries == 2);

    SUBCASE("two injected failures, three attempts: success") {
        MockLlmClient client(7);
        client.fail_if_contains("alpha3", 2);
        const SummarizeResult result =
            summarize_corpus(corpus, default_prompt(Aspect::plain), client, endpoint);
        CHECK(result.failures.empty());
        CHECK(result.set.size() == corpus.size());
        int calls_for_doc3 = 0;
        for (const LlmCall& call : client.transcript())
            if (call.user_message.find("alpha3") != std::string::npos) ++calls_for_doc3;
        CHECK(calls_for_doc3 == 3);
        CHECK(client.call_count() == corpus.size() + 2);
    }
    SUBCASE("persistent failure without permit_partial raises") {
        MockLlmClient client(7);
        client.fail_if_contains("alpha3", 3);
        CHECK_THROWS_WITH(
            summarize_corpus(corpus, default_prompt(Aspect::plain), client, endpoint),
            doctest::Contains("doc3"));
    }
    SUBCASE("permit_partial keeps going and reports the failure manifest") {
        MockLlmClient client(7);
        client.fail_if_contains("alpha3", 3);
        SummarizeOptions options;
        options.permit_partial = true;
        const SummarizeResult result =
            summarize_corpus(corpus, default_prompt(Aspect::plain), client, endpoint, options);
        CHECK(result.set.size() == corpus.size() - 1);
        REQUIRE(result.failures.size() == 1);
        CHECK(result.failures[0].doc_id == "doc3");
        CHECK(result.failures[0].attempts == 3);
        CHECK(!result.failures[0].last_error.empty());
        CHECK_THROWS(check_alignment(result.set, corpus));  // partial is detectable
    }
}

TEST_CASE("parse_yes_no maps the documented synonym lists") {
    for (const char* word : {"yes", "Yes", "YES", "y", "yeah", "Yep", "affirmative",
                             "likely", "true", "Yes, definitely.", "  yes"})
        CHECK(parse_yes_no(word) == 1);
    for (const char* word : {"no", "No", "NO.", "n", "nope", "negative", "unlikely",
                             "false", "No - stable"})
        CHECK(parse_yes_no(word) == 0);
    for (const char* word : {"maybe", "unsure", "", "42", "yesterday"})
        CHECK(!parse_yes_no(word).has_value());
}

TEST_CASE("zero-shot prediction is degenerate by construction") {
    const Corpus corpus = sectioned_corpus(24);
    MockLlmClient client(7);
    const ZeroShotResult result = zero_shot_predict(corpus, std::nullopt, client,
                                                    mock_endpoint(), default_zero_shot_prompt());
    CHECK(result.predictions.size() == corpus.size());
    CHECK(result.predictions.degenerate_probabilities);
    CHECK(result.predictions.source.model_kind == "zero_shot");
    std::set<int> seen;
    for (const PredictionEntry& e : result.predictions.entries) {
        CHECK((e.probability == 0.0 || e.probability == 1.0));
        CHECK(e.label == (e.probability == 1.0 ? 1 : 0));
        seen.insert(e.label);
    }
    CHECK(seen.size() == 2);  // the parity answer must not collapse to one class

    const GoldLabels gold = gold_from_corpus(corpus);
    CHECK(!auroc(result.predictions, gold).has_value());
    CHECK(!auprc(result.predictions, gold).has_value());

    SUBCASE("deterministic across reruns") {
        MockLlmClient rerun(7);
        const ZeroShotResult again = zero_shot_predict(corpus, std::nullopt, rerun,
                                                       mock_endpoint(),
                                                       default_zero_shot_prompt());
        CHECK(again.predictions.entries == result.predictions.entries);
    }
    SUBCASE("split restriction") {
        MockLlmClient fresh(7);
        const ZeroShotResult test_only = zero_shot_predict(corpus, Split::test, fresh,
                                                           mock_endpoint(),
                                                           default_zero_shot_prompt());
        CHECK(test_only.predictions.size() == 2);
        for (const PredictionEntry& e : test_only.predictions.entries)
            CHECK(corpus.split_of(e.doc_id) == Split::test);
    }
}

TEST_CASE("unparseable zero-shot answers are counted, never silently scored") {
    const Corpus corpus = sectioned_corpus(6);
    SUBCASE("every answer unparseable is a hard error") {
        CallbackLlmClient vague([](const std::string&, const std::string&) {
            return std::string("hard to say");
        });
        CHECK_THROWS_WITH(zero_shot_predict(corpus, std::nullopt, vague, mock_endpoint(),
                                            default_zero_shot_prompt()),
                          doctest::Contains("unparseable"));
    }
    SUBCASE("a single vague answer falls back to 0 and is counted") {
        CallbackLlmClient one_vague([](const std::string&, const std::string& user) {
            return user.find("alpha2") != std::string::npos ? std::string("hmm")
                                                            : std::string("Yes");
        });
        const ZeroShotResult result = zero_shot_predict(corpus, std::nullopt, one_vague,
                                                        mock_endpoint(),
                                                        default_zero_shot_prompt());
        CHECK(result.unparseable == 1);
        for (const PredictionEntry& e : result.predictions.entries)
            CHECK(e.label == (e.doc_id == "doc2" ? 0 : 1));
    }
}

TEST_CASE("summary JSONL round trip and validation") {
    const Corpus corpus = sectioned_corpus(5);
    MockLlmClient client(7);
    const SummarySet set =
        summarize_corpus(corpus, default_prompt(Aspect::riskfactor), client, mock_endpoint())
            .set;

    const std::string jsonl = summaries_to_jsonl(set);
    const SummarySet loaded = summaries_from_jsonl(jsonl, "risk.jsonl");
    CHECK(loaded.aspect == Aspect::riskfactor);
    CHECK(loaded.records == set.records);
    CHECK(summaries_to_jsonl(loaded) == jsonl);  // byte-stable re-serialization

    SUBCASE("duplicate doc ids rejected") {
        SummarySet dup = set;
        dup.records.push_back(dup.records.front());
        CHECK_THROWS_WITH(summaries_from_jsonl(summaries_to_jsonl(dup)),
                          doctest::Contains("duplicate"));
    }
    SUBCASE("token counts are revalidated on load") {
        SummarySet tampered = set;
        tampered.records[0].token_count += 7;
        CHECK_THROWS_WITH(summaries_from_jsonl(summaries_to_jsonl(tampered), "bad.jsonl"),
                          doctest::Contains("token_count"));
    }
    SUBCASE("mixed aspects in one file rejected") {
        std::string mixed = summaries_to_jsonl(set);
        MockLlmClient other(7);
        const SummarySet plain = summarize_corpus(corpus, default_prompt(Aspect::plain),
                                                  other, mock_endpoint())
                                     .set;
        SummarySet one;
        one.aspect = Aspect::plain;
        one.records = {plain.records.back()};
        one.records[0].doc_id = "extra";
        mixed += summaries_to_jsonl(one);
        CHECK_THROWS_WITH(summaries_from_jsonl(mixed), doctest::Contains("mixed aspects"));
    }
}

}  // TEST_SUITE
