#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/corpus.hpp"
#include "aspectsum/llm_client.hpp"
#include "aspectsum/predictions.hpp"

namespace aspectsum {

enum class Aspect { plain, riskfactor, timeline };

constexpr std::array<Aspect, 3> kAllAspects = {Aspect::plain, Aspect::riskfactor,
                                               Aspect::timeline};

std::string to_string(Aspect a);
Aspect aspect_from_string(const std::string& s);

// A summarization instruction with a single {note} placeholder for the
// source text.
struct AspectPrompt {
    Aspect aspect = Aspect::plain;
    std::string template_text;

    void check() const;  // exactly one {note}
};

// The three shipped templates: a generic summary, a readmission-risk-factor
// focus, and a chronological course timeline.
AspectPrompt default_prompt(Aspect aspect);

// Yes/no readmission question with a {note} placeholder.
std::string default_zero_shot_prompt();

// Substitutes the placeholder exactly once (single pass: placeholder-shaped
// text inside the note is left alone). Errors on an empty note.
std::string render_prompt(const AspectPrompt& prompt, const std::string& note_text);

struct SummaryRecord {
    std::string doc_id;
    Aspect aspect = Aspect::plain;
    std::string summary_text;
    std::size_t token_count = 0;  // whitespace tokens, <= the configured cap
    bool truncated = false;

    bool operator==(const SummaryRecord&) const = default;
};

struct SummarySet {
    Aspect aspect = Aspect::plain;
    std::vector<SummaryRecord> records;  // corpus order

    std::size_t size() const { return records.size(); }
};

// Every corpus document has exactly one record, in corpus order.
void check_alignment(const SummarySet& set, const Corpus& corpus);

struct SummaryFailure {
    std::string doc_id;
    int attempts = 0;
    std::string last_error;
};

struct SummarizeOptions {
    std::size_t max_summary_tokens = 512;
    bool permit_partial = false;
    std::size_t parallelism = 1;
    // Fraction of records allowed to come back over-length (and be cut)
    // before the run is treated as failed.
    double truncation_failure_threshold = 1.0;
};

struct SummarizeResult {
    SummarySet set;
    std::vector<SummaryFailure> failures;  // docs that failed after retries
    std::size_t truncated_count = 0;
};

// One summary per document via the endpoint client, with per-document
// retries (endpoint.retries) and a hard token cap. Fails on any document
// failure unless permit_partial; the failure manifest is returned either way.
SummarizeResult summarize_corpus(const Corpus& corpus, const AspectPrompt& prompt,
                                 LlmClient& client, const LlmEndpointConfig& endpoint,
                                 const SummarizeOptions& options = {});

struct ZeroShotResult {
    PredictionList predictions;  // probabilities exactly 0 or 1, flagged degenerate
    std::size_t unparseable = 0;
    std::vector<SummaryFailure> failures;
};

// Asks the endpoint the binary question per document. Affirmative/negative
// phrasings map to 1/0; anything else maps to 0 and is counted. Errors when
// every response is unparseable. `split` restricts the documents (empty =
// whole corpus).
ZeroShotResult zero_shot_predict(const Corpus& corpus, std::optional<Split> split,
                                 LlmClient& client, const LlmEndpointConfig& endpoint,
                                 const std::string& prediction_prompt,
                                 const SummarizeOptions& options = {});

// Leading-word yes/no parser (case-insensitive, small synonym list).
// Empty optional = unparseable.
std::optional<int> parse_yes_no(const std::string& response);

// JSONL persistence: one object per line with doc_id, aspect, summary_text,
// token_count, truncated. Loading revalidates token counts and uniqueness.
std::string summaries_to_jsonl(const SummarySet& set);
SummarySet summaries_from_jsonl(const std::string& content,
                                const std::string& origin = "<string>");
void save_summaries(const SummarySet& set, const std::filesystem::path& path);
SummarySet load_summaries(const std::filesystem::path& path);

}  // namespace aspectsum
