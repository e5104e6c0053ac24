#include "aspectsum/summarize.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aspectsum/util.hpp"
#include "json.hpp"

namespace aspectsum {

namespace {

constexpr const char* kPlaceholder = "{note}";
constexpr const char* kSystemMessage =
    "You are a careful clinical documentation assistant. Follow the "
    "instruction exactly and reply with the requested text only.";

}  // namespace

std::string to_string(Aspect a) {
    switch (a) {
        case Aspect::plain: return "plain";
        case Aspect::riskfactor: return "riskfactor";
        case Aspect::timeline: return "timeline";
    }
    throw std::runtime_error("invalid aspect value");
}

Aspect aspect_from_string(const std::string& s) {
    if (s == "plain") return Aspect::plain;
    if (s == "riskfactor") return Aspect::riskfactor;
    if (s == "timeline") return Aspect::timeline;
    throw std::runtime_error("unknown aspect '" + s + "' (expected plain, riskfactor or timeline)");
}

void AspectPrompt::check() const {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = template_text.find(kPlaceholder, pos)) != std::string::npos) {
        ++count;
        pos += std::string(kPlaceholder).size();
    }
    if (count != 1)
        throw std::runtime_error("prompt template must contain exactly one {note} placeholder, found " +
                                 std::to_string(count));
}

AspectPrompt default_prompt(Aspect aspect) {
    switch (aspect) {
        case Aspect::plain:
            return {aspect,
                    "Summarize the following clinical note in plain terms. Cover the main "
                    "findings, the treatments given, and the patient's condition at discharge. "
                    "Reply with the summary text only.\n\nNote:\n{note}"};
        case Aspect::riskfactor:
            return {aspect,
                    "Summarize the following clinical note with a focus on risk factors for "
                    "hospital readmission: comorbidities, abnormal findings, medication issues, "
                    "and social or functional concerns. Reply with the summary text only.\n\n"
                    "Note:\n{note}"};
        case Aspect::timeline:
            return {aspect,
                    "Summarize the following clinical note as a timeline of the clinical "
                    "course: list the key events in chronological order from admission to "
                    "discharge. Reply with the summary text only.\n\nNote:\n{note}"};
    }
    throw std::runtime_error("invalid aspect value");
}

std::string default_zero_shot_prompt() {
    return "You are given a clinical note. Will this patient be readmitted to the hospital "
           "within 30 days of discharge? Answer with a single word, Yes or No.\n\nNote:\n{note}";
}

std::string render_prompt(const AspectPrompt& prompt, const std::string& note_text) {
    prompt.check();
    if (note_text.empty()) throw std::runtime_error("cannot render a prompt for an empty note");
    const std::size_t pos = prompt.template_text.find(kPlaceholder);
    std::string out = prompt.template_text;
    out.replace(pos, std::string(kPlaceholder).size(), note_text);
    return out;
}

void check_alignment(const SummarySet& set, const Corpus& corpus) {
    if (set.records.size() != corpus.size())
        throw std::runtime_error("summary set has " + std::to_string(set.records.size()) +
                                 " records for a corpus of " + std::to_string(corpus.size()));
    for (std::size_t i = 0; i < set.records.size(); ++i)
        if (set.records[i].doc_id != corpus.documents()[i].doc_id)
            throw std::runtime_error("summary set is not aligned to the corpus at position " +
                                     std::to_string(i) + " ('" + set.records[i].doc_id + "' vs '" +
                                     corpus.documents()[i].doc_id + "')");
}

namespace {

std::string attempt_complete(LlmClient& client, const LlmEndpointConfig& endpoint,
                             const std::string& user, int& attempts_out) {
    const int attempts = endpoint.retries + 1;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        attempts_out = attempt + 1;
        try {
            return client.complete(kSystemMessage, user);
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    throw LlmError(last_error.empty() ? "endpoint call failed" : last_error);
}

}  // namespace

SummarizeResult summarize_corpus(const Corpus& corpus, const AspectPrompt& prompt,
                                 LlmClient& client, const LlmEndpointConfig& endpoint,
                                 const SummarizeOptions& options) {
    prompt.check();
    endpoint.check();
    const std::size_t k = corpus.size();

    std::vector<std::optional<SummaryRecord>> slots(k);
    std::vector<std::optional<SummaryFailure>> failure_slots(k);

    parallel_for_indexed(k, options.parallelism, [&](std::size_t i) {
        const Document& doc = corpus.documents()[i];
        const std::string user = render_prompt(prompt, doc.text);
        int attempts = 0;
        try {
            std::string text = attempt_complete(client, endpoint, user, attempts);
            SummaryRecord rec;
            rec.doc_id = doc.doc_id;
            rec.aspect = prompt.aspect;
            rec.token_count = count_ws_tokens(text);
            if (rec.token_count > options.max_summary_tokens) {
                text = truncate_ws_tokens(text, options.max_summary_tokens);
                rec.token_count = options.max_summary_tokens;
                rec.truncated = true;
            }
            rec.summary_text = std::move(text);
            slots[i] = std::move(rec);
        } catch (const std::exception& e) {
            failure_slots[i] = SummaryFailure{doc.doc_id, attempts, e.what()};
        }
    });

    SummarizeResult result;
    result.set.aspect = prompt.aspect;
    for (std::size_t i = 0; i < k; ++i) {
        if (failure_slots[i]) {
            result.failures.push_back(*failure_slots[i]);
            continue;
        }
        if (slots[i]->truncated) ++result.truncated_count;
        result.set.records.push_back(std::move(*slots[i]));
    }

    if (!result.failures.empty() && !options.permit_partial) {
        const SummaryFailure& first = result.failures.front();
        throw std::runtime_error("summarization failed for " +
                                 std::to_string(result.failures.size()) + " document(s); first: '" +
                                 first.doc_id + "' after " + std::to_string(first.attempts) +
                                 " attempt(s): " + first.last_error);
    }
    if (k > 0 && static_cast<double>(result.truncated_count) >
                     options.truncation_failure_threshold * static_cast<double>(k))
        throw std::runtime_error(std::to_string(result.truncated_count) + " of " +
                                 std::to_string(k) +
                                 " summaries were over-length; exceeds the configured threshold");
    return result;
}

std::optional<int> parse_yes_no(const std::string& response) {
    // First alphabetic word, lowercased.
    std::string word;
    for (char c : response) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!word.empty()) {
            break;
        }
    }
    static const std::vector<std::string> affirmative = {"yes", "y", "yeah", "yep", "affirmative",
                                                         "likely", "true"};
    static const std::vector<std::string> negative = {"no", "n", "nope", "negative", "unlikely",
                                                      "false"};
    if (std::find(affirmative.begin(), affirmative.end(), word) != affirmative.end()) return 1;
    if (std::find(negative.begin(), negative.end(), word) != negative.end()) return 0;
    return std::nullopt;
}

ZeroShotResult zero_shot_predict(const Corpus& corpus, std::optional<Split> split,
                                 LlmClient& client, const LlmEndpointConfig& endpoint,
                                 const std::string& prediction_prompt,
                                 const SummarizeOptions& options) {
    endpoint.check();
    AspectPrompt prompt{Aspect::plain, prediction_prompt};
    prompt.check();

    std::vector<const Document*> docs;
    for (const Document& doc : corpus.documents())
        if (!split || corpus.split_of(doc.doc_id) == *split) docs.push_back(&doc);
    if (docs.empty()) throw std::runtime_error("no documents selected for zero-shot prediction");

    const std::size_t k = docs.size();
    std::vector<std::optional<PredictionEntry>> slots(k);
    std::vector<std::optional<SummaryFailure>> failure_slots(k);
    std::atomic<std::size_t> unparseable{0};

    parallel_for_indexed(k, options.parallelism, [&](std::size_t i) {
        const Document& doc = *docs[i];
        const std::string user = render_prompt(prompt, doc.text);
        int attempts = 0;
        try {
            const std::string text = attempt_complete(client, endpoint, user, attempts);
            const std::optional<int> parsed = parse_yes_no(text);
            if (!parsed) unparseable.fetch_add(1);
            const int label = parsed.value_or(0);  // documented fallback
            slots[i] = PredictionEntry{doc.doc_id, label == 1 ? 1.0 : 0.0, label};
        } catch (const std::exception& e) {
            failure_slots[i] = SummaryFailure{doc.doc_id, attempts, e.what()};
        }
    });

    ZeroShotResult result;
    result.unparseable = unparseable.load();
    result.predictions.source = RunDescriptor{"zero_shot", "zero_shot", 0};
    result.predictions.degenerate_probabilities = true;
    for (std::size_t i = 0; i < k; ++i) {
        if (failure_slots[i]) {
            result.failures.push_back(*failure_slots[i]);
            continue;
        }
        result.predictions.entries.push_back(*slots[i]);
    }

    if (!result.failures.empty() && !options.permit_partial) {
        const SummaryFailure& first = result.failures.front();
        throw std::runtime_error("zero-shot prediction failed for " +
                                 std::to_string(result.failures.size()) +
                                 " document(s); first: '" + first.doc_id + "': " +
                                 first.last_error);
    }
    if (!result.predictions.entries.empty() &&
        result.unparseable == result.predictions.entries.size())
        throw std::runtime_error("every endpoint response was unparseable as yes/no");
    return result;
}

std::string summaries_to_jsonl(const SummarySet& set) {
    std::string out;
    for (const SummaryRecord& rec : set.records) {
        nlohmann::json obj{{"doc_id", rec.doc_id},
                           {"aspect", to_string(rec.aspect)},
                           {"summary_text", rec.summary_text},
                           {"token_count", rec.token_count},
                           {"truncated", rec.truncated}};
        out += obj.dump();
        out += '\n';
    }
    return out;
}

SummarySet summaries_from_jsonl(const std::string& content, const std::string& origin) {
    SummarySet set;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen_ids;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
        SummaryRecord rec;
        try {
            rec.doc_id = obj.at("doc_id").get<std::string>();
            rec.aspect = aspect_from_string(obj.at("aspect").get<std::string>());
            rec.summary_text = obj.at("summary_text").get<std::string>();
            rec.token_count = obj.value("token_count", count_ws_tokens(rec.summary_text));
            rec.truncated = obj.value("truncated", false);
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (rec.token_count != count_ws_tokens(rec.summary_text))
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": token_count does not match the summary text");
        if (first) {
            set.aspect = rec.aspect;
            first = false;
        } else if (rec.aspect != set.aspect) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": mixed aspects in one summary file");
        }
        if (!seen_ids.insert(rec.doc_id).second)
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": duplicate doc_id '" + rec.doc_id + "'");
        set.records.push_back(std::move(rec));
    }
    return set;
}

void save_summaries(const SummarySet& set, const std::filesystem::path& path) {
    write_file(path, summaries_to_jsonl(set));
}

SummarySet load_summaries(const std::filesystem::path& path) {
    return summaries_from_jsonl(read_file(path), path.string());
}

}  // namespace aspectsum
