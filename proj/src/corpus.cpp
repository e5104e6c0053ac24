#include "aspectsum/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aspectsum/util.hpp"
#include "json.hpp"

namespace aspectsum {

namespace {

double ratio_or_nan(std::size_t positives, std::size_t total) {
    if (total == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(positives) / static_cast<double>(total);
}

}  // namespace

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    throw std::logic_error("unknown split");
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw std::runtime_error("unknown split name: '" + s + "'");
}

Corpus::Corpus(std::vector<Document> documents, std::map<std::string, Split> split_assignment)
    : documents_(std::move(documents)), split_assignment_(std::move(split_assignment)) {
    std::map<std::string, Split> patient_split;
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        const Document& doc = documents_[i];
        if (doc.label != 0 && doc.label != 1)
            throw std::runtime_error("document '" + doc.doc_id + "' has label outside {0,1}");
        if (!index_by_id_.emplace(doc.doc_id, i).second)
            throw std::runtime_error("duplicate doc_id '" + doc.doc_id + "'");
        auto split_it = split_assignment_.find(doc.doc_id);
        if (split_it == split_assignment_.end())
            throw std::runtime_error("document '" + doc.doc_id + "' has no split assignment");
        auto [pit, inserted] = patient_split.emplace(doc.patient_id, split_it->second);
        if (!inserted && pit->second != split_it->second)
            throw std::runtime_error("patient split violation: patient '" + doc.patient_id +
                                     "' appears in both " + to_string(pit->second) + " and " +
                                     to_string(split_it->second));
    }
    for (const auto& [doc_id, split] : split_assignment_) {
        (void)split;
        if (!index_by_id_.count(doc_id))
            throw std::runtime_error("split assignment references unknown doc_id '" + doc_id + "'");
    }
}

Split Corpus::split_of(const std::string& doc_id) const {
    auto it = split_assignment_.find(doc_id);
    if (it == split_assignment_.end())
        throw std::runtime_error("unknown doc_id '" + doc_id + "'");
    return it->second;
}

const Document& Corpus::document(const std::string& doc_id) const {
    auto it = index_by_id_.find(doc_id);
    if (it == index_by_id_.end())
        throw std::runtime_error("unknown doc_id '" + doc_id + "'");
    return documents_[it->second];
}

bool Corpus::contains(const std::string& doc_id) const { return index_by_id_.count(doc_id) > 0; }

std::vector<const Document*> Corpus::split_documents(Split s) const {
    std::vector<const Document*> out;
    for (const Document& doc : documents_)
        if (split_assignment_.at(doc.doc_id) == s) out.push_back(&doc);
    return out;
}

double Corpus::positive_ratio() const {
    std::size_t pos = 0;
    for (const Document& doc : documents_) pos += static_cast<std::size_t>(doc.label);
    return ratio_or_nan(pos, documents_.size());
}

double Corpus::positive_ratio(Split s) const {
    std::size_t pos = 0, total = 0;
    for (const Document& doc : documents_) {
        if (split_assignment_.at(doc.doc_id) != s) continue;
        ++total;
        pos += static_cast<std::size_t>(doc.label);
    }
    return ratio_or_nan(pos, total);
}

bool Corpus::operator==(const Corpus& other) const {
    return documents_ == other.documents_ && split_assignment_ == other.split_assignment_;
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats stats;
    auto row_for = [&stats](Split s) -> CorpusStats::Row& {
        switch (s) {
            case Split::train: return stats.train;
            case Split::dev: return stats.dev;
            default: return stats.test;
        }
    };
    for (const Document& doc : corpus.documents()) {
        CorpusStats::Row& row = row_for(corpus.split_of(doc.doc_id));
        ++row.total;
        row.positives += static_cast<std::size_t>(doc.label);
        ++stats.all.total;
        stats.all.positives += static_cast<std::size_t>(doc.label);
    }
    for (CorpusStats::Row* row : {&stats.train, &stats.dev, &stats.test, &stats.all})
        row->positive_ratio = row->total == 0
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : static_cast<double>(row->positives) / static_cast<double>(row->total);
    return stats;
}

Corpus corpus_from_jsonl(const std::string& content, const std::string& origin) {
    std::vector<Document> documents;
    std::map<std::string, Split> assignment;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": malformed JSON: " + e.what());
        }
        try {
            if (!obj.is_object()) throw std::runtime_error("record is not a JSON object");
            Document doc;
            doc.doc_id = obj.at("doc_id").get<std::string>();
            doc.patient_id = obj.at("patient_id").get<std::string>();
            doc.text = obj.at("text").get<std::string>();
            if (!obj.at("label").is_number_integer())
                throw std::runtime_error("label must be an integer 0 or 1");
            doc.label = obj.at("label").get<int>();
            if (doc.label != 0 && doc.label != 1)
                throw std::runtime_error("label outside {0,1}: " + std::to_string(doc.label));
            Split split = split_from_string(obj.at("split").get<std::string>());
            if (assignment.count(doc.doc_id))
                throw std::runtime_error("duplicate doc_id '" + doc.doc_id + "'");
            assignment.emplace(doc.doc_id, split);
            documents.push_back(std::move(doc));
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return Corpus(std::move(documents), std::move(assignment));
}

Corpus load_corpus(const std::filesystem::path& path) {
    return corpus_from_jsonl(read_file(path), path.string());
}

std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const Document& doc : corpus.documents()) {
        nlohmann::json obj{{"doc_id", doc.doc_id},
                           {"patient_id", doc.patient_id},
                           {"text", doc.text},
                           {"label", doc.label},
                           {"split", to_string(corpus.split_of(doc.doc_id))}};
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    write_file(path, corpus_to_jsonl(corpus));
}

Corpus split_by_patient(const std::vector<Document>& documents, const SplitFractions& fractions,
                        std::uint64_t seed) {
    const double sum = fractions.train + fractions.dev + fractions.test;
    if (fractions.train <= 0 || fractions.dev <= 0 || fractions.test <= 0)
        throw std::runtime_error("split fractions must be positive");
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::runtime_error("split fractions must sum to 1 (got " + std::to_string(sum) + ")");

    // Patients in first-occurrence order, then seeded shuffle.
    std::vector<std::string> patients;
    std::set<std::string> seen;
    for (const Document& doc : documents)
        if (seen.insert(doc.patient_id).second) patients.push_back(doc.patient_id);
    if (patients.empty()) throw std::runtime_error("fewer patients than splits: no patients");

    std::mt19937_64 rng(seed);
    std::shuffle(patients.begin(), patients.end(), rng);

    const std::size_t p = patients.size();
    const std::array<double, 3> targets = {fractions.train * p, fractions.dev * p,
                                           fractions.test * p};
    std::array<std::size_t, 3> counts;
    std::array<double, 3> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        counts[i] = static_cast<std::size_t>(std::floor(targets[i]));
        remainders[i] = targets[i] - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    // Largest-remainder method keeps every split within one patient of target.
    while (assigned < p) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < 3; ++i)
            if (remainders[i] > remainders[best]) best = i;
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    // With three or more patients, no split should be left empty.
    if (p >= 3) {
        for (std::size_t i = 0; i < 3; ++i) {
            if (counts[i] > 0) continue;
            std::size_t donor = 0;
            for (std::size_t j = 1; j < 3; ++j)
                if (counts[j] > counts[donor]) donor = j;
            --counts[donor];
            ++counts[i];
        }
    }

    std::map<std::string, Split> patient_split;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < counts[i]; ++j)
            patient_split.emplace(patients[cursor++], kAllSplits[i]);
    }

    std::map<std::string, Split> assignment;
    for (const Document& doc : documents)
        assignment.emplace(doc.doc_id, patient_split.at(doc.patient_id));
    return Corpus(documents, std::move(assignment));
}

std::string synthetic_section_header(const std::string& aspect) {
    if (aspect == "plain") return "OVERVIEW:";
    if (aspect == "riskfactor") return "RISK FACTORS:";
    if (aspect == "timeline") return "COURSE TIMELINE:";
    return lower(aspect) == aspect ? "SECTION " + aspect + ":" : aspect + ":";
}

SyntheticSpec default_synthetic_spec() {
    SyntheticSpec spec;
    spec.aspect_signal_tokens = {
        {"plain", {"psig0", "psig1", "psig2", "psig3", "psig4", "psig5"}},
        {"riskfactor", {"rsig0", "rsig1", "rsig2", "rsig3", "rsig4", "rsig5"}},
        {"timeline", {"tsig0", "tsig1", "tsig2", "tsig3", "tsig4", "tsig5"}},
    };
    return spec;
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_documents == 0) throw std::runtime_error("n_documents must be positive");
    if (spec.n_patients == 0) throw std::runtime_error("n_patients must be positive");
    if (spec.positive_ratio <= 0.0 || spec.positive_ratio >= 1.0)
        throw std::runtime_error("positive_ratio must lie in (0,1)");
    if (spec.signal_strength < 0.0 || spec.signal_strength > 1.0)
        throw std::runtime_error("signal_strength must lie in [0,1]");
    if (spec.noise_vocab_size == 0) throw std::runtime_error("noise vocabulary must be non-empty");
    if (spec.aspect_signal_tokens.empty())
        throw std::runtime_error("aspect_signal_tokens must not be empty");
    {
        std::set<std::string> all_tokens;
        for (const auto& [aspect, tokens] : spec.aspect_signal_tokens) {
            (void)aspect;
            for (const std::string& tok : tokens)
                if (!all_tokens.insert(tok).second)
                    throw std::runtime_error("aspect token sets overlap on '" + tok + "'");
        }
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<std::size_t> noise_pick(0, spec.noise_vocab_size - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> patient_pick(0, spec.n_patients - 1);
    std::uniform_int_distribution<std::size_t> section_len(24, 48);

    // Exact positive count so the realized ratio matches the request within
    // rounding, then shuffle label positions.
    const auto n_pos = static_cast<std::size_t>(
        std::llround(spec.positive_ratio * static_cast<double>(spec.n_documents)));
    std::vector<int> labels(spec.n_documents, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
    std::shuffle(labels.begin(), labels.end(), rng);

    const double negative_rate = spec.signal_strength * spec.negative_signal_factor;

    std::vector<Document> documents;
    documents.reserve(spec.n_documents);
    for (std::size_t i = 0; i < spec.n_documents; ++i) {
        Document doc;
        doc.doc_id = "doc" + std::to_string(i);
        doc.patient_id = "pat" + std::to_string(patient_pick(rng));
        doc.label = labels[i];

        std::string text;
        for (const auto& [aspect, signal_tokens] : spec.aspect_signal_tokens) {
            std::vector<std::string> tokens;
            const std::size_t n_noise = section_len(rng);
            for (std::size_t t = 0; t < n_noise; ++t)
                tokens.push_back("nv" + std::to_string(noise_pick(rng)));
            const double rate = doc.label == 1 ? spec.signal_strength : negative_rate;
            for (const std::string& sig : signal_tokens) {
                if (unit(rng) < rate) {
                    std::uniform_int_distribution<std::size_t> pos_pick(0, tokens.size());
                    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pos_pick(rng)),
                                  sig);
                }
            }
            if (!text.empty()) text += "\n";
            text += synthetic_section_header(aspect);
            for (const std::string& tok : tokens) {
                text += ' ';
                text += tok;
            }
        }
        doc.text = std::move(text);
        documents.push_back(std::move(doc));
    }

    // Derived seed keeps the split shuffle independent of the text stream.
    return split_by_patient(documents, spec.fractions, mix64(spec.seed ^ 0x5911c7a1u));
}

}  // namespace aspectsum
