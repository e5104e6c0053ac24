#include "aspectsum/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace aspectsum {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current += static_cast<char>(std::tolower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& train_docs,
                             std::size_t min_frequency) {
    if (train_docs.empty()) throw std::runtime_error("cannot build vocabulary: empty training set");
    Vocabulary vocab;
    vocab.min_frequency_ = min_frequency;
    vocab.n_train_docs_ = train_docs.size();

    std::map<std::string, std::size_t> freq;
    std::map<std::string, std::size_t> doc_freq;
    std::vector<std::string> first_seen;
    for (const std::string& doc : train_docs) {
        std::set<std::string> in_doc;
        for (std::string& tok : tokenize(doc)) {
            auto [it, inserted] = freq.emplace(tok, 0);
            if (inserted) first_seen.push_back(tok);
            ++it->second;
            if (in_doc.insert(it->first).second) ++doc_freq[it->first];
        }
    }
    for (const std::string& tok : first_seen) {
        if (freq.at(tok) < min_frequency) continue;
        vocab.index_.emplace(tok, static_cast<std::uint32_t>(vocab.tokens_.size()));
        vocab.tokens_.push_back(tok);
        vocab.doc_freq_.push_back(doc_freq.at(tok));
    }
    if (vocab.tokens_.empty())
        throw std::runtime_error("vocabulary is empty: no token reaches min_frequency=" +
                                 std::to_string(min_frequency));
    return vocab;
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> tokens,
                                  std::vector<std::size_t> doc_freq, std::size_t n_train_docs,
                                  std::size_t min_frequency) {
    if (tokens.size() != doc_freq.size())
        throw std::runtime_error("vocabulary parts disagree in size");
    Vocabulary vocab;
    vocab.tokens_ = std::move(tokens);
    vocab.doc_freq_ = std::move(doc_freq);
    vocab.n_train_docs_ = n_train_docs;
    vocab.min_frequency_ = min_frequency;
    for (std::uint32_t i = 0; i < vocab.tokens_.size(); ++i) {
        if (!vocab.index_.emplace(vocab.tokens_[i], i).second)
            throw std::runtime_error("duplicate vocabulary token '" + vocab.tokens_[i] + "'");
    }
    return vocab;
}

std::uint32_t Vocabulary::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? npos : it->second;
}

FeatureVector featurize(std::string_view text, const Vocabulary& vocab,
                        FeatureWeighting weighting) {
    std::map<std::uint32_t, double> counts;
    for (const std::string& tok : tokenize(text)) {
        const std::uint32_t idx = vocab.index_of(tok);
        if (idx != Vocabulary::npos) counts[idx] += 1.0;
    }
    FeatureVector fv;
    fv.terms.reserve(counts.size());
    for (const auto& [idx, count] : counts) {
        double weight = count;
        if (weighting == FeatureWeighting::tf_idf) {
            // Smoothed idf, always positive.
            const double n = static_cast<double>(vocab.train_document_count());
            const double df = static_cast<double>(vocab.document_frequencies()[idx]);
            weight = count * (std::log((1.0 + n) / (1.0 + df)) + 1.0);
        }
        fv.terms.emplace_back(idx, weight);
    }
    return fv;
}

}  // namespace aspectsum
