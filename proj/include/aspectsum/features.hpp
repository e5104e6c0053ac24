#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aspectsum {

// Lowercases and splits on runs of non-alphanumeric bytes.
std::vector<std::string> tokenize(std::string_view text);

// Token -> contiguous feature index, built from the training split only.
// Inclusion requires corpus frequency >= min_frequency; index order is
// first-occurrence order over the training documents.
class Vocabulary {
  public:
    Vocabulary() = default;

    static Vocabulary build(const std::vector<std::string>& train_docs,
                            std::size_t min_frequency);

    // Reassembles a vocabulary from serialized parts (model files).
    static Vocabulary from_parts(std::vector<std::string> tokens,
                                 std::vector<std::size_t> doc_freq, std::size_t n_train_docs,
                                 std::size_t min_frequency);

    std::size_t size() const { return tokens_.size(); }
    // Returns the feature index, or npos when out of vocabulary.
    static constexpr std::uint32_t npos = static_cast<std::uint32_t>(-1);
    std::uint32_t index_of(const std::string& token) const;
    const std::vector<std::string>& tokens() const { return tokens_; }
    // Number of training documents containing the token (for idf weighting).
    const std::vector<std::size_t>& document_frequencies() const { return doc_freq_; }
    std::size_t train_document_count() const { return n_train_docs_; }
    std::size_t min_frequency() const { return min_frequency_; }

    bool operator==(const Vocabulary& other) const {
        return tokens_ == other.tokens_ && doc_freq_ == other.doc_freq_ &&
               n_train_docs_ == other.n_train_docs_ && min_frequency_ == other.min_frequency_;
    }

  private:
    std::vector<std::string> tokens_;
    std::map<std::string, std::uint32_t> index_;
    std::vector<std::size_t> doc_freq_;
    std::size_t n_train_docs_ = 0;
    std::size_t min_frequency_ = 1;
};

// Sparse term vector: (feature index, weight) sorted by index, weights > 0.
struct FeatureVector {
    std::vector<std::pair<std::uint32_t, double>> terms;

    bool operator==(const FeatureVector&) const = default;
};

enum class FeatureWeighting { term_frequency, tf_idf };

FeatureVector featurize(std::string_view text, const Vocabulary& vocab,
                        FeatureWeighting weighting = FeatureWeighting::term_frequency);

}  // namespace aspectsum
