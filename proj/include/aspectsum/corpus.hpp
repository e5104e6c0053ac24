#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace aspectsum {

enum class Split { train, dev, test };

constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::dev, Split::test};

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Document {
    std::string doc_id;
    std::string patient_id;
    std::string text;
    int label = 0;  // 1 = readmitted within 30 days

    bool operator==(const Document&) const = default;
};

// A labeled note collection with a per-document split assignment.
// Immutable after construction; the constructor enforces unique doc ids,
// binary labels, total split coverage and patient disjointness across splits.
class Corpus {
  public:
    Corpus() = default;
    Corpus(std::vector<Document> documents, std::map<std::string, Split> split_assignment);

    const std::vector<Document>& documents() const { return documents_; }
    const std::map<std::string, Split>& split_assignment() const { return split_assignment_; }

    std::size_t size() const { return documents_.size(); }
    Split split_of(const std::string& doc_id) const;
    const Document& document(const std::string& doc_id) const;
    bool contains(const std::string& doc_id) const;

    // Documents of one split, in corpus order.
    std::vector<const Document*> split_documents(Split s) const;

    // Fraction of label-1 documents; NaN for an empty selection.
    double positive_ratio() const;
    double positive_ratio(Split s) const;

    bool operator==(const Corpus& other) const;

  private:
    std::vector<Document> documents_;
    std::map<std::string, Split> split_assignment_;
    std::map<std::string, std::size_t> index_by_id_;
};

// Per-split document and label counts.
struct CorpusStats {
    struct Row {
        std::size_t total = 0;
        std::size_t positives = 0;
        double positive_ratio = 0.0;  // NaN when total == 0
    };
    Row train, dev, test, all;
};

CorpusStats corpus_stats(const Corpus& corpus);

// JSONL I/O. One object per line with fields doc_id, patient_id, text,
// label, split. Parse errors report the 1-based line number.
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_jsonl(const Corpus& corpus);
Corpus corpus_from_jsonl(const std::string& content, const std::string& origin = "<string>");

struct SplitFractions {
    double train = 0.7;
    double dev = 0.1;
    double test = 0.2;
};

// Assigns whole patients to splits so no patient spans two splits.
// Realized per-split patient counts are within one patient of the targets;
// deterministic for a fixed seed.
Corpus split_by_patient(const std::vector<Document>& documents, const SplitFractions& fractions,
                        std::uint64_t seed);

struct SyntheticSpec {
    std::size_t n_documents = 200;
    std::size_t n_patients = 80;
    double positive_ratio = 0.3;
    // aspect name -> planted signal tokens; sets must be pairwise disjoint.
    std::map<std::string, std::vector<std::string>> aspect_signal_tokens;
    double signal_strength = 0.7;     // per-token inclusion probability in positives
    std::size_t noise_vocab_size = 500;
    std::uint64_t seed = 0;
    SplitFractions fractions;

    // Signal tokens appear in negatives at signal_strength * this factor.
    double negative_signal_factor = 0.2;
};

// Section header used for the aspect-marked region of synthetic notes.
std::string synthetic_section_header(const std::string& aspect);

// Deterministic generator: positive documents carry each aspect's signal
// tokens inside that aspect's section; negatives draw the same tokens at a
// strictly lower rate. The realized positive count is exact (round(ratio*n)).
Corpus generate_synthetic(const SyntheticSpec& spec);

SyntheticSpec default_synthetic_spec();

}  // namespace aspectsum
