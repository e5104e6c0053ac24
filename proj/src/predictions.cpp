#include "aspectsum/predictions.hpp"

#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aspectsum/util.hpp"

namespace aspectsum {

std::vector<std::string> PredictionList::doc_ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const PredictionEntry& e : entries) out.push_back(e.doc_id);
    return out;
}

std::vector<double> PredictionList::probabilities() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const PredictionEntry& e : entries) out.push_back(e.probability);
    return out;
}

std::vector<int> PredictionList::labels() const {
    std::vector<int> out;
    out.reserve(entries.size());
    for (const PredictionEntry& e : entries) out.push_back(e.label);
    return out;
}

bool aligned(const PredictionList& a, const PredictionList& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        if (a.entries[i].doc_id != b.entries[i].doc_id) return false;
    return true;
}

std::string predictions_to_csv(const PredictionList& preds) {
    std::string out = "doc_id,probability,label\n";
    for (const PredictionEntry& e : preds.entries) {
        out += e.doc_id;
        out += ',';
        out += format_probability(e.probability);
        out += ',';
        out += std::to_string(e.label);
        out += '\n';
    }
    return out;
}

void save_predictions(const PredictionList& preds, const std::filesystem::path& path) {
    write_file(path, predictions_to_csv(preds));
}

PredictionList predictions_from_csv(const std::string& content, const std::string& origin) {
    PredictionList preds;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    bool header_seen = false;
    bool all_binary = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fail = [&](const std::string& msg) -> std::runtime_error {
            return std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + msg);
        };
        if (!header_seen) {
            if (trim(line) != "doc_id,probability,label")
                throw fail("expected header 'doc_id,probability,label', got '" + line + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields = split(line, ',');
        if (fields.size() != 3) throw fail("expected 3 fields, got " + std::to_string(fields.size()));
        PredictionEntry entry;
        entry.doc_id = trim(fields[0]);
        if (entry.doc_id.empty()) throw fail("empty doc_id");
        if (!seen.insert(entry.doc_id).second)
            throw fail("duplicate doc_id '" + entry.doc_id + "'");
        char* end = nullptr;
        const std::string prob_str = trim(fields[1]);
        entry.probability = std::strtod(prob_str.c_str(), &end);
        if (end == prob_str.c_str() || *end != '\0') throw fail("bad probability '" + prob_str + "'");
        if (!(entry.probability >= 0.0 && entry.probability <= 1.0))
            throw fail("probability outside [0,1]: " + prob_str);
        const std::string label_str = trim(fields[2]);
        if (label_str == "0")
            entry.label = 0;
        else if (label_str == "1")
            entry.label = 1;
        else
            throw fail("label outside {0,1}: '" + label_str + "'");
        if (entry.label != (entry.probability >= 0.5 ? 1 : 0)) preds.threshold_inconsistent = true;
        if (entry.probability != 0.0 && entry.probability != 1.0) all_binary = false;
        preds.entries.push_back(std::move(entry));
    }
    if (!header_seen) throw std::runtime_error(origin + ": missing header line");
    preds.degenerate_probabilities = !preds.entries.empty() && all_binary;
    preds.source.model_kind = "external";
    return preds;
}

PredictionList ingest_predictions(const std::filesystem::path& path) {
    return predictions_from_csv(read_file(path), path.string());
}

}  // namespace aspectsum
