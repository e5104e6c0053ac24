#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aspectsum/corpus.hpp"
#include "aspectsum/features.hpp"
#include "aspectsum/infodiff.hpp"
#include "aspectsum/llm_client.hpp"
#include "aspectsum/metrics.hpp"
#include "aspectsum/summarize.hpp"
#include "aspectsum/svm.hpp"
#include "json.hpp"

namespace aspectsum {

struct ExperimentConfig {
    // Corpus source: a JSONL path, or synthetic generation when empty.
    std::string corpus_path;
    SyntheticSpec synthetic = default_synthetic_spec();

    std::vector<Aspect> aspects = {Aspect::plain, Aspect::riskfactor, Aspect::timeline};
    std::string model_kind = "bow_svm";  // or "external_predictions"
    // Any of: merged, union_softvote, union_anyvote. Single-aspect runs
    // always happen; these add the integration conditions.
    std::vector<std::string> integration = {"merged", "union_softvote", "union_anyvote"};
    std::vector<std::int64_t> seeds = {101, 102, 103, 104, 105};

    bool use_mock = true;
    std::uint64_t mock_seed = 7;
    LlmEndpointConfig endpoint;

    std::string output_dir;
    std::string cache_dir;  // defaults to <output_dir>/cache

    SvmHyperparams hyperparams;
    FeatureWeighting weighting = FeatureWeighting::term_frequency;
    std::size_t vocab_min_frequency = 2;
    std::size_t parallelism = 1;
    SummarizeOptions summarize_options;

    bool include_zero_shot = false;
    bool union_aspect_header = false;
    bool evaluate_dev = false;

    // model_kind == external_predictions: directory of <aspect>_seed<s>.csv.
    std::string external_predictions_dir;

    void check() const;
};

ExperimentConfig config_from_json(const nlohmann::json& obj);
// Path-independent echo for the manifest (output/cache paths omitted so the
// artifact tree is byte-identical wherever it is written).
nlohmann::json config_to_json(const ExperimentConfig& config);
// Reads .json or .toml (by extension).
ExperimentConfig load_config(const std::filesystem::path& path);

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n-1); 0 for n == 1
    std::size_t n = 0;
};

Aggregate aggregate(const std::vector<double>& values);

// Linear-interpolation quantile of a sorted-or-not sample, q in [0,1].
double quantile(std::vector<double> values, double q);

// A failure tagged with the pipeline stage that raised it.
struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_name, const std::string& message);
};

// Stable stage -> process exit code mapping for the CLI.
int stage_exit_code(const std::string& stage);

struct ConditionResult {
    std::string condition;  // plain|riskfactor|timeline|merged|union_softvote|union_anyvote|zero_shot
    std::vector<std::int64_t> seeds;      // empty for unseeded conditions
    std::vector<MetricsReport> per_seed;  // parallel to seeds, or one entry
};

struct ExperimentResult {
    Corpus corpus;
    double gold_test_ratio = 0.0;
    AspectDifferenceReport infodiff;
    std::vector<ConditionResult> conditions;
    std::filesystem::path output_dir;
};

// Full pipeline: resolve corpus -> summarize (cached) -> train/predict per
// aspect x seed -> difference report -> integration + voting -> metrics ->
// aggregate report files. Deterministic with the mock endpoint. On failure
// the partial artifact tree is preserved and the manifest records the stage.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Re-derives the report/ tables of an existing run directory from its stored
// corpus, per-seed metrics, and difference-report artifacts.
void rebuild_report(const std::filesystem::path& run_dir);

}  // namespace aspectsum
