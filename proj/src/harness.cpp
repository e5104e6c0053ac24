#include "aspectsum/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include "aspectsum/integrate.hpp"
#include "aspectsum/minitoml.hpp"
#include "aspectsum/util.hpp"

namespace fs = std::filesystem;

namespace aspectsum {

namespace {

bool has_strategy(const std::vector<std::string>& strategies, const std::string& name) {
    return std::find(strategies.begin(), strategies.end(), name) != strategies.end();
}

}  // namespace

void ExperimentConfig::check() const {
    if (seeds.empty()) throw std::runtime_error("at least one seed is required");
    {
        std::set<std::int64_t> unique(seeds.begin(), seeds.end());
        if (unique.size() != seeds.size()) throw std::runtime_error("seeds must be distinct");
    }
    if (aspects.empty()) throw std::runtime_error("at least one aspect is required");
    {
        std::set<Aspect> unique(aspects.begin(), aspects.end());
        if (unique.size() != aspects.size()) throw std::runtime_error("aspects must be distinct");
    }
    if (model_kind != "bow_svm" && model_kind != "external_predictions")
        throw std::runtime_error("unknown model_kind '" + model_kind + "'");
    for (const std::string& s : integration)
        if (s != "merged" && s != "union_softvote" && s != "union_anyvote")
            throw std::runtime_error("unknown integration strategy '" + s + "'");
    {
        std::set<std::string> unique(integration.begin(), integration.end());
        if (unique.size() != integration.size())
            throw std::runtime_error("integration strategies must be distinct");
    }
    if (!integration.empty() && aspects.size() != 3)
        throw std::runtime_error("integration strategies need all three aspects");
    if (model_kind == "external_predictions") {
        if (external_predictions_dir.empty())
            throw std::runtime_error("external_predictions needs external_predictions_dir");
        if (!integration.empty())
            throw std::runtime_error("integration strategies need locally trained models");
    }
    if (output_dir.empty()) throw std::runtime_error("output_dir is required");
    if (parallelism < 1) throw std::runtime_error("parallelism must be >= 1");
    if (vocab_min_frequency < 1) throw std::runtime_error("vocab_min_frequency must be >= 1");
    if (summarize_options.max_summary_tokens < 1)
        throw std::runtime_error("max_summary_tokens must be >= 1");
    if (summarize_options.truncation_failure_threshold < 0.0 ||
        summarize_options.truncation_failure_threshold > 1.0)
        throw std::runtime_error("truncation_failure_threshold must lie in [0,1]");
    if (!use_mock && endpoint.base_url.empty())
        throw std::runtime_error("a real endpoint needs a base_url (or enable the mock)");
    endpoint.check();
}

namespace {

void check_known_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                      const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (allowed.find(it.key()) == allowed.end())
            throw std::runtime_error("unknown config key '" + where + it.key() + "'");
}

template <typename T>
T value_or(const nlohmann::json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& obj) {
    if (!obj.is_object()) throw std::runtime_error("config root must be a table/object");
    check_known_keys(obj,
                     {"corpus", "output_dir", "cache_dir", "aspects", "model_kind", "integration",
                      "seeds", "include_zero_shot", "union_aspect_header", "evaluate_dev",
                      "parallelism", "weighting", "vocab_min_frequency",
                      "external_predictions_dir", "synthetic", "split", "svm", "endpoint", "mock",
                      "summarize"},
                     "");

    ExperimentConfig cfg;
    cfg.corpus_path = value_or<std::string>(obj, "corpus", "");
    cfg.output_dir = value_or<std::string>(obj, "output_dir", "");
    cfg.cache_dir = value_or<std::string>(obj, "cache_dir", "");
    cfg.model_kind = value_or<std::string>(obj, "model_kind", cfg.model_kind);
    cfg.include_zero_shot = value_or<bool>(obj, "include_zero_shot", cfg.include_zero_shot);
    cfg.union_aspect_header = value_or<bool>(obj, "union_aspect_header", cfg.union_aspect_header);
    cfg.evaluate_dev = value_or<bool>(obj, "evaluate_dev", cfg.evaluate_dev);
    cfg.parallelism = value_or<std::size_t>(obj, "parallelism", cfg.parallelism);
    cfg.vocab_min_frequency =
        value_or<std::size_t>(obj, "vocab_min_frequency", cfg.vocab_min_frequency);
    cfg.external_predictions_dir =
        value_or<std::string>(obj, "external_predictions_dir", cfg.external_predictions_dir);

    if (obj.contains("weighting")) {
        const std::string w = obj.at("weighting").get<std::string>();
        if (w == "tf")
            cfg.weighting = FeatureWeighting::term_frequency;
        else if (w == "tfidf")
            cfg.weighting = FeatureWeighting::tf_idf;
        else
            throw std::runtime_error("weighting must be 'tf' or 'tfidf'");
    }
    if (obj.contains("aspects")) {
        cfg.aspects.clear();
        for (const nlohmann::json& a : obj.at("aspects"))
            cfg.aspects.push_back(aspect_from_string(a.get<std::string>()));
    }
    if (obj.contains("integration")) {
        cfg.integration.clear();
        for (const nlohmann::json& s : obj.at("integration"))
            cfg.integration.push_back(s.get<std::string>());
    }
    if (obj.contains("seeds")) {
        cfg.seeds.clear();
        for (const nlohmann::json& s : obj.at("seeds")) cfg.seeds.push_back(s.get<std::int64_t>());
    }

    if (obj.contains("synthetic")) {
        const nlohmann::json& syn = obj.at("synthetic");
        check_known_keys(syn,
                         {"documents", "patients", "positive_ratio", "signal_strength",
                          "negative_signal_factor", "noise_vocab", "seed", "signal_tokens"},
                         "synthetic.");
        cfg.synthetic.n_documents = value_or<std::size_t>(syn, "documents", cfg.synthetic.n_documents);
        cfg.synthetic.n_patients = value_or<std::size_t>(syn, "patients", cfg.synthetic.n_patients);
        cfg.synthetic.positive_ratio =
            value_or<double>(syn, "positive_ratio", cfg.synthetic.positive_ratio);
        cfg.synthetic.signal_strength =
            value_or<double>(syn, "signal_strength", cfg.synthetic.signal_strength);
        cfg.synthetic.negative_signal_factor =
            value_or<double>(syn, "negative_signal_factor", cfg.synthetic.negative_signal_factor);
        cfg.synthetic.noise_vocab_size =
            value_or<std::size_t>(syn, "noise_vocab", cfg.synthetic.noise_vocab_size);
        cfg.synthetic.seed = value_or<std::uint64_t>(syn, "seed", cfg.synthetic.seed);
        if (syn.contains("signal_tokens")) {
            cfg.synthetic.aspect_signal_tokens.clear();
            for (auto it = syn.at("signal_tokens").begin(); it != syn.at("signal_tokens").end();
                 ++it) {
                std::vector<std::string> tokens;
                for (const nlohmann::json& t : it.value()) tokens.push_back(t.get<std::string>());
                cfg.synthetic.aspect_signal_tokens[it.key()] = std::move(tokens);
            }
        }
    }
    if (obj.contains("split")) {
        const nlohmann::json& sp = obj.at("split");
        check_known_keys(sp, {"train", "dev", "test"}, "split.");
        cfg.synthetic.fractions.train = value_or<double>(sp, "train", cfg.synthetic.fractions.train);
        cfg.synthetic.fractions.dev = value_or<double>(sp, "dev", cfg.synthetic.fractions.dev);
        cfg.synthetic.fractions.test = value_or<double>(sp, "test", cfg.synthetic.fractions.test);
    }
    if (obj.contains("svm")) {
        const nlohmann::json& svm = obj.at("svm");
        check_known_keys(svm, {"lambda", "epochs", "eta0"}, "svm.");
        cfg.hyperparams.lambda = value_or<double>(svm, "lambda", cfg.hyperparams.lambda);
        cfg.hyperparams.epochs = value_or<std::size_t>(svm, "epochs", cfg.hyperparams.epochs);
        cfg.hyperparams.eta0 = value_or<double>(svm, "eta0", cfg.hyperparams.eta0);
    }
    if (obj.contains("endpoint")) {
        const nlohmann::json& ep = obj.at("endpoint");
        check_known_keys(ep,
                         {"base_url", "model_name", "temperature", "max_output_tokens",
                          "timeout_seconds", "retries", "api_key_env"},
                         "endpoint.");
        cfg.endpoint.base_url = value_or<std::string>(ep, "base_url", cfg.endpoint.base_url);
        cfg.endpoint.model_name = value_or<std::string>(ep, "model_name", cfg.endpoint.model_name);
        cfg.endpoint.temperature = value_or<double>(ep, "temperature", cfg.endpoint.temperature);
        cfg.endpoint.max_output_tokens =
            value_or<std::size_t>(ep, "max_output_tokens", cfg.endpoint.max_output_tokens);
        cfg.endpoint.timeout_seconds =
            value_or<int>(ep, "timeout_seconds", cfg.endpoint.timeout_seconds);
        cfg.endpoint.retries = value_or<int>(ep, "retries", cfg.endpoint.retries);
        cfg.endpoint.api_key_env = value_or<std::string>(ep, "api_key_env", cfg.endpoint.api_key_env);
        cfg.use_mock = false;  // an explicit endpoint turns the mock off unless [mock] re-enables
    }
    if (obj.contains("mock")) {
        const nlohmann::json& mock = obj.at("mock");
        check_known_keys(mock, {"enabled", "seed"}, "mock.");
        cfg.use_mock = value_or<bool>(mock, "enabled", true);
        cfg.mock_seed = value_or<std::uint64_t>(mock, "seed", cfg.mock_seed);
    }
    if (obj.contains("summarize")) {
        const nlohmann::json& sm = obj.at("summarize");
        check_known_keys(
            sm, {"max_summary_tokens", "permit_partial", "truncation_failure_threshold"},
            "summarize.");
        cfg.summarize_options.max_summary_tokens = value_or<std::size_t>(
            sm, "max_summary_tokens", cfg.summarize_options.max_summary_tokens);
        cfg.summarize_options.permit_partial =
            value_or<bool>(sm, "permit_partial", cfg.summarize_options.permit_partial);
        cfg.summarize_options.truncation_failure_threshold = value_or<double>(
            sm, "truncation_failure_threshold",
            cfg.summarize_options.truncation_failure_threshold);
    }
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json aspects = nlohmann::json::array();
    for (Aspect a : config.aspects) aspects.push_back(to_string(a));
    nlohmann::json signal_tokens = nlohmann::json::object();
    for (const auto& [aspect, tokens] : config.synthetic.aspect_signal_tokens)
        signal_tokens[aspect] = tokens;

    // output_dir and cache_dir are deliberately left out so the manifest is
    // identical wherever the artifact tree is written.
    nlohmann::json obj{
        {"corpus", config.corpus_path},
        {"aspects", aspects},
        {"model_kind", config.model_kind},
        {"integration", config.integration},
        {"seeds", config.seeds},
        {"include_zero_shot", config.include_zero_shot},
        {"union_aspect_header", config.union_aspect_header},
        {"evaluate_dev", config.evaluate_dev},
        {"parallelism", config.parallelism},
        {"weighting", config.weighting == FeatureWeighting::term_frequency ? "tf" : "tfidf"},
        {"vocab_min_frequency", config.vocab_min_frequency},
        {"external_predictions_dir", config.external_predictions_dir},
        {"svm",
         {{"lambda", config.hyperparams.lambda},
          {"epochs", config.hyperparams.epochs},
          {"eta0", config.hyperparams.eta0}}},
        {"summarize",
         {{"max_summary_tokens", config.summarize_options.max_summary_tokens},
          {"permit_partial", config.summarize_options.permit_partial},
          {"truncation_failure_threshold",
           config.summarize_options.truncation_failure_threshold}}},
        {"mock", {{"enabled", config.use_mock}, {"seed", config.mock_seed}}}};
    if (config.corpus_path.empty()) {
        obj["synthetic"] = {{"documents", config.synthetic.n_documents},
                            {"patients", config.synthetic.n_patients},
                            {"positive_ratio", config.synthetic.positive_ratio},
                            {"signal_strength", config.synthetic.signal_strength},
                            {"negative_signal_factor", config.synthetic.negative_signal_factor},
                            {"noise_vocab", config.synthetic.noise_vocab_size},
                            {"seed", config.synthetic.seed},
                            {"signal_tokens", signal_tokens}};
        obj["split"] = {{"train", config.synthetic.fractions.train},
                        {"dev", config.synthetic.fractions.dev},
                        {"test", config.synthetic.fractions.test}};
    }
    if (!config.use_mock)
        obj["endpoint"] = {{"base_url", config.endpoint.base_url},
                           {"model_name", config.endpoint.model_name},
                           {"temperature", config.endpoint.temperature},
                           {"max_output_tokens", config.endpoint.max_output_tokens},
                           {"timeout_seconds", config.endpoint.timeout_seconds},
                           {"retries", config.endpoint.retries},
                           {"api_key_env", config.endpoint.api_key_env}};
    return obj;
}

ExperimentConfig load_config(const fs::path& path) {
    const std::string content = read_file(path);
    nlohmann::json obj;
    if (path.extension() == ".toml") {
        obj = parse_minitoml(content, path.string());
    } else {
        try {
            obj = nlohmann::json::parse(content);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path.string() + ": " + e.what());
        }
    }
    return config_from_json(obj);
}

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) throw std::runtime_error("cannot aggregate an empty value list");
    Aggregate agg;
    agg.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    agg.mean = sum / static_cast<double>(agg.n);
    if (agg.n >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
        agg.std = std::sqrt(ss / static_cast<double>(agg.n - 1));
    }
    return agg;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::runtime_error("cannot take a quantile of an empty sample");
    if (q < 0.0 || q > 1.0) throw std::runtime_error("quantile level must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

StageError::StageError(std::string stage_name, const std::string& message)
    : std::runtime_error("[" + stage_name + "] " + message), stage(std::move(stage_name)) {}

int stage_exit_code(const std::string& stage) {
    static const std::map<std::string, int> codes = {
        {"config", 2},  {"corpus", 3},    {"summarize", 4}, {"train", 5},
        {"infodiff", 6}, {"integrate", 7}, {"vote", 8},      {"zero_shot", 9},
        {"metrics", 10}, {"report", 11}};
    const auto it = codes.find(stage);
    return it == codes.end() ? 1 : it->second;
}

// ---------------------------------------------------------------------------
// run_experiment internals
// ---------------------------------------------------------------------------

namespace {

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

nlohmann::json stats_row_json(const CorpusStats::Row& row) {
    nlohmann::json obj{{"documents", row.total}, {"positives", row.positives}};
    obj["positive_ratio"] =
        row.total == 0 ? nlohmann::json(nullptr) : nlohmann::json(row.positive_ratio);
    return obj;
}

std::string stats_to_json(const CorpusStats& stats) {
    nlohmann::json obj{{"train", stats_row_json(stats.train)},
                       {"dev", stats_row_json(stats.dev)},
                       {"test", stats_row_json(stats.test)},
                       {"all", stats_row_json(stats.all)}};
    return obj.dump(2) + "\n";
}

std::string seed_file(const std::string& prefix, std::int64_t seed, const char* ext) {
    return prefix + "_seed" + std::to_string(seed) + ext;
}

fs::path pred_path(const fs::path& out, Split split, const std::string& name, std::int64_t seed) {
    const std::string base = seed_file(name, seed, ".csv");
    return out / "preds" / (split == Split::dev ? "dev_" + base : base);
}

fs::path metrics_path(const fs::path& out, Split split, const std::string& condition,
                      std::int64_t seed) {
    const std::string base = seed_file(condition, seed, ".json");
    return out / "metrics" / (split == Split::dev ? "dev_" + base : base);
}

void write_manifest(const fs::path& out, const nlohmann::json& config_echo,
                    const std::vector<std::string>& stages, const std::string& failed_stage,
                    const std::string& error) {
    std::vector<std::pair<std::string, fs::path>> files;
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename() == "manifest.json") continue;
        files.emplace_back(fs::relative(entry.path(), out).generic_string(), entry.path());
    }
    std::sort(files.begin(), files.end());

    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& [rel, path] : files) {
        const std::string content = read_file(path);
        artifacts.push_back(nlohmann::json{{"path", rel},
                                           {"bytes", content.size()},
                                           {"fnv64", to_hex(fnv1a64(content))}});
    }
    nlohmann::json manifest{{"config", config_echo},
                            {"stages_completed", stages},
                            {"artifacts", artifacts}};
    manifest["failed_stage"] =
        failed_stage.empty() ? nlohmann::json(nullptr) : nlohmann::json(failed_stage);
    manifest["error"] = error.empty() ? nlohmann::json(nullptr) : nlohmann::json(error);
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
}

// parallel_for_indexed requires jobs not to throw; capture and rethrow.
void run_jobs(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job) {
    std::vector<std::exception_ptr> errors(n);
    parallel_for_indexed(n, workers, [&](std::size_t i) {
        try {
            job(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

// Per-document features of one evaluation split.
struct SplitEval {
    std::vector<std::string> ids;
    std::vector<FeatureVector> features;
};

// Shared training matrix and evaluation features of one trainable condition.
struct Family {
    std::string name;
    Vocabulary vocab;
    std::vector<TrainExample> train;
    std::map<Split, SplitEval> eval;
};

Family make_family(const std::string& name, const Corpus& text_corpus,
                   const ExperimentConfig& config, const std::vector<Split>& eval_splits) {
    Family fam;
    fam.name = name;
    std::vector<std::string> train_texts;
    for (const Document* doc : text_corpus.split_documents(Split::train))
        train_texts.push_back(doc->text);
    if (train_texts.empty())
        throw std::runtime_error("no training documents for condition '" + name + "'");
    fam.vocab = Vocabulary::build(train_texts, config.vocab_min_frequency);
    for (const Document* doc : text_corpus.split_documents(Split::train))
        fam.train.push_back({featurize(doc->text, fam.vocab, config.weighting), doc->label});
    for (Split split : eval_splits) {
        SplitEval ev;
        for (const Document* doc : text_corpus.split_documents(split)) {
            ev.ids.push_back(doc->doc_id);
            ev.features.push_back(featurize(doc->text, fam.vocab, config.weighting));
        }
        fam.eval[split] = std::move(ev);
    }
    return fam;
}

// condition -> split -> seed -> predictions
using PredStore = std::map<std::string, std::map<Split, std::map<std::int64_t, PredictionList>>>;

// Trains one model per seed on the family and stores + saves predictions for
// every evaluation split under the family's name.
void train_family(const Family& fam, const ExperimentConfig& config, const fs::path& out,
                  const std::string& model_kind_tag, PredStore& store) {
    std::vector<std::map<Split, PredictionList>> results(config.seeds.size());
    run_jobs(config.seeds.size(), config.parallelism, [&](std::size_t si) {
        const std::int64_t seed = config.seeds[si];
        const LinearModel model = train_svm(fam.train, fam.vocab.size(), config.hyperparams,
                                            static_cast<std::uint64_t>(seed));
        save_model(model, fam.vocab,
                   out / "models" / seed_file(fam.name, seed, ".json"));
        for (const auto& [split, ev] : fam.eval) {
            PredictionList preds = predict(model, ev.ids, ev.features);
            preds.source.aspect = fam.name;
            preds.source.model_kind = model_kind_tag;
            results[si][split] = std::move(preds);
        }
    });
    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
        const std::int64_t seed = config.seeds[si];
        for (auto& [split, preds] : results[si]) {
            save_predictions(preds, pred_path(out, split, fam.name, seed));
            store[fam.name][split][seed] = std::move(preds);
        }
    }
}

std::string cache_key(const std::string& corpus_blob, Aspect aspect,
                      const ExperimentConfig& config) {
    nlohmann::json identity;
    if (config.use_mock) {
        identity = {{"mock", true},
                    {"seed", config.mock_seed},
                    {"max_summary_tokens", config.summarize_options.max_summary_tokens}};
    } else {
        identity = {{"base_url", config.endpoint.base_url},
                    {"model_name", config.endpoint.model_name},
                    {"temperature", config.endpoint.temperature},
                    {"max_output_tokens", config.endpoint.max_output_tokens},
                    {"max_summary_tokens", config.summarize_options.max_summary_tokens}};
    }
    const std::uint64_t key = mix64(fnv1a64(corpus_blob) ^ mix64(fnv1a64(to_string(aspect))) ^
                                    mix64(fnv1a64(identity.dump())));
    return to_hex(key);
}

struct ReportInputs {
    std::vector<ConditionResult> conditions;  // report order
    double gold_test_ratio = 0.0;
    CorpusStats stats;
    std::size_t n_patients = 0;
    std::optional<nlohmann::json> infodiff;  // parsed infodiff/report.json
};

struct MetricColumn {
    const char* label;
    bool optional;  // may be undefined (ranking metrics)
};

constexpr MetricColumn kColumns[] = {{"AUROC", true},
                                     {"AUPRC", true},
                                     {"MaAvg F1", false},
                                     {"Neg F1", false},
                                     {"Pos F1", false},
                                     {"positive_prediction_ratio", false}};

std::optional<double> column_value(const MetricsReport& m, std::size_t col) {
    switch (col) {
        case 0: return m.auroc;
        case 1: return m.auprc;
        case 2: return m.f1_macro;
        case 3: return m.f1_neg;
        case 4: return m.f1_pos;
        case 5: return m.positive_prediction_ratio;
    }
    return std::nullopt;
}

// Mean/std of one metric column over the condition's seeds; empty when any
// seed has it undefined.
std::optional<Aggregate> column_aggregate(const ConditionResult& cond, std::size_t col) {
    std::vector<double> values;
    for (const MetricsReport& m : cond.per_seed) {
        const std::optional<double> v = column_value(m, col);
        if (!v) return std::nullopt;
        values.push_back(*v);
    }
    if (values.empty()) return std::nullopt;
    return aggregate(values);
}

void emit_report_files(const fs::path& out, const ReportInputs& in) {
    const std::size_t n_cols = std::size(kColumns);

    // Per-seed long table.
    {
        std::string csv = "condition,seed";
        for (const MetricColumn& col : kColumns) csv += std::string(",") + col.label;
        csv += "\n";
        for (const ConditionResult& cond : in.conditions) {
            for (std::size_t si = 0; si < cond.per_seed.size(); ++si) {
                csv += cond.condition + ",";
                csv += cond.seeds.empty() ? "-" : std::to_string(cond.seeds[si]);
                for (std::size_t c = 0; c < n_cols; ++c) {
                    const std::optional<double> v = column_value(cond.per_seed[si], c);
                    csv += ",";
                    csv += v ? format_probability(*v) : "undefined";
                }
                csv += "\n";
            }
        }
        write_file(out / "report" / "metrics_per_seed.csv", csv);
    }

    // Mean and std tables over seeds (test split).
    {
        std::string head = "condition";
        for (const MetricColumn& col : kColumns) head += std::string(",") + col.label;
        head += "\n";
        std::string mean_csv = head, std_csv = head;
        for (const ConditionResult& cond : in.conditions) {
            mean_csv += cond.condition;
            std_csv += cond.condition;
            for (std::size_t c = 0; c < n_cols; ++c) {
                const std::optional<Aggregate> agg = column_aggregate(cond, c);
                mean_csv += ",";
                std_csv += ",";
                mean_csv += agg ? format_probability(agg->mean) : "undefined";
                std_csv += agg ? format_probability(agg->std) : "undefined";
            }
            mean_csv += "\n";
            std_csv += "\n";
        }
        write_file(out / "report" / "table_mean.csv", mean_csv);
        write_file(out / "report" / "table_std.csv", std_csv);
    }

    // Positive-prediction-ratio quartiles per condition vs the gold ratio.
    {
        std::string csv = "condition,n,min,q1,median,q3,max,gold_ratio\n";
        for (const ConditionResult& cond : in.conditions) {
            std::vector<double> ratios;
            for (const MetricsReport& m : cond.per_seed)
                ratios.push_back(m.positive_prediction_ratio);
            csv += cond.condition + "," + std::to_string(ratios.size());
            for (double q : {0.0, 0.25, 0.5, 0.75, 1.0})
                csv += "," + format_probability(quantile(ratios, q));
            csv += "," + format_probability(in.gold_test_ratio) + "\n";
        }
        write_file(out / "report" / "ratios.csv", csv);
    }

    // Human-readable summary with top-2 marks per metric column.
    {
        std::ostringstream txt;
        txt << "Aspect summarization experiment\n";
        txt << "===============================\n\n";
        txt << "Corpus: " << in.stats.all.total << " documents from " << in.n_patients
            << " patients (train " << in.stats.train.total << " / dev " << in.stats.dev.total
            << " / test " << in.stats.test.total << ")\n";
        txt << "Gold positive ratio (test): " << fixed3(in.gold_test_ratio) << "\n\n";

        if (in.infodiff) {
            const nlohmann::json& diff = *in.infodiff;
            txt << "Prediction-difference scores over test rankings (d = (1 - tau)/2):\n";
            for (const auto& [aspect, value] : diff.at("intra").items())
                txt << "  intra  " << pad_right(aspect, 24) << " D=" << fixed3(value.get<double>())
                    << "  offdiag D'=" << fixed3(diff.at("intra_offdiag").at(aspect).get<double>())
                    << "\n";
            double max_intra_offdiag = 0.0, min_inter = 1.0;
            for (const auto& [aspect, value] : diff.at("intra_offdiag").items())
                max_intra_offdiag = std::max(max_intra_offdiag, value.get<double>());
            for (const auto& [pair, value] : diff.at("inter").items()) {
                txt << "  inter  " << pad_right(pair, 24) << " D=" << fixed3(value.get<double>())
                    << "\n";
                min_inter = std::min(min_inter, value.get<double>());
            }
            txt << "  pattern: min inter D " << fixed3(min_inter) << " vs max intra D' "
                << fixed3(max_intra_offdiag) << " -> "
                << (min_inter > max_intra_offdiag ? "aspect summaries carry distinct signals"
                                                  : "no separation")
                << "\n\n";
        }

        txt << "Test metrics, mean +/- std over seeds (* marks the top-2 values per column):\n";
        txt << pad_right("condition", 18);
        for (const MetricColumn& col : kColumns) txt << pad_right(col.label, 22);
        txt << "\n";

        // Top-2 thresholds per column over the defined means.
        std::vector<std::optional<double>> top2(n_cols);
        for (std::size_t c = 0; c < n_cols; ++c) {
            std::vector<double> means;
            for (const ConditionResult& cond : in.conditions) {
                const std::optional<Aggregate> agg = column_aggregate(cond, c);
                if (agg) means.push_back(agg->mean);
            }
            std::sort(means.begin(), means.end(), std::greater<double>());
            if (!means.empty()) top2[c] = means[std::min<std::size_t>(1, means.size() - 1)];
        }
        for (const ConditionResult& cond : in.conditions) {
            txt << pad_right(cond.condition, 18);
            for (std::size_t c = 0; c < n_cols; ++c) {
                const std::optional<Aggregate> agg = column_aggregate(cond, c);
                if (!agg) {
                    txt << pad_right("ranking unavailable", 22);
                    continue;
                }
                std::string cell = fixed3(agg->mean) + " +/-" + fixed3(agg->std);
                if (top2[c] && agg->mean >= *top2[c]) cell += "*";
                txt << pad_right(cell, 22);
            }
            txt << "\n";
        }
        txt << "\nPositive-prediction ratios vs gold are tabulated in report/ratios.csv.\n";
        write_file(out / "report" / "summary.txt", txt.str());
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    try {
        config.check();
    } catch (const std::exception& e) {
        throw StageError("config", e.what());
    }

    const fs::path out = config.output_dir;
    const fs::path cache =
        config.cache_dir.empty() ? out / "cache" : fs::path(config.cache_dir);
    {
        // A dirty output directory would leak stale files into the manifest.
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(out, ec)) {
            if (entry.path() == cache) continue;
            throw StageError("config", "output directory is not empty: " + out.string());
        }
    }
    fs::create_directories(out);
    fs::create_directories(cache);

    const nlohmann::json echo = config_to_json(config);
    std::vector<std::string> stages_completed;

    const auto run_stage = [&](const std::string& stage, const std::function<void()>& body) {
        try {
            body();
        } catch (const std::exception& e) {
            write_manifest(out, echo, stages_completed, stage, e.what());
            throw StageError(stage, e.what());
        }
        stages_completed.push_back(stage);
    };

    ExperimentResult result;
    result.output_dir = out;

    // --- corpus ---
    Corpus corpus;
    run_stage("corpus", [&] {
        corpus = config.corpus_path.empty() ? generate_synthetic(config.synthetic)
                                            : load_corpus(config.corpus_path);
        save_corpus(corpus, out / "corpus.jsonl");
        write_file(out / "corpus_stats.json", stats_to_json(corpus_stats(corpus)));
    });

    std::vector<Split> eval_splits = {Split::test};
    if (config.evaluate_dev && config.model_kind == "bow_svm" &&
        !corpus.split_documents(Split::dev).empty())
        eval_splits.push_back(Split::dev);

    std::unique_ptr<LlmClient> client_holder;
    const auto client = [&]() -> LlmClient& {
        if (!client_holder) {
            if (config.use_mock)
                client_holder = std::make_unique<MockLlmClient>(config.mock_seed);
            else
                client_holder = make_http_client(config.endpoint);
        }
        return *client_holder;
    };

    // --- summarize (cached) ---
    std::map<Aspect, SummarySet> summaries;
    if (config.model_kind == "bow_svm") {
        run_stage("summarize", [&] {
            const std::string corpus_blob = corpus_to_jsonl(corpus);
            for (Aspect aspect : config.aspects) {
                const fs::path cache_file =
                    cache / (cache_key(corpus_blob, aspect, config) + ".jsonl");
                SummarySet set;
                if (fs::exists(cache_file)) {
                    set = load_summaries(cache_file);
                    if (!set.records.empty() && set.aspect != aspect)
                        throw std::runtime_error("cache entry " + cache_file.string() +
                                                 " holds a different aspect");
                } else {
                    SummarizeResult res = summarize_corpus(corpus, default_prompt(aspect),
                                                           client(), config.endpoint,
                                                           config.summarize_options);
                    if (!res.failures.empty()) {
                        nlohmann::json fails = nlohmann::json::array();
                        for (const SummaryFailure& f : res.failures)
                            fails.push_back(nlohmann::json{{"doc_id", f.doc_id},
                                                           {"attempts", f.attempts},
                                                           {"error", f.last_error}});
                        write_file(out / "summaries" / (to_string(aspect) + "_failures.json"),
                                   fails.dump(2) + "\n");
                    }
                    set = std::move(res.set);
                    save_summaries(set, cache_file);
                }
                check_alignment(set, corpus);  // totality required downstream
                save_summaries(set, out / "summaries" / (to_string(aspect) + ".jsonl"));
                summaries[aspect] = std::move(set);
            }
        });
    }

    // --- single-aspect models (or external ingest) ---
    PredStore store;
    run_stage("train", [&] {
        if (config.model_kind == "external_predictions") {
            for (Aspect aspect : config.aspects) {
                const std::string name = to_string(aspect);
                for (std::int64_t seed : config.seeds) {
                    const fs::path src = fs::path(config.external_predictions_dir) /
                                         seed_file(name, seed, ".csv");
                    PredictionList preds = ingest_predictions(src);
                    preds.source.aspect = name;
                    preds.source.seed = seed;
                    save_predictions(preds, pred_path(out, Split::test, name, seed));
                    store[name][Split::test][seed] = std::move(preds);
                }
            }
            return;
        }
        for (Aspect aspect : config.aspects) {
            const Corpus text_corpus = corpus_with_texts(corpus, summaries.at(aspect));
            const Family fam = make_family(to_string(aspect), text_corpus, config, eval_splits);
            train_family(fam, config, out, "bow_svm", store);
        }
    });

    // --- information-signal difference report ---
    const bool have_diff = config.aspects.size() >= 2;
    run_stage("infodiff", [&] {
        if (!have_diff) return;
        std::vector<RunGroup> groups;
        for (Aspect aspect : config.aspects) {
            RunGroup group;
            group.aspect = to_string(aspect);
            for (std::int64_t seed : config.seeds)
                group.runs.push_back(store.at(group.aspect).at(Split::test).at(seed));
            groups.push_back(std::move(group));
        }
        result.infodiff = build_difference_report(groups);
        save_report(result.infodiff, out / "infodiff" / "report.json");
        write_file(out / "infodiff" / "pairs.csv", report_pairs_csv(result.infodiff));
        write_file(out / "infodiff" / "dscores.csv", report_scores_csv(result.infodiff));
    });

    // --- integration datasets and their models ---
    const bool want_merged = has_strategy(config.integration, "merged");
    const bool want_soft = has_strategy(config.integration, "union_softvote");
    const bool want_any = has_strategy(config.integration, "union_anyvote");
    const bool want_union = want_soft || want_any;
    run_stage("integrate", [&] {
        if (!want_merged && !want_union) return;
        const SummarySet& plain = summaries.at(Aspect::plain);
        const SummarySet& risk = summaries.at(Aspect::riskfactor);
        const SummarySet& time = summaries.at(Aspect::timeline);

        if (want_merged) {
            const MergedDataset merged = build_merged(plain, risk, time);
            const Corpus merged_corpus = corpus_with_texts(corpus, merged);
            const Family fam = make_family("merged", merged_corpus, config, eval_splits);
            train_family(fam, config, out, "bow_svm", store);
        }
        if (want_union) {
            const UnionDataset uds = build_union(plain, risk, time, config.union_aspect_header);

            std::vector<std::string> train_texts;
            std::vector<const UnionRecord*> train_records;
            for (const UnionRecord& rec : uds.records) {
                if (corpus.split_of(rec.doc_id) != Split::train) continue;
                train_texts.push_back(rec.text);
                train_records.push_back(&rec);
            }
            if (train_texts.empty()) throw std::runtime_error("union training set is empty");
            const Vocabulary vocab = Vocabulary::build(train_texts, config.vocab_min_frequency);
            std::vector<TrainExample> train;
            for (const UnionRecord* rec : train_records)
                train.push_back({featurize(rec->text, vocab, config.weighting),
                                 corpus.document(rec->doc_id).label});

            // Per aspect x split evaluation features under the union model.
            std::map<Aspect, std::map<Split, SplitEval>> eval;
            for (const UnionRecord& rec : uds.records) {
                const Split split = corpus.split_of(rec.doc_id);
                if (std::find(eval_splits.begin(), eval_splits.end(), split) == eval_splits.end())
                    continue;
                SplitEval& ev = eval[rec.aspect][split];
                ev.ids.push_back(rec.doc_id);
                ev.features.push_back(featurize(rec.text, vocab, config.weighting));
            }

            std::vector<std::map<Aspect, std::map<Split, PredictionList>>> results(
                config.seeds.size());
            run_jobs(config.seeds.size(), config.parallelism, [&](std::size_t si) {
                const std::int64_t seed = config.seeds[si];
                const LinearModel model = train_svm(train, vocab.size(), config.hyperparams,
                                                    static_cast<std::uint64_t>(seed));
                save_model(model, vocab, out / "models" / seed_file("union", seed, ".json"));
                for (const auto& [aspect, by_split] : eval) {
                    for (const auto& [split, ev] : by_split) {
                        PredictionList preds = predict(model, ev.ids, ev.features);
                        preds.source.aspect = "union_" + to_string(aspect);
                        preds.source.model_kind = "bow_svm_union";
                        results[si][aspect][split] = std::move(preds);
                    }
                }
            });
            for (std::size_t si = 0; si < config.seeds.size(); ++si) {
                const std::int64_t seed = config.seeds[si];
                for (auto& [aspect, by_split] : results[si]) {
                    for (auto& [split, preds] : by_split) {
                        const std::string name = "union_" + to_string(aspect);
                        save_predictions(preds, pred_path(out, split, name, seed));
                        store[name][split][seed] = std::move(preds);
                    }
                }
            }
        }
    });

    // --- prediction pooling ---
    run_stage("vote", [&] {
        if (!want_union) return;
        std::vector<std::string> warnings;
        for (Split split : eval_splits) {
            for (std::int64_t seed : config.seeds) {
                const PredictionList& p = store.at("union_plain").at(split).at(seed);
                const PredictionList& r = store.at("union_riskfactor").at(split).at(seed);
                const PredictionList& t = store.at("union_timeline").at(split).at(seed);
                if (want_soft) {
                    VoteResult vote = soft_vote(p, r, t);
                    vote.predictions.source.aspect = "softvote";
                    save_predictions(vote.predictions, pred_path(out, split, "softvote", seed));
                    store["union_softvote"][split][seed] = std::move(vote.predictions);
                    warnings.insert(warnings.end(), vote.warnings.begin(), vote.warnings.end());
                }
                if (want_any) {
                    VoteResult vote = any_vote(p, r, t);
                    vote.predictions.source.aspect = "anyvote";
                    save_predictions(vote.predictions, pred_path(out, split, "anyvote", seed));
                    store["union_anyvote"][split][seed] = std::move(vote.predictions);
                    warnings.insert(warnings.end(), vote.warnings.begin(), vote.warnings.end());
                }
            }
        }
        if (!warnings.empty()) {
            std::string txt;
            for (const std::string& w : warnings) txt += w + "\n";
            write_file(out / "report" / "vote_warnings.txt", txt);
        }
    });

    // --- zero-shot comparison ---
    PredictionList zero_list;
    bool have_zero = false;
    if (config.include_zero_shot) {
        run_stage("zero_shot", [&] {
            ZeroShotResult z =
                zero_shot_predict(corpus, Split::test, client(), config.endpoint,
                                  default_zero_shot_prompt(), config.summarize_options);
            save_predictions(z.predictions, out / "preds" / "zero_shot.csv");
            if (z.unparseable > 0 || !z.failures.empty()) {
                nlohmann::json fails = nlohmann::json::array();
                for (const SummaryFailure& f : z.failures)
                    fails.push_back(nlohmann::json{{"doc_id", f.doc_id},
                                                   {"attempts", f.attempts},
                                                   {"error", f.last_error}});
                nlohmann::json obj{{"unparseable", z.unparseable}, {"failures", fails}};
                write_file(out / "preds" / "zero_shot_manifest.json", obj.dump(2) + "\n");
            }
            zero_list = std::move(z.predictions);
            have_zero = true;
        });
    }

    // --- metrics ---
    run_stage("metrics", [&] {
        const GoldLabels gold = gold_from_corpus(corpus);

        std::vector<std::string> condition_order;
        for (Aspect aspect : config.aspects) condition_order.push_back(to_string(aspect));
        if (want_merged) condition_order.push_back("merged");
        if (want_soft) condition_order.push_back("union_softvote");
        if (want_any) condition_order.push_back("union_anyvote");

        for (const std::string& condition : condition_order) {
            ConditionResult cr;
            cr.condition = condition;
            cr.seeds = config.seeds;
            for (std::int64_t seed : config.seeds) {
                const MetricsReport m =
                    compute_metrics(store.at(condition).at(Split::test).at(seed), gold);
                save_metrics(m, metrics_path(out, Split::test, condition, seed));
                cr.per_seed.push_back(m);
            }
            result.conditions.push_back(std::move(cr));

            for (Split split : eval_splits) {
                if (split == Split::test) continue;
                for (std::int64_t seed : config.seeds) {
                    const auto& by_split = store.at(condition);
                    const auto it = by_split.find(split);
                    if (it == by_split.end()) continue;
                    save_metrics(compute_metrics(it->second.at(seed), gold),
                                 metrics_path(out, split, condition, seed));
                }
            }
        }
        if (have_zero) {
            ConditionResult cr;
            cr.condition = "zero_shot";
            cr.per_seed.push_back(compute_metrics(zero_list, gold));
            save_metrics(cr.per_seed.back(), out / "metrics" / "zero_shot.json");
            result.conditions.push_back(std::move(cr));
        }
    });

    // --- report ---
    run_stage("report", [&] {
        ReportInputs in;
        in.conditions = result.conditions;
        in.gold_test_ratio = corpus.positive_ratio(Split::test);
        in.stats = corpus_stats(corpus);
        std::set<std::string> patients;
        for (const Document& doc : corpus.documents()) patients.insert(doc.patient_id);
        in.n_patients = patients.size();
        if (have_diff) in.infodiff = nlohmann::json::parse(report_to_json(result.infodiff));
        emit_report_files(out, in);
    });

    write_manifest(out, echo, stages_completed, "", "");

    result.corpus = std::move(corpus);
    result.gold_test_ratio = result.corpus.positive_ratio(Split::test);
    return result;
}

void rebuild_report(const fs::path& run_dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(run_dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error((run_dir / "manifest.json").string() + ": " + e.what());
    }
    const nlohmann::json& cfg = manifest.at("config");

    const Corpus corpus = load_corpus(run_dir / "corpus.jsonl");

    std::vector<std::int64_t> seeds;
    for (const nlohmann::json& s : cfg.at("seeds")) seeds.push_back(s.get<std::int64_t>());

    // Same condition order run_experiment uses.
    std::vector<std::string> conditions;
    for (const nlohmann::json& a : cfg.at("aspects")) conditions.push_back(a.get<std::string>());
    std::vector<std::string> integration;
    for (const nlohmann::json& s : cfg.at("integration"))
        integration.push_back(s.get<std::string>());
    for (const char* strategy : {"merged", "union_softvote", "union_anyvote"})
        if (has_strategy(integration, strategy)) conditions.push_back(strategy);

    ReportInputs in;
    for (const std::string& condition : conditions) {
        ConditionResult cr;
        cr.condition = condition;
        cr.seeds = seeds;
        for (std::int64_t seed : seeds)
            cr.per_seed.push_back(load_metrics(metrics_path(run_dir, Split::test, condition, seed)));
        in.conditions.push_back(std::move(cr));
    }
    if (cfg.value("include_zero_shot", false) &&
        fs::exists(run_dir / "metrics" / "zero_shot.json")) {
        ConditionResult cr;
        cr.condition = "zero_shot";
        cr.per_seed.push_back(load_metrics(run_dir / "metrics" / "zero_shot.json"));
        in.conditions.push_back(std::move(cr));
    }

    in.gold_test_ratio = corpus.positive_ratio(Split::test);
    in.stats = corpus_stats(corpus);
    std::set<std::string> patients;
    for (const Document& doc : corpus.documents()) patients.insert(doc.patient_id);
    in.n_patients = patients.size();
    if (fs::exists(run_dir / "infodiff" / "report.json")) {
        try {
            in.infodiff = nlohmann::json::parse(read_file(run_dir / "infodiff" / "report.json"));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error((run_dir / "infodiff" / "report.json").string() + ": " +
                                     e.what());
        }
    }
    emit_report_files(run_dir, in);
}

}  // namespace aspectsum
