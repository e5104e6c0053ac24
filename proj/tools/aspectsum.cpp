// Command-line front end for the aspect-oriented summarization pipeline.
// Subcommands mirror the pipeline stages; `run` executes the whole thing
// from a config file. Exit codes are stage-specific (see stage_exit_code).

#include <cstdint>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aspectsum/corpus.hpp"
#include "aspectsum/features.hpp"
#include "aspectsum/harness.hpp"
#include "aspectsum/infodiff.hpp"
#include "aspectsum/integrate.hpp"
#include "aspectsum/llm_client.hpp"
#include "aspectsum/metrics.hpp"
#include "aspectsum/predictions.hpp"
#include "aspectsum/summarize.hpp"
#include "aspectsum/svm.hpp"
#include "aspectsum/util.hpp"

namespace fs = std::filesystem;
using namespace aspectsum;

namespace {

// Endpoint options shared by every subcommand that talks to the model.
struct EndpointArgs {
    std::string base_url;
    std::string model_name = "local-chat";
    double temperature = 0.0;
    std::size_t max_output_tokens = 512;
    int timeout_seconds = 120;
    int retries = 2;
    std::string api_key_env = "ASPECTSUM_API_KEY";
    std::uint64_t mock_seed = 7;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--base-url", base_url,
                        "Chat-completions endpoint; omit to use the deterministic mock");
        cmd->add_option("--model-name", model_name, "Model name sent to the endpoint");
        cmd->add_option("--temperature", temperature, "Sampling temperature");
        cmd->add_option("--max-output-tokens", max_output_tokens, "Endpoint output token cap");
        cmd->add_option("--timeout", timeout_seconds, "Request timeout in seconds");
        cmd->add_option("--retries", retries, "Retries per document after the first attempt");
        cmd->add_option("--api-key-env", api_key_env, "Env var holding the bearer token");
        cmd->add_option("--mock-seed", mock_seed, "Seed for the mock endpoint");
    }

    LlmEndpointConfig endpoint() const {
        LlmEndpointConfig ep;
        ep.base_url = base_url;
        ep.model_name = model_name;
        ep.temperature = temperature;
        ep.max_output_tokens = max_output_tokens;
        ep.timeout_seconds = timeout_seconds;
        ep.retries = retries;
        ep.api_key_env = api_key_env;
        return ep;
    }

    std::unique_ptr<LlmClient> client() const {
        if (base_url.empty()) return make_mock_client(mock_seed);
        return make_http_client(endpoint());
    }
};

std::vector<TrainExample> make_train_examples(const std::vector<std::string>& texts,
                                              const std::vector<int>& labels,
                                              const Vocabulary& vocab, FeatureWeighting weighting) {
    std::vector<TrainExample> examples;
    for (std::size_t i = 0; i < texts.size(); ++i)
        examples.push_back({featurize(texts[i], vocab, weighting), labels[i]});
    return examples;
}

FeatureWeighting parse_weighting(const std::string& name) {
    if (name == "tf") return FeatureWeighting::term_frequency;
    if (name == "tfidf") return FeatureWeighting::tf_idf;
    throw std::runtime_error("weighting must be 'tf' or 'tfidf'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aspect-oriented summarization pipeline for long clinical notes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "aspectsum 1.0.0");
    std::string active_stage = "config";

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic note corpus");
    struct {
        std::string out;
        SyntheticSpec spec = default_synthetic_spec();
    } sy;
    synth->add_option("--out", sy.out, "Output corpus JSONL")->required();
    synth->add_option("--documents", sy.spec.n_documents, "Number of documents");
    synth->add_option("--patients", sy.spec.n_patients, "Number of patients");
    synth->add_option("--positive-ratio", sy.spec.positive_ratio, "Positive label fraction");
    synth->add_option("--signal-strength", sy.spec.signal_strength,
                      "Signal-token rate in positives");
    synth->add_option("--negative-signal-factor", sy.spec.negative_signal_factor,
                      "Signal-rate multiplier in negatives");
    synth->add_option("--noise-vocab", sy.spec.noise_vocab_size, "Noise vocabulary size");
    synth->add_option("--seed", sy.spec.seed, "Generator seed");
    synth->add_option("--train", sy.spec.fractions.train, "Train fraction");
    synth->add_option("--dev", sy.spec.fractions.dev, "Dev fraction");
    synth->add_option("--test", sy.spec.fractions.test, "Test fraction");
    synth->callback([&] {
        active_stage = "corpus";
        const Corpus corpus = generate_synthetic(sy.spec);
        save_corpus(corpus, sy.out);
        const CorpusStats stats = corpus_stats(corpus);
        std::cout << "wrote " << stats.all.total << " documents (" << stats.all.positives
                  << " positive) to " << sy.out << "\n";
    });

    // ---- split ----
    auto* split_cmd = app.add_subcommand("split", "Re-split a corpus by patient");
    struct {
        std::string in, out;
        SplitFractions fractions;
        std::uint64_t seed = 0;
    } sp;
    split_cmd->add_option("--in", sp.in, "Input corpus JSONL")->required();
    split_cmd->add_option("--out", sp.out, "Output corpus JSONL")->required();
    split_cmd->add_option("--train", sp.fractions.train, "Train fraction");
    split_cmd->add_option("--dev", sp.fractions.dev, "Dev fraction");
    split_cmd->add_option("--test", sp.fractions.test, "Test fraction");
    split_cmd->add_option("--seed", sp.seed, "Shuffle seed");
    split_cmd->callback([&] {
        active_stage = "corpus";
        const Corpus corpus = load_corpus(sp.in);
        const Corpus resplit = split_by_patient(corpus.documents(), sp.fractions, sp.seed);
        save_corpus(resplit, sp.out);
        const CorpusStats stats = corpus_stats(resplit);
        std::cout << "split " << stats.all.total << " documents: train " << stats.train.total
                  << " / dev " << stats.dev.total << " / test " << stats.test.total << "\n";
    });

    // ---- summarize ----
    auto* summ = app.add_subcommand("summarize",
                                    "Generate aspect summaries (or zero-shot predictions)");
    struct {
        std::string in, out, aspect = "plain", split;
        bool zero_shot = false;
        SummarizeOptions options;
        EndpointArgs ep;
    } sm;
    summ->add_option("--in", sm.in, "Corpus JSONL")->required();
    summ->add_option("--out", sm.out, "Output summaries JSONL (or predictions CSV)")->required();
    summ->add_option("--aspect", sm.aspect, "plain | riskfactor | timeline");
    summ->add_flag("--zero-shot", sm.zero_shot,
                   "Ask the binary readmission question instead of summarizing");
    summ->add_option("--split", sm.split, "Restrict zero-shot to one split (train|dev|test)");
    summ->add_option("--max-summary-tokens", sm.options.max_summary_tokens,
                     "Whitespace-token cap per summary");
    summ->add_flag("--permit-partial", sm.options.permit_partial,
                   "Keep going when single documents fail");
    summ->add_option("--parallelism", sm.options.parallelism, "Concurrent endpoint calls");
    summ->add_option("--truncation-failure-threshold", sm.options.truncation_failure_threshold,
                     "Max tolerated fraction of truncated summaries");
    sm.ep.add_options(summ);
    summ->callback([&] {
        active_stage = sm.zero_shot ? "zero_shot" : "summarize";
        const Corpus corpus = load_corpus(sm.in);
        const std::unique_ptr<LlmClient> client = sm.ep.client();
        if (sm.zero_shot) {
            std::optional<Split> split;
            if (!sm.split.empty()) split = split_from_string(sm.split);
            const ZeroShotResult z = zero_shot_predict(corpus, split, *client, sm.ep.endpoint(),
                                                       default_zero_shot_prompt(), sm.options);
            save_predictions(z.predictions, sm.out);
            std::cout << "wrote " << z.predictions.size() << " zero-shot predictions ("
                      << z.unparseable << " unparseable) to " << sm.out << "\n";
            return;
        }
        const SummarizeResult res = summarize_corpus(corpus, default_prompt(aspect_from_string(sm.aspect)),
                                                     *client, sm.ep.endpoint(), sm.options);
        save_summaries(res.set, sm.out);
        std::cout << "wrote " << res.set.records.size() << " " << sm.aspect << " summaries ("
                  << res.truncated_count << " truncated) to " << sm.out << "\n";
    });

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train a seeded linear model on summaries");
    struct {
        std::string corpus, summaries, union_of, model;
        std::uint64_t seed = 0;
        SvmHyperparams hyper;
        std::string weighting = "tf";
        std::size_t min_frequency = 2;
        bool aspect_header = false;
    } tr;
    train_cmd->add_option("--corpus", tr.corpus, "Corpus JSONL (labels and splits)")->required();
    train_cmd->add_option("--summaries", tr.summaries,
                          "Summaries JSONL; omitted = train on the corpus texts");
    train_cmd->add_option("--union-of", tr.union_of,
                          "Three summaries JSONLs (plain,riskfactor,timeline) to train on their union");
    train_cmd->add_flag("--aspect-header", tr.aspect_header,
                        "Prefix union records with their aspect name");
    train_cmd->add_option("--model", tr.model, "Output model JSON")->required();
    train_cmd->add_option("--seed", tr.seed, "Training seed");
    train_cmd->add_option("--lambda", tr.hyper.lambda, "L2 regularization strength");
    train_cmd->add_option("--epochs", tr.hyper.epochs, "SGD epochs");
    train_cmd->add_option("--eta0", tr.hyper.eta0, "Initial learning rate");
    train_cmd->add_option("--weighting", tr.weighting, "tf | tfidf");
    train_cmd->add_option("--min-frequency", tr.min_frequency, "Vocabulary document-frequency floor");
    train_cmd->callback([&] {
        active_stage = "train";
        if (!tr.union_of.empty() && !tr.summaries.empty())
            throw std::runtime_error("--summaries and --union-of are mutually exclusive");
        const Corpus corpus = load_corpus(tr.corpus);
        const FeatureWeighting weighting = parse_weighting(tr.weighting);

        std::vector<std::string> texts;
        std::vector<int> labels;
        if (!tr.union_of.empty()) {
            const std::vector<std::string> parts = split(tr.union_of, ',');
            if (parts.size() != 3)
                throw std::runtime_error("--union-of needs exactly three files");
            const UnionDataset uds = build_union(load_summaries(parts[0]),
                                                 load_summaries(parts[1]),
                                                 load_summaries(parts[2]), tr.aspect_header);
            for (const UnionRecord& rec : uds.records) {
                if (corpus.split_of(rec.doc_id) != Split::train) continue;
                texts.push_back(rec.text);
                labels.push_back(corpus.document(rec.doc_id).label);
            }
        } else {
            const Corpus text_corpus = tr.summaries.empty()
                                           ? corpus
                                           : corpus_with_texts(corpus, load_summaries(tr.summaries));
            for (const Document* doc : text_corpus.split_documents(Split::train)) {
                texts.push_back(doc->text);
                labels.push_back(doc->label);
            }
        }
        if (texts.empty()) throw std::runtime_error("no training documents in the train split");
        const Vocabulary vocab = Vocabulary::build(texts, tr.min_frequency);
        const LinearModel model =
            train_svm(make_train_examples(texts, labels, vocab, weighting), vocab.size(),
                      tr.hyper, tr.seed);
        save_model(model, vocab, tr.model);
        std::cout << "trained on " << texts.size() << " documents (" << vocab.size()
                  << " features), wrote " << tr.model << "\n";
    });

    // ---- predict ----
    auto* pred_cmd = app.add_subcommand("predict", "Score documents with a trained model");
    struct {
        std::string corpus, summaries, model, out, split = "test", weighting = "tf";
    } pr;
    pred_cmd->add_option("--corpus", pr.corpus, "Corpus JSONL")->required();
    pred_cmd->add_option("--summaries", pr.summaries,
                         "Summaries JSONL; omitted = score the corpus texts");
    pred_cmd->add_option("--model", pr.model, "Model JSON")->required();
    pred_cmd->add_option("--out", pr.out, "Output predictions CSV")->required();
    pred_cmd->add_option("--split", pr.split, "train | dev | test | all");
    pred_cmd->add_option("--weighting", pr.weighting, "tf | tfidf (must match training)");
    pred_cmd->callback([&] {
        active_stage = "train";
        const Corpus corpus = load_corpus(pr.corpus);
        const Corpus text_corpus =
            pr.summaries.empty() ? corpus : corpus_with_texts(corpus, load_summaries(pr.summaries));
        const auto [model, vocab] = load_model(pr.model);
        const FeatureWeighting weighting = parse_weighting(pr.weighting);

        std::vector<const Document*> docs;
        if (pr.split == "all") {
            for (const Document& doc : text_corpus.documents()) docs.push_back(&doc);
        } else {
            docs = text_corpus.split_documents(split_from_string(pr.split));
        }
        if (docs.empty()) throw std::runtime_error("no documents in split '" + pr.split + "'");
        std::vector<std::string> ids;
        std::vector<FeatureVector> features;
        for (const Document* doc : docs) {
            ids.push_back(doc->doc_id);
            features.push_back(featurize(doc->text, vocab, weighting));
        }
        PredictionList preds = predict(model, ids, features);
        if (!pr.summaries.empty()) preds.source.aspect = to_string(load_summaries(pr.summaries).aspect);
        save_predictions(preds, pr.out);
        std::cout << "wrote " << preds.size() << " predictions to " << pr.out << "\n";
    });

    // ---- infodiff ----
    auto* diff_cmd = app.add_subcommand(
        "infodiff", "Rank-distance report across seeded runs of each aspect");
    struct {
        std::vector<std::string> groups;
        std::string out_dir;
    } df;
    diff_cmd->add_option("--group", df.groups,
                         "aspect=preds1.csv,preds2.csv,... (repeat per aspect)")
        ->required();
    diff_cmd->add_option("--out-dir", df.out_dir, "Report output directory")->required();
    diff_cmd->callback([&] {
        active_stage = "infodiff";
        std::vector<RunGroup> groups;
        for (const std::string& arg : df.groups) {
            const std::size_t eq = arg.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 >= arg.size())
                throw std::runtime_error("--group needs the form aspect=file1.csv,file2.csv");
            RunGroup group;
            group.aspect = arg.substr(0, eq);
            for (const std::string& file : split(arg.substr(eq + 1), ','))
                group.runs.push_back(ingest_predictions(file));
            groups.push_back(std::move(group));
        }
        const AspectDifferenceReport report = build_difference_report(groups);
        const fs::path out = df.out_dir;
        save_report(report, out / "report.json");
        write_file(out / "pairs.csv", report_pairs_csv(report));
        write_file(out / "dscores.csv", report_scores_csv(report));
        for (const auto& [aspect, d] : report.intra)
            std::cout << "intra " << aspect << " D=" << format_probability(d)
                      << " (offdiag D'=" << format_probability(report.intra_offdiag.at(aspect))
                      << ")\n";
        for (const auto& [pair, d] : report.inter)
            std::cout << "inter " << pair << " D=" << format_probability(d) << "\n";
        std::cout << "wrote report to " << df.out_dir << "\n";
    });

    // ---- integrate ----
    auto* integ = app.add_subcommand("integrate", "Build merged or union datasets");
    integ->require_subcommand(1);
    struct {
        std::string corpus, plain, risk, time, out;
        bool aspect_header = false;
    } ig;
    auto add_integrate_options = [&](CLI::App* cmd, bool needs_corpus) {
        if (needs_corpus)
            cmd->add_option("--corpus", ig.corpus, "Corpus JSONL (labels and splits)")->required();
        cmd->add_option("--plain", ig.plain, "Plain summaries JSONL")->required();
        cmd->add_option("--risk", ig.risk, "Risk-factor summaries JSONL")->required();
        cmd->add_option("--time", ig.time, "Timeline summaries JSONL")->required();
        cmd->add_option("--out", ig.out, "Output file")->required();
    };
    auto* merged_cmd = integ->add_subcommand(
        "merged", "Concatenate the three summaries per document into one corpus");
    add_integrate_options(merged_cmd, true);
    merged_cmd->callback([&] {
        active_stage = "integrate";
        const Corpus corpus = load_corpus(ig.corpus);
        const MergedDataset merged = build_merged(
            load_summaries(ig.plain), load_summaries(ig.risk), load_summaries(ig.time));
        save_corpus(corpus_with_texts(corpus, merged), ig.out);
        std::cout << "wrote merged corpus (" << merged.size() << " documents) to " << ig.out
                  << "\n";
    });
    auto* union_cmd = integ->add_subcommand(
        "union", "Stack the three summary sets into one aspect-tagged dataset");
    add_integrate_options(union_cmd, false);
    union_cmd->add_flag("--aspect-header", ig.aspect_header,
                        "Prefix each record's text with its aspect name");
    union_cmd->callback([&] {
        active_stage = "integrate";
        const UnionDataset uds =
            build_union(load_summaries(ig.plain), load_summaries(ig.risk),
                        load_summaries(ig.time), ig.aspect_header);
        std::string out_jsonl;
        for (const UnionRecord& rec : uds.records) {
            const nlohmann::json obj{{"doc_id", rec.doc_id},
                                     {"aspect", to_string(rec.aspect)},
                                     {"source_index", rec.source_index},
                                     {"text", rec.text},
                                     {"token_count", rec.token_count},
                                     {"truncated", rec.truncated}};
            out_jsonl += obj.dump() + "\n";
        }
        write_file(ig.out, out_jsonl);
        std::cout << "wrote union dataset (" << uds.size() << " records) to " << ig.out << "\n";
    });

    // ---- vote ----
    auto* vote_cmd = app.add_subcommand("vote", "Pool three per-aspect prediction lists");
    vote_cmd->require_subcommand(1);
    struct {
        std::string plain, risk, time, out, detail;
    } vt;
    auto add_vote_options = [&](CLI::App* cmd) {
        cmd->add_option("--plain", vt.plain, "Plain predictions CSV")->required();
        cmd->add_option("--risk", vt.risk, "Risk-factor predictions CSV")->required();
        cmd->add_option("--time", vt.time, "Timeline predictions CSV")->required();
        cmd->add_option("--out", vt.out, "Output predictions CSV")->required();
        cmd->add_option("--detail", vt.detail, "Optional per-document pooling detail JSON");
    };
    auto run_vote = [&](bool soft) {
        active_stage = "vote";
        const PredictionList p = ingest_predictions(vt.plain);
        const PredictionList r = ingest_predictions(vt.risk);
        const PredictionList t = ingest_predictions(vt.time);
        const VoteResult vote = soft ? soft_vote(p, r, t) : any_vote(p, r, t);
        save_predictions(vote.predictions, vt.out);
        for (const std::string& w : vote.warnings) std::cerr << "warning: " << w << "\n";
        if (!vt.detail.empty()) {
            nlohmann::json rows = nlohmann::json::array();
            for (const PooledPrediction& d : vote.detail)
                rows.push_back(nlohmann::json{{"doc_id", d.doc_id},
                                              {"p", {d.p[0], d.p[1], d.p[2]}},
                                              {"y", {d.y[0], d.y[1], d.y[2]}},
                                              {"pooled_p", d.pooled_p},
                                              {"pooled_y", d.pooled_y}});
            write_file(vt.detail, rows.dump(2) + "\n");
        }
        std::cout << "wrote " << vote.predictions.size() << " pooled predictions to " << vt.out
                  << "\n";
    };
    auto* soft_cmd = vote_cmd->add_subcommand("soft", "Mean probability, 0.5 threshold");
    add_vote_options(soft_cmd);
    soft_cmd->callback([&] { run_vote(true); });
    auto* any_cmd = vote_cmd->add_subcommand("any", "Max probability, OR of labels");
    add_vote_options(any_cmd);
    any_cmd->callback([&] { run_vote(false); });

    // ---- metrics ----
    auto* met_cmd = app.add_subcommand("metrics", "Evaluate predictions against corpus labels");
    struct {
        std::string pred, corpus, split, out, csv;
    } mt;
    met_cmd->add_option("--pred", mt.pred, "Predictions CSV")->required();
    met_cmd->add_option("--corpus", mt.corpus, "Corpus JSONL with gold labels")->required();
    met_cmd->add_option("--split", mt.split, "Restrict gold labels to one split");
    met_cmd->add_option("--out", mt.out, "Output metrics JSON");
    met_cmd->add_option("--csv", mt.csv, "Output metrics CSV");
    met_cmd->callback([&] {
        active_stage = "metrics";
        const PredictionList preds = ingest_predictions(mt.pred);
        const Corpus corpus = load_corpus(mt.corpus);
        const GoldLabels gold = mt.split.empty()
                                    ? gold_from_corpus(corpus)
                                    : gold_from_corpus(corpus, split_from_string(mt.split));
        const MetricsReport report = compute_metrics(preds, gold);
        if (!mt.out.empty()) save_metrics(report, mt.out);
        if (!mt.csv.empty()) write_file(mt.csv, metrics_to_csv(report));
        std::cout << metrics_to_json(report);
    });

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "Execute the full pipeline from a config file");
    struct {
        std::string config, out, cache;
    } rn;
    run_cmd->add_option("--config", rn.config, "Experiment config (.json or .toml)")->required();
    run_cmd->add_option("--out", rn.out, "Override the config's output_dir");
    run_cmd->add_option("--cache", rn.cache, "Override the config's cache_dir");
    run_cmd->callback([&] {
        active_stage = "config";
        ExperimentConfig config = load_config(rn.config);
        if (!rn.out.empty()) config.output_dir = rn.out;
        if (!rn.cache.empty()) config.cache_dir = rn.cache;
        const ExperimentResult result = run_experiment(config);
        std::cout << "completed " << result.conditions.size() << " conditions over "
                  << result.corpus.documents().size() << " documents; artifacts in "
                  << result.output_dir.string() << "\n";
    });

    // ---- report ----
    auto* rep_cmd = app.add_subcommand("report", "Rebuild report tables of an existing run");
    struct {
        std::string run_dir;
    } rp;
    rep_cmd->add_option("--run-dir", rp.run_dir, "Run directory with a manifest")->required();
    rep_cmd->callback([&] {
        active_stage = "report";
        rebuild_report(rp.run_dir);
        std::cout << "rebuilt report tables in " << rp.run_dir << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const StageError& e) {
        std::cerr << "error " << e.what() << "\n";
        return stage_exit_code(e.stage);
    } catch (const std::exception& e) {
        std::cerr << "error [" << active_stage << "] " << e.what() << "\n";
        return stage_exit_code(active_stage);
    }
    return 0;
}
