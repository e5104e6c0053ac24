#include "aspectsum/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "aspectsum/util.hpp"
#include "json.hpp"

namespace aspectsum {

namespace {

double dot(const std::vector<double>& w, const FeatureVector& fv) {
    double s = 0.0;
    for (const auto& [idx, value] : fv.terms) {
        if (idx >= w.size()) throw std::runtime_error("feature index out of range");
        s += w[idx] * value;
    }
    return s;
}

}  // namespace

double Calibration::probability(double margin) const {
    const double z = a * margin + b;
    // Numerically stable logistic.
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

double LinearModel::margin(const FeatureVector& fv) const { return dot(weights, fv) + bias; }

double svm_objective(const std::vector<double>& weights, double bias,
                     const std::vector<TrainExample>& data, double lambda) {
    if (data.empty()) throw std::runtime_error("empty training data");
    double hinge = 0.0;
    for (const TrainExample& ex : data) {
        const double y = ex.label == 1 ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - y * (dot(weights, ex.features) + bias));
    }
    double norm2 = 0.0;
    for (double w : weights) norm2 += w * w;
    return 0.5 * lambda * norm2 + hinge / static_cast<double>(data.size());
}

void svm_objective_gradient(const std::vector<double>& weights, double bias,
                            const std::vector<TrainExample>& data, double lambda,
                            std::vector<double>& grad_w, double& grad_b) {
    if (data.empty()) throw std::runtime_error("empty training data");
    grad_w.assign(weights.size(), 0.0);
    grad_b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (const TrainExample& ex : data) {
        const double y = ex.label == 1 ? 1.0 : -1.0;
        if (y * (dot(weights, ex.features) + bias) < 1.0) {
            for (const auto& [idx, value] : ex.features.terms) grad_w[idx] -= y * value * inv_n;
            grad_b -= y * inv_n;
        }
    }
    for (std::size_t i = 0; i < weights.size(); ++i) grad_w[i] += lambda * weights[i];
}

Calibration fit_calibration(const std::vector<double>& margins, const std::vector<int>& labels) {
    if (margins.size() != labels.size() || margins.empty())
        throw std::runtime_error("calibration needs aligned non-empty margins and labels");
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y);
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::runtime_error("calibration needs both classes present");

    // Platt's smoothed targets guard against infinite parameters on
    // separable data.
    const double t_pos = (static_cast<double>(n_pos) + 1.0) / (static_cast<double>(n_pos) + 2.0);
    const double t_neg = 1.0 / (static_cast<double>(n_neg) + 2.0);

    // Newton iterations on the convex negative log-likelihood in (a, b).
    double a = 0.0, b = std::log((static_cast<double>(n_neg) + 1.0) /
                                 (static_cast<double>(n_pos) + 1.0));
    const std::size_t max_iter = 100;
    const double min_step = 1e-10, eps_h = 1e-12;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        double g_a = 0.0, g_b = 0.0, h_aa = eps_h, h_ab = 0.0, h_bb = eps_h;
        for (std::size_t i = 0; i < margins.size(); ++i) {
            const double t = labels[i] == 1 ? t_pos : t_neg;
            const double z = a * margins[i] + b;
            double p, q;  // p = P(y=1) = 1/(1+exp(z)), q = 1-p
            if (z >= 0.0) {
                const double e = std::exp(-z);
                p = e / (1.0 + e);
                q = 1.0 / (1.0 + e);
            } else {
                const double e = std::exp(z);
                p = 1.0 / (1.0 + e);
                q = e / (1.0 + e);
            }
            const double d1 = t - p;  // d(-loglik)/dz for target t
            const double d2 = p * q;
            g_a += margins[i] * d1;
            g_b += d1;
            h_aa += margins[i] * margins[i] * d2;
            h_ab += margins[i] * d2;
            h_bb += d2;
        }
        if (std::abs(g_a) < 1e-9 && std::abs(g_b) < 1e-9) break;
        const double det = h_aa * h_bb - h_ab * h_ab;
        double da = -(h_bb * g_a - h_ab * g_b) / det;
        double db = -(-h_ab * g_a + h_aa * g_b) / det;
        // Backtracking keeps the NLL decreasing.
        auto nll = [&](double aa, double bb) {
            double v = 0.0;
            for (std::size_t i = 0; i < margins.size(); ++i) {
                const double t = labels[i] == 1 ? t_pos : t_neg;
                const double z = aa * margins[i] + bb;
                // -t*log(p) - (1-t)*log(1-p) in a stable form
                const double log1pe = z > 35.0 ? z : std::log1p(std::exp(z));
                v += t * log1pe + (1.0 - t) * (log1pe - z);
            }
            return v;
        };
        const double base = nll(a, b);
        double step = 1.0;
        while (step >= min_step && nll(a + step * da, b + step * db) > base + 1e-12) step *= 0.5;
        if (step < min_step) break;
        a += step * da;
        b += step * db;
    }
    if (!std::isfinite(a) || !std::isfinite(b))
        throw std::runtime_error("calibration fit produced non-finite parameters");
    return Calibration{a, b};
}

LinearModel train_svm(const std::vector<TrainExample>& data, std::size_t n_features,
                      const SvmHyperparams& hp, std::uint64_t seed) {
    if (data.empty()) throw std::runtime_error("empty training data");
    std::size_t n_pos = 0;
    for (const TrainExample& ex : data) {
        if (ex.label != 0 && ex.label != 1) throw std::runtime_error("labels must be 0 or 1");
        n_pos += static_cast<std::size_t>(ex.label);
        for (const auto& [idx, value] : ex.features.terms) {
            if (idx >= n_features) throw std::runtime_error("feature index out of range");
            if (!(value > 0.0)) throw std::runtime_error("feature values must be positive");
        }
    }
    if (n_pos == 0 || n_pos == data.size())
        throw std::runtime_error("training data must contain both classes");
    if (!(hp.lambda > 0.0) || hp.epochs == 0 || !(hp.eta0 > 0.0))
        throw std::runtime_error("invalid hyperparameters");

    // w is kept as scale * v so the L2 shrink is O(1) per step.
    std::vector<double> v(n_features, 0.0);
    double scale = 1.0;
    double bias = 0.0;

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            const TrainExample& ex = data[idx];
            const double y = ex.label == 1 ? 1.0 : -1.0;
            const double eta =
                hp.eta0 / (1.0 + hp.lambda * hp.eta0 * static_cast<double>(t));
            ++t;
            double m = 0.0;
            for (const auto& [fi, value] : ex.features.terms) m += v[fi] * value;
            m = scale * m + bias;
            scale *= 1.0 - eta * hp.lambda;
            if (y * m < 1.0) {
                const double step = eta * y / scale;
                for (const auto& [fi, value] : ex.features.terms) v[fi] += step * value;
                bias += eta * y;
            }
            if (scale < 1e-9) {
                for (double& w : v) w *= scale;
                scale = 1.0;
            }
        }
    }

    LinearModel model;
    model.weights.resize(n_features);
    for (std::size_t i = 0; i < n_features; ++i) model.weights[i] = scale * v[i];
    model.bias = bias;
    model.train_seed = static_cast<std::int64_t>(seed);
    for (double w : model.weights)
        if (!std::isfinite(w)) throw std::runtime_error("training produced non-finite weights");
    if (!std::isfinite(model.bias)) throw std::runtime_error("training produced non-finite bias");

    std::vector<double> margins;
    std::vector<int> labels;
    margins.reserve(data.size());
    labels.reserve(data.size());
    for (const TrainExample& ex : data) {
        margins.push_back(model.margin(ex.features));
        labels.push_back(ex.label);
    }
    model.calibration = fit_calibration(margins, labels);
    return model;
}

PredictionList predict(const LinearModel& model, const std::vector<std::string>& doc_ids,
                       const std::vector<FeatureVector>& features) {
    if (doc_ids.size() != features.size())
        throw std::runtime_error("doc_ids and features must align");
    PredictionList preds;
    preds.source.model_kind = "bow_svm";
    preds.source.seed = model.train_seed;
    preds.degenerate_probabilities = false;
    preds.entries.reserve(doc_ids.size());
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
        const double p = model.calibration.probability(model.margin(features[i]));
        preds.entries.push_back({doc_ids[i], p, p >= 0.5 ? 1 : 0});
    }
    return preds;
}

void save_model(const LinearModel& model, const Vocabulary& vocab,
                const std::filesystem::path& path) {
    if (model.weights.size() != vocab.size())
        throw std::runtime_error("model and vocabulary sizes differ");
    nlohmann::json obj{
        {"format", "aspectsum-model"},
        {"version", 1},
        {"vocabulary", vocab.tokens()},
        {"document_frequencies", vocab.document_frequencies()},
        {"train_document_count", vocab.train_document_count()},
        {"min_frequency", vocab.min_frequency()},
        {"weights", model.weights},
        {"bias", model.bias},
        {"calibration", {{"a", model.calibration.a}, {"b", model.calibration.b}}},
        {"train_seed", model.train_seed},
    };
    write_file(path, obj.dump(2) + "\n");
}

std::pair<LinearModel, Vocabulary> load_model(const std::filesystem::path& path) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad model file " + path.string() + ": " + e.what());
    }
    if (obj.value("format", "") != "aspectsum-model")
        throw std::runtime_error(path.string() + " is not a model file");
    if (obj.value("version", 0) != 1)
        throw std::runtime_error("unsupported model version in " + path.string());

    const auto tokens = obj.at("vocabulary").get<std::vector<std::string>>();
    const auto doc_freq = obj.at("document_frequencies").get<std::vector<std::size_t>>();
    if (tokens.size() != doc_freq.size())
        throw std::runtime_error("corrupt model vocabulary in " + path.string());

    LinearModel model;
    model.weights = obj.at("weights").get<std::vector<double>>();
    model.bias = obj.at("bias").get<double>();
    model.calibration.a = obj.at("calibration").at("a").get<double>();
    model.calibration.b = obj.at("calibration").at("b").get<double>();
    model.train_seed = obj.at("train_seed").get<std::int64_t>();
    if (model.weights.size() != tokens.size())
        throw std::runtime_error("weight/vocabulary size mismatch in " + path.string());

    Vocabulary vocab = Vocabulary::from_parts(tokens, doc_freq,
                                              obj.at("train_document_count").get<std::size_t>(),
                                              obj.at("min_frequency").get<std::size_t>());
    return {std::move(model), std::move(vocab)};
}

}  // namespace aspectsum
