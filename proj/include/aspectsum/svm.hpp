#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aspectsum/features.hpp"
#include "aspectsum/predictions.hpp"

namespace aspectsum {

struct TrainExample {
    FeatureVector features;
    int label = 0;  // {0,1}
};

struct SvmHyperparams {
    double lambda = 1e-4;  // L2 regularization strength
    std::size_t epochs = 20;
    double eta0 = 1.0;  // step size schedule eta_t = eta0 / (1 + lambda*eta0*t)
};

// Sigmoid over margins: p = 1 / (1 + exp(a*m + b)). The maximum-likelihood
// fit on a sensibly trained model yields a < 0, which makes p increase with
// the margin and preserves margin ordering.
struct Calibration {
    double a = -1.0;
    double b = 0.0;

    double probability(double margin) const;
};

struct LinearModel {
    std::vector<double> weights;  // length |vocabulary|
    double bias = 0.0;
    Calibration calibration;
    std::int64_t train_seed = 0;

    double margin(const FeatureVector& fv) const;
};

// Regularized hinge objective lambda/2 * ||w||^2 + mean_i max(0, 1 - y_i f(x_i))
// with y in {-1,+1}, and its (sub)gradient. The gradient is exact away from
// the hinge kinks; tests compare it against central finite differences.
double svm_objective(const std::vector<double>& weights, double bias,
                     const std::vector<TrainExample>& data, double lambda);
void svm_objective_gradient(const std::vector<double>& weights, double bias,
                            const std::vector<TrainExample>& data, double lambda,
                            std::vector<double>& grad_w, double& grad_b);

// Seeded stochastic subgradient descent over shuffled epochs, then a
// Platt-style sigmoid fit on the training margins. Deterministic per seed.
LinearModel train_svm(const std::vector<TrainExample>& data, std::size_t n_features,
                      const SvmHyperparams& hp, std::uint64_t seed);

// Maximum-likelihood sigmoid fit (Newton iterations) of labels on margins.
Calibration fit_calibration(const std::vector<double>& margins, const std::vector<int>& labels);

// Calibrated probabilities with the inclusive 0.5 threshold.
PredictionList predict(const LinearModel& model, const std::vector<std::string>& doc_ids,
                       const std::vector<FeatureVector>& features);

// Versioned JSON model file holding vocabulary, weights, bias, calibration
// and the training seed.
void save_model(const LinearModel& model, const Vocabulary& vocab,
                const std::filesystem::path& path);
std::pair<LinearModel, Vocabulary> load_model(const std::filesystem::path& path);

}  // namespace aspectsum
