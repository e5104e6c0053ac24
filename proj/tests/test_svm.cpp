#include <cmath>
#include <filesystem>
#include <vector>

#include "aspectsum/infodiff.hpp"
#include "aspectsum/svm.hpp"
#include "aspectsum/util.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aspectsum;
namespace fs = std::filesystem;

namespace {

FeatureVector sparse(std::initializer_list<std::pair<std::uint32_t, double>> terms) {
    FeatureVector fv;
    for (const auto& t : terms) fv.terms.push_back(t);
    return fv;
}

// Random small instance: n_features in [1,6], examples in [2,8].
std::vector<TrainExample> random_instance(oracle::Rng& rng, std::size_t& n_features) {
    n_features = 1 + rng.range(0, 5);
    std::vector<TrainExample> data(2 + rng.range(0, 6));
    for (std::size_t i = 0; i < data.size(); ++i) {
        FeatureVector fv;
        for (std::uint32_t f = 0; f < n_features; ++f)
            if (rng.uniform() < 0.7) fv.terms.push_back({f, 0.25 + rng.uniform() * 3.0});
        data[i] = {fv, static_cast<int>(rng.range(0, 1))};
    }
    // Guarantee both classes.
    data[0].label = 0;
    data[data.size() - 1].label = 1;
    return data;
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("objective gradient matches central finite differences away from kinks") {
    oracle::Rng rng(2024);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 20) {
        std::size_t n_features = 0;
        const std::vector<TrainExample> data = random_instance(rng, n_features);
        std::vector<double> w(n_features);
        for (double& x : w) x = rng.uniform() * 2.0 - 1.0;
        double b = rng.uniform() - 0.5;
        const double lambda = 1e-3 + rng.uniform() * 0.1;

        // Skip instances near a hinge kink, where the subgradient jumps.
        bool near_kink = false;
        for (const TrainExample& ex : data) {
            double margin = b;
            for (const auto& [idx, value] : ex.features.terms) margin += w[idx] * value;
            const double y = ex.label == 1 ? 1.0 : -1.0;
            if (std::abs(1.0 - y * margin) < 1e-4) near_kink = true;
        }
        if (near_kink) continue;
        ++checked;

        std::vector<double> grad_w;
        double grad_b = 0.0;
        svm_objective_gradient(w, b, data, lambda, grad_w, grad_b);

        for (std::size_t f = 0; f < n_features; ++f) {
            std::vector<double> wp = w, wm = w;
            wp[f] += h;
            wm[f] -= h;
            const double fd =
                (svm_objective(wp, b, data, lambda) - svm_objective(wm, b, data, lambda)) /
                (2.0 * h);
            CHECK(grad_w[f] == doctest::Approx(fd).epsilon(1e-5));
        }
        const double fd_b =
            (svm_objective(w, b + h, data, lambda) - svm_objective(w, b - h, data, lambda)) /
            (2.0 * h);
        CHECK(grad_b == doctest::Approx(fd_b).epsilon(1e-5));
    }
}

TEST_CASE("linearly separable two-point set is classified perfectly") {
    const std::vector<TrainExample> data = {{sparse({{0, 1.0}}), 1}, {sparse({{1, 1.0}}), 0}};
    const LinearModel model = train_svm(data, 2, {}, 7);
    const PredictionList preds =
        predict(model, {"pos", "neg"}, {data[0].features, data[1].features});
    CHECK(preds.entries[0].label == 1);
    CHECK(preds.entries[1].label == 0);

    // Hinge part of the objective is ~0 once the margin is satisfied.
    const double objective = svm_objective(model.weights, model.bias, data, 0.0);
    CHECK(objective < 0.1);
}

TEST_CASE("identical features with mixed labels predict the majority class") {
    const FeatureVector fv = sparse({{0, 1.0}});
    const std::vector<TrainExample> data = {{fv, 1}, {fv, 1}, {fv, 0}};
    const LinearModel model = train_svm(data, 1, {}, 3);
    const PredictionList preds = predict(model, {"d"}, {fv});
    CHECK(preds.entries[0].label == 1);
}

TEST_CASE("training is bit-identical per seed and differs across seeds") {
    oracle::Rng rng(55);
    std::size_t n_features = 0;
    std::vector<TrainExample> data;
    for (int i = 0; i < 4; ++i) {
        std::size_t nf = 0;
        const auto chunk = random_instance(rng, nf);
        n_features = std::max(n_features, nf);
        data.insert(data.end(), chunk.begin(), chunk.end());
    }
    const LinearModel a = train_svm(data, n_features, {}, 42);
    const LinearModel b = train_svm(data, n_features, {}, 42);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(a.calibration.a == b.calibration.a);
    CHECK(a.calibration.b == b.calibration.b);

    const LinearModel c = train_svm(data, n_features, {}, 43);
    CHECK(a.weights != c.weights);
}

TEST_CASE("longer training does not worsen the objective on a fixed set") {
    oracle::Rng rng(8);
    std::size_t n_features = 0;
    std::vector<TrainExample> data;
    for (int i = 0; i < 6; ++i) {
        std::size_t nf = 0;
        const auto chunk = random_instance(rng, nf);
        n_features = std::max(n_features, nf);
        data.insert(data.end(), chunk.begin(), chunk.end());
    }
    SvmHyperparams short_run, long_run;
    short_run.epochs = 3;
    long_run.epochs = 60;
    const LinearModel quick = train_svm(data, n_features, short_run, 5);
    const LinearModel slow = train_svm(data, n_features, long_run, 5);
    const double obj_quick = svm_objective(quick.weights, quick.bias, data, short_run.lambda);
    const double obj_slow = svm_objective(slow.weights, slow.bias, data, long_run.lambda);
    CHECK(obj_slow <= obj_quick + 1e-6);
}

TEST_CASE("calibration preserves margin ordering") {
    oracle::Rng rng(777);
    std::size_t n_features = 0;
    std::vector<TrainExample> data;
    for (int i = 0; i < 5; ++i) {
        std::size_t nf = 0;
        const auto chunk = random_instance(rng, nf);
        n_features = std::max(n_features, nf);
        data.insert(data.end(), chunk.begin(), chunk.end());
    }
    const LinearModel model = train_svm(data, n_features, {}, 12);
    CHECK(model.calibration.a < 0.0);

    std::vector<double> margins, probabilities;
    std::vector<std::string> ids;
    std::vector<FeatureVector> features;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ids.push_back("d" + std::to_string(i));
        features.push_back(data[i].features);
        margins.push_back(model.margin(data[i].features));
    }
    const PredictionList preds = predict(model, ids, features);
    for (const PredictionEntry& e : preds.entries) probabilities.push_back(e.probability);
    CHECK(to_ranks(margins) == to_ranks(probabilities));
}

TEST_CASE("predict applies the inclusive 0.5 threshold") {
    LinearModel model;
    model.weights = {0.0};
    model.bias = 0.0;
    model.calibration = {-1.0, 0.0};  // p = sigmoid(margin) = 0.5 at margin 0
    const PredictionList preds = predict(model, {"d"}, {sparse({{0, 3.0}})});
    CHECK(preds.entries[0].probability == doctest::Approx(0.5));
    CHECK(preds.entries[0].label == 1);
    CHECK(!preds.degenerate_probabilities);

    LinearModel confident = model;
    confident.weights = {100.0};
    const PredictionList sure = predict(confident, {"d"}, {sparse({{0, 3.0}})});
    CHECK(sure.entries[0].probability > 0.99);
    CHECK(sure.entries[0].label == 1);
}

TEST_CASE("single-class training data is rejected") {
    const std::vector<TrainExample> one_class = {{sparse({{0, 1.0}}), 1}, {sparse({{1, 2.0}}), 1}};
    CHECK_THROWS(train_svm(one_class, 2, {}, 0));
    CHECK_THROWS(train_svm({}, 2, {}, 0));
}

TEST_CASE("model files round-trip bit-identically") {
    const std::vector<TrainExample> data = {{sparse({{0, 1.0}, {2, 2.0}}), 1},
                                            {sparse({{1, 1.5}}), 0},
                                            {sparse({{0, 0.5}, {1, 1.0}}), 1}};
    const Vocabulary vocab = Vocabulary::build({"alpha beta gamma", "alpha beta gamma"}, 1);
    const LinearModel model = train_svm(data, vocab.size(), {}, 99);

    const fs::path dir = fs::temp_directory_path() / "aspectsum_svm_test";
    fs::create_directories(dir);
    const fs::path file = dir / "model.json";
    save_model(model, vocab, file);
    const auto [loaded, loaded_vocab] = load_model(file);
    CHECK(loaded.weights == model.weights);
    CHECK(loaded.bias == model.bias);
    CHECK(loaded.calibration.a == model.calibration.a);
    CHECK(loaded.calibration.b == model.calibration.b);
    CHECK(loaded.train_seed == model.train_seed);
    CHECK(loaded_vocab == vocab);

    // Re-saving the loaded model yields identical bytes.
    const fs::path file2 = dir / "model2.json";
    save_model(loaded, loaded_vocab, file2);
    CHECK(read_file(file) == read_file(file2));
    fs::remove_all(dir);
}

}  // TEST_SUITE
