#include <filesystem>

#include "aspectsum/predictions.hpp"
#include "aspectsum/util.hpp"
#include "doctest.h"

using namespace aspectsum;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    const fs::path dir = fs::temp_directory_path() / "aspectsum_pred_test";
    fs::create_directories(dir);
    write_file(dir / name, content);
    return dir / name;
}

}  // namespace

TEST_SUITE("predictions") {

TEST_CASE("valid csv parses into an aligned list") {
    const fs::path file = temp_file("ok.csv",
                                    "doc_id,probability,label\n"
                                    "d1,0.9,1\n"
                                    "d2,0.2,0\n"
                                    "d3,0.5,1\n");
    const PredictionList preds = ingest_predictions(file);
    CHECK(preds.size() == 3);
    CHECK(preds.entries[0].doc_id == "d1");
    CHECK(preds.entries[0].probability == 0.9);
    CHECK(preds.entries[2].label == 1);  // inclusive threshold at exactly 0.5
    CHECK(!preds.threshold_inconsistent);
    CHECK(!preds.degenerate_probabilities);
}

TEST_CASE("threshold-inconsistent rows load with a flag") {
    const fs::path file = temp_file("flag.csv",
                                    "doc_id,probability,label\n"
                                    "d1,0.7,0\n"
                                    "d2,0.2,0\n");
    const PredictionList preds = ingest_predictions(file);
    CHECK(preds.size() == 2);
    CHECK(preds.threshold_inconsistent);
}

TEST_CASE("hard input errors") {
    CHECK_THROWS(ingest_predictions(temp_file("range.csv",
                                              "doc_id,probability,label\n"
                                              "d1,1.3,1\n")));
    CHECK_THROWS(ingest_predictions(temp_file("label.csv",
                                              "doc_id,probability,label\n"
                                              "d1,0.5,2\n")));
    CHECK_THROWS(ingest_predictions(temp_file("dup.csv",
                                              "doc_id,probability,label\n"
                                              "d1,0.5,1\nd1,0.4,0\n")));
    CHECK_THROWS(ingest_predictions(temp_file("head.csv", "id,p,y\nd1,0.5,1\n")));
    CHECK_THROWS(ingest_predictions(temp_file("cols.csv",
                                              "doc_id,probability,label\n"
                                              "d1,0.5\n")));
}

TEST_CASE("csv round trip preserves values and order") {
    PredictionList preds;
    preds.entries = {{"a", 0.123456789, 0}, {"b", 1.0, 1}, {"c", 0.0, 0}};
    preds.source = {"plain", "bow_svm", 42};
    const fs::path dir = fs::temp_directory_path() / "aspectsum_pred_test";
    fs::create_directories(dir);
    save_predictions(preds, dir / "rt.csv");
    const PredictionList loaded = ingest_predictions(dir / "rt.csv");
    REQUIRE(loaded.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded.entries[i].doc_id == preds.entries[i].doc_id);
        CHECK(loaded.entries[i].probability == preds.entries[i].probability);
        CHECK(loaded.entries[i].label == preds.entries[i].label);
    }
}

TEST_CASE("alignment check compares doc_id sequences") {
    PredictionList a, b;
    a.entries = {{"x", 0.1, 0}, {"y", 0.9, 1}};
    b.entries = {{"x", 0.4, 0}, {"y", 0.6, 1}};
    CHECK(aligned(a, b));
    b.entries[1].doc_id = "z";
    CHECK(!aligned(a, b));
    b.entries.pop_back();
    CHECK(!aligned(a, b));
}

}  // TEST_SUITE
