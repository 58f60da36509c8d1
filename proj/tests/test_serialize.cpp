// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "relent/serialize.hpp"

using Catch::Matchers::WithinAbs;
using namespace relent;

namespace {

struct TempFile {
    std::string path;
    TempFile(const std::string& name, const std::string& bytes)
        : path((std::filesystem::temp_directory_path() / ("relent_test_" + name)).string()) {
        write_file(path, bytes);
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

}  // namespace

TEST_CASE("number rendering round-trips doubles and names non-finites") {
    REQUIRE(format_number(0.1) == "0.10000000000000001");
    REQUIRE(format_number(1.0) == "1");
    REQUIRE(format_number(0.25) == "0.25");
    REQUIRE(format_number(-2.5) == "-2.5");
    REQUIRE(format_number(kInf) == "inf");
    REQUIRE(format_number(-kInf) == "-inf");
    REQUIRE(format_number(std::nan("")) == "nan");
}

TEST_CASE("delimited tables are rendered byte for byte") {
    const std::string got = render_csv({"a", "b"}, {{0.5, 1.0}, {0.25, kInf}});
    REQUIRE(got == "a,b\n0.5,1\n0.25,inf\n");
    REQUIRE(render_csv({"only"}, {}) == "only\n");
}

TEST_CASE("posterior documents round-trip") {
    const GibbsPosterior post =
        gibbs_posterior(probability_measure({0.5, 0.5}), EmpiricalRisk({0.0, 1.0}), 1.0);
    const GibbsPosterior back = posterior_from_json(posterior_to_json(post));
    REQUIRE(back.lambda == post.lambda);
    REQUIRE(back.k0 == post.k0);
    REQUIRE(back.probs.probs() == post.probs.probs());
}

TEST_CASE("measure documents round-trip") {
    const ReferenceMeasure q = custom_measure({0.5, 1.5});
    const MeasureDocument doc = measure_from_json(measure_to_json(q));
    REQUIRE(doc.measure.kind() == MeasureKind::custom);
    REQUIRE(doc.measure.weights() == q.weights());
    REQUIRE(doc.measure.cell_volume() == 1.0);
    REQUIRE(doc.space.size == 2);
}

TEST_CASE("counting and quadrature measures load from a size") {
    const MeasureDocument counting =
        measure_from_json(nlohmann::json{{"kind", "counting"}, {"size", 3}});
    REQUIRE(counting.measure.kind() == MeasureKind::counting);
    REQUIRE(counting.measure.total_mass() == 3.0);
    const MeasureDocument quad = measure_from_json(
        nlohmann::json{{"kind", "quadrature"}, {"size", 4}, {"cell_volume", 0.1}});
    REQUIRE(quad.measure.cell_volume() == 0.1);
    REQUIRE_THAT(quad.measure.total_mass(), WithinAbs(0.4, 1e-15));
    REQUIRE_FALSE(quad.measure.is_probability());
}

TEST_CASE("measure documents validate their fields") {
    REQUIRE_THROWS_AS(measure_from_json(nlohmann::json{{"weights", {0.5, 0.5}}}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        measure_from_json(nlohmann::json{{"kind", "lebesgue"}, {"weights", {1.0}}}),
        std::invalid_argument);
    REQUIRE_THROWS_AS(measure_from_json(nlohmann::json{{"kind", "probability"}}),
                      std::invalid_argument);
    // Coordinates must cover exactly the weighted atoms.
    nlohmann::json j{{"kind", "probability"},
                     {"weights", {0.5, 0.5}},
                     {"coords", {{0.0}, {1.0}, {2.0}}}};
    REQUIRE_THROWS_AS(measure_from_json(j), std::invalid_argument);
    j["coords"] = {{0.0}, {1.0}};
    const MeasureDocument doc = measure_from_json(j);
    REQUIRE(doc.space.size == 2);
    REQUIRE(doc.space.coords[1][0] == 1.0);
}

TEST_CASE("datasets load from delimited text") {
    const TempFile file("data.csv",
                        "# two labeled points\n"
                        "1.0, 2.0, 1.0\n"
                        "\n"
                        "3.0 4.0 -1.0\r\n");
    const Dataset data = load_dataset(file.path);
    REQUIRE(data.size() == 2);
    REQUIRE(data.patterns[0] == std::vector<double>{1.0, 2.0});
    REQUIRE(data.patterns[1] == std::vector<double>{3.0, 4.0});
    REQUIRE(data.labels == std::vector<double>{1.0, -1.0});
}

TEST_CASE("datasets reject malformed text") {
    const TempFile ragged("ragged.csv", "1 2 3\n1 2\n");
    REQUIRE_THROWS_AS(load_dataset(ragged.path), std::invalid_argument);
    const TempFile words("words.csv", "one 2 3\n");
    REQUIRE_THROWS_AS(load_dataset(words.path), std::invalid_argument);
    const TempFile bare("bare.csv", "1.0\n");
    REQUIRE_THROWS_AS(load_dataset(bare.path), std::invalid_argument);
    REQUIRE_THROWS_AS(load_dataset("/nonexistent/risk.csv"), std::invalid_argument);
}

TEST_CASE("factor grids pin their endpoints") {
    const auto g = log_grid(0.01, 10.0, 5);
    REQUIRE(g.size() == 5);
    REQUIRE(g.front() == 0.01);
    REQUIRE(g.back() == 10.0);
    for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g[i] > g[i - 1]);
    REQUIRE_THAT(g[2], WithinAbs(std::sqrt(0.1), 1e-12));  // geometric midpoint
    REQUIRE_THROWS_AS(log_grid(0.01, 10.0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(log_grid(0.0, 10.0, 5), std::invalid_argument);
    REQUIRE_THROWS_AS(log_grid(1.0, 1.0, 5), std::invalid_argument);
}

TEST_CASE("grid specs parse with optional log suffix") {
    REQUIRE(parse_grid_spec("1e-2:10:200(log)").size() == 200);
    REQUIRE(parse_grid_spec("0.5:2:3:log").size() == 3);
    REQUIRE(parse_grid_spec("0.5:2:3").front() == 0.5);
    REQUIRE_THROWS_AS(parse_grid_spec("0.5:2:1"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_grid_spec("junk"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_grid_spec("1:2:3 extra"), std::invalid_argument);
}

TEST_CASE("experiment configs parse every section") {
    const nlohmann::json j{
        {"measure", {{"kind", "probability"}, {"weights", {0.5, 0.5}}}},
        {"risk", {{"values", {0.0, 1.0}}}},
        {"lambda", 0.75},
        {"delta", 0.2},
        {"epsilon", 0.05},
        {"prior", {{"risks", {{0.0, 1.0}, {1.0, 0.0}}}, {"probs", {0.5, 0.5}}}},
        {"seed", 7}};
    const ExperimentConfig cfg = parse_experiment_config(j);
    REQUIRE(cfg.measure->is_probability());
    REQUIRE(cfg.risk->values() == std::vector<double>{0.0, 1.0});
    REQUIRE(*cfg.lambda == 0.75);
    REQUIRE(*cfg.delta == 0.2);
    REQUIRE(*cfg.epsilon == 0.05);
    REQUIRE(cfg.prior->risks.size() == 2);
    REQUIRE(cfg.seed == 7);
    REQUIRE(cfg.lambda_grid.empty());
}

TEST_CASE("experiment configs accept grids in either form") {
    nlohmann::json j{{"measure", {{"kind", "counting"}, {"size", 2}}},
                     {"lambda_grid", "0.1:1:4"}};
    REQUIRE(parse_experiment_config(j).lambda_grid.size() == 4);
    j["lambda_grid"] = {{"min", 0.1}, {"max", 1.0}, {"steps", 6}};
    REQUIRE(parse_experiment_config(j).lambda_grid.size() == 6);
    j["lambda"] = 1.0;
    REQUIRE_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
}

TEST_CASE("experiment configs reject contradictions") {
    nlohmann::json j{{"measure", {{"kind", "counting"}, {"size", 2}}}};
    j["lambda"] = -1.0;
    REQUIRE_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
    j["lambda"] = 1.0;
    j["risk"] = {{"values", {0.0, 1.0}}, {"dataset", "x.csv"}};
    REQUIRE_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
    j["risk"] = {{"values", {0.0, 1.0, 2.0}}};
    REQUIRE_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
    j.erase("risk");
    j["prior"] = {{"risks", {{0.0, 1.0}}}, {"probs", {0.7}}};
    REQUIRE_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_experiment_config(nlohmann::json::object()),
                      std::invalid_argument);
}

TEST_CASE("dataset-backed risks honor the loss name") {
    const TempFile file("loss.csv", "1.0 1.0\n2.0 0.5\n");
    nlohmann::json j{{"measure",
                      {{"kind", "probability"},
                       {"weights", {0.5, 0.5}},
                       {"coords", {{0.5}, {1.0}}}}},
                     {"risk", {{"dataset", file.path}}},
                     {"lambda", 1.0}};
    const ExperimentConfig sq = parse_experiment_config(j);
    REQUIRE_THAT((*sq.risk)[0], WithinAbs(0.25, 1e-15));
    REQUIRE_THAT((*sq.risk)[1], WithinAbs(1.125, 1e-15));
    j["risk"]["loss"] = "absolute";
    const ExperimentConfig ab = parse_experiment_config(j);
    REQUIRE_THAT((*ab.risk)[0], WithinAbs(0.5, 1e-15));
    REQUIRE_THAT((*ab.risk)[1], WithinAbs(0.75, 1e-15));
    j["risk"]["loss"] = "hinge";
    REQUIRE_THROWS_AS(parse_experiment_config(j), std::invalid_argument);
}

TEST_CASE("config files surface parse failures as usage errors") {
    const TempFile good("cfg.json",
                        R"({"measure":{"kind":"counting","size":2},"lambda":1.0})");
    REQUIRE(load_experiment_config(good.path).lambda.has_value());
    const TempFile bad("bad.json", "{not json");
    REQUIRE_THROWS_AS(load_experiment_config(bad.path), std::invalid_argument);
    REQUIRE_THROWS_AS(load_experiment_config("/nonexistent/cfg.json"), std::invalid_argument);
}
