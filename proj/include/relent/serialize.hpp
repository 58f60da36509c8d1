// SPDX-License-Identifier: Apache-2.0
#pragma once

// Structured-text serialization and delimited-text tables.
//
// Documents are JSON; tables are comma-separated with a header row, '.' as
// the decimal mark and 17 significant digits, enough to round-trip doubles.
// Writers are deterministic: identical inputs produce identical bytes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relent/generalization.hpp"
#include "relent/gibbs.hpp"
#include "relent/measure.hpp"
#include "relent/risk.hpp"

namespace relent {

// Locale-independent rendering with 17 significant digits.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string render_csv(const std::vector<std::string>& header,
                              const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        out << header[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << format_number(row[c]);
        }
        out << '\n';
    }
    return out.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open for writing: " + path);
    f << bytes;
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    write_file(path, render_csv(header, rows));
}

// One risk value per line, aligned with atom indices.
inline void write_risk_column(const std::string& path, const EmpiricalRisk& risk) {
    std::ostringstream out;
    out << "risk\n";
    for (std::size_t i = 0; i < risk.size(); ++i) out << format_number(risk[i]) << '\n';
    write_file(path, out.str());
}

// ---------------------------------------------------------------------------
// JSON documents.

inline nlohmann::json measure_to_json(const ReferenceMeasure& q,
                                      const ModelSpace* space = nullptr) {
    nlohmann::json j;
    j["kind"] = to_string(q.kind());
    j["weights"] = q.weights();
    j["cell_volume"] = q.cell_volume();
    j["coords"] = (space && !space->coords.empty()) ? nlohmann::json(space->coords)
                                                    : nlohmann::json::array();
    return j;
}

inline MeasureKind measure_kind_from_string(const std::string& s) {
    if (s == "probability") return MeasureKind::probability;
    if (s == "counting") return MeasureKind::counting;
    if (s == "quadrature") return MeasureKind::quadrature;
    if (s == "custom") return MeasureKind::custom;
    throw std::invalid_argument("unknown measure kind: " + s);
}

struct MeasureDocument {
    ReferenceMeasure measure;
    ModelSpace space;
};

inline MeasureDocument measure_from_json(const nlohmann::json& j) {
    if (!j.contains("kind")) throw std::invalid_argument("measure needs a kind");
    const MeasureKind kind = measure_kind_from_string(j.at("kind").get<std::string>());
    const double vol = j.value("cell_volume", 1.0);
    std::vector<double> weights;
    if (j.contains("weights")) {
        weights = j.at("weights").get<std::vector<double>>();
    } else if (kind == MeasureKind::quadrature && j.contains("size")) {
        weights.assign(j.at("size").get<std::size_t>(), vol);
    } else if (kind == MeasureKind::counting && j.contains("size")) {
        weights.assign(j.at("size").get<std::size_t>(), 1.0);
    } else {
        throw std::invalid_argument("measure needs weights (or a size for counting/quadrature)");
    }
    ModelSpace space;
    if (j.contains("coords") && !j.at("coords").empty()) {
        space = make_model_space(j.at("coords").get<std::vector<std::vector<double>>>());
        if (space.size != weights.size())
            throw std::invalid_argument("coords and weights disagree on the atom count");
    } else {
        space = make_model_space(weights.size());
    }
    return MeasureDocument{ReferenceMeasure(kind, std::move(weights), vol), std::move(space)};
}

inline nlohmann::json posterior_to_json(const GibbsPosterior& post) {
    nlohmann::json j;
    j["lambda"] = post.lambda;
    j["k0"] = post.k0;
    j["probs"] = post.probs.probs();
    return j;
}

inline GibbsPosterior posterior_from_json(const nlohmann::json& j) {
    return GibbsPosterior{j.at("lambda").get<double>(), j.at("k0").get<double>(),
                          AtomDistribution(j.at("probs").get<std::vector<double>>()), 0};
}

inline nlohmann::json report_to_json(const GeneralizationReport& rep) {
    nlohmann::json j;
    j["lambda"] = rep.lambda;
    j["gen_error"] = rep.gen_error;
    j["mutual_info"] = rep.mutual_info;
    j["lautum_info"] = rep.lautum_info;
    j["sigma_q"] = rep.sigma_q;
    j["lautum_bound"] = rep.lautum_bound;
    return j;
}

// ---------------------------------------------------------------------------
// Delimited-text datasets: one row per labeled pattern, the label last.
// Comma or whitespace separated; blank lines and '#' comments are skipped.

inline Dataset load_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open dataset: " + path);
    Dataset data;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string cleaned;
        cleaned.reserve(line.size());
        for (char ch : line) cleaned.push_back(ch == ',' ? ' ' : ch);
        std::istringstream row(cleaned);
        std::vector<double> fields;
        double v;
        std::string first;
        if (!(row >> first)) continue;  // blank line
        if (first[0] == '#') continue;
        {
            std::istringstream head(first);
            if (!(head >> v)) throw std::invalid_argument("dataset has a non-numeric field: " + first);
            fields.push_back(v);
        }
        while (row >> v) fields.push_back(v);
        if (fields.size() < 2)
            throw std::invalid_argument("dataset rows need at least one feature and a label");
        data.labels.push_back(fields.back());
        fields.pop_back();
        data.patterns.push_back(std::move(fields));
    }
    validate(data);
    return data;
}

// ---------------------------------------------------------------------------
// Factor grids.

inline std::vector<double> log_grid(double lo, double hi, std::size_t steps) {
    detail::require(steps >= 2, "grid needs at least two steps");
    detail::require(std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && hi > lo,
                    "grid bounds must satisfy 0 < lo < hi");
    std::vector<double> g(steps);
    const double la = std::log(lo), lb = std::log(hi);
    for (std::size_t i = 0; i < steps; ++i)
        g[i] = std::exp(la + (lb - la) * static_cast<double>(i) /
                                 static_cast<double>(steps - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

// "lo:hi:steps" with optional "(log)" or ":log" suffix; spacing is always
// logarithmic.
inline std::vector<double> parse_grid_spec(std::string spec) {
    const auto strip = [&](const std::string& suffix) {
        if (spec.size() >= suffix.size() &&
            spec.compare(spec.size() - suffix.size(), suffix.size(), suffix) == 0)
            spec.erase(spec.size() - suffix.size());
    };
    strip("(log)");
    strip(":log");
    std::replace(spec.begin(), spec.end(), ':', ' ');
    std::istringstream in(spec);
    double lo, hi;
    long long steps;
    if (!(in >> lo >> hi >> steps) || steps < 2)
        throw std::invalid_argument("grid spec must be lo:hi:steps with steps >= 2");
    std::string rest;
    if (in >> rest) throw std::invalid_argument("trailing content in grid spec");
    return log_grid(lo, hi, static_cast<std::size_t>(steps));
}

// ---------------------------------------------------------------------------
// Experiment configuration document.

struct ExperimentConfig {
    std::optional<ReferenceMeasure> measure;
    ModelSpace space;
    std::optional<EmpiricalRisk> risk;
    std::optional<double> lambda;
    std::vector<double> lambda_grid;
    std::optional<double> delta;
    std::optional<double> epsilon;
    std::optional<DatasetPrior> prior;
    std::uint64_t seed = 0;
};

inline LossSpec loss_spec_from_name(const std::string& name) {
    if (name == "squared") return squared_loss_linear();
    if (name == "absolute") return absolute_loss_linear();
    if (name == "zero_one") return zero_one_loss_threshold();
    throw std::invalid_argument("unknown loss: " + name);
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (!j.contains("measure")) throw std::invalid_argument("config needs a measure");
    MeasureDocument doc = measure_from_json(j.at("measure"));
    cfg.space = std::move(doc.space);
    cfg.measure = std::move(doc.measure);

    if (j.contains("risk")) {
        const auto& rj = j.at("risk");
        const bool has_values = rj.contains("values");
        const bool has_dataset = rj.contains("dataset");
        if (has_values == has_dataset)
            throw std::invalid_argument("risk needs exactly one source: values or dataset");
        if (has_values) {
            cfg.risk = EmpiricalRisk(rj.at("values").get<std::vector<double>>());
        } else {
            const Dataset data = load_dataset(rj.at("dataset").get<std::string>());
            const LossSpec spec = loss_spec_from_name(rj.value("loss", std::string("squared")));
            cfg.risk = empirical_risk(cfg.space, data, spec);
        }
        if (cfg.risk->size() != cfg.measure->size())
            throw std::invalid_argument("risk and measure disagree on the atom count");
    }

    if (j.contains("lambda") && j.contains("lambda_grid"))
        throw std::invalid_argument("config needs lambda or lambda_grid, not both");
    if (j.contains("lambda")) {
        cfg.lambda = j.at("lambda").get<double>();
        if (!(*cfg.lambda > 0.0) || !std::isfinite(*cfg.lambda))
            throw std::invalid_argument("lambda must be positive");
    }
    if (j.contains("lambda_grid")) {
        const auto& gj = j.at("lambda_grid");
        if (gj.is_string()) {
            cfg.lambda_grid = parse_grid_spec(gj.get<std::string>());
        } else {
            cfg.lambda_grid = log_grid(gj.at("min").get<double>(), gj.at("max").get<double>(),
                                       gj.at("steps").get<std::size_t>());
        }
    }

    if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();

    if (j.contains("prior")) {
        const auto& pj = j.at("prior");
        DatasetPrior prior;
        for (const auto& values : pj.at("risks"))
            prior.risks.emplace_back(values.get<std::vector<double>>(), kDatasetTieTolerance);
        prior.probs = pj.at("probs").get<std::vector<double>>();
        validate(prior, cfg.measure->size());
        cfg.prior = std::move(prior);
    }

    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_experiment_config(j);
}

}  // namespace relent
