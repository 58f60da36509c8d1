// SPDX-License-Identifier: Apache-2.0

// Command-line front end: closed-form figure tables, single solves, factor
// sweeps, generalization reports, and the identity-verification battery.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or configuration
// error, 3 infeasible or otherwise fatal domain condition.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relent/relent.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

// JSON has no representation for non-finite numbers; renders them as strings
// so reports with infinite values stay readable and round-trippable.
void sanitize(nlohmann::json& j) {
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (!std::isfinite(v)) j = relent::format_number(v);
        return;
    }
    if (j.is_object() || j.is_array())
        for (auto& item : j) sanitize(item);
}

void emit_document(nlohmann::json doc, const std::string& out_path) {
    sanitize(doc);
    const std::string bytes = doc.dump(2) + "\n";
    if (out_path.empty())
        std::fputs(bytes.c_str(), stdout);
    else
        relent::write_file(out_path, bytes);
}

double require_lambda(const relent::ExperimentConfig& cfg, double flag_lambda) {
    if (flag_lambda > 0.0) return flag_lambda;
    if (cfg.lambda) return *cfg.lambda;
    throw std::invalid_argument("a factor is required: pass --lambda or set lambda in the config");
}

const relent::ReferenceMeasure& require_measure(const relent::ExperimentConfig& cfg) {
    if (!cfg.measure) throw std::invalid_argument("config needs a measure");
    return *cfg.measure;
}

const relent::EmpiricalRisk& require_risk(const relent::ExperimentConfig& cfg) {
    if (!cfg.risk) throw std::invalid_argument("config needs a risk");
    return *cfg.risk;
}

// Evaluate one row per factor with a parallel map over immutable inputs; the
// writer runs after ordered collection, so output bytes never depend on
// scheduling.
std::vector<std::vector<double>> map_rows(
    const std::vector<double>& grid,
    const std::function<std::vector<double>(double)>& row_fn) {
    std::vector<std::vector<double>> rows(grid.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(),
                                                       grid.size()));
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1)) {
                try {
                    rows[i] = row_fn(grid[i]);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return rows;
}

std::string q_file_tag(double q) {
    std::string tag = relent::format_number(q);
    for (char& ch : tag)
        if (ch == '.') ch = 'p';
    return tag;
}

int cmd_figure_example1(const std::vector<double>& q_list, const std::string& grid_spec,
                        const std::string& out_dir) {
    const std::vector<double> grid = relent::parse_grid_spec(grid_spec);
    for (double qv : q_list)
        if (!(qv > 0.0) || !(qv < 1.0))
            throw std::invalid_argument("q values must lie strictly between 0 and 1");
    for (double qv : q_list) {
        const relent::ReferenceMeasure q = relent::probability_measure({qv, 1.0 - qv});
        const relent::EmpiricalRisk risk({0.0, 1.0});
        const auto rows = map_rows(grid, [&](double lambda) {
            const relent::CumulantReport r = relent::cumulants(q, risk, lambda);
            return std::vector<double>{r.lambda, r.k1, r.k2, r.k3};
        });
        const std::string path = out_dir + "/example1_q" + q_file_tag(qv) + ".csv";
        relent::write_csv(path, {"lambda", "k1", "k2", "k3"}, rows);
        std::printf("wrote %s\n", path.c_str());
    }
    return kExitOk;
}

int cmd_solve(const std::string& config_path, double flag_lambda, const std::string& out_path,
              const std::string& risk_out) {
    const relent::ExperimentConfig cfg = relent::load_experiment_config(config_path);
    const relent::ReferenceMeasure& q = require_measure(cfg);
    const relent::EmpiricalRisk& risk = require_risk(cfg);
    const double lambda = require_lambda(cfg, flag_lambda);

    const relent::GibbsPosterior post = relent::gibbs_posterior(q, risk, lambda);
    const relent::OptimalityReport opt = relent::optimality_report(q, risk);
    const relent::ObjectiveIdentity obj = relent::objective_identity(q, risk, lambda);
    const relent::CumulantReport cum = relent::cumulants(q, risk, lambda);

    nlohmann::json doc;
    doc["posterior"] = relent::posterior_to_json(post);
    doc["cumulants"] = {{"k0", cum.k0}, {"k1", cum.k1}, {"k2", cum.k2}, {"k3", cum.k3}};
    doc["objective"] = {
        {"primal", obj.primal}, {"dual", obj.dual}, {"reference", obj.reference}};
    doc["optimality"] = {{"rho_star", opt.rho_star},
                         {"delta_star", opt.delta_star},
                         {"lstar_atoms", opt.lstar_atoms},
                         {"erm_solutions", opt.erm_solutions},
                         {"coherent", opt.coherent},
                         {"consistent", opt.consistent},
                         {"quadrature_caveat", opt.quadrature_caveat}};
    emit_document(std::move(doc), out_path);
    if (!risk_out.empty()) relent::write_risk_column(risk_out, risk);
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_flag,
              const std::string& out_path) {
    const relent::ExperimentConfig cfg = relent::load_experiment_config(config_path);
    const relent::ReferenceMeasure& q = require_measure(cfg);
    const relent::EmpiricalRisk& risk = require_risk(cfg);
    std::vector<double> grid =
        grid_flag.empty() ? cfg.lambda_grid : relent::parse_grid_spec(grid_flag);
    if (grid.empty())
        throw std::invalid_argument(
            "a grid is required: pass --lambda-grid or set lambda_grid in the config");

    const auto rows = map_rows(grid, [&](double lambda) {
        const relent::CumulantReport r = relent::cumulants(q, risk, lambda);
        return std::vector<double>{r.lambda, r.k0, r.k1, r.k2, r.k3};
    });
    const std::string bytes =
        relent::render_csv({"lambda", "k0", "k1", "k2", "k3"}, rows);
    if (out_path.empty())
        std::fputs(bytes.c_str(), stdout);
    else
        relent::write_file(out_path, bytes);
    return kExitOk;
}

int cmd_gen_error(const std::string& config_path, double flag_lambda,
                  const std::string& out_path) {
    const relent::ExperimentConfig cfg = relent::load_experiment_config(config_path);
    const relent::ReferenceMeasure& q = require_measure(cfg);
    if (!cfg.prior) throw std::invalid_argument("config needs a prior for generalization runs");
    const double lambda = require_lambda(cfg, flag_lambda);

    const relent::GeneralizationReport rep = relent::generalization_error(q, lambda, *cfg.prior);
    nlohmann::json doc = relent::report_to_json(rep);
    // Both computation routes and their gap: the report's direct value and
    // the information-sum route.
    const double via_information = lambda * (rep.mutual_info + rep.lautum_info);
    doc["gen_error_via_information"] = via_information;
    doc["decomposition_gap"] = rep.gen_error - via_information;
    emit_document(std::move(doc), out_path);
    return kExitOk;
}

int cmd_verify(std::uint64_t seed, const std::string& only, bool flip) {
    relent::BatteryOptions opt;
    opt.seed = seed;
    opt.only = only;
    opt.flip_risk_gap_sign = flip;
    const std::vector<relent::CheckResult> results = relent::run_battery(opt);
    if (results.empty()) {
        std::fprintf(stderr, "warning: no checks match '%s'; nothing ran\n", only.c_str());
        return kExitOk;
    }
    std::size_t passed = 0;
    for (const auto& r : results) {
        passed += r.pass ? 1 : 0;
        std::printf("%s  %-38s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
    }
    std::printf("%zu/%zu checks passed\n", passed, results.size());
    return passed == results.size() ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ERM with relative-entropy regularization: solver and verification toolkit"};
    app.require_subcommand(1);

    auto* fig = app.add_subcommand("figure-example1",
                                   "Write closed-form cumulant tables for the two-atom family");
    std::vector<double> q_list{0.75, 0.5, 0.25};
    std::string fig_grid = "1e-2:10:200(log)";
    std::string fig_out = ".";
    fig->add_option("--q", q_list, "reference weights of the zero-risk atom")
        ->expected(1, 16);
    fig->add_option("--lambda-grid", fig_grid, "factor grid as lo:hi:steps(log)");
    fig->add_option("--out", fig_out, "output directory");

    auto* solve = app.add_subcommand("solve", "Solve one instance and write the posterior");
    std::string solve_config, solve_out, solve_risk_out;
    double solve_lambda = 0.0;
    solve->add_option("--config", solve_config, "experiment config path")->required();
    solve->add_option("--lambda", solve_lambda, "factor, overrides the config value");
    solve->add_option("--out", solve_out, "output document path (default: stdout)");
    solve->add_option("--risk-out", solve_risk_out, "also write the risk column here");

    auto* sweep = app.add_subcommand("sweep", "Cumulants along a factor grid as CSV");
    std::string sweep_config, sweep_grid, sweep_out;
    sweep->add_option("--config", sweep_config, "experiment config path")->required();
    sweep->add_option("--lambda-grid", sweep_grid, "factor grid as lo:hi:steps(log)");
    sweep->add_option("--out", sweep_out, "output CSV path (default: stdout)");

    auto* gen = app.add_subcommand("gen-error",
                                   "Generalization report under a dataset prior");
    std::string gen_config, gen_out;
    double gen_lambda = 0.0;
    gen->add_option("--config", gen_config, "experiment config path")->required();
    gen->add_option("--lambda", gen_lambda, "factor, overrides the config value");
    gen->add_option("--out", gen_out, "output document path (default: stdout)");

    auto* verify = app.add_subcommand("verify", "Run the identity battery");
    std::uint64_t verify_seed = relent::BatteryOptions{}.seed;
    std::string verify_only;
    bool verify_flip = false;
    verify->add_option("--seed", verify_seed, "seed for randomized instances");
    verify->add_option("--only", verify_only, "run only checks whose name contains this");
    verify->add_flag("--flip-risk-gap-sign", verify_flip)->group("");  // test-of-the-test

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (fig->parsed()) return cmd_figure_example1(q_list, fig_grid, fig_out);
        if (solve->parsed())
            return cmd_solve(solve_config, solve_lambda, solve_out, solve_risk_out);
        if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_grid, sweep_out);
        if (gen->parsed()) return cmd_gen_error(gen_config, gen_lambda, gen_out);
        if (verify->parsed()) return cmd_verify(verify_seed, verify_only, verify_flip);
    } catch (const relent::infeasible_error& e) {
        std::fprintf(stderr, "infeasible: %s (supremum %s)\n", e.what(),
                     relent::format_number(e.supremum()).c_str());
        return kExitInfeasible;
    } catch (const relent::indeterminate_error& e) {
        std::fprintf(stderr, "indeterminate: %s (bracket [%s, %s])\n", e.what(),
                     relent::format_number(e.bracket_lo()).c_str(),
                     relent::format_number(e.bracket_hi()).c_str());
        return kExitInfeasible;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInfeasible;
    }
    return kExitOk;
}
