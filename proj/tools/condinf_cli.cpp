// Command-line surface for conditional random-effects inference: single
// dataset fits, Monte Carlo coverage experiments, and SVG report rendering.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "condinf/conditional.hpp"
#include "condinf/errors.hpp"
#include "condinf/io/config.hpp"
#include "condinf/io/csv.hpp"
#include "condinf/io/svg.hpp"
#include "condinf/linalg.hpp"
#include "condinf/models/random_walk.hpp"
#include "condinf/models/spline.hpp"
#include "condinf/outer.hpp"
#include "condinf/simulation.hpp"
#include "condinf/stats.hpp"

namespace {

using namespace condinf;

int resolve_workers() {
    // CONDINF_THREADS caps worker parallelism; default is the hardware count.
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("CONDINF_THREADS");
    if (env == nullptr) {
        return static_cast<int>(hw);
    }
    const long requested = std::strtol(env, nullptr, 10);
    if (requested < 1) {
        throw ContractViolation("CONDINF_THREADS must be a positive integer");
    }
    return static_cast<int>(requested);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::optional<double> parse_gamma_c(const std::string& text) {
    if (text == "auto") {
        return std::nullopt;
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !(v >= 0.0)) {
        throw ContractViolation("--gamma-c expects 'auto' or a non-negative number");
    }
    return v;
}

void print_theta(const OuterFit& fit, double alpha) {
    const double z = z_upper(alpha);
    std::cout << "theta estimates (natural scale, " << fmt(100.0 * (1.0 - alpha)) << "% CI):\n";
    for (int i = 0; i < fit.theta_hat.dim(); ++i) {
        const double se = std::sqrt(std::max(0.0, fit.cov_theta(i, i)));
        const double lo_u = fit.theta_hat.values(i) - z * se;
        const double hi_u = fit.theta_hat.values(i) + z * se;
        double est = fit.theta_hat.natural(i);
        double lo = lo_u;
        double hi = hi_u;
        std::string label = fit.theta_hat.labels[static_cast<std::size_t>(i)];
        if (fit.theta_hat.transforms[static_cast<std::size_t>(i)] == Transform::exp) {
            lo = std::exp(lo_u);
            hi = std::exp(hi_u);
            if (label.rfind("log_", 0) == 0) {
                label = label.substr(4);
            }
        }
        std::cout << "  " << label << " = " << fmt(est);
        if (se > 0.0) {
            std::cout << "  [" << fmt(lo) << ", " << fmt(hi) << "]";
        } else {
            std::cout << "  [fixed]";
        }
        std::cout << "\n";
    }
    std::cout << "laml = " << fmt(fit.laml_at_opt) << ", evaluations = " << fit.evaluations
              << (fit.boundary_suspect ? ", boundary-suspect" : "") << "\n";
}

void write_lines(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path + "'");
    }
    out << content;
}

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int cmd_fit_rw(const std::string& data_path, bool simulate, int T, int n, double sigma_psi,
               double sigma_eps, std::uint64_t seed, const std::string& gamma_text, double alpha,
               const std::string& out_dir) {
    RandomWalkData data;
    if (simulate) {
        CounterRng truth_rng(seed, {1, 0});
        const PsiVector truth = simulate_rw_truth(T, sigma_psi, truth_rng);
        CounterRng data_rng(seed, {2, 0, 0});
        data = simulate_rw_data(truth, n, sigma_eps, {}, data_rng);
    } else {
        data = parse_rw_csv(data_path);
    }

    const RandomWalkModel model(std::move(data));
    const OuterFit fit = maximize_laml(model, model.initial_theta());
    print_theta(fit, alpha);

    const Eigen::MatrixXd sens = dpsi_dtheta(fit.inner);
    const PriorMean prior = model.prior(fit.theta_hat);
    const std::optional<double> gamma = parse_gamma_c(gamma_text);
    const ShrinkageDecomposition dec = decompose_shrinkage(fit.inner, gamma);
    std::cout << "gamma_c = " << fmt(dec.gamma_c) << ", n_c = " << dec.n_c << " of "
              << model.dim_psi() << " directions supported\n";
    // large mode sensitivities weaken the first-order bias correction
    std::cout << "max |dpsi_hat/dtheta| = " << fmt(sens.cwiseAbs().maxCoeff()) << "\n";

    const Eigen::VectorXd psi_sd = svd_estimate(fit.inner, prior, dec);
    const Eigen::MatrixXd mse = mse_sd(fit.inner, prior, sens, fit.cov_theta, dec);
    const auto [sd_lo, sd_hi] = wald_ci(psi_sd, mse, alpha);
    const Eigen::MatrixXd marg = marginal_mse(fit.inner, sens, fit.cov_theta).psi_block;
    const auto [mg_lo, mg_hi] = wald_ci(fit.inner.psi_hat.values, marg, alpha);

    std::string out;
    out += "# condinf fit-rw v1\n";
    out += "time,psi_mode,psi_sd,sd_lower,sd_upper,marginal_lower,marginal_upper,has_data\n";
    for (int t = 0; t < model.dim_psi(); ++t) {
        out += std::to_string(t) + "," + csv_num(fit.inner.psi_hat.values(t)) + "," +
               csv_num(psi_sd(t)) + "," + csv_num(sd_lo(t)) + "," + csv_num(sd_hi(t)) + "," +
               csv_num(mg_lo(t)) + "," + csv_num(mg_hi(t)) + "," +
               (model.unit_has_data()[static_cast<std::size_t>(t)] ? "1" : "0") + "\n";
    }
    if (out_dir.empty()) {
        std::cout << out;
    } else {
        std::filesystem::create_directories(out_dir);
        const std::string path = out_dir + "/rw_estimates.csv";
        write_lines(path, out);
        std::cerr << "wrote " << path << "\n";
    }
    return 0;
}

int cmd_fit_gam(const std::string& data_path, int from, int to, int basis,
                const std::string& design_path, const std::string& penalty_path, double alpha,
                const std::string& out_dir) {
    const AnomalySeries series = parse_anomaly_csv(data_path, from, to);
    Eigen::VectorXd years(static_cast<Eigen::Index>(series.year.size()));
    for (Eigen::Index i = 0; i < years.size(); ++i) {
        years(i) = series.year[static_cast<std::size_t>(i)];
    }
    SplineData data;
    if (!design_path.empty() || !penalty_path.empty()) {
        // externally supplied basis (e.g. an mgcv export)
        if (design_path.empty() || penalty_path.empty()) {
            throw ContractViolation("fit-gam: --design and --penalty must be given together");
        }
        data = SplineData::external(years, series.anomaly, read_matrix_csv(design_path),
                                    read_matrix_csv(penalty_path));
    } else {
        data = SplineData::from_xy(years, series.anomaly, basis);
    }
    const SplineModel model(data);
    const std::vector<bool> lambda_mask = {false, false, true};
    const OuterFit fit = maximize_laml(model, model.initial_theta(), lambda_mask);
    print_theta(fit, alpha);

    const Eigen::MatrixXd sens = dpsi_dtheta(fit.inner);
    const PriorMean prior = model.prior(fit.theta_hat);
    std::cout << "max |dpsi_hat/dtheta| = " << fmt(sens.cwiseAbs().maxCoeff()) << "\n";
    const Eigen::VectorXd psi_bc = bias_correct(fit.inner, prior);
    const Eigen::MatrixXd bc_mse = mse_bc(fit.inner, prior, sens, fit.cov_theta);
    const Eigen::MatrixXd marg = marginal_mse(fit.inner, sens, fit.cov_theta).psi_block;

    const Eigen::MatrixXd& design = model.data().design;
    const double intercept = fit.theta_hat.natural(0);
    const Eigen::VectorXd curve_mode = model.curve(fit.theta_hat, fit.inner.psi_hat.values);
    const Eigen::VectorXd curve_bc = model.curve(fit.theta_hat, psi_bc);
    const Eigen::MatrixXd curve_bc_mse = psd_clamp(design * bc_mse * design.transpose());
    const Eigen::MatrixXd curve_marg_mse = psd_clamp(design * marg * design.transpose());
    const auto [bc_lo, bc_hi] = wald_ci(curve_bc, curve_bc_mse, alpha);
    const auto [mg_lo, mg_hi] = wald_ci(curve_mode, curve_marg_mse, alpha);
    (void)intercept;

    std::string out;
    out += "# condinf fit-gam v1\n";
    out += "year,anomaly,curve_mode,curve_bc,bc_lower,bc_upper,marginal_lower,marginal_upper\n";
    for (Eigen::Index i = 0; i < years.size(); ++i) {
        out += std::to_string(series.year[static_cast<std::size_t>(i)]) + "," +
               csv_num(series.anomaly(i)) + "," + csv_num(curve_mode(i)) + "," +
               csv_num(curve_bc(i)) + "," + csv_num(bc_lo(i)) + "," + csv_num(bc_hi(i)) + "," +
               csv_num(mg_lo(i)) + "," + csv_num(mg_hi(i)) + "\n";
    }
    if (out_dir.empty()) {
        std::cout << out;
    } else {
        std::filesystem::create_directories(out_dir);
        const std::string path = out_dir + "/gam_curve.csv";
        write_lines(path, out);
        std::cerr << "wrote " << path << "\n";
    }
    return 0;
}

int cmd_sim(const std::string& config_path, std::optional<std::uint64_t> seed_override,
            std::string out_dir, ExperimentConfig::Family expected_family) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (cfg.family != expected_family) {
        throw ContractViolation("config family does not match the subcommand");
    }
    if (seed_override.has_value()) {
        cfg.seed = *seed_override;
    }
    const int workers = resolve_workers();

    CoverageReport report;
    if (cfg.family == ExperimentConfig::Family::gam) {
        if (cfg.data_path.empty()) {
            throw ContractViolation("gam config requires a 'data' path");
        }
        const AnomalySeries series = parse_anomaly_csv(cfg.data_path, cfg.year_from, cfg.year_to);
        Eigen::VectorXd years(static_cast<Eigen::Index>(series.year.size()));
        for (Eigen::Index i = 0; i < years.size(); ++i) {
            years(i) = series.year[static_cast<std::size_t>(i)];
        }
        const SplineData base = SplineData::from_xy(years, series.anomaly, cfg.K);
        report = run_gam_experiment(cfg, base, workers);
    } else {
        report = run_rw_experiment(cfg, workers);
    }

    if (out_dir.empty()) {
        out_dir = ".";
    }
    std::filesystem::create_directories(out_dir);
    write_coverage_csv(out_dir + "/coverage.csv", report);
    write_bias_csv(out_dir + "/bias.csv", report);
    write_report_json(out_dir + "/report.json", report);
    std::cerr << "wrote " << out_dir << "/coverage.csv, bias.csv, report.json ("
              << report.metadata.failures << " failed fits, " << fmt(report.metadata.elapsed_seconds)
              << " s)\n";
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        std::cerr << "  " << method_name(report.methods[m]) << ": across-the-function coverage "
                  << fmt(report.across_function(static_cast<Eigen::Index>(m))) << "\n";
    }
    return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
    const std::string schema = report_csv_schema(in_path);
    if (schema == "condinf coverage v1") {
        write_coverage_svg(out_path, read_coverage_csv(in_path));
    } else if (schema == "condinf bias v1") {
        write_bias_svg(out_path, read_bias_csv(in_path));
    } else {
        throw ParseError(in_path + ": unknown report schema '" + schema + "'");
    }
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional (fixed-truth) inference for random effects: bias-corrected "
                 "estimators, SVD handling of data-free effects, and coverage experiments"};
    app.require_subcommand(1);

    // fit-rw
    auto* fit_rw = app.add_subcommand("fit-rw", "Fit the random-walk model to one dataset");
    std::string rw_data;
    bool rw_simulate = false;
    int rw_T = 50, rw_n = 5;
    double rw_sigma_psi = 1.0, rw_sigma_eps = 0.5;
    std::uint64_t rw_seed = 1;
    std::string rw_gamma = "auto";
    double rw_alpha = 0.05;
    std::string rw_out;
    fit_rw->add_option("--data", rw_data, "CSV of observations, one row per time step");
    fit_rw->add_flag("--simulate", rw_simulate, "simulate a dataset instead of reading one");
    fit_rw->add_option("--T", rw_T, "time steps (with --simulate)");
    fit_rw->add_option("--n", rw_n, "observations per step (with --simulate)");
    fit_rw->add_option("--sigma-psi", rw_sigma_psi, "true sigma_psi (with --simulate)");
    fit_rw->add_option("--sigma-eps", rw_sigma_eps, "true sigma_eps (with --simulate)");
    fit_rw->add_option("--seed", rw_seed, "simulation seed");
    fit_rw->add_option("--gamma-c", rw_gamma, "'auto' or a fixed singular-value cutoff");
    fit_rw->add_option("--alpha", rw_alpha, "CI level");
    fit_rw->add_option("--out", rw_out, "output directory (default: stdout)");

    // fit-gam
    auto* fit_gam = app.add_subcommand("fit-gam", "Fit the penalized-spline model to a series");
    std::string gam_data, gam_design, gam_penalty;
    int gam_from = 1850, gam_to = 2010, gam_basis = 50;
    double gam_alpha = 0.05;
    std::string gam_out;
    fit_gam->add_option("--data", gam_data, "anomaly CSV (year, anomaly)")->required();
    fit_gam->add_option("--from", gam_from, "first year (inclusive)");
    fit_gam->add_option("--to", gam_to, "last year (inclusive)");
    fit_gam->add_option("--basis", gam_basis, "basis dimension");
    fit_gam->add_option("--design", gam_design, "external design matrix CSV (overrides --basis)");
    fit_gam->add_option("--penalty", gam_penalty, "external penalty matrix CSV");
    fit_gam->add_option("--alpha", gam_alpha, "CI level");
    fit_gam->add_option("--out", gam_out, "output directory (default: stdout)");

    // sim-*
    std::string sim_config, sim_out;
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false;
    const auto add_sim = [&](const char* name, const char* desc) {
        auto* cmd = app.add_subcommand(name, desc);
        cmd->add_option("--config", sim_config, "experiment config JSON")->required();
        cmd->add_option("--seed", sim_seed, "override the config seed")
            ->each([&](const std::string&) { sim_seed_set = true; });
        cmd->add_option("--out", sim_out, "output directory (default: .)");
        return cmd;
    };
    auto* sim_rw = add_sim("sim-rw", "Random-walk coverage experiment");
    auto* sim_rw_missing = add_sim("sim-rw-missing", "Random-walk experiment with masked times");
    auto* sim_gam = add_sim("sim-gam", "GAM coverage experiment");

    // report
    auto* report = app.add_subcommand("report", "Render a report CSV to an SVG plot");
    std::string report_in, report_out;
    report->add_option("--in", report_in, "coverage.csv or bias.csv")->required();
    report->add_option("--out", report_out, "output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (fit_rw->parsed()) {
            if (rw_data.empty() && !rw_simulate) {
                std::cerr << "fit-rw: either --data or --simulate is required\n";
                return 1;
            }
            return cmd_fit_rw(rw_data, rw_simulate, rw_T, rw_n, rw_sigma_psi, rw_sigma_eps,
                              rw_seed, rw_gamma, rw_alpha, rw_out);
        }
        if (fit_gam->parsed()) {
            return cmd_fit_gam(gam_data, gam_from, gam_to, gam_basis, gam_design, gam_penalty,
                               gam_alpha, gam_out);
        }
        const auto seed_override =
            sim_seed_set ? std::optional<std::uint64_t>(sim_seed) : std::nullopt;
        if (sim_rw->parsed()) {
            return cmd_sim(sim_config, seed_override, sim_out, ExperimentConfig::Family::rw);
        }
        if (sim_rw_missing->parsed()) {
            return cmd_sim(sim_config, seed_override, sim_out,
                           ExperimentConfig::Family::rw_missing);
        }
        if (sim_gam->parsed()) {
            return cmd_sim(sim_config, seed_override, sim_out, ExperimentConfig::Family::gam);
        }
        if (report->parsed()) {
            return cmd_report(report_in, report_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
