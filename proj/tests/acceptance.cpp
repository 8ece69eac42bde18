// Acceptance suite: one criterion per function, each printing a single
// [PASS]/[FAIL] line. Run with no arguments for all criteria or with a
// criterion number. The exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "condinf/conditional.hpp"
#include "condinf/io/csv.hpp"
#include "condinf/laplace.hpp"
#include "condinf/linalg.hpp"
#include "condinf/models/random_walk.hpp"
#include "condinf/models/scalar_gaussian.hpp"
#include "condinf/models/spline.hpp"
#include "condinf/outer.hpp"
#include "condinf/rng.hpp"
#include "condinf/simulation.hpp"

#include "oracles.hpp"

using namespace condinf;

namespace {

struct CheckList {
    std::ostringstream detail;
    bool ok = true;

    void expect(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            detail << (detail.str().empty() ? "" : "; ") << "FAILED: " << what;
        }
    }
    void note(const std::string& what) {
        detail << (detail.str().empty() ? "" : "; ") << what;
    }
};

std::string data_file() {
    return std::string(CONDINF_SOURCE_DIR) + "/data/anomalies_1850_2010.csv";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// 1. Gaussian exactness: LAML equals the dense-MVN marginal log-likelihood.
// ---------------------------------------------------------------------------
void criterion_1(CheckList& c) {
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        CounterRng trng(9100 + k, {1});
        const PsiVector psi = simulate_rw_truth(50, 1.0, trng);
        CounterRng drng(9100 + k, {2});
        RandomWalkData data = simulate_rw_data(psi, 2, 0.5, {}, drng);

        CounterRng prng(9100 + k, {3});
        const double sigma_psi = std::exp(0.5 * prng.normal());
        const double sigma_eps = 0.5 * std::exp(0.4 * prng.normal());
        const RandomWalkModel model(data);
        const double lap = laml(model, RandomWalkModel::theta_from_sigmas(sigma_psi, sigma_eps));
        const double dense = oracles::rw_marginal_loglik(data, sigma_psi, sigma_eps);
        worst = std::max(worst, std::abs(lap - dense));
    }
    c.note("max |laml - dense MVN| = " + fmt(worst) + " over 20 datasets");
    c.expect(worst < 1e-8, "agreement within 1e-8");
}

// ---------------------------------------------------------------------------
// 2. Scalar worked example: psi_hat = 0.8 y, B = 0.8, psi_BC = y,
//    MSE_BC (theta known) = 0.25, all within 1e-10.
// ---------------------------------------------------------------------------
void criterion_2(CheckList& c) {
    for (double y : {1.0, -0.35, 2.2}) {
        const ModelHandle model = build_scalar_gaussian_model({Eigen::VectorXd::Constant(1, y)});
        const ThetaVector theta = ScalarGaussianModel::theta_from_sigmas(1.0, 0.5);
        const InnerSolution sol = inner_newton(*model, theta);
        const PriorMean prior = model->prior(theta);

        c.expect(std::abs(sol.psi_hat.values(0) - 0.8 * y) < 1e-10, "psi_hat = 0.8 y");
        c.expect(std::abs(shrinkage_matrix(sol)(0, 0) - 0.8) < 1e-10, "B = 0.8");
        c.expect(std::abs(bias_correct(sol, prior)(0) - y) < 1e-10, "psi_BC = y");
        const Eigen::MatrixXd mse =
            mse_bc(sol, prior, dpsi_dtheta(sol), Eigen::MatrixXd::Zero(2, 2));
        c.expect(std::abs(mse(0, 0) - 0.25) < 1e-10, "MSE_BC = 0.25 with theta known");
    }
    c.note("checked y in {1, -0.35, 2.2}");
}

// ---------------------------------------------------------------------------
// 3. Conditional-bias law at fixed truth and theta.
// ---------------------------------------------------------------------------
void criterion_3(CheckList& c) {
    const int T = 50;
    const int n = 5;
    const int reps = 2000;
    CounterRng trng(9300, {1});
    const PsiVector psi_true = simulate_rw_truth(T, 1.0, trng);
    const ThetaVector theta = RandomWalkModel::theta_from_sigmas(1.0, 0.5);

    Eigen::ArrayXXd mode_err(reps, T);
    Eigen::ArrayXXd bc_err(reps, T);
    Eigen::VectorXd predicted;
    for (int r = 0; r < reps; ++r) {
        CounterRng drng(9300, {2, static_cast<std::uint64_t>(r)});
        const RandomWalkModel model(simulate_rw_data(psi_true, n, 0.5, {}, drng));
        const InnerSolution sol = inner_newton(model, theta);
        const PriorMean prior = model.prior(theta);
        mode_err.row(r) = (sol.psi_hat.values - psi_true.values).transpose();
        bc_err.row(r) = (bias_correct(sol, prior) - psi_true.values).transpose();
        if (r == 0) {
            predicted = sol.solve_neg_hess(sol.at_mode.hess_r) * (psi_true.values - prior.mean);
        }
    }
    int mode_ok = 0;
    int bc_ok = 0;
    for (int t = 0; t < T; ++t) {
        const double mm = mode_err.col(t).mean();
        const double mse_mode =
            std::sqrt((mode_err.col(t) - mm).square().sum() / ((reps - 1.0) * reps));
        if (std::abs(mm - predicted(t)) <= 3.0 * mse_mode) {
            ++mode_ok;
        }
        const double bm = bc_err.col(t).mean();
        const double mse_bc_t =
            std::sqrt((bc_err.col(t) - bm).square().sum() / ((reps - 1.0) * reps));
        if (std::abs(bm) <= 3.0 * mse_bc_t) {
            ++bc_ok;
        }
    }
    c.note("bias law holds at " + std::to_string(mode_ok) + "/50 components, BC unbiased at " +
           std::to_string(bc_ok) + "/50");
    c.expect(mode_ok == T, "mode bias matches the leading term within 3 SEs componentwise");
    c.expect(bc_ok == T, "BC estimator unbiased within 3 SEs componentwise");
}

// ---------------------------------------------------------------------------
// 4. Random-walk coverage at desk scale with full theta estimation.
// ---------------------------------------------------------------------------
void criterion_4(CheckList& c) {
    ExperimentConfig cfg;
    cfg.family = ExperimentConfig::Family::rw;
    cfg.T = 50;
    cfg.n = 5;
    cfg.sigma_psi = 1.0;
    cfg.sigma_eps = 0.5;
    cfg.n_truths = 100;
    cfg.n_reps = 200;
    cfg.alpha = 0.05;
    cfg.seed = 9400;
    cfg.methods = {Method::bc_conditional, Method::mode_marginal, Method::mode_conditional};
    const CoverageReport report = run_rw_experiment(cfg, 8);

    const double bc_avg = report.across_function(0);
    const double marginal_avg = report.across_function(1);
    const double uncorrected_avg = report.across_function(2);
    c.note("avg coverage: BC " + fmt(bc_avg) + ", marginal " + fmt(marginal_avg) +
           ", uncorrected " + fmt(uncorrected_avg) + ", failures " +
           std::to_string(report.metadata.failures));

    c.expect(bc_avg >= 0.93 && bc_avg <= 0.97, "(a) BC average coverage in [0.93, 0.97]");

    int narrower = 0;
    for (int t = 0; t < cfg.T; ++t) {
        const double bc_width = report.q95(0, t) - report.q05(0, t);
        const double marginal_width = report.q95(1, t) - report.q05(1, t);
        if (bc_width < marginal_width) {
            ++narrower;
        }
    }
    c.note("BC band narrower at " + std::to_string(narrower) + "/50 components");
    c.expect(narrower >= 35, "(b) BC quantile band narrower at >= 70% of components");
    c.expect(uncorrected_avg < bc_avg, "(c) uncorrected conditional CIs undercover on average");
}

// ---------------------------------------------------------------------------
// 5. Missing tail with gamma_c = 0.1: observed-time coverage plus identical
//    SD and marginal intervals at the masked times.
// ---------------------------------------------------------------------------
void criterion_5(CheckList& c) {
    ExperimentConfig cfg;
    cfg.family = ExperimentConfig::Family::rw_missing;
    cfg.T = 50;
    cfg.n = 5;
    cfg.sigma_psi = 1.0;
    cfg.sigma_eps = 0.5;
    cfg.missing_times = {47, 48, 49};
    cfg.gamma_c.fixed = true;
    cfg.gamma_c.value = 0.1;
    cfg.n_truths = 100;
    cfg.n_reps = 200;
    cfg.alpha = 0.05;
    cfg.seed = 9500;
    cfg.methods = {Method::sd_conditional, Method::mode_marginal};
    const CoverageReport report = run_rw_experiment(cfg, 8);

    double observed_avg = 0.0;
    for (int t = 0; t < 47; ++t) {
        observed_avg += report.coverage(0, t);
    }
    observed_avg /= 47.0;
    c.note("SD observed-time average coverage " + fmt(observed_avg));
    c.expect(observed_avg >= 0.93 && observed_avg <= 0.97,
             "observed-time SD coverage in [0.93, 0.97]");

    // Interval identity at masked times, checked on fresh replicate fits.
    double worst_gap = 0.0;
    for (std::uint64_t k = 0; k < 5; ++k) {
        CounterRng trng(9510 + k, {1});
        const PsiVector psi = simulate_rw_truth(50, 1.0, trng);
        std::vector<bool> mask(50, false);
        mask[47] = mask[48] = mask[49] = true;
        CounterRng drng(9510 + k, {2});
        const RandomWalkModel model(simulate_rw_data(psi, 5, 0.5, mask, drng));
        const OuterFit fit = maximize_laml(model, model.initial_theta());
        const Eigen::MatrixXd sens = dpsi_dtheta(fit.inner);
        const PriorMean prior = model.prior(fit.theta_hat);

        const ShrinkageDecomposition dec = decompose_shrinkage(fit.inner, 0.1);
        const Eigen::VectorXd sd_est = svd_estimate(fit.inner, prior, dec);
        const Eigen::MatrixXd sd_mse = mse_sd(fit.inner, prior, sens, fit.cov_theta, dec);
        const auto [sd_lo, sd_hi] = wald_ci(sd_est, sd_mse, 0.05);

        const Eigen::MatrixXd marg = marginal_mse(fit.inner, sens, fit.cov_theta).psi_block;
        const auto [mg_lo, mg_hi] = wald_ci(fit.inner.psi_hat.values, marg, 0.05);

        for (int t = 47; t < 50; ++t) {
            worst_gap = std::max(worst_gap, std::abs(sd_lo(t) - mg_lo(t)));
            worst_gap = std::max(worst_gap, std::abs(sd_hi(t) - mg_hi(t)));
        }
    }
    c.note("max masked-time endpoint gap " + fmt(worst_gap));
    c.expect(worst_gap < 1e-8, "SD and marginal intervals identical at masked times");
}

// ---------------------------------------------------------------------------
// 6. GAM experiment on the bundled 1850-2010 series.
// ---------------------------------------------------------------------------
void criterion_6(CheckList& c) {
    const AnomalySeries series = parse_anomaly_csv(data_file(), 1850, 2010);
    Eigen::VectorXd years(static_cast<Eigen::Index>(series.year.size()));
    for (Eigen::Index i = 0; i < years.size(); ++i) {
        years(i) = series.year[static_cast<std::size_t>(i)];
    }
    const SplineData base = SplineData::from_xy(years, series.anomaly, 50);

    ExperimentConfig cfg;
    cfg.family = ExperimentConfig::Family::gam;
    cfg.K = 50;
    cfg.data_path = data_file();
    cfg.n_truths = 1;
    cfg.n_reps = 1000;
    cfg.alpha = 0.05;
    cfg.seed = 9600;
    cfg.methods = {Method::mode_marginal, Method::bc_conditional};
    const CoverageReport report = run_gam_experiment(cfg, base, 8);

    const double marginal_avg = report.across_function(0);
    const double bc_avg = report.across_function(1);
    c.note("across-the-function coverage: marginal " + fmt(marginal_avg) + ", BC " + fmt(bc_avg) +
           ", failures " + std::to_string(report.metadata.failures));
    c.expect(std::abs(marginal_avg - 0.946) <= 0.02, "marginal across-function within 0.946 +/- 0.02");
    c.expect(std::abs(bc_avg - 0.949) <= 0.02, "BC across-function within 0.949 +/- 0.02");

    int bc_smaller = 0;
    for (int t = 0; t < report.n_components; ++t) {
        if (report.squared_bias(1, t) <= report.squared_bias(0, t)) {
            ++bc_smaller;
        }
    }
    c.note("BC squared bias below the mode estimator at " + std::to_string(bc_smaller) + "/" +
           std::to_string(report.n_components) + " years");
    c.expect(bc_smaller * 10 >= report.n_components * 9,
             "BC squared bias smaller at >= 90% of years");
}

// ---------------------------------------------------------------------------
// 7. Limit identities of the SVD estimator.
// ---------------------------------------------------------------------------
void criterion_7(CheckList& c) {
    double worst_low = 0.0;
    double worst_high = 0.0;
    for (std::uint64_t k = 0; k < 10; ++k) {
        CounterRng trng(9700 + k, {1});
        const PsiVector psi = simulate_rw_truth(30, 1.0, trng);
        CounterRng drng(9700 + k, {2});
        const RandomWalkModel model(simulate_rw_data(psi, 3, 0.5, {}, drng));
        const OuterFit fit = maximize_laml(model, model.initial_theta());
        const Eigen::MatrixXd sens = dpsi_dtheta(fit.inner);
        const PriorMean prior = model.prior(fit.theta_hat);

        const ShrinkageDecomposition low = decompose_shrinkage(fit.inner, 0.0);
        const Eigen::VectorXd bc = bias_correct(fit.inner, prior);
        const Eigen::MatrixXd bc_cov = mse_bc(fit.inner, prior, sens, fit.cov_theta);
        worst_low = std::max(worst_low, (svd_estimate(fit.inner, prior, low) - bc)
                                            .cwiseAbs()
                                            .maxCoeff());
        worst_low = std::max(worst_low,
                             (mse_sd(fit.inner, prior, sens, fit.cov_theta, low) - bc_cov)
                                 .cwiseAbs()
                                 .maxCoeff());

        const ShrinkageDecomposition high =
            decompose_shrinkage(fit.inner, low.singular_values(0) + 1.0);
        const Eigen::MatrixXd marg = marginal_mse(fit.inner, sens, fit.cov_theta).psi_block;
        worst_high = std::max(worst_high,
                              (svd_estimate(fit.inner, prior, high) - fit.inner.psi_hat.values)
                                  .cwiseAbs()
                                  .maxCoeff());
        worst_high = std::max(worst_high,
                              (mse_sd(fit.inner, prior, sens, fit.cov_theta, high) - marg)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    c.note("gamma_c -> 0 gap " + fmt(worst_low) + ", gamma_c -> inf gap " + fmt(worst_high));
    c.expect(worst_low < 1e-8, "SD reduces to BC at gamma_c = 0");
    c.expect(worst_high < 1e-8, "SD reduces to mode/marginal at large gamma_c");
}

// ---------------------------------------------------------------------------
// 8. Determinism: 1 worker vs 8 workers, bitwise-identical CSVs.
// ---------------------------------------------------------------------------
void criterion_8(CheckList& c) {
    const auto tmp = std::filesystem::temp_directory_path() / "condinf_acceptance_8";
    std::filesystem::create_directories(tmp);

    ExperimentConfig rw_cfg;
    rw_cfg.family = ExperimentConfig::Family::rw;
    rw_cfg.T = 20;
    rw_cfg.n = 3;
    rw_cfg.n_truths = 8;
    rw_cfg.n_reps = 25;
    rw_cfg.seed = 9800;
    rw_cfg.methods = {Method::mode_marginal, Method::bc_conditional, Method::sd_conditional};

    const CoverageReport rw1 = run_rw_experiment(rw_cfg, 1);
    const CoverageReport rw8 = run_rw_experiment(rw_cfg, 8);
    write_coverage_csv((tmp / "rw_cov_1.csv").string(), rw1);
    write_coverage_csv((tmp / "rw_cov_8.csv").string(), rw8);
    write_bias_csv((tmp / "rw_bias_1.csv").string(), rw1);
    write_bias_csv((tmp / "rw_bias_8.csv").string(), rw8);
    c.expect(read_bytes((tmp / "rw_cov_1.csv").string()) ==
                 read_bytes((tmp / "rw_cov_8.csv").string()),
             "rw coverage.csv identical for 1 vs 8 workers");
    c.expect(read_bytes((tmp / "rw_bias_1.csv").string()) ==
                 read_bytes((tmp / "rw_bias_8.csv").string()),
             "rw bias.csv identical for 1 vs 8 workers");

    const AnomalySeries series = parse_anomaly_csv(data_file(), 1900, 1980);
    Eigen::VectorXd years(static_cast<Eigen::Index>(series.year.size()));
    for (Eigen::Index i = 0; i < years.size(); ++i) {
        years(i) = series.year[static_cast<std::size_t>(i)];
    }
    const SplineData base = SplineData::from_xy(years, series.anomaly, 12);
    ExperimentConfig gam_cfg;
    gam_cfg.family = ExperimentConfig::Family::gam;
    gam_cfg.K = 12;
    gam_cfg.n_truths = 1;
    gam_cfg.n_reps = 60;
    gam_cfg.seed = 9801;
    gam_cfg.methods = {Method::mode_marginal, Method::bc_conditional};

    const CoverageReport gam1 = run_gam_experiment(gam_cfg, base, 1);
    const CoverageReport gam8 = run_gam_experiment(gam_cfg, base, 8);
    write_coverage_csv((tmp / "gam_cov_1.csv").string(), gam1);
    write_coverage_csv((tmp / "gam_cov_8.csv").string(), gam8);
    c.expect(read_bytes((tmp / "gam_cov_1.csv").string()) ==
                 read_bytes((tmp / "gam_cov_8.csv").string()),
             "gam coverage.csv identical for 1 vs 8 workers");
    std::filesystem::remove_all(tmp);
    c.note("rw 8x25 and gam 60-replicate runs");
}

struct Criterion {
    int number;
    const char* name;
    double time_limit_seconds; // 0 = unlimited
    std::function<void(CheckList&)> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "Gaussian exactness of LAML vs the dense-MVN oracle", 5.0, criterion_1},
        {2, "scalar worked example (psi_hat, B, psi_BC, MSE_BC)", 0.0, criterion_2},
        {3, "conditional bias law and BC unbiasedness at fixed truth", 120.0, criterion_3},
        {4, "random-walk coverage, 100 truths x 200 replicates", 900.0, criterion_4},
        {5, "missing tail with gamma_c = 0.1", 0.0, criterion_5},
        {6, "GAM coverage on the 1850-2010 series", 1200.0, criterion_6},
        {7, "SVD estimator limit identities", 0.0, criterion_7},
        {8, "bitwise determinism across worker counts", 0.0, criterion_8},
    };
    return all;
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 8) {
            std::cerr << "usage: acceptance [1-8]\n";
            return 64;
        }
    }

    int failures = 0;
    for (const Criterion& criterion : criteria()) {
        if (only != 0 && criterion.number != only) {
            continue;
        }
        CheckList checks;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.run(checks);
        } catch (const std::exception& e) {
            checks.ok = false;
            checks.note(std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.time_limit_seconds > 0.0 && elapsed > criterion.time_limit_seconds) {
            checks.ok = false;
            checks.note("runtime " + fmt(elapsed) + " s exceeded the " +
                        fmt(criterion.time_limit_seconds) + " s limit");
        }
        std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", checks.ok ? "PASS" : "FAIL",
                    criterion.number, criterion.name, checks.detail.str().c_str(), elapsed);
        std::fflush(stdout);
        if (!checks.ok) {
            ++failures;
        }
    }
    return failures;
}
