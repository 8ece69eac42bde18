#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "condinf/models/spline.hpp"

namespace condinf {

// Interval methods compared in the experiments.
//   mode_conditional: posterior mode with its conditional covariance
//   mode_marginal:    posterior mode with the marginal (empirical-Bayes) MSE
//   bc_conditional:   bias-corrected estimator with its conditional MSE
//   sd_conditional:   SVD-mixed estimator with its MSE
enum class Method { mode_conditional, mode_marginal, bc_conditional, sd_conditional };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct GammaCPolicy {
    bool fixed = false;
    double value = 0.0; // used when fixed
};

// Full description of one simulation study. The replicate stream for truth i,
// replicate j is a counter-based function of (seed, i, j).
struct ExperimentConfig {
    enum class Family { rw, rw_missing, gam };
    Family family = Family::rw;

    // random-walk designs
    int T = 50;
    int n = 5;
    double sigma_psi = 1.0;
    double sigma_eps = 0.5;
    std::vector<int> missing_times; // time indices without observations

    // GAM design
    int K = 50;
    std::string data_path;
    int year_from = 1850;
    int year_to = 2010;
    std::optional<Eigen::Vector3d> theta_truth; // (intercept, sigma, lambda), natural scale

    // common
    int n_truths = 100;
    int n_reps = 200;
    double alpha = 0.05;
    GammaCPolicy gamma_c;
    std::uint64_t seed = 1;
    std::vector<Method> methods = {Method::mode_conditional, Method::mode_marginal,
                                   Method::bc_conditional, Method::sd_conditional};

    void validate() const;
};

struct RunMetadata {
    std::uint64_t seed = 0;
    int n_truths = 0;
    int n_reps = 0;
    int failures = 0;
    int workers = 1;
    double elapsed_seconds = 0.0;
    std::string source;
};

// Coverage and squared-bias summaries over simulated truths.
struct CoverageReport {
    std::vector<Method> methods;
    int n_components = 0;
    Eigen::MatrixXd coverage;        // methods x components, mean over truths
    Eigen::MatrixXd coverage_se;     // binomial SE on the pooled replicate count
    Eigen::MatrixXd q05;             // 5% quantile of per-truth coverages
    Eigen::MatrixXd q95;
    Eigen::MatrixXd squared_bias;    // mean over truths of per-truth squared bias
    Eigen::VectorXd across_function; // mean over components, per method
    RunMetadata metadata;
};

// Accumulated results for one truth over a replicate index range.
struct TruthPartial {
    std::size_t truth_index = 0;
    std::size_t begin_rep = 0; // global replicate index range [begin_rep, end_rep)
    std::size_t end_rep = 0;
    int n_success = 0;
    int n_fail = 0;
    std::vector<Eigen::VectorXd> hits;     // per method: CI hit counts per component
    std::vector<Eigen::VectorXd> bias_sum; // per method: sum of est - truth
};

struct WorkerOutput {
    std::size_t begin_rep = 0;
    std::size_t end_rep = 0;
    std::vector<TruthPartial> truths;
};

// Deterministic reduction of worker outputs in replicate-index order. Rejects
// an empty worker set and overlapping index ranges.
CoverageReport aggregate(const std::vector<WorkerOutput>& outputs, const ExperimentConfig& cfg,
                         int n_components);

// Random-walk coverage experiment (families rw and rw_missing): the outer
// loop draws truths, the inner loop simulates data and refits theta; failed
// fits are excluded and reported. Aborts if more than 5% of fits fail.
CoverageReport run_rw_experiment(const ExperimentConfig& cfg, int n_workers = 1);

// GAM coverage experiment: fits the base series once, freezes the fitted
// curve and theta as the truth, then simulates and refits. Components of the
// report are the evaluation points (years) of the fitted curve.
CoverageReport run_gam_experiment(const ExperimentConfig& cfg, const SplineData& base,
                                  int n_workers = 1);

} // namespace condinf
