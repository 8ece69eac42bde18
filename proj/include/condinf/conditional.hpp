#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "condinf/laplace.hpp"
#include "condinf/model.hpp"

namespace condinf {

// SVD of the shrinkage matrix B = I - hess_j^{-1} hess_r together with the
// threshold separating data-supported singular directions from the rest.
struct ShrinkageDecomposition {
    Eigen::MatrixXd B;
    Eigen::MatrixXd U;
    Eigen::MatrixXd V;
    Eigen::VectorXd singular_values; // descending
    double gamma_c = 0.0;
    int n_c = 0;                     // singular values strictly above gamma_c
};

// B = I - hess_j^{-1} hess_r, computed by solving hess_j X = hess_r.
Eigen::MatrixXd shrinkage_matrix(const InnerSolution& sol);

// Count of data-supported directions (nonzero singular values of hess_c) and
// the default cutoff: the midpoint between the n_c-th and (n_c+1)-th singular
// values of B, or 0 when every direction is supported.
std::pair<double, int> select_gamma_c(const InnerSolution& sol,
                                      const Eigen::VectorXd& singular_values_of_B);

// SVD of B plus cutoff selection; gamma_override (e.g. 0.1) replaces the
// automatic rule but keeps n_c consistent with the override.
ShrinkageDecomposition decompose_shrinkage(const InnerSolution& sol,
                                           std::optional<double> gamma_override = std::nullopt);

// Bias-corrected estimator B^{-1} [psi_hat - hess_j^{-1} hess_r E{Psi}].
// Requires B nonsingular (smallest singular value > 1e-8 * largest).
Eigen::VectorXd bias_correct(const InnerSolution& sol, const PriorMean& prior);

// Upsilon = dpsi_dtheta - hess_j^{-1} hess_r dE{Psi}/dtheta'.
Eigen::MatrixXd upsilon(const InnerSolution& sol, const PriorMean& prior,
                        const Eigen::MatrixXd& sens);

// Conditional MSE of the bias-corrected estimator:
//   B^{-1} [ -hess_j^{-1} + hess_j^{-1} hess_r hess_j^{-1}
//            + Upsilon Cov(theta) Upsilon' ] B^{-T}, symmetrized.
Eigen::MatrixXd mse_bc(const InnerSolution& sol, const PriorMean& prior,
                       const Eigen::MatrixXd& sens, const Eigen::MatrixXd& cov_theta);

// Joint MSE matrix partitioned into psi block, psi-theta block, theta block.
struct JointMse {
    Eigen::MatrixXd psi_block;
    Eigen::MatrixXd cross_block; // dim(psi) x dim(theta)
    Eigen::MatrixXd theta_block;
};

// Marginal (empirical-Bayes) MSE: psi block -hess_j^{-1} + sens Cov sens',
// cross block sens Cov, theta block Cov.
JointMse marginal_mse(const InnerSolution& sol, const Eigen::MatrixXd& sens,
                      const Eigen::MatrixXd& cov_theta);

// Covariance of the uncorrected posterior mode conditional on psi:
//   -hess_j^{-1} + hess_j^{-1} hess_r hess_j^{-1} + sens Cov sens'.
Eigen::MatrixXd conditional_covariance_mode(const InnerSolution& sol,
                                            const Eigen::MatrixXd& sens,
                                            const Eigen::MatrixXd& cov_theta);

// Mixed SVD estimator: bias correction along supported singular directions,
// the posterior mode along the rest.
Eigen::VectorXd svd_estimate(const InnerSolution& sol, const PriorMean& prior,
                             const ShrinkageDecomposition& dec);

// MSE of the SVD estimator (conditional blocks along supported directions,
// marginal block along the rest), symmetrized and PSD-clamped.
Eigen::MatrixXd mse_sd(const InnerSolution& sol, const PriorMean& prior,
                       const Eigen::MatrixXd& sens, const Eigen::MatrixXd& cov_theta,
                       const ShrinkageDecomposition& dec);

// Joint (psi, theta) MSE for the SVD estimator; the off-diagonal block is
// G Cov(theta).
JointMse joint_mse_sd(const InnerSolution& sol, const PriorMean& prior,
                      const Eigen::MatrixXd& sens, const Eigen::MatrixXd& cov_theta,
                      const ShrinkageDecomposition& dec);

// est_i +/- z_{alpha/2} sqrt(mse_ii).
std::pair<Eigen::VectorXd, Eigen::VectorXd> wald_ci(const Eigen::VectorXd& est,
                                                    const Eigen::MatrixXd& mse, double alpha);

enum class EstimatorKind { posterior_mode, bias_corrected, svd_mixed };

// One estimator with its MSE matrix and componentwise CIs.
struct ConditionalEstimate {
    EstimatorKind kind = EstimatorKind::posterior_mode;
    Eigen::VectorXd psi_est;
    Eigen::MatrixXd mse;
    Eigen::MatrixXd theta_block;
    Eigen::MatrixXd cross_block;
    double alpha = 0.05;
    Eigen::VectorXd ci_lower;
    Eigen::VectorXd ci_upper;
};

// Differentiable map g with its Jacobian, for the generalized delta method.
struct DeltaMap {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

// Generalized delta method: mean g(est), covariance J mse J', componentwise
// Wald CIs.
ConditionalEstimate delta_method(const DeltaMap& g, const Eigen::VectorXd& est,
                                 const Eigen::MatrixXd& mse, double alpha);

// Assemble one estimator with its full joint-MSE blocks and Wald CIs.
// gamma_override applies to the svd_mixed kind only.
ConditionalEstimate make_conditional_estimate(EstimatorKind kind, const InnerSolution& sol,
                                              const PriorMean& prior, const Eigen::MatrixXd& sens,
                                              const Eigen::MatrixXd& cov_theta, double alpha,
                                              std::optional<double> gamma_override = std::nullopt);

// Predictor of REs not associated with data from the precision partition:
// psi_B = -Lambda_B^{-1} Lambda_BA psi_A_hat. b_index selects the B block
// inside `precision`; the A block is its ordered complement.
Eigen::VectorXd predict_unobserved(const Eigen::MatrixXd& precision,
                                   const std::vector<int>& b_index,
                                   const Eigen::VectorXd& psi_a_hat);

} // namespace condinf
