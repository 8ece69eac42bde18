#pragma once

#include <Eigen/Dense>
#include <vector>

#include "condinf/laplace.hpp"
#include "condinf/model.hpp"

namespace condinf {

// Result of maximum Laplace-approximate-marginal-likelihood estimation.
struct OuterFit {
    ThetaVector theta_hat;
    Eigen::MatrixXd cov_theta; // on the unconstrained scale; masked rows/cols zero
    double laml_at_opt = 0.0;
    InnerSolution inner;       // at theta_hat
    bool converged = false;
    int evaluations = 0;       // objective evaluations outside FD probes
    bool boundary_suspect = false;
};

// BFGS with backtracking on the unconstrained scale; gradients by central
// finite differences. Converges when the relative LAML change drops below
// 1e-10 and the FD gradient infinity-norm is below 1e-6 * max(1, |laml|);
// gives up after 500 line-search evaluations. fixed_mask marks theta
// components treated as known when forming cov_theta (their rows/columns are
// zero); an empty mask fixes nothing.
OuterFit maximize_laml(const Model& model, const ThetaVector& theta0,
                       const std::vector<bool>& fixed_mask = {});

// Covariance of theta_hat: inverse of the finite-difference Hessian of -LAML
// (central, step 1e-4), with fixed_mask rows/columns removed before inversion
// and re-inserted as zeros. The result is clamped to the nearest PSD matrix
// by truncating negative eigenvalues.
Eigen::MatrixXd cov_theta(const Model& model, const ThetaVector& theta_hat,
                          const std::vector<bool>& fixed_mask = {});

} // namespace condinf
