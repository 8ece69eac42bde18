#pragma once

#include <Eigen/Dense>

#include "condinf/model.hpp"

namespace condinf {

// Posterior mode of psi at fixed theta, with the derivative blocks evaluated
// there and the Laplace-approximate marginal log-likelihood.
struct InnerSolution {
    PsiVector psi_hat;
    JointEval at_mode;
    Eigen::LLT<Eigen::MatrixXd> neg_hess_llt; // factor of -hess_j at the mode
    double laml = 0.0;
    int iterations = 0;

    // Solve (-hess_j) X = rhs.
    Eigen::MatrixXd solve_neg_hess(const Eigen::MatrixXd& rhs) const {
        return neg_hess_llt.solve(rhs);
    }
};

// Newton ascent on l_j(psi, theta) in psi with a halving Armijo line search
// (constant 1e-4); stops once the gradient infinity-norm drops below
// 1e-8 * max(1, |l_j|) or after 100 iterations. Exact in one step for the
// built-in Gaussian models.
InnerSolution inner_newton(const Model& model, const ThetaVector& theta, const PsiVector& psi0);

// Same, started from the prior mean.
InnerSolution inner_newton(const Model& model, const ThetaVector& theta);

// Laplace-approximate marginal log-likelihood:
//   l_j(psi_hat, theta) - log det(-hess_j)/2 + dim(psi)/2 * log(2 pi).
double laml(const Model& model, const ThetaVector& theta);

// Sensitivity of the mode: solves hess_j X = -cross_theta.
Eigen::MatrixXd dpsi_dtheta(const InnerSolution& sol);

} // namespace condinf
