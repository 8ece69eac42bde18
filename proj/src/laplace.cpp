#include "condinf/laplace.hpp"

#include <cmath>
#include <string>

#include "condinf/errors.hpp"
#include "condinf/linalg.hpp"
#include "condinf/stats.hpp"

namespace condinf {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kArmijo = 1e-4;

double gradient_tolerance(const JointEval& ev) {
    return 1e-8 * std::max(1.0, std::abs(ev.l_j()));
}

} // namespace

InnerSolution inner_newton(const Model& model, const ThetaVector& theta, const PsiVector& psi0) {
    InnerSolution sol;
    sol.psi_hat = psi0;
    sol.at_mode = eval_joint(model, sol.psi_hat, theta);

    if (model.dim_psi() == 0) {
        sol.neg_hess_llt.compute(-sol.at_mode.hess_j);
        sol.laml = sol.at_mode.l_j();
        return sol;
    }

    int iter = 0;
    while (true) {
        const double gnorm = sol.at_mode.grad_psi.lpNorm<Eigen::Infinity>();
        if (gnorm < gradient_tolerance(sol.at_mode)) {
            break;
        }
        if (iter >= kMaxIterations) {
            throw OptimizerFailure("inner_newton: no convergence after " +
                                   std::to_string(kMaxIterations) +
                                   " iterations; last gradient norm " + std::to_string(gnorm));
        }

        sol.neg_hess_llt.compute(-sol.at_mode.hess_j);
        if (sol.neg_hess_llt.info() != Eigen::Success) {
            throw CurvatureError("inner_newton: -hess_j is not positive definite");
        }
        const Eigen::VectorXd direction = sol.neg_hess_llt.solve(sol.at_mode.grad_psi);
        const double slope = sol.at_mode.grad_psi.dot(direction);

        double alpha = 1.0;
        bool accepted = false;
        while (alpha > 1e-14) {
            PsiVector candidate(sol.psi_hat.values + alpha * direction);
            JointEval cand_eval;
            bool finite = true;
            try {
                cand_eval = eval_joint(model, candidate, theta);
            } catch (const NumericDomainError&) {
                finite = false;
            }
            if (finite && cand_eval.l_j() >= sol.at_mode.l_j() + kArmijo * alpha * slope) {
                sol.psi_hat = std::move(candidate);
                sol.at_mode = std::move(cand_eval);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            throw OptimizerFailure("inner_newton: line search failed; gradient norm " +
                                   std::to_string(gnorm));
        }
        ++iter;
    }
    sol.iterations = iter;

    sol.neg_hess_llt.compute(-sol.at_mode.hess_j);
    if (sol.neg_hess_llt.info() != Eigen::Success) {
        throw CurvatureError("inner_newton: -hess_j indefinite at the mode");
    }
    sol.laml = sol.at_mode.l_j() - 0.5 * log_det_llt(sol.neg_hess_llt) +
               0.5 * model.dim_psi() * kLogTwoPi;
    return sol;
}

InnerSolution inner_newton(const Model& model, const ThetaVector& theta) {
    return inner_newton(model, theta, PsiVector(model.prior(theta).mean));
}

double laml(const Model& model, const ThetaVector& theta) {
    return inner_newton(model, theta).laml;
}

Eigen::MatrixXd dpsi_dtheta(const InnerSolution& sol) {
    if (sol.at_mode.hess_j.rows() == 0) {
        return Eigen::MatrixXd::Zero(0, sol.at_mode.cross_theta.cols());
    }
    if (sol.neg_hess_llt.info() != Eigen::Success) {
        throw CurvatureError("dpsi_dtheta: solution lacks a valid Cholesky factor");
    }
    // hess_j X = -cross  <=>  (-hess_j) X = cross
    return sol.neg_hess_llt.solve(sol.at_mode.cross_theta);
}

} // namespace condinf
