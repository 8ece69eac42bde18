#include "condinf/outer.hpp"

#include <cmath>
#include <deque>
#include <sstream>
#include <string>

#include "condinf/errors.hpp"
#include "condinf/fd.hpp"
#include "condinf/linalg.hpp"

namespace condinf {

namespace {

constexpr int kMaxEvaluations = 500;
constexpr double kArmijo = 1e-4;
constexpr double kRelChangeTol = 1e-10;
constexpr double kCovStep = 1e-4;
constexpr double kBoundaryLow = 1e-6;
constexpr double kBoundaryHigh = 1e6;

std::string trace_to_string(const std::deque<std::pair<Eigen::VectorXd, double>>& trace) {
    std::ostringstream os;
    for (const auto& [theta, value] : trace) {
        os << "\n  theta = [";
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            os << (i ? ", " : "") << theta(i);
        }
        os << "], laml = " << value;
    }
    return os.str();
}

} // namespace

OuterFit maximize_laml(const Model& model, const ThetaVector& theta0,
                       const std::vector<bool>& fixed_mask) {
    theta0.validate();
    if (theta0.dim() != model.dim_theta()) {
        throw ContractViolation("maximize_laml: theta0 dimension does not match model");
    }

    OuterFit fit;
    const Eigen::Index dim = theta0.dim();

    int evaluations = 0;
    const auto objective = [&](const Eigen::VectorXd& v) {
        return laml(model, theta0.with_values(v));
    };
    const auto counted_objective = [&](const Eigen::VectorXd& v) {
        ++evaluations;
        return objective(v);
    };

    Eigen::VectorXd x = theta0.values;
    double fx = counted_objective(x);
    if (!std::isfinite(fx)) {
        throw NumericDomainError("maximize_laml: LAML non-finite at the starting point");
    }

    std::deque<std::pair<Eigen::VectorXd, double>> trace;
    const auto record = [&](const Eigen::VectorXd& v, double f) {
        trace.emplace_back(v, f);
        if (trace.size() > 5) {
            trace.pop_front();
        }
    };
    record(x, fx);

    Eigen::VectorXd grad = fd_gradient(objective, x);

    // Diagonal curvature preconditioner: theta mixes data-scale components
    // (the intercept) with log-scale ones, so raw BFGS from the identity can
    // spend the whole budget crawling along the stiff direction.
    Eigen::VectorXd curvature = Eigen::VectorXd::Ones(dim);
    {
        Eigen::VectorXd probe = x;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double h = 1e-4 * std::max(1.0, std::abs(x(i)));
            double second = 1.0;
            try {
                probe(i) = x(i) + h;
                const double fp = objective(probe);
                probe(i) = x(i) - h;
                const double fm = objective(probe);
                second = std::abs((fp - 2.0 * fx + fm) / (h * h));
            } catch (const Error&) {
                second = 1.0;
            }
            probe(i) = x(i);
            curvature(i) = second;
        }
        const double cmax = curvature.maxCoeff();
        if (cmax > 0.0 && std::isfinite(cmax)) {
            curvature = curvature.cwiseMax(1e-8 * cmax).cwiseMin(1e8 * cmax);
        } else {
            curvature.setOnes();
        }
    }
    const Eigen::MatrixXd preconditioner =
        curvature.cwiseInverse().asDiagonal().toDenseMatrix();

    Eigen::MatrixXd inv_hess = preconditioner;
    bool hess_is_reset = true;

    const auto grad_tol = [&](double f) { return 1e-6 * std::max(1.0, std::abs(f)); };

    // Newton polish with the finite-difference Hessian. Near the optimum of a
    // stiff direction the achievable objective change falls below machine
    // resolution while the FD gradient is still measurable; line-search steps
    // cannot be ranked there, but the Newton step lands on the stationary
    // point directly.
    const auto polish = [&]() -> bool {
        for (int round = 0; round < 3; ++round) {
            if (grad.lpNorm<Eigen::Infinity>() < grad_tol(fx)) {
                return true;
            }
            const auto neg_objective = [&](const Eigen::VectorXd& v) { return -objective(v); };
            Eigen::MatrixXd hess;
            try {
                hess = fd_hessian(neg_objective, x, kCovStep);
            } catch (const Error&) {
                return false;
            }
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
                return false;
            }
            const Eigen::VectorXd x_try = x + ldlt.solve(grad);
            double f_try = fx;
            Eigen::VectorXd g_try;
            try {
                f_try = counted_objective(x_try);
                g_try = fd_gradient(objective, x_try);
            } catch (const Error&) {
                return false;
            }
            if (g_try.lpNorm<Eigen::Infinity>() >= grad.lpNorm<Eigen::Infinity>()) {
                break;
            }
            x = x_try;
            fx = f_try;
            grad = g_try;
            record(x, fx);
        }
        return grad.lpNorm<Eigen::Infinity>() < grad_tol(fx);
    };

    bool converged = grad.lpNorm<Eigen::Infinity>() < grad_tol(fx);
    while (!converged) {
        Eigen::VectorXd direction = inv_hess * grad; // ascent
        double slope = grad.dot(direction);
        if (!(slope > 0.0)) {
            inv_hess = preconditioner;
            hess_is_reset = true;
            direction = inv_hess * grad;
            slope = grad.dot(direction);
        }

        double alpha = 1.0;
        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = fx;
        while (alpha > 1e-14 && evaluations < kMaxEvaluations) {
            x_new = x + alpha * direction;
            bool finite = true;
            try {
                f_new = counted_objective(x_new);
            } catch (const Error&) {
                // a trial point where the inner problem cannot be evaluated
                // or solved is treated as arbitrarily bad
                finite = false;
            }
            // strict improvement required: once the Armijo threshold
            // underflows, zero-progress steps must not be accepted
            if (finite && f_new > fx && f_new >= fx + kArmijo * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (!hess_is_reset && evaluations < kMaxEvaluations) {
                // a degenerate quasi-Newton approximation can shrink the step
                // below resolution; restart from the preconditioned gradient
                inv_hess = preconditioner;
                hess_is_reset = true;
                continue;
            }
            if (grad.lpNorm<Eigen::Infinity>() < grad_tol(fx) || polish()) {
                converged = true; // no rankable step left, gradient small
                break;
            }
            throw OptimizerFailure("maximize_laml: line search failed after " +
                                   std::to_string(evaluations) + " evaluations; trace:" +
                                   trace_to_string(trace));
        }

        Eigen::VectorXd grad_new = fd_gradient(objective, x_new);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = grad_new - grad; // ascent: curvature is y's < 0
        const double sy = s.dot(y);
        if (std::abs(sy) > 1e-12 * s.norm() * y.norm() && sy < 0.0) {
            // BFGS update of the inverse Hessian of -laml (rho from -y).
            const double rho = -1.0 / sy;
            const Eigen::MatrixXd outer_sy = s * (-y).transpose();
            const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(dim, dim) - rho * outer_sy;
            inv_hess = left * inv_hess * left.transpose() + rho * (s * s.transpose());
            hess_is_reset = false;
        }

        const double change = std::abs(f_new - fx);
        x = x_new;
        fx = f_new;
        grad = grad_new;
        record(x, fx);

        if (change < kRelChangeTol * std::max(1.0, std::abs(fx))) {
            // objective converged; settle the gradient condition, by Newton
            // polish if the line search can no longer resolve steps
            converged = grad.lpNorm<Eigen::Infinity>() < grad_tol(fx) || polish();
        }
        if (!converged && evaluations >= kMaxEvaluations) {
            throw OptimizerFailure("maximize_laml: evaluation budget exhausted; trace:" +
                                   trace_to_string(trace));
        }
    }

    fit.theta_hat = theta0.with_values(x);
    fit.laml_at_opt = fx;
    fit.converged = converged;
    fit.evaluations = evaluations;
    fit.inner = inner_newton(model, fit.theta_hat);
    fit.cov_theta = cov_theta(model, fit.theta_hat, fixed_mask);

    for (int i = 0; i < fit.theta_hat.dim(); ++i) {
        if (fit.theta_hat.transforms[static_cast<std::size_t>(i)] == Transform::exp) {
            const double natural = fit.theta_hat.natural(i);
            if (natural < kBoundaryLow || natural > kBoundaryHigh) {
                fit.boundary_suspect = true;
            }
        }
    }
    return fit;
}

Eigen::MatrixXd cov_theta(const Model& model, const ThetaVector& theta_hat,
                          const std::vector<bool>& fixed_mask) {
    theta_hat.validate();
    const int dim = theta_hat.dim();
    if (!fixed_mask.empty() && fixed_mask.size() != static_cast<std::size_t>(dim)) {
        throw ContractViolation("cov_theta: fixed_mask length must match theta dimension");
    }

    std::vector<int> free_index;
    for (int i = 0; i < dim; ++i) {
        if (fixed_mask.empty() || !fixed_mask[static_cast<std::size_t>(i)]) {
            free_index.push_back(i);
        }
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    if (free_index.empty()) {
        return cov;
    }

    const auto neg_laml_free = [&](const Eigen::VectorXd& free_values) {
        Eigen::VectorXd full = theta_hat.values;
        for (std::size_t k = 0; k < free_index.size(); ++k) {
            full(free_index[k]) = free_values(static_cast<Eigen::Index>(k));
        }
        return -laml(model, theta_hat.with_values(full));
    };

    Eigen::VectorXd free_values(static_cast<Eigen::Index>(free_index.size()));
    for (std::size_t k = 0; k < free_index.size(); ++k) {
        free_values(static_cast<Eigen::Index>(k)) = theta_hat.values(free_index[k]);
    }
    const Eigen::MatrixXd hess = fd_hessian(neg_laml_free, free_values, kCovStep);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) <= tol) {
            std::ostringstream os;
            os << "cov_theta: reduced Hessian singular; null direction approximately [";
            for (std::size_t k = 0; k < free_index.size(); ++k) {
                os << (k ? ", " : "")
                   << theta_hat.labels[static_cast<std::size_t>(free_index[k])] << "="
                   << es.eigenvectors()(static_cast<Eigen::Index>(k), i);
            }
            os << "]";
            throw RankDeficiencyError(os.str());
        }
    }

    Eigen::MatrixXd reduced_cov =
        es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    reduced_cov = psd_clamp(reduced_cov);

    for (std::size_t a = 0; a < free_index.size(); ++a) {
        for (std::size_t b = 0; b < free_index.size(); ++b) {
            cov(free_index[a], free_index[b]) =
                reduced_cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    return cov;
}

} // namespace condinf
