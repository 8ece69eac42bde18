#include "condinf/models/scalar_gaussian.hpp"

#include <cmath>

#include "condinf/errors.hpp"
#include "condinf/stats.hpp"

namespace condinf {

ScalarGaussianModel::ScalarGaussianModel(std::vector<Eigen::VectorXd> y) : y_(std::move(y)) {
    if (y_.empty()) {
        throw ContractViolation("ScalarGaussianModel: at least one unit required");
    }
    has_data_.reserve(y_.size());
    for (const auto& yi : y_) {
        if (!yi.allFinite()) {
            throw ContractViolation("ScalarGaussianModel: observations must be finite");
        }
        has_data_.push_back(yi.size() > 0);
    }
}

JointEval ScalarGaussianModel::eval(const PsiVector& psi, const ThetaVector& theta) const {
    const double sigma_psi = theta.natural(0);
    const double sigma_eps = theta.natural(1);
    if (!(sigma_psi > 0.0) || !std::isfinite(sigma_psi)) {
        throw NumericDomainError("ScalarGaussianModel: sigma_psi out of domain");
    }
    if (!(sigma_eps > 0.0) || !std::isfinite(sigma_eps)) {
        throw NumericDomainError("ScalarGaussianModel: sigma_eps out of domain");
    }
    const double vp = sigma_psi * sigma_psi;
    const double ve = sigma_eps * sigma_eps;
    const int r = dim_psi();

    JointEval ev;
    ev.grad_psi = Eigen::VectorXd::Zero(r);
    ev.hess_j = Eigen::MatrixXd::Zero(r, r);
    ev.hess_r = Eigen::MatrixXd::Zero(r, r);
    ev.cross_theta = Eigen::MatrixXd::Zero(r, 2);

    for (int u = 0; u < r; ++u) {
        const double p = psi.values(u);
        ev.l_r += -0.5 * kLogTwoPi - std::log(sigma_psi) - 0.5 * p * p / vp;
        ev.hess_r(u, u) = -1.0 / vp;
        double grad_c = 0.0;
        for (Eigen::Index i = 0; i < y_[static_cast<std::size_t>(u)].size(); ++i) {
            const double yv = y_[static_cast<std::size_t>(u)](i);
            ev.l_c += -0.5 * kLogTwoPi - std::log(sigma_eps) - 0.5 * (yv - p) * (yv - p) / ve;
            grad_c += (yv - p) / ve;
        }
        const auto m = static_cast<double>(y_[static_cast<std::size_t>(u)].size());
        ev.grad_psi(u) = grad_c - p / vp;
        ev.hess_j(u, u) = -m / ve - 1.0 / vp;
        // d grad / d log sigma_psi and d grad / d log sigma_eps
        ev.cross_theta(u, 0) = 2.0 * p / vp;
        ev.cross_theta(u, 1) = -2.0 * grad_c;
    }
    return ev;
}

PriorMean ScalarGaussianModel::prior(const ThetaVector&) const {
    PriorMean pm;
    pm.mean = Eigen::VectorXd::Zero(dim_psi());
    pm.jacobian_theta = Eigen::MatrixXd::Zero(dim_psi(), 2);
    return pm;
}

ThetaVector ScalarGaussianModel::make_theta(const Eigen::VectorXd& unconstrained) const {
    if (unconstrained.size() != 2) {
        throw ContractViolation("ScalarGaussianModel: theta has two components");
    }
    ThetaVector t;
    t.values = unconstrained;
    t.labels = {"log_sigma_psi", "log_sigma_eps"};
    t.transforms = {Transform::exp, Transform::exp};
    return t;
}

ThetaVector ScalarGaussianModel::theta_from_sigmas(double sigma_psi, double sigma_eps) {
    if (!(sigma_psi > 0.0) || !(sigma_eps > 0.0)) {
        throw ContractViolation("theta_from_sigmas: sigmas must be positive");
    }
    ThetaVector t;
    t.values = Eigen::Vector2d(std::log(sigma_psi), std::log(sigma_eps));
    t.labels = {"log_sigma_psi", "log_sigma_eps"};
    t.transforms = {Transform::exp, Transform::exp};
    return t;
}

ModelHandle build_scalar_gaussian_model(std::vector<Eigen::VectorXd> y) {
    return std::make_shared<ScalarGaussianModel>(std::move(y));
}

} // namespace condinf
