#include "condinf/models/random_walk.hpp"

#include <cmath>

#include "condinf/errors.hpp"
#include "condinf/stats.hpp"

namespace condinf {

void RandomWalkData::validate() const {
    if (T < 2 || n < 1) {
        throw ContractViolation("RandomWalkData: requires T >= 2 and n >= 1");
    }
    if (y.rows() != T || y.cols() != n || missing.rows() != T || missing.cols() != n) {
        throw ContractViolation("RandomWalkData: y and missing must be T x n");
    }
    bool any = false;
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) {
            if (!missing(t, i)) {
                any = true;
                if (!std::isfinite(y(t, i))) {
                    throw ContractViolation("RandomWalkData: observed y must be finite");
                }
            }
        }
    }
    if (!any) {
        throw ContractViolation("RandomWalkData: all cells are missing");
    }
}

int RandomWalkData::observed_count(int t) const {
    int m = 0;
    for (int i = 0; i < n; ++i) {
        if (!missing(t, i)) {
            ++m;
        }
    }
    return m;
}

PsiVector simulate_rw_truth(int T, double sigma_psi, CounterRng& rng) {
    if (T < 2) {
        throw ContractViolation("simulate_rw_truth: T >= 2 required");
    }
    if (!(sigma_psi > 0.0)) {
        throw NumericDomainError("simulate_rw_truth: sigma_psi must be positive");
    }
    Eigen::VectorXd psi(T);
    psi(0) = sigma_psi * rng.normal();
    for (int t = 1; t < T; ++t) {
        psi(t) = psi(t - 1) + sigma_psi * rng.normal();
    }
    return PsiVector(std::move(psi));
}

RandomWalkData simulate_rw_data(const PsiVector& psi, int n, double sigma_eps,
                                const std::vector<bool>& missing_mask, CounterRng& rng) {
    const int T = psi.dim();
    if (T < 2 || n < 1) {
        throw ContractViolation("simulate_rw_data: requires T >= 2 and n >= 1");
    }
    if (!(sigma_eps > 0.0)) {
        throw NumericDomainError("simulate_rw_data: sigma_eps must be positive");
    }
    if (!missing_mask.empty() && missing_mask.size() != static_cast<std::size_t>(T)) {
        throw ContractViolation("simulate_rw_data: mask length must equal T");
    }

    RandomWalkData data;
    data.T = T;
    data.n = n;
    data.y.resize(T, n);
    data.missing.setConstant(T, n, false);
    for (int t = 0; t < T; ++t) {
        const bool masked = !missing_mask.empty() && missing_mask[static_cast<std::size_t>(t)];
        for (int i = 0; i < n; ++i) {
            data.y(t, i) = psi.values(t) + sigma_eps * rng.normal();
            data.missing(t, i) = masked;
        }
    }
    data.validate(); // rejects a fully masked design
    return data;
}

RandomWalkModel::RandomWalkModel(RandomWalkData data) : data_(std::move(data)) {
    data_.validate();
    const int T = data_.T;
    count_.resize(T);
    sum_.resize(T);
    sumsq_.resize(T);
    has_data_.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        double m = 0.0, s = 0.0, q = 0.0;
        for (int i = 0; i < data_.n; ++i) {
            if (!data_.missing(t, i)) {
                m += 1.0;
                s += data_.y(t, i);
                q += data_.y(t, i) * data_.y(t, i);
            }
        }
        count_(t) = m;
        sum_(t) = s;
        sumsq_(t) = q;
        has_data_[static_cast<std::size_t>(t)] = m > 0.0;
    }
    structure_ = structure_matrix(T);
}

Eigen::MatrixXd RandomWalkModel::structure_matrix(int T) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(T, T);
    for (int t = 0; t < T; ++t) {
        c(t, t) = (t == T - 1) ? 1.0 : 2.0;
        if (t + 1 < T) {
            c(t, t + 1) = -1.0;
            c(t + 1, t) = -1.0;
        }
    }
    return c;
}

JointEval RandomWalkModel::eval(const PsiVector& psi, const ThetaVector& theta) const {
    const double sigma_psi = theta.natural(0);
    const double sigma_eps = theta.natural(1);
    if (!(sigma_psi > 0.0) || !std::isfinite(sigma_psi)) {
        throw NumericDomainError("RandomWalkModel: sigma_psi out of domain");
    }
    if (!(sigma_eps > 0.0) || !std::isfinite(sigma_eps)) {
        throw NumericDomainError("RandomWalkModel: sigma_eps out of domain");
    }
    const double vp = sigma_psi * sigma_psi;
    const double ve = sigma_eps * sigma_eps;
    const int T = data_.T;
    const auto& p = psi.values;

    JointEval ev;

    // Random-walk density: increments psi_1, psi_2 - psi_1, ...
    double quad = p(0) * p(0);
    for (int t = 1; t < T; ++t) {
        const double d = p(t) - p(t - 1);
        quad += d * d;
    }
    ev.l_r = -0.5 * T * (kLogTwoPi + std::log(vp)) - 0.5 * quad / vp;
    ev.hess_r = -structure_ / vp;

    Eigen::VectorXd grad_r = -(structure_ * p) / vp;

    // Observation part; hess_c is diagonal with -m_t / sigma_eps^2.
    double l_c = 0.0;
    Eigen::VectorXd grad_c(T);
    Eigen::VectorXd hess_c_diag(T);
    for (int t = 0; t < T; ++t) {
        const double m = count_(t);
        l_c += -0.5 * m * (kLogTwoPi + std::log(ve)) -
               0.5 * (sumsq_(t) - 2.0 * sum_(t) * p(t) + m * p(t) * p(t)) / ve;
        grad_c(t) = (sum_(t) - m * p(t)) / ve;
        hess_c_diag(t) = -m / ve;
    }
    ev.l_c = l_c;
    ev.grad_psi = grad_c + grad_r;
    ev.hess_j = ev.hess_r;
    ev.hess_j.diagonal() += hess_c_diag;

    ev.cross_theta.resize(T, 2);
    ev.cross_theta.col(0) = -2.0 * grad_r; // d grad_r / d log sigma_psi
    ev.cross_theta.col(1) = -2.0 * grad_c; // d grad_c / d log sigma_eps
    return ev;
}

PriorMean RandomWalkModel::prior(const ThetaVector&) const {
    PriorMean pm;
    pm.mean = Eigen::VectorXd::Zero(data_.T);
    pm.jacobian_theta = Eigen::MatrixXd::Zero(data_.T, 2);
    return pm;
}

ThetaVector RandomWalkModel::make_theta(const Eigen::VectorXd& unconstrained) const {
    if (unconstrained.size() != 2) {
        throw ContractViolation("RandomWalkModel: theta has two components");
    }
    ThetaVector t;
    t.values = unconstrained;
    t.labels = {"log_sigma_psi", "log_sigma_eps"};
    t.transforms = {Transform::exp, Transform::exp};
    return t;
}

ThetaVector RandomWalkModel::theta_from_sigmas(double sigma_psi, double sigma_eps) {
    if (!(sigma_psi > 0.0) || !(sigma_eps > 0.0)) {
        throw ContractViolation("theta_from_sigmas: sigmas must be positive");
    }
    ThetaVector t;
    t.values = Eigen::Vector2d(std::log(sigma_psi), std::log(sigma_eps));
    t.labels = {"log_sigma_psi", "log_sigma_eps"};
    t.transforms = {Transform::exp, Transform::exp};
    return t;
}

ThetaVector RandomWalkModel::initial_theta() const {
    // Moment heuristics: within-step variance estimates sigma_eps^2, the mean
    // squared difference of adjacent step means estimates
    // sigma_psi^2 + 2 sigma_eps^2 / n.
    double ss_within = 0.0;
    double df_within = 0.0;
    double total_ss = 0.0;
    double total_n = 0.0;
    double total_sum = 0.0;
    for (int t = 0; t < data_.T; ++t) {
        const double m = count_(t);
        if (m > 0.0) {
            const double mean = sum_(t) / m;
            ss_within += sumsq_(t) - m * mean * mean;
            df_within += m - 1.0;
            total_ss += sumsq_(t);
            total_sum += sum_(t);
            total_n += m;
        }
    }
    const double var_all =
        std::max(1e-4, total_ss / total_n - (total_sum / total_n) * (total_sum / total_n));
    double ve = df_within > 0.0 ? ss_within / df_within : 0.5 * var_all;
    ve = std::max(ve, 1e-4 * var_all);

    double diff_sq = 0.0;
    int diff_count = 0;
    int prev = -1;
    for (int t = 0; t < data_.T; ++t) {
        if (count_(t) > 0.0) {
            if (prev >= 0 && t == prev + 1) {
                const double d = sum_(t) / count_(t) - sum_(prev) / count_(prev);
                diff_sq += d * d;
                ++diff_count;
            }
            prev = t;
        }
    }
    double vp = var_all;
    if (diff_count > 0) {
        const double mean_n = total_n / std::max(1.0, static_cast<double>(diff_count + 1));
        vp = diff_sq / diff_count - 2.0 * ve / std::max(1.0, mean_n);
    }
    vp = std::max(vp, 1e-2 * var_all);
    return theta_from_sigmas(std::sqrt(vp), std::sqrt(ve));
}

ModelHandle build_rw_model(RandomWalkData data) {
    return std::make_shared<RandomWalkModel>(std::move(data));
}

} // namespace condinf
