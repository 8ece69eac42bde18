#include "condinf/conditional.hpp"

#include <algorithm>
#include <cmath>

#include "condinf/errors.hpp"
#include "condinf/linalg.hpp"
#include "condinf/stats.hpp"

namespace condinf {

namespace {

// hess_j^{-1} hess_r = -(-hess_j)^{-1} hess_r
Eigen::MatrixXd hess_j_inv_hess_r(const InnerSolution& sol) {
    return -sol.solve_neg_hess(sol.at_mode.hess_r);
}

// -hess_j^{-1} + hess_j^{-1} hess_r hess_j^{-1}, the theta-known part of the
// conditional covariance of the posterior mode. With inv = (-hess_j)^{-1}
// both terms flip sign pairwise: inv + inv hess_r inv.
Eigen::MatrixXd mode_covariance_theta_known(const InnerSolution& sol) {
    const Eigen::Index p = sol.at_mode.hess_j.rows();
    const Eigen::MatrixXd inv = sol.solve_neg_hess(Eigen::MatrixXd::Identity(p, p));
    return symmetrize(inv + inv * sol.at_mode.hess_r * inv);
}

void check_b_invertible(const Eigen::VectorXd& singular_values) {
    if (singular_values.size() == 0) {
        return;
    }
    const double largest = singular_values(0);
    const double smallest = singular_values(singular_values.size() - 1);
    if (!(smallest > 1e-8 * largest)) {
        throw SingularityError(
            "bias correction: shrinkage matrix B is singular or near-singular "
            "(some REs lack data); use svd_estimate instead");
    }
}

// Gamma_g^{-1} U' and Gamma^c as described in the decomposition.
Eigen::MatrixXd gamma_g_inv(const ShrinkageDecomposition& dec) {
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(dec.singular_values.size());
    for (Eigen::Index i = 0; i < dec.singular_values.size(); ++i) {
        if (dec.singular_values(i) > dec.gamma_c) {
            inv(i) = 1.0 / dec.singular_values(i);
        }
    }
    return inv.asDiagonal();
}

Eigen::MatrixXd gamma_complement(const ShrinkageDecomposition& dec) {
    Eigen::VectorXd ind = Eigen::VectorXd::Zero(dec.singular_values.size());
    for (Eigen::Index i = 0; i < dec.singular_values.size(); ++i) {
        if (!(dec.singular_values(i) > dec.gamma_c)) {
            ind(i) = 1.0;
        }
    }
    return ind.asDiagonal();
}

} // namespace

Eigen::MatrixXd shrinkage_matrix(const InnerSolution& sol) {
    const Eigen::Index p = sol.at_mode.hess_j.rows();
    // B = I - hess_j^{-1} hess_r = I + (-hess_j)^{-1} hess_r
    return Eigen::MatrixXd::Identity(p, p) + sol.solve_neg_hess(sol.at_mode.hess_r);
}

std::pair<double, int> select_gamma_c(const InnerSolution& sol,
                                      const Eigen::VectorXd& singular_values_of_B) {
    const Eigen::MatrixXd hess_c = sol.at_mode.hess_c();
    int n_c = 0;
    if (hess_c.rows() > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(hess_c);
        const Eigen::VectorXd sv = svd.singularValues();
        const double tol = 1e-10 * std::max(sv(0), 1.0e-300);
        n_c = static_cast<int>((sv.array() > tol).count());
    }

    const Eigen::Index dim = singular_values_of_B.size();
    double gamma_c = 0.0;
    if (n_c >= dim) {
        gamma_c = 0.0;
    } else if (n_c == 0) {
        gamma_c = dim > 0 ? singular_values_of_B(0) + 1.0 : 1.0;
    } else {
        gamma_c = 0.5 * (singular_values_of_B(n_c - 1) + singular_values_of_B(n_c));
    }
    return {gamma_c, n_c};
}

ShrinkageDecomposition decompose_shrinkage(const InnerSolution& sol,
                                           std::optional<double> gamma_override) {
    ShrinkageDecomposition dec;
    dec.B = shrinkage_matrix(sol);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dec.B, Eigen::ComputeFullU | Eigen::ComputeFullV);
    dec.U = svd.matrixU();
    dec.V = svd.matrixV();
    dec.singular_values = svd.singularValues();
    if (gamma_override.has_value()) {
        if (!(*gamma_override >= 0.0)) {
            throw ContractViolation("decompose_shrinkage: gamma_c must be non-negative");
        }
        dec.gamma_c = *gamma_override;
        dec.n_c = static_cast<int>((dec.singular_values.array() > dec.gamma_c).count());
    } else {
        std::tie(dec.gamma_c, dec.n_c) = select_gamma_c(sol, dec.singular_values);
    }
    return dec;
}

Eigen::VectorXd bias_correct(const InnerSolution& sol, const PriorMean& prior) {
    const Eigen::MatrixXd b = shrinkage_matrix(sol);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    check_b_invertible(svd.singularValues());

    const Eigen::VectorXd target =
        sol.psi_hat.values - hess_j_inv_hess_r(sol) * prior.mean;
    return b.partialPivLu().solve(target);
}

Eigen::MatrixXd upsilon(const InnerSolution& sol, const PriorMean& prior,
                        const Eigen::MatrixXd& sens) {
    return sens - hess_j_inv_hess_r(sol) * prior.jacobian_theta;
}

Eigen::MatrixXd mse_bc(const InnerSolution& sol, const PriorMean& prior,
                       const Eigen::MatrixXd& sens, const Eigen::MatrixXd& cov_theta) {
    const Eigen::MatrixXd b = shrinkage_matrix(sol);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    check_b_invertible(svd.singularValues());

    const Eigen::MatrixXd ups = upsilon(sol, prior, sens);
    const Eigen::MatrixXd core =
        mode_covariance_theta_known(sol) + ups * cov_theta * ups.transpose();
    const auto lu = b.partialPivLu();
    const Eigen::MatrixXd b_inv_core = lu.solve(core);
    return symmetrize(lu.solve(b_inv_core.transpose()).transpose());
}

JointMse marginal_mse(const InnerSolution& sol, const Eigen::MatrixXd& sens,
                      const Eigen::MatrixXd& cov_theta) {
    const Eigen::Index p = sol.at_mode.hess_j.rows();
    JointMse out;
    const Eigen::MatrixXd inv = sol.solve_neg_hess(Eigen::MatrixXd::Identity(p, p));
    out.psi_block = symmetrize(inv + sens * cov_theta * sens.transpose());
    out.cross_block = sens * cov_theta;
    out.theta_block = cov_theta;
    return out;
}

Eigen::MatrixXd conditional_covariance_mode(const InnerSolution& sol,
                                            const Eigen::MatrixXd& sens,
                                            const Eigen::MatrixXd& cov_theta) {
    return symmetrize(mode_covariance_theta_known(sol) + sens * cov_theta * sens.transpose());
}

Eigen::VectorXd svd_estimate(const InnerSolution& sol, const PriorMean& prior,
                             const ShrinkageDecomposition& dec) {
    const Eigen::MatrixXd gi_ut = gamma_g_inv(dec) * dec.U.transpose();
    const Eigen::MatrixXd gc_vt = gamma_complement(dec) * dec.V.transpose();
    const Eigen::VectorXd corrected =
        sol.psi_hat.values - hess_j_inv_hess_r(sol) * prior.mean;
    return dec.V * (gi_ut * corrected + gc_vt * sol.psi_hat.values);
}

Eigen::MatrixXd mse_sd(const InnerSolution& sol, const PriorMean& prior,
                       const Eigen::MatrixXd& sens, const Eigen::MatrixXd& cov_theta,
                       const ShrinkageDecomposition& dec) {
    const Eigen::MatrixXd ups = upsilon(sol, prior, sens);
    const Eigen::MatrixXd base = mode_covariance_theta_known(sol);
    const Eigen::MatrixXd cov11 = base + ups * cov_theta * ups.transpose();
    const Eigen::MatrixXd cov12 = base + ups * cov_theta * sens.transpose();
    const Eigen::MatrixXd marginal_psi = marginal_mse(sol, sens, cov_theta).psi_block;

    const Eigen::MatrixXd gi_ut = gamma_g_inv(dec) * dec.U.transpose();
    const Eigen::MatrixXd gc_vt = gamma_complement(dec) * dec.V.transpose();

    const Eigen::MatrixXd inner = gi_ut * cov11 * gi_ut.transpose() +
                                  gi_ut * cov12 * gc_vt.transpose() +
                                  gc_vt * cov12.transpose() * gi_ut.transpose() +
                                  gc_vt * marginal_psi * gc_vt.transpose();
    return psd_clamp(symmetrize(dec.V * inner * dec.V.transpose()));
}

JointMse joint_mse_sd(const InnerSolution& sol, const PriorMean& prior,
                      const Eigen::MatrixXd& sens, const Eigen::MatrixXd& cov_theta,
                      const ShrinkageDecomposition& dec) {
    const Eigen::MatrixXd gi_ut = gamma_g_inv(dec) * dec.U.transpose();
    const Eigen::MatrixXd gc_vt = gamma_complement(dec) * dec.V.transpose();
    const Eigen::MatrixXd g =
        dec.V * ((gi_ut + gc_vt) * sens - gi_ut * hess_j_inv_hess_r(sol) * prior.jacobian_theta);

    JointMse out;
    out.psi_block = mse_sd(sol, prior, sens, cov_theta, dec);
    out.cross_block = g * cov_theta;
    out.theta_block = cov_theta;
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> wald_ci(const Eigen::VectorXd& est,
                                                    const Eigen::MatrixXd& mse, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ContractViolation("wald_ci: alpha must lie strictly in (0, 1)");
    }
    if (mse.rows() != est.size() || mse.cols() != est.size()) {
        throw ContractViolation("wald_ci: mse dimensions must match the estimate");
    }
    const double z = z_upper(alpha);
    Eigen::VectorXd lower(est.size());
    Eigen::VectorXd upper(est.size());
    const double floor = -1e-12 * std::max(1.0, mse.diagonal().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < est.size(); ++i) {
        double var = mse(i, i);
        if (var < floor) {
            throw Error("wald_ci: negative variance after clamping (internal consistency)");
        }
        var = std::max(var, 0.0);
        const double half = z * std::sqrt(var);
        lower(i) = est(i) - half;
        upper(i) = est(i) + half;
    }
    return {lower, upper};
}

ConditionalEstimate delta_method(const DeltaMap& g, const Eigen::VectorXd& est,
                                 const Eigen::MatrixXd& mse, double alpha) {
    const Eigen::VectorXd value = g.value(est);
    const Eigen::MatrixXd jac = g.jacobian(est);
    if (!jac.allFinite()) {
        throw NumericDomainError("delta_method: non-finite Jacobian");
    }
    if (jac.cols() != est.size() || jac.rows() != value.size()) {
        throw ContractViolation("delta_method: Jacobian dimensions do not match");
    }

    ConditionalEstimate out;
    out.kind = EstimatorKind::bias_corrected;
    out.psi_est = value;
    out.mse = psd_clamp(symmetrize(jac * mse * jac.transpose()));
    out.alpha = alpha;
    std::tie(out.ci_lower, out.ci_upper) = wald_ci(out.psi_est, out.mse, alpha);
    return out;
}

ConditionalEstimate make_conditional_estimate(EstimatorKind kind, const InnerSolution& sol,
                                              const PriorMean& prior, const Eigen::MatrixXd& sens,
                                              const Eigen::MatrixXd& cov_theta, double alpha,
                                              std::optional<double> gamma_override) {
    ConditionalEstimate out;
    out.kind = kind;
    out.alpha = alpha;
    out.theta_block = cov_theta;
    switch (kind) {
        case EstimatorKind::posterior_mode: {
            const JointMse joint = marginal_mse(sol, sens, cov_theta);
            out.psi_est = sol.psi_hat.values;
            out.mse = joint.psi_block;
            out.cross_block = joint.cross_block;
            break;
        }
        case EstimatorKind::bias_corrected: {
            out.psi_est = bias_correct(sol, prior);
            out.mse = psd_clamp(mse_bc(sol, prior, sens, cov_theta));
            const Eigen::MatrixXd b = shrinkage_matrix(sol);
            out.cross_block = b.partialPivLu().solve(upsilon(sol, prior, sens)) * cov_theta;
            break;
        }
        case EstimatorKind::svd_mixed: {
            const ShrinkageDecomposition dec = decompose_shrinkage(sol, gamma_override);
            const JointMse joint = joint_mse_sd(sol, prior, sens, cov_theta, dec);
            out.psi_est = svd_estimate(sol, prior, dec);
            out.mse = joint.psi_block;
            out.cross_block = joint.cross_block;
            break;
        }
    }
    std::tie(out.ci_lower, out.ci_upper) = wald_ci(out.psi_est, out.mse, alpha);
    return out;
}

Eigen::VectorXd predict_unobserved(const Eigen::MatrixXd& precision,
                                   const std::vector<int>& b_index,
                                   const Eigen::VectorXd& psi_a_hat) {
    const Eigen::Index dim = precision.rows();
    if (precision.cols() != dim) {
        throw ContractViolation("predict_unobserved: precision must be square");
    }
    std::vector<bool> in_b(static_cast<std::size_t>(dim), false);
    for (int b : b_index) {
        if (b < 0 || b >= dim) {
            throw ContractViolation("predict_unobserved: b_index out of range");
        }
        in_b[static_cast<std::size_t>(b)] = true;
    }
    std::vector<int> a_index;
    for (int i = 0; i < dim; ++i) {
        if (!in_b[static_cast<std::size_t>(i)]) {
            a_index.push_back(i);
        }
    }
    if (psi_a_hat.size() != static_cast<Eigen::Index>(a_index.size())) {
        throw ContractViolation("predict_unobserved: psi_a_hat length must match the A block");
    }

    const auto nb = static_cast<Eigen::Index>(b_index.size());
    const auto na = static_cast<Eigen::Index>(a_index.size());
    Eigen::MatrixXd lambda_b(nb, nb);
    Eigen::MatrixXd lambda_ba(nb, na);
    for (Eigen::Index i = 0; i < nb; ++i) {
        for (Eigen::Index j = 0; j < nb; ++j) {
            lambda_b(i, j) = precision(b_index[static_cast<std::size_t>(i)],
                                       b_index[static_cast<std::size_t>(j)]);
        }
        for (Eigen::Index j = 0; j < na; ++j) {
            lambda_ba(i, j) = precision(b_index[static_cast<std::size_t>(i)],
                                        a_index[static_cast<std::size_t>(j)]);
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(lambda_b);
    if (llt.info() != Eigen::Success) {
        throw RankDeficiencyError("predict_unobserved: Lambda_B is not positive definite");
    }
    return -llt.solve(lambda_ba * psi_a_hat);
}

} // namespace condinf
