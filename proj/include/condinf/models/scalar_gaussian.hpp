#pragma once

#include <Eigen/Dense>
#include <vector>

#include "condinf/model.hpp"

namespace condinf {

// Replicated scalar Gaussian model: independent units r = 1..R with
// psi_r ~ N(0, sigma_psi^2) and observations y_{r,i} ~ N(psi_r, sigma_eps^2),
// i = 1..m_r. theta = (log sigma_psi, log sigma_eps). The single-unit case is
// the worked example used throughout the tests.
class ScalarGaussianModel : public Model {
public:
    // y[r] holds the observations of unit r (may be empty).
    explicit ScalarGaussianModel(std::vector<Eigen::VectorXd> y);

    int dim_psi() const override { return static_cast<int>(y_.size()); }
    int dim_theta() const override { return 2; }
    JointEval eval(const PsiVector& psi, const ThetaVector& theta) const override;
    PriorMean prior(const ThetaVector& theta) const override;
    int obs_units() const override { return static_cast<int>(y_.size()); }
    const std::vector<bool>& unit_has_data() const override { return has_data_; }
    ThetaVector make_theta(const Eigen::VectorXd& unconstrained) const override;

    static ThetaVector theta_from_sigmas(double sigma_psi, double sigma_eps);

private:
    std::vector<Eigen::VectorXd> y_;
    std::vector<bool> has_data_;
};

ModelHandle build_scalar_gaussian_model(std::vector<Eigen::VectorXd> y);

} // namespace condinf
