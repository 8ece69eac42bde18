#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "condinf/model.hpp"
#include "condinf/rng.hpp"

namespace condinf {

// Observations of a Gaussian random walk: T time steps, up to n observations
// per step, with per-cell missing flags.
struct RandomWalkData {
    int T = 0;
    int n = 0;
    Eigen::MatrixXd y;                            // T x n
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing; // T x n
    std::optional<double> sigma_psi0;             // simulation truth, if known
    std::optional<double> sigma_eps0;

    void validate() const;
    int observed_count(int t) const;
};

// psi_1 ~ N(0, sigma_psi^2), psi_t = psi_{t-1} + N(0, sigma_psi^2).
PsiVector simulate_rw_truth(int T, double sigma_psi, CounterRng& rng);

// Y_{t,i} = psi_t + N(0, sigma_eps^2); time steps under the mask are flagged
// missing. An empty mask means fully observed.
RandomWalkData simulate_rw_data(const PsiVector& psi, int n, double sigma_eps,
                                const std::vector<bool>& missing_mask, CounterRng& rng);

// Gaussian random-walk state-space model:
//   l_c = sum over observed cells of log N(y_{t,i}; psi_t, sigma_eps^2)
//   l_r = log density of the random walk
// theta = (log sigma_psi, log sigma_eps); E{Psi} = 0.
class RandomWalkModel : public Model {
public:
    explicit RandomWalkModel(RandomWalkData data);

    int dim_psi() const override { return data_.T; }
    int dim_theta() const override { return 2; }
    JointEval eval(const PsiVector& psi, const ThetaVector& theta) const override;
    PriorMean prior(const ThetaVector& theta) const override;
    int obs_units() const override { return data_.T; }
    const std::vector<bool>& unit_has_data() const override { return has_data_; }
    ThetaVector make_theta(const Eigen::VectorXd& unconstrained) const override;

    const RandomWalkData& data() const { return data_; }

    // Random-walk structure matrix C with psi' C psi = psi_1^2 +
    // sum_t (psi_t - psi_{t-1})^2; the prior precision is C / sigma_psi^2.
    static Eigen::MatrixXd structure_matrix(int T);

    static ThetaVector theta_from_sigmas(double sigma_psi, double sigma_eps);

    // Data-driven starting point for the outer optimization.
    ThetaVector initial_theta() const;

private:
    RandomWalkData data_;
    std::vector<bool> has_data_;
    Eigen::VectorXd count_;  // observed cells per step
    Eigen::VectorXd sum_;    // sum of observed y per step
    Eigen::VectorXd sumsq_;  // sum of squared observed y per step
    Eigen::MatrixXd structure_;
};

ModelHandle build_rw_model(RandomWalkData data);

} // namespace condinf
