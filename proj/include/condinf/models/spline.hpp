#pragma once

#include <Eigen/Dense>

#include "condinf/model.hpp"

namespace condinf {

// Cubic B-spline basis on quantile knots with the exact second-derivative
// penalty, plus the sum-to-zero identifiability constraint used by the
// spline model.
struct CubicSplineBasis {
    Eigen::VectorXd knots;      // clamped knot vector, length K + 4
    Eigen::MatrixXd raw_design; // N x K, rows sum to 1
    Eigen::MatrixXd raw_penalty;// K x K Gram matrix of second derivatives
    Eigen::MatrixXd constraint; // Z: K x (K-1), orthonormal, (raw_design' 1)' Z = 0
    Eigen::MatrixXd design;     // raw_design * Z; centered columns, full column rank
    Eigen::MatrixXd penalty;    // Z' raw_penalty Z
    int penalty_rank = 0;       // rank of `penalty`, computed by SVD
};

// Values (or first/second derivatives) of all K cubic B-splines at x.
Eigen::VectorXd bspline_row(const Eigen::VectorXd& knots, int K, double x, int deriv);

// Build the basis: K >= 4 and at least K distinct covariate values required.
CubicSplineBasis cubic_bspline_basis(const Eigen::VectorXd& x, int K);

// Data for the penalized-spline model. Either built from (x, y, K) via
// cubic_bspline_basis or assembled from externally supplied design/penalty
// matrices (penalty_rank then computed by SVD).
struct SplineData {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    int K = 0;                  // basis dimension requested
    Eigen::MatrixXd design;     // N x p
    Eigen::MatrixXd penalty;    // p x p, symmetric PSD
    int penalty_rank = 0;
    CubicSplineBasis basis;     // populated by from_xy only

    static SplineData from_xy(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int K);
    static SplineData external(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               Eigen::MatrixXd design, Eigen::MatrixXd penalty);
    void validate() const;
};

// Penalized Gaussian spline regression as a mixed model:
//   y_i ~ N(intercept + (design psi)_i, sigma^2)
//   l_r = -lambda/2 psi' S psi + (rank(S)/2) log lambda + const
// theta = (intercept, log sigma, log lambda); E{Psi} = 0.
class SplineModel : public Model {
public:
    explicit SplineModel(SplineData data);

    int dim_psi() const override { return static_cast<int>(data_.design.cols()); }
    int dim_theta() const override { return 3; }
    JointEval eval(const PsiVector& psi, const ThetaVector& theta) const override;
    PriorMean prior(const ThetaVector& theta) const override;
    int obs_units() const override { return static_cast<int>(data_.y.size()); }
    const std::vector<bool>& unit_has_data() const override { return has_data_; }
    ThetaVector make_theta(const Eigen::VectorXd& unconstrained) const override;

    const SplineData& data() const { return data_; }

    // Fitted curve at the data points for given (theta, psi).
    Eigen::VectorXd curve(const ThetaVector& theta, const Eigen::VectorXd& psi) const;

    static ThetaVector theta_from_natural(double intercept, double sigma, double lambda);
    ThetaVector initial_theta() const;

private:
    SplineData data_;
    std::vector<bool> has_data_;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd xty_;
    Eigen::VectorXd xt1_;
    double log_pdet_ = 0.0;
};

ModelHandle build_spline_model(SplineData data);

} // namespace condinf
