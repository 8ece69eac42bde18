#pragma once

#include <Eigen/Dense>
#include <functional>

namespace condinf {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

// Central-difference gradient with per-component step
// h_i = cbrt(machine epsilon) * max(1, |x_i|).
Eigen::VectorXd fd_gradient(const ScalarField& f, const Eigen::VectorXd& x);

// Central-difference Hessian, symmetrized as (H + H^T) / 2. The per-component
// step is h_i = step * max(1, |x_i|); step <= 0 selects the default
// (machine epsilon)^(1/4).
Eigen::MatrixXd fd_hessian(const ScalarField& f, const Eigen::VectorXd& x, double step = 0.0);

} // namespace condinf
