#pragma once

#include <Eigen/Dense>

namespace condinf {

// (M + M^T) / 2
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

// Smallest eigenvalue of a symmetric matrix.
double min_sym_eigenvalue(const Eigen::MatrixXd& m);

// Relative symmetry defect: max |M - M^T| / max(1, max |M|).
double symmetry_defect(const Eigen::MatrixXd& m);

// Symmetrize and clamp negative eigenvalues to zero.
Eigen::MatrixXd psd_clamp(const Eigen::MatrixXd& m);

// log det of a positive definite matrix via its Cholesky factor.
double log_det_llt(const Eigen::LLT<Eigen::MatrixXd>& llt);

} // namespace condinf
