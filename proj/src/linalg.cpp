#include "condinf/linalg.hpp"

#include <cmath>

namespace condinf {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

double min_sym_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double symmetry_defect(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) {
        return 0.0;
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

Eigen::MatrixXd psd_clamp(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) {
        return m;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

double log_det_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    double out = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        out += 2.0 * std::log(l(i, i));
    }
    return out;
}

} // namespace condinf
