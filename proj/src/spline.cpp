#include "condinf/models/spline.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "condinf/errors.hpp"
#include "condinf/linalg.hpp"
#include "condinf/stats.hpp"

namespace condinf {

namespace {

constexpr int kOrder = 4; // cubic

// Nonzero basis values (and derivatives) on the span containing x, following
// the standard triangular scheme (The NURBS Book, A2.3).
void basis_funs(const Eigen::VectorXd& knots, int span, double x, int deriv,
                double out[kOrder]) {
    double ndu[kOrder][kOrder];
    double left[kOrder];
    double right[kOrder];
    ndu[0][0] = 1.0;
    for (int j = 1; j < kOrder; ++j) {
        left[j] = x - knots(span + 1 - j);
        right[j] = knots(span + j) - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    if (deriv == 0) {
        for (int j = 0; j < kOrder; ++j) {
            out[j] = ndu[j][kOrder - 1];
        }
        return;
    }

    double ders[3][kOrder];
    for (int j = 0; j < kOrder; ++j) {
        ders[0][j] = ndu[j][kOrder - 1];
    }
    for (int r = 0; r < kOrder; ++r) {
        int s1 = 0;
        int s2 = 1;
        double a[2][kOrder];
        a[0][0] = 1.0;
        for (int k = 1; k <= deriv; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = kOrder - 1 - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = r - 1 <= pk ? k - 1 : kOrder - 1 - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double factor = kOrder - 1;
    for (int k = 1; k <= deriv; ++k) {
        for (int j = 0; j < kOrder; ++j) {
            ders[k][j] *= factor;
        }
        factor *= kOrder - 1 - k;
    }
    for (int j = 0; j < kOrder; ++j) {
        out[j] = ders[deriv][j];
    }
}

int find_span(const Eigen::VectorXd& knots, int K, double x) {
    // spans run between knot indices kOrder-1 and K.
    const double lo = knots(kOrder - 1);
    const double hi = knots(K);
    if (x <= lo) {
        return kOrder - 1;
    }
    if (x >= hi) {
        int span = K - 1;
        while (span > kOrder - 1 && knots(span) == knots(span + 1)) {
            --span;
        }
        return span;
    }
    const double* begin = knots.data() + kOrder - 1;
    const double* end = knots.data() + K + 1;
    const auto it = std::upper_bound(begin, end, x);
    return static_cast<int>(it - knots.data()) - 1;
}

} // namespace

Eigen::VectorXd bspline_row(const Eigen::VectorXd& knots, int K, double x, int deriv) {
    if (deriv < 0 || deriv > 2) {
        throw ContractViolation("bspline_row: deriv must be 0, 1 or 2");
    }
    if (knots.size() != K + kOrder) {
        throw ContractViolation("bspline_row: knot vector must have K + 4 entries");
    }
    Eigen::VectorXd row = Eigen::VectorXd::Zero(K);
    const int span = find_span(knots, K, x);
    double vals[kOrder];
    basis_funs(knots, span, x, deriv, vals);
    for (int j = 0; j < kOrder; ++j) {
        const int idx = span - kOrder + 1 + j;
        if (idx >= 0 && idx < K) {
            row(idx) = vals[j];
        }
    }
    return row;
}

CubicSplineBasis cubic_bspline_basis(const Eigen::VectorXd& x, int K) {
    if (K < 4) {
        throw ContractViolation("cubic_bspline_basis: K >= 4 required");
    }
    std::vector<double> unique_x(x.data(), x.data() + x.size());
    std::sort(unique_x.begin(), unique_x.end());
    unique_x.erase(std::unique(unique_x.begin(), unique_x.end()), unique_x.end());
    if (static_cast<int>(unique_x.size()) < K) {
        throw NumericDomainError("cubic_bspline_basis: need at least K distinct x values");
    }

    CubicSplineBasis basis;
    const int n_interior = K - kOrder;
    basis.knots.resize(K + kOrder);
    const double lo = unique_x.front();
    const double hi = unique_x.back();
    for (int i = 0; i < kOrder; ++i) {
        basis.knots(i) = lo;
        basis.knots(K + i) = hi;
    }
    for (int i = 1; i <= n_interior; ++i) {
        const double p = static_cast<double>(i) / static_cast<double>(n_interior + 1);
        basis.knots(kOrder - 1 + i) = quantile_type7(unique_x, p);
    }

    const auto n = static_cast<int>(x.size());
    basis.raw_design.resize(n, K);
    for (int i = 0; i < n; ++i) {
        basis.raw_design.row(i) = bspline_row(basis.knots, K, x(i), 0).transpose();
    }

    // Exact second-derivative Gram matrix: the integrand is piecewise
    // quadratic, so two Gauss points per knot span integrate it exactly.
    basis.raw_penalty = Eigen::MatrixXd::Zero(K, K);
    const double gauss = 1.0 / std::sqrt(3.0);
    for (int k = kOrder - 1; k < K; ++k) {
        const double a = basis.knots(k);
        const double b = basis.knots(k + 1);
        if (b - a <= 0.0) {
            continue;
        }
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        for (double g : {-gauss, gauss}) {
            const Eigen::VectorXd d2 = bspline_row(basis.knots, K, mid + half * g, 2);
            basis.raw_penalty += half * (d2 * d2.transpose());
        }
    }
    basis.raw_penalty = symmetrize(basis.raw_penalty);

    // Sum-to-zero constraint: Z spans {b : c'b = 0} with c = raw_design' 1,
    // taken from the Householder reflector that maps c to a coordinate axis.
    Eigen::VectorXd c = basis.raw_design.colwise().sum().transpose();
    Eigen::VectorXd v = c;
    const double norm = c.norm();
    v(0) += (c(0) >= 0.0 ? norm : -norm);
    const double vtv = v.squaredNorm();
    Eigen::MatrixXd reflector = Eigen::MatrixXd::Identity(K, K) - (2.0 / vtv) * (v * v.transpose());
    basis.constraint = reflector.rightCols(K - 1);

    basis.design = basis.raw_design * basis.constraint;
    basis.penalty = symmetrize(basis.constraint.transpose() * basis.raw_penalty * basis.constraint);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis.penalty);
    const Eigen::VectorXd sv = svd.singularValues();
    const double tol = 1e-10 * sv(0);
    basis.penalty_rank = static_cast<int>((sv.array() > tol).count());
    return basis;
}

SplineData SplineData::from_xy(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int K) {
    if (x.size() != y.size() || x.size() == 0) {
        throw ContractViolation("SplineData: x and y must be non-empty and equally long");
    }
    SplineData data;
    data.x = x;
    data.y = y;
    data.K = K;
    data.basis = cubic_bspline_basis(x, K);
    data.design = data.basis.design;
    data.penalty = data.basis.penalty;
    data.penalty_rank = data.basis.penalty_rank;
    data.validate();
    return data;
}

SplineData SplineData::external(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                Eigen::MatrixXd design, Eigen::MatrixXd penalty) {
    SplineData data;
    data.x = x;
    data.y = y;
    data.K = static_cast<int>(design.cols());
    data.design = std::move(design);
    data.penalty = symmetrize(penalty);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.penalty);
    const Eigen::VectorXd sv = svd.singularValues();
    data.penalty_rank = sv.size() == 0
                            ? 0
                            : static_cast<int>((sv.array() > 1e-10 * sv(0)).count());
    data.validate();
    return data;
}

void SplineData::validate() const {
    if (y.size() != design.rows()) {
        throw ContractViolation("SplineData: y length must match design rows");
    }
    if (penalty.rows() != design.cols() || penalty.cols() != design.cols()) {
        throw ContractViolation("SplineData: penalty must be square matching design columns");
    }
    if (!y.allFinite() || !design.allFinite() || !penalty.allFinite()) {
        throw ContractViolation("SplineData: non-finite entries");
    }
    if (symmetry_defect(penalty) > 1e-10) {
        throw ContractViolation("SplineData: penalty must be symmetric");
    }
    const double min_eig = min_sym_eigenvalue(penalty);
    const double max_eig = penalty.rows() > 0
                               ? Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(penalty,
                                     Eigen::EigenvaluesOnly).eigenvalues().maxCoeff()
                               : 0.0;
    if (min_eig < -1e-10 * std::max(1.0, max_eig)) {
        throw ContractViolation("SplineData: penalty has a significantly negative eigenvalue");
    }
    // Full column rank of the (centered) design.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-10 * sv(0)) {
        throw ContractViolation("SplineData: design is column rank deficient");
    }
}

SplineModel::SplineModel(SplineData data) : data_(std::move(data)) {
    data_.validate();
    has_data_.assign(static_cast<std::size_t>(data_.y.size()), true);
    xtx_ = data_.design.transpose() * data_.design;
    xty_ = data_.design.transpose() * data_.y;
    xt1_ = data_.design.colwise().sum().transpose();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data_.penalty);
    Eigen::VectorXd ev = es.eigenvalues(); // ascending
    log_pdet_ = 0.0;
    for (int i = 0; i < data_.penalty_rank; ++i) {
        const double e = ev(ev.size() - 1 - i);
        if (!(e > 0.0)) {
            throw ContractViolation("SplineModel: penalty rank exceeds positive spectrum");
        }
        log_pdet_ += std::log(e);
    }
}

JointEval SplineModel::eval(const PsiVector& psi, const ThetaVector& theta) const {
    const double intercept = theta.natural(0);
    const double sigma = theta.natural(1);
    const double lambda = theta.natural(2);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw NumericDomainError("SplineModel: sigma out of domain");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw NumericDomainError("SplineModel: lambda out of domain");
    }
    const double v = sigma * sigma;
    const auto n = static_cast<double>(data_.y.size());
    const int p = dim_psi();
    const double r = data_.penalty_rank;

    JointEval ev;
    const Eigen::VectorXd resid = data_.y - Eigen::VectorXd::Constant(data_.y.size(), intercept) -
                                  data_.design * psi.values;
    ev.l_c = -0.5 * n * (kLogTwoPi + std::log(v)) - 0.5 * resid.squaredNorm() / v;

    const Eigen::VectorXd s_psi = data_.penalty * psi.values;
    ev.l_r = -0.5 * lambda * psi.values.dot(s_psi) + 0.5 * r * std::log(lambda) +
             0.5 * log_pdet_ - 0.5 * r * kLogTwoPi;

    const Eigen::VectorXd grad_c = data_.design.transpose() * resid / v;
    const Eigen::VectorXd grad_r = -lambda * s_psi;
    ev.grad_psi = grad_c + grad_r;
    ev.hess_r = -lambda * data_.penalty;
    ev.hess_j = -xtx_ / v + ev.hess_r;

    ev.cross_theta.resize(p, 3);
    ev.cross_theta.col(0) = -xt1_ / v;
    ev.cross_theta.col(1) = -2.0 * grad_c;
    ev.cross_theta.col(2) = grad_r;
    return ev;
}

PriorMean SplineModel::prior(const ThetaVector&) const {
    PriorMean pm;
    pm.mean = Eigen::VectorXd::Zero(dim_psi());
    pm.jacobian_theta = Eigen::MatrixXd::Zero(dim_psi(), 3);
    return pm;
}

ThetaVector SplineModel::make_theta(const Eigen::VectorXd& unconstrained) const {
    if (unconstrained.size() != 3) {
        throw ContractViolation("SplineModel: theta has three components");
    }
    ThetaVector t;
    t.values = unconstrained;
    t.labels = {"intercept", "log_sigma", "log_lambda"};
    t.transforms = {Transform::identity, Transform::exp, Transform::exp};
    return t;
}

Eigen::VectorXd SplineModel::curve(const ThetaVector& theta, const Eigen::VectorXd& psi) const {
    return Eigen::VectorXd::Constant(data_.y.size(), theta.natural(0)) + data_.design * psi;
}

ThetaVector SplineModel::theta_from_natural(double intercept, double sigma, double lambda) {
    if (!(sigma > 0.0) || !(lambda > 0.0)) {
        throw ContractViolation("theta_from_natural: sigma and lambda must be positive");
    }
    ThetaVector t;
    t.values = Eigen::Vector3d(intercept, std::log(sigma), std::log(lambda));
    t.labels = {"intercept", "log_sigma", "log_lambda"};
    t.transforms = {Transform::identity, Transform::exp, Transform::exp};
    return t;
}

ThetaVector SplineModel::initial_theta() const {
    const double mean = data_.y.mean();
    const double var =
        (data_.y.array() - mean).square().sum() / std::max(1.0, double(data_.y.size() - 1));
    const double sigma = std::sqrt(std::max(var, 1e-8)) * 0.5;
    return theta_from_natural(mean, std::max(sigma, 1e-4), 1.0);
}

ModelHandle build_spline_model(SplineData data) {
    return std::make_shared<SplineModel>(std::move(data));
}

} // namespace condinf
