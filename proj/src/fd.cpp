#include "condinf/fd.hpp"

#include <cmath>
#include <limits>

#include "condinf/errors.hpp"

namespace condinf {

namespace {

double checked_eval(const ScalarField& f, const Eigen::VectorXd& x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
        throw NumericDomainError("finite differences: objective non-finite at a probe point");
    }
    return v;
}

} // namespace

Eigen::VectorXd fd_gradient(const ScalarField& f, const Eigen::VectorXd& x) {
    const double base = std::cbrt(std::numeric_limits<double>::epsilon());
    const Eigen::Index n = x.size();
    Eigen::VectorXd g(n);
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = base * std::max(1.0, std::abs(x(i)));
        probe(i) = x(i) + h;
        const double fp = checked_eval(f, probe);
        probe(i) = x(i) - h;
        const double fm = checked_eval(f, probe);
        probe(i) = x(i);
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd fd_hessian(const ScalarField& f, const Eigen::VectorXd& x, double step) {
    const double base =
        step > 0.0 ? step : std::pow(std::numeric_limits<double>::epsilon(), 0.25);
    const Eigen::Index n = x.size();
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i) = base * std::max(1.0, std::abs(x(i)));
    }

    Eigen::MatrixXd hess(n, n);
    const double f0 = checked_eval(f, x);
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        probe(i) = x(i) + h(i);
        const double fp = checked_eval(f, probe);
        probe(i) = x(i) - h(i);
        const double fm = checked_eval(f, probe);
        probe(i) = x(i);
        hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));

        for (Eigen::Index j = i + 1; j < n; ++j) {
            probe(i) = x(i) + h(i);
            probe(j) = x(j) + h(j);
            const double fpp = checked_eval(f, probe);
            probe(j) = x(j) - h(j);
            const double fpm = checked_eval(f, probe);
            probe(i) = x(i) - h(i);
            const double fmm = checked_eval(f, probe);
            probe(j) = x(j) + h(j);
            const double fmp = checked_eval(f, probe);
            probe(i) = x(i);
            probe(j) = x(j);
            const double v = (fpp - fpm - fmp + fmm) / (4.0 * h(i) * h(j));
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return 0.5 * (hess + hess.transpose());
}

} // namespace condinf
