#include "condinf/stats.hpp"

#include <algorithm>
#include <cmath>

#include "condinf/errors.hpp"

namespace condinf {

double normal_logpdf(double x, double mu, double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        throw NumericDomainError("normal_logpdf: standard deviation must be positive and finite");
    }
    const double z = (x - mu) / sd;
    return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ContractViolation("inverse_normal_cdf: p must lie strictly in (0, 1)");
    }

    // Acklam's coefficients.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};

    const double plow = 0.02425;
    const double phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step against the exact CDF.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double z_upper(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ContractViolation("z_upper: alpha must lie strictly in (0, 1)");
    }
    return inverse_normal_cdf(1.0 - 0.5 * alpha);
}

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) {
        throw ContractViolation("quantile_type7: empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ContractViolation("quantile_type7: p must lie in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) {
        return values.back();
    }
    const double frac = h - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

} // namespace condinf
