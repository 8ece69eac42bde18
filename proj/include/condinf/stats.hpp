#pragma once

#include <vector>

namespace condinf {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLogTwoPi = 1.8378770664093454836;

// log N(x; mu, sd^2)
double normal_logpdf(double x, double mu, double sd);

// Inverse of the standard normal CDF. Acklam's rational approximation
// followed by one Halley refinement step against erfc; absolute error is
// well below 1e-9 over (0, 1).
double inverse_normal_cdf(double p);

// z-value with upper-tail area alpha/2 (e.g. alpha = 0.05 -> 1.959964).
double z_upper(double alpha);

// Empirical quantile with linear interpolation (R type 7).
double quantile_type7(std::vector<double> values, double p);

} // namespace condinf
