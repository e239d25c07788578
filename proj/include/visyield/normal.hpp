#pragma once

// Scalar standard-normal helpers shared by densities, fitters and oracles.

namespace vis {

inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
inline constexpr double kLn2 = 0.693147180559945309417232121458;

double std_normal_log_pdf(double s);
double std_normal_cdf(double s);

/// ln Phi(s). Uses the asymptotic tail series below -8 so it stays finite
/// for arbitrarily negative arguments.
double std_normal_log_cdf(double s);

/// phi(s) / Phi(s), evaluated in log space.
double inverse_mills_ratio(double s);

}  // namespace vis
