#include "visyield/normal.hpp"

#include <cmath>
#include <numbers>

namespace vis {

namespace {
constexpr double kInvSqrt2 = 0.707106781186547524400844362105;
constexpr double kTailCutoff = -8.0;
// Near-optimal truncation of the divergent tail series at s = -8.
constexpr int kTailTerms = 30;
}  // namespace

double std_normal_log_pdf(double s) { return -0.5 * s * s - kLogSqrt2Pi; }

double std_normal_cdf(double s) { return 0.5 * std::erfc(-s * kInvSqrt2); }

double std_normal_log_cdf(double s) {
  if (std::isnan(s)) return s;
  if (s < kTailCutoff) {
    // Phi(s) = phi(s)/|s| * (1 - 1/s^2 + 3/s^4 - 15/s^6 + ...)
    const double inv_s2 = 1.0 / (s * s);
    double term = 1.0;
    double series = 1.0;
    for (int n = 1; n <= kTailTerms; ++n) {
      term *= -(2.0 * n - 1.0) * inv_s2;
      series += term;
    }
    return -0.5 * s * s - std::log(-s) - kLogSqrt2Pi + std::log(series);
  }
  if (s > 5.0) return std::log1p(-0.5 * std::erfc(s * kInvSqrt2));
  return std::log(0.5 * std::erfc(-s * kInvSqrt2));
}

double inverse_mills_ratio(double s) { return std::exp(std_normal_log_pdf(s) - std_normal_log_cdf(s)); }

}  // namespace vis
