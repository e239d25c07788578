#include <doctest.h>

#include <cmath>
#include <limits>

#include "visyield/normal.hpp"

using doctest::Approx;

TEST_CASE("standard normal log pdf") {
  CHECK(vis::std_normal_log_pdf(0.0) == Approx(-0.9189385332046727).epsilon(1e-15));
  CHECK(vis::std_normal_log_pdf(3.0) == Approx(-5.4189385332046727).epsilon(1e-15));
  CHECK(vis::std_normal_log_pdf(-3.0) == vis::std_normal_log_pdf(3.0));
}

TEST_CASE("standard normal cdf against high-precision values") {
  CHECK(vis::std_normal_cdf(1.0) == Approx(0.841344746068542949).epsilon(1e-14));
  CHECK(vis::std_normal_cdf(-3.0) == Approx(1.34989803163009453e-3).epsilon(1e-13));
  CHECK(vis::std_normal_cdf(-4.0) == Approx(3.16712418331199213e-5).epsilon(1e-13));
  CHECK(vis::std_normal_cdf(-8.0) == Approx(6.22096057427178412e-16).epsilon(1e-12));
  CHECK(vis::std_normal_cdf(0.0) == 0.5);
}

TEST_CASE("log cdf stays finite deep in the tail") {
  CHECK(vis::std_normal_log_cdf(1.0) == Approx(-0.172753779023449890).epsilon(1e-14));
  CHECK(vis::std_normal_log_cdf(-4.0) == Approx(-10.3601014865272908).epsilon(1e-13));
  CHECK(vis::std_normal_log_cdf(-8.0) == Approx(-35.0134371599145499).epsilon(1e-12));
  CHECK(vis::std_normal_log_cdf(-10.0) == Approx(-53.2312851505124706).epsilon(1e-12));
  CHECK(vis::std_normal_log_cdf(-40.0) == Approx(-804.608442013753788).epsilon(1e-12));
  CHECK(std::isfinite(vis::std_normal_log_cdf(-1e4)));
  CHECK(vis::std_normal_log_cdf(40.0) == Approx(0.0).epsilon(1e-15));
}

TEST_CASE("log cdf is continuous across the tail switch") {
  const double below = vis::std_normal_log_cdf(-8.0 - 1e-9);
  const double above = vis::std_normal_log_cdf(-8.0 + 1e-9);
  CHECK(std::fabs(below - above) < 1e-6);
}

TEST_CASE("inverse Mills ratio") {
  CHECK(vis::inverse_mills_ratio(0.0) == Approx(0.797884560802865356).epsilon(1e-14));
  CHECK(vis::inverse_mills_ratio(-40.0) == Approx(40.0249688472072637).epsilon(1e-12));
  CHECK(vis::inverse_mills_ratio(40.0) == Approx(0.0).epsilon(1e-300));
}
