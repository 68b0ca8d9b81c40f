#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "kcq/errors.hpp"
#include "kcq/numeric.hpp"
#include "kcq/text.hpp"

using namespace kcq;

TEST_CASE("compensated sum recovers what naive summation loses") {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(v) == 2.0);
  CompensatedSum s;
  for (int i = 0; i < 10; ++i) s += 0.1;
  CHECK(s.value() == doctest::Approx(1.0).epsilon(1e-16));
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-300, 1e-12, 0.001, 0.1, 0.5, 0.8413447460685429, 0.975, 1 - 1e-12}) {
    const double x = normal_quantile(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.8413447460685429) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("log_sum_exp is shift-stable") {
  std::vector<double> v{-1000.0, -1001.0, -1002.0};
  const double expected = -1000.0 + std::log(1.0 + std::exp(-1.0) + std::exp(-2.0));
  CHECK(log_sum_exp(v) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("trapezoid on a non-uniform grid") {
  std::vector<double> x{0.0, 0.5, 2.0};
  std::vector<double> y{0.0, 0.5, 2.0};
  CHECK(trapezoid(x, y) == doctest::Approx(2.0));
}

TEST_CASE("unit_open stays strictly inside (0,1)") {
  CHECK(unit_open(0) > 0.0);
  CHECK(unit_open(std::numeric_limits<std::uint64_t>::max()) < 1.0);
  CHECK(unit_open(0) == 0x1.0p-53);
  CHECK(unit_open(std::uint64_t{1} << 63) == 0.5 + 0x1.0p-53);
}

TEST_CASE("format_double round-trips losslessly") {
  for (double v : {0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 1.7976931348623157e308, 0.0}) {
    double back = 0.0;
    REQUIRE(text::parse_double(text::format_double(v), back));
    CHECK(back == v);
  }
}

TEST_CASE("strict parsers reject trailing garbage") {
  double d = 0.0;
  std::uint64_t u = 0;
  CHECK_FALSE(text::parse_double("1.5x", d));
  CHECK_FALSE(text::parse_double("", d));
  CHECK(text::parse_uint("0x10", u));
  CHECK(u == 16);
  CHECK_FALSE(text::parse_uint("-3", u));
}

TEST_CASE("fnv1a matches the published test vector") {
  CHECK(text::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(text::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(text::hex64(0xabcULL) == "0x0000000000000abc");
}
