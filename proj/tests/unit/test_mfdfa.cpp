#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "plmf/error.hpp"
#include "plmf/mfdfa.hpp"

using namespace plmf;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no plmf::Error thrown");
  return Errc::io_error;
}

// RMS residual of a least-squares line through k^2, k = 0..a-1.
double quadratic_line_residual(double a) {
  const double var = (a * a - 1.0) / 12.0;
  const double fourth = (a * a - 1.0) * (3.0 * a * a - 7.0) / 240.0;
  return std::sqrt(fourth - var * var);
}

}  // namespace

TEST_CASE("profile") {
  for (double v : profile(std::vector<double>(100, 4.0))) CHECK(std::abs(v) < 1e-12);
  std::vector<double> alt(101);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
  for (double v : profile(alt)) CHECK(std::abs(v) <= 1.0 + 1e-12);
}

TEST_CASE("DFA of white noise") {
  const auto x = oracle::white_noise(1 << 14, 17);
  FluctuationOptions o;
  o.degree = 2;
  o.integrate = true;
  const auto scales = default_mfdfa_scales(x.size(), 2);
  const auto table = fluctuations(x, scales, o);
  const auto w = mfdfa_weights(table, 16, scales.back());
  CHECK(std::abs(dfa_exponent(table, w) - 0.5) < 0.05);
}

TEST_CASE("window bookkeeping") {
  const auto x = oracle::white_noise(1000, 2);
  const std::vector<std::size_t> scales{8, 64, 250};
  const auto t = fluctuations(x, scales, {1, false, false});
  CHECK(t.values[0].size() == 125);
  CHECK(t.values[1].size() == 15);
  CHECK(t.values[2].size() == 4);
  for (const auto& row : t.values)
    for (double v : row) CHECK(v >= 0.0);
  const auto both = fluctuations(x, scales, {1, false, true});
  CHECK(both.values[1].size() == 30);
}

TEST_CASE("degree-0 fit leaves the population standard deviation") {
  const auto x = oracle::white_noise(512, 4);
  const std::size_t a = x.size() / 4;
  const std::vector<std::size_t> scales{a};
  const auto t = fluctuations(x, scales, {0, false, false});
  REQUIRE(t.values[0].size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    double mean = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < a; ++i) mean += x[k * a + i];
    mean /= static_cast<double>(a);
    for (std::size_t i = 0; i < a; ++i) ss += (x[k * a + i] - mean) * (x[k * a + i] - mean);
    CHECK(t.values[0][k] == doctest::Approx(std::sqrt(ss / static_cast<double>(a))).epsilon(1e-12));
  }
}

TEST_CASE("polynomials are absorbed by the local fits") {
  const std::size_t n = 4096;
  const auto x = oracle::white_noise(n, 8);
  for (int degree : {0, 1, 2, 3, 4}) {
    CAPTURE(degree);
    std::vector<double> poly(n), with(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(n);
      double v = 0.0;
      for (int m = 0; m <= degree; ++m) v += (m % 2 ? -3.0 : 2.0) * std::pow(t, m);
      poly[i] = v;
      with[i] = x[i] + v;
    }
    const auto scales = default_mfdfa_scales(n, degree);
    const FluctuationOptions o{degree, false, false};
    for (const auto& row : fluctuations(poly, scales, o).values)
      for (double v : row) CHECK(v < 1e-9);
    const auto a = fluctuations(x, scales, o);
    const auto b = fluctuations(with, scales, o);
    for (std::size_t s = 0; s < scales.size(); ++s)
      for (std::size_t k = 0; k < a.values[s].size(); ++k) CHECK(std::abs(a.values[s][k] - b.values[s][k]) < 1e-9);
  }
}

TEST_CASE("linear detrending of a slow sine leaves the curvature residual") {
  const double period = 4096.0;
  const std::size_t n = 4096;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * std::numbers::pi * static_cast<double>(i) / period);
  for (std::size_t a : {8u, 16u, 32u}) {
    const std::vector<std::size_t> scales{a};
    const auto t = fluctuations(x, scales, {1, false, false});
    const double omega = 2 * std::numbers::pi / period;
    // Windows around the crest, where the second derivative is nearly constant.
    const std::size_t k = static_cast<std::size_t>(period / 4) / a;
    const double mid = static_cast<double>(k * a) + 0.5 * static_cast<double>(a - 1);
    const double curvature = omega * omega * std::abs(std::sin(omega * mid));
    CHECK(t.values[0][k] == doctest::Approx(0.5 * curvature * quadratic_line_residual(static_cast<double>(a))).epsilon(0.02));
  }
  const std::vector<std::size_t> pair{8, 16};
  const auto t = fluctuations(x, pair, {1, false, false});
  const std::size_t k8 = 1024 / 8, k16 = 1024 / 16;
  CHECK(t.values[1][k16] / t.values[0][k8] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("scale admissibility") {
  for (int degree = 0; degree <= 8; ++degree) {
    for (std::size_t a = 1; a < 20; ++a) CHECK(mfdfa_scale_admissible(a, degree) == (a >= static_cast<std::size_t>(degree) + 2));
    const int lost = static_cast<int>(std::ceil(std::log2(degree + 2.0))) - 1;
    CHECK(mfdfa_lost_octaves(degree) == lost);
  }
  CHECK(mfdfa_lost_octaves(4) == 2);
  const auto x = oracle::white_noise(256, 1);
  const std::vector<std::size_t> tiny{5};
  CHECK(code_of([&] { fluctuations(x, tiny, {4, true, false}); }) == Errc::scale_too_small);
  const auto scales = default_mfdfa_scales(1 << 12, 4);
  CHECK(scales.front() == 8);
  CHECK(scales.back() == 1024);
}

TEST_CASE("MFDFA scaling of an exact power law") {
  const double H = 0.65;
  FluctuationTable t;
  t.degree = 1;
  for (int j = 3; j <= 10; ++j) {
    const std::size_t a = std::size_t{1} << j;
    t.scales.push_back(a);
    t.values.emplace_back((1 << 14) / a, std::pow(static_cast<double>(a), H));
  }
  const auto q = default_q_grid();
  const auto res = mfdfa_analyze(t, q, mfdfa_weights(t, 8, 1024));
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(std::abs(res.estimates.zeta[i] - q[i] * H) < 1e-12);
    CHECK(std::abs(res.spectrum.h[i] - H) < 1e-12);
    CHECK(std::abs(res.spectrum.L[i] - 1.0) < 1e-12);
  }
}

TEST_CASE("MFDFA identities on noise") {
  const auto x = oracle::white_noise(1 << 13, 23);
  const auto scales = default_mfdfa_scales(x.size(), 1);
  const auto table = fluctuations(x, scales, {1, true, false});
  const auto w = mfdfa_weights(table, 16, x.size() / 4);
  const std::vector<double> q{-2.0, 0.0, 2.0};
  const auto res = mfdfa_analyze(table, q, w);
  CHECK(res.estimates.zeta[1] == 0.0);
  CHECK(std::abs(res.estimates.zeta[2] / 2.0 - dfa_exponent(table, w)) < 1e-12);
}

TEST_CASE("vanishing fluctuations with negative q") {
  FluctuationTable t;
  for (int j = 3; j <= 6; ++j) {
    t.scales.push_back(std::size_t{1} << j);
    t.values.emplace_back(8, 1.0 + j);
  }
  t.values[1][2] = 0.0;
  const std::vector<double> q{-1.0, 1.0};
  CHECK(code_of([&] { mfdfa_analyze(t, q, mfdfa_weights(t, 8, 64)); }) == Errc::degenerate_data);
}
