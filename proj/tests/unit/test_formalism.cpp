#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "plmf/error.hpp"
#include "plmf/formalism.hpp"
#include "plmf/synth.hpp"

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

// Leader pyramid with extents n, n/2, ... filled by `value(j, k)`.
template <typename F>
LeaderPyramid make_leaders(std::size_t n, int J, F value, double p = 2.0) {
  LeaderPyramid lp;
  lp.p = p;
  for (int j = 1; j <= J; ++j) {
    LeaderOctave oct;
    oct.j = j;
    oct.extent = n >> (j - 1);
    for (std::size_t k = 0; k < oct.extent; ++k) oct.values.push_back(value(j, k));
    oct.valid.assign(oct.extent, 1);
    oct.n_valid = oct.extent;
    lp.octaves.push_back(std::move(oct));
  }
  return lp;
}

LeaderPyramid random_leaders(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> ln(0.0, 0.7);
  return make_leaders(2048, 8, [&](int j, std::size_t) { return std::exp2(0.6 * j) * ln(rng); });
}

std::vector<double> q_range(double lo, double hi, double step) {
  std::vector<double> q;
  for (double v = lo; v <= hi + 1e-9; v += step) q.push_back(std::round(v * 1e6) / 1e6);
  return q;
}

}  // namespace

TEST_CASE("regression weights") {
  const std::vector<double> ones(3, 1.0);
  const auto w = regression_weights(1, 3, ones);
  CHECK(w.w[0] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(std::abs(w.w[1]) < 1e-14);
  CHECK(w.w[2] == doctest::Approx(0.5).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int j1 = 1 + static_cast<int>(rng() % 5);
    const int j2 = j1 + 2 + static_cast<int>(rng() % 10);
    std::vector<double> b;
    for (int j = j1; j <= j2; ++j) b.push_back(u(rng));
    const auto rw = regression_weights(j1, j2, b);
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < rw.size(); ++i) {
      s0 += rw.w[i];
      s1 += (j1 + static_cast<int>(i)) * rw.w[i];
    }
    CHECK(std::abs(s0) < 1e-12);
    CHECK(std::abs(s1 - 1.0) < 1e-12);
  }

  std::vector<double> counts, y;
  for (int j = 4; j <= 13; ++j) {
    counts.push_back(std::exp2(15 - (j - 4)));
    y.push_back(-2.5 + 0.8125 * j);
  }
  CHECK(std::abs(weighted_slope(regression_weights(4, 13, counts), y) - 0.8125) < 1e-12);

  CHECK(code_of([] { regression_weights(1, 2, std::vector<double>(2, 1.0)); }) == Errc::insufficient_scales);
  const std::vector<double> same_x{2.0, 2.0, 2.0};
  CHECK(code_of([&] { regression_weights_at(same_x, ones); }) == Errc::singular_regression);
}

TEST_CASE("structure functions of simple leaders") {
  const auto q = q_range(-3, 3, 0.5);
  const auto constant = make_leaders(256, 6, [](int, std::size_t) { return 1.7; });
  const auto t = structure_functions(constant, q);
  for (std::size_t l = 0; l < t.x.size(); ++l)
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(t.log2_s[l][i] == doctest::Approx(q[i] * std::log2(1.7)));

  const double H = 0.37;
  const auto mono = make_leaders(512, 7, [&](int j, std::size_t) { return std::exp2(j * H); });
  const auto w = leader_weights(mono, 2, 7);
  const auto zeta = zeta_hat(structure_functions(mono, q), w, Correction{});
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(zeta[i] - q[i] * H) < 1e-12);
}

TEST_CASE("cascade structure functions follow the truncated closed form") {
  const double w0 = 0.4, w1 = 0.6;
  const int J = 12;
  const double p = 2.0;
  const auto leaders = compute_p_leaders(gen_deterministic_cascade(w0, w1, J), p, Neighborhood::restricted);
  const auto q = q_range(-5, 5, 0.5);
  const auto table = structure_functions(leaders, q);
  const double eta_p = 1.0 - std::log2(std::pow(w0, p) + std::pow(w1, p));
  for (std::size_t l = 0; l < table.x.size(); ++l) {
    const double j = table.x[l];
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double zeta = 1.0 - std::log2(std::pow(w0, q[i]) + std::pow(w1, q[i]));
      const double expected =
          (j - J) * zeta + (q[i] / p) * std::log2((1.0 - std::exp2(-j * eta_p)) / (1.0 - std::exp2(-eta_p)));
      CHECK(table.log2_s[l][i] == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("corrected cascade scaling function recovers eta") {
  const double w0 = 0.4, w1 = 0.6;
  const auto q = q_range(-5, 5, 0.25);
  for (int J : {10, 14}) {
    const auto pyr = gen_deterministic_cascade(w0, w1, J);
    for (double p : {0.5, 1.0, 2.0, 4.0}) {
      CAPTURE(J);
      CAPTURE(p);
      const auto leaders = compute_p_leaders(pyr, p, Neighborhood::restricted);
      for (int j1 : {1, default_j1(1)}) {
        const int j2 = default_j2(leaders);
        const auto weights = leader_weights(leaders, j1, j2);
        const Correction corr{p, eta_hat(pyr, p, j1, j2), true};
        const auto zeta = zeta_hat(structure_functions(leaders, q), weights, corr);
        for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(zeta[i] - cascade_eta(w0, w1, q[i])) < 1e-10);
      }
    }
  }
}

TEST_CASE("the uncorrected estimator is further from eta on a shallow cascade") {
  const auto pyr = gen_deterministic_cascade(0.4, 0.6, 8);
  const std::vector<double> q{-5.0, -2.0, 2.0, 5.0};
  const double p = 2.0;
  const auto leaders = compute_p_leaders(pyr, p, Neighborhood::restricted);
  const int j1 = 1, j2 = default_j2(leaders);
  const auto weights = leader_weights(leaders, j1, j2);
  const auto table = structure_functions(leaders, q);
  const auto corrected = zeta_hat(table, weights, Correction{p, eta_hat(pyr, p, j1, j2), true});
  const auto plain = zeta_hat(table, weights, Correction{p, 0.0, false});
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double truth = cascade_eta(0.4, 0.6, q[i]);
    CHECK(std::abs(plain[i] - truth) > std::abs(corrected[i] - truth));
  }
}

TEST_CASE("correction is an exact q-linear shift") {
  const auto leaders = random_leaders(4);
  const auto q = default_q_grid();
  const auto weights = leader_weights(leaders, 2, 8);
  const auto table = structure_functions(leaders, q);
  for (double p : {0.5, 2.0, 8.0}) {
    const double eta = 0.83;
    const auto on = zeta_hat(table, weights, Correction{p, eta, true});
    const auto off = zeta_hat(table, weights, Correction{p, eta, false});
    double shift = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
      shift += weights.w[i] * std::log2(1.0 - std::exp2(-weights.x[i] * eta));
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs((on[i] - off[i]) + (q[i] / p) * shift) < 1e-12);

    const auto ct = cumulants(leaders);
    const auto c_on = cm_hat(ct, weights, Correction{p, eta, true});
    const auto c_off = cm_hat(ct, weights, Correction{p, eta, false});
    CHECK(std::abs((c_on[0] - c_off[0]) + shift / p) < 1e-12);
    for (int m = 1; m < 4; ++m) CHECK(c_on[m] == c_off[m]);
  }
  CHECK(correction_term(Correction{kInfinity, 0.5, true}, 3) == 0.0);
  CHECK(code_of([] { correction_term(Correction{2.0, 0.0, true}, 3); }) == Errc::invalid_correction);
  CHECK(code_of([] { correction_term(Correction{2.0, -0.3, true}, 3); }) == Errc::invalid_correction);
}

TEST_CASE("zeta at q = 0 vanishes exactly") {
  const std::vector<double> q{-1.0, 0.0, 1.0};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto leaders = random_leaders(seed);
    const auto weights = leader_weights(leaders, 1, 8);
    const auto table = structure_functions(leaders, q);
    CHECK(zeta_hat(table, weights, Correction{})[1] == 0.0);
    CHECK(zeta_hat(table, weights, Correction{2.0, 0.7, true})[1] == 0.0);
  }
}

TEST_CASE("cumulants") {
  const auto constant = make_leaders(64, 4, [](int, std::size_t) { return 2.5; });
  const auto ct = cumulants(constant);
  for (const auto& c : ct.c) {
    CHECK(c[0] == doctest::Approx(std::log(2.5)));
    for (int m = 1; m < 4; ++m) CHECK(std::abs(c[m]) < 1e-14);
  }
  const auto w = leader_weights(constant, 1, 4);
  const auto c = cm_hat(ct, w, Correction{});
  for (int m = 1; m < 4; ++m) CHECK(std::abs(c[m]) < 1e-14);

  const double a = 0.3, b = -1.1;
  Multiresolution two;
  two.levels.push_back({1.0, {std::exp(a), std::exp(b), std::exp(a), std::exp(b)}});
  CHECK(cumulants(two).c[0][1] == doctest::Approx((a - b) * (a - b) / 4).epsilon(1e-13));

  const double mu = -0.4, sigma = 0.6;
  const std::size_t n = 40000;
  std::mt19937_64 rng(21);
  std::lognormal_distribution<double> ln(mu, sigma);
  Multiresolution sample;
  sample.levels.push_back({1.0, {}});
  for (std::size_t i = 0; i < n; ++i) sample.levels[0].values.push_back(ln(rng));
  const auto cs = cumulants(sample).c[0];
  const double rn = std::sqrt(static_cast<double>(n));
  CHECK(std::abs(cs[0] - mu) < 5 * sigma / rn);
  CHECK(std::abs(cs[1] - sigma * sigma) < 5 * sigma * sigma * std::sqrt(2.0) / rn);
  CHECK(std::abs(cs[2]) < 5 * std::pow(sigma, 3) * std::sqrt(6.0) / rn);
  CHECK(std::abs(cs[3]) < 5 * std::pow(sigma, 4) * std::sqrt(24.0) / rn);

  auto zero = constant;
  zero.octaves[2].values[5] = 0.0;
  CHECK(code_of([&] { cumulants(zero); }) == Errc::degenerate_data);
}

TEST_CASE("cascade first log-cumulant") {
  for (auto [w0, w1] : {std::pair{0.4, 0.6}, std::pair{0.3, 0.9}}) {
    const auto pyr = gen_deterministic_cascade(w0, w1, 14);
    const double p = 2.0;
    const auto leaders = compute_p_leaders(pyr, p, Neighborhood::restricted);
    const int j1 = default_j1(1), j2 = default_j2(leaders);
    const auto c = cm_hat(cumulants(leaders), leader_weights(leaders, j1, j2),
                          Correction{p, eta_hat(pyr, p, j1, j2), true});
    CHECK(std::abs(c[0] + (std::log2(w0) + std::log2(w1)) / 2) < 0.02);
  }
}

TEST_CASE("zero leaders are rejected for non-positive moments") {
  auto lp = make_leaders(64, 5, [](int j, std::size_t k) { return 1.0 + j + k; });
  lp.octaves[1].values[3] = 0.0;
  const std::vector<double> neg{-1.0, 1.0};
  const std::vector<double> pos{0.5, 1.0};
  CHECK(code_of([&] { structure_functions(lp, neg); }) == Errc::degenerate_data);
  CHECK_NOTHROW(structure_functions(lp, pos));
  const auto w = leader_weights(lp, 1, 5);
  CHECK(code_of([&] { legendre_parametric(lp, neg, w, Correction{}); }) == Errc::degenerate_data);
  CHECK_NOTHROW(legendre_parametric(lp, pos, w, Correction{}));
  const auto res = analyze_leaders(lp, pos, w, Correction{});
  CHECK(std::isnan(res.estimates.c[0]));
}

TEST_CASE("parametric spectrum of a monofractal is a single point") {
  const double H = 0.55;
  for (int d : {1, 2}) {
    LeaderPyramid lp = make_leaders(1024, 7, [&](int j, std::size_t) { return std::exp2(j * H); });
    lp.dimension = d;
    const auto spec = legendre_parametric(lp, default_q_grid(), leader_weights(lp, 1, 7), Correction{});
    for (std::size_t i = 0; i < spec.q.size(); ++i) {
      CHECK(std::abs(spec.h[i] - H) < 1e-12);
      CHECK(std::abs(spec.L[i] - d) < 1e-12);
    }
  }
}

TEST_CASE("parametric spectrum properties on random leaders") {
  const auto q = default_q_grid();
  for (std::uint64_t seed : {5u, 6u}) {
    const auto leaders = random_leaders(seed);
    const auto weights = leader_weights(leaders, 1, 8);
    for (bool corrected : {false, true}) {
      const Correction corr{2.0, 0.6, corrected};
      const auto res = analyze_leaders(leaders, q, weights, corr);
      const auto zero = static_cast<std::size_t>(std::find(q.begin(), q.end(), 0.0) - q.begin());
      REQUIRE(zero < q.size());
      CHECK(std::abs(res.spectrum.h[zero] - res.estimates.c[0]) < 1e-3);
      CHECK(std::abs(res.spectrum.L[zero] - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("parametric spectrum of a cascade stays below the dimension") {
  const auto pyr = gen_deterministic_cascade(0.3, 0.8, 13);
  for (double p : {1.0, 2.0, kInfinity}) {
    const auto leaders = compute_p_leaders(pyr, p, Neighborhood::restricted);
    const auto weights = leader_weights(leaders, 1, default_j2(leaders));
    const auto spec = legendre_parametric(leaders, default_q_grid(), weights, Correction{});
    for (double L : spec.L) CHECK(L <= 1.0 + 1e-9);
    CHECK(concavity_violation(spec.h, spec.L) < 1e-9);
  }
}

TEST_CASE("parametric and numerical Legendre transforms agree on a cascade") {
  const auto pyr = gen_deterministic_cascade(0.4, 0.6, 14);
  const double p = 2.0;
  const auto leaders = compute_p_leaders(pyr, p);
  const int j1 = default_j1(1), j2 = default_j2(leaders);
  const auto weights = leader_weights(leaders, j1, j2);
  const auto q = q_range(-3, 3, 0.05);
  const auto res = analyze_leaders(leaders, q, weights, Correction{p, eta_hat(pyr, p, j1, j2), true});
  const auto numeric = legendre_from_scaling(res.estimates.q, res.estimates.zeta, 1);
  REQUIRE(numeric.q.size() >= 3);
  std::size_t compared = 0;
  for (std::size_t i = 0; i < numeric.q.size(); ++i) {
    const auto it = std::find_if(q.begin(), q.end(), [&](double v) { return std::abs(v - numeric.q[i]) < 1e-9; });
    if (it == q.end()) continue;
    const auto k = static_cast<std::size_t>(it - q.begin());
    CHECK(std::abs(numeric.h[i] - res.spectrum.h[k]) < 0.02);
    CHECK(std::abs(numeric.L[i] - res.spectrum.L[k]) < 0.02);
    ++compared;
  }
  CHECK(compared > 50);
}

TEST_CASE("bound check") {
  LegendreSpectrum spec;
  spec.dimension = 1;
  spec.q = {1.0};
  spec.h = {-0.5};
  spec.L = {1.9};
  const auto report = check_bound(spec, 2.0, 1);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.max_violation == doctest::Approx(1.9));

  spec.h = {0.1, 0.4, 0.9};
  spec.L = {0.9, 1.0, 0.2};
  spec.q = {1.0, 0.0, -1.0};
  CHECK(check_bound(spec, 2.0, 1).ok());
  CHECK(code_of([&] { check_bound(spec, kInfinity, 1); }) == Errc::invalid_parameter);
}

TEST_CASE("log-cumulant spectrum expansion") {
  const auto spec = cm_to_spectrum({0.76, -0.08, 0.0, 0.0}, 1);
  double apex = -1e9;
  for (std::size_t i = 0; i < spec.h.size(); ++i) {
    CHECK(spec.L[i] == doctest::Approx(1.0 - (spec.h[i] - 0.76) * (spec.h[i] - 0.76) / 0.16).epsilon(1e-12));
    apex = std::max(apex, spec.L[i]);
  }
  CHECK(apex == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(spec.h.front() == doctest::Approx(0.76 - 0.4));
  CHECK(spec.h.back() == doctest::Approx(0.76 + 0.4));

  const auto narrow = cm_to_spectrum({0.5, -1e-8, 0.0, 0.0}, 1);
  CHECK(narrow.h.back() - narrow.h.front() < 1e-3);
  CHECK(code_of([] { cm_to_spectrum({0.5, 0.0, 0.0, 0.0}, 1); }) == Errc::invalid_expansion);
  CHECK(code_of([] { cm_to_spectrum({0.5, 0.02, 0.0, 0.0}, 1); }) == Errc::invalid_expansion);
}

TEST_CASE("truncated expansion approximates the log-Poisson spectrum near its apex") {
  CmcParams params;
  params.kind = CmcKind::log_poisson;
  const auto c = cmc_cumulants(params);
  const auto spec = cm_to_spectrum(c, 2);
  std::size_t compared = 0;
  for (std::size_t i = 0; i < spec.h.size(); ++i) {
    if (std::abs(spec.h[i] - c[0]) > 0.15) continue;
    CHECK(std::abs(spec.L[i] - cmc_spectrum_closed_form(params, spec.h[i])) < 0.05);
    ++compared;
  }
  CHECK(compared > 10);
}

TEST_CASE("concavity violation") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> concave{0, 1.5, 2, 1.5, 0};
  CHECK(concavity_violation(x, concave) == 0.0);
  const std::vector<double> dent{0, 1.5, 1.0, 1.5, 0};
  CHECK(concavity_violation(x, dent) == doctest::Approx(0.5));
}
