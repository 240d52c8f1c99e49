// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "plmf/harness.hpp"

using namespace plmf;

namespace {

// Pinned thresholds.
constexpr double kCascadeTol = 0.01;
constexpr double kCascadeSeconds = 5.0;
constexpr double kMrwC1Tol = 0.02;
constexpr double kMrwC2Tol = 0.02;
constexpr double kMrwC3Tol = 0.01;
constexpr double kP0OracleTol = 1e-12;
constexpr double kP0RelTol = 0.20;
constexpr double kBoundSlack = 0.05;
constexpr double kModeShift = 0.02;
constexpr double kLeaderRmseGain = 1.25;
constexpr double kMfdfaC1Tol = 0.03;
constexpr double kMfdfaBiasMin = 0.02;
constexpr double kLeaderC1Tol = 0.02;
constexpr double kTrendLeaderFactor = 2.0;
constexpr double kTrendMfdfaFactor = 3.0;
constexpr double kPolyTol = 1e-9;
constexpr double kLwsTol = 0.08;
constexpr double kCmcC1Tol = 0.03;
constexpr double kCmcC2Tol = 0.03;
constexpr double kCmcC3Tol = 0.01;
constexpr double kBruteTol = 1e-12;
constexpr double kReconTol = 1e-9;
constexpr double kWeightTol = 1e-12;
constexpr double kIdentityTol = 1e-12;
constexpr double kMeanSe = 5.0;

constexpr std::size_t kMrwRealizations = 50;
constexpr std::size_t kP0Realizations = 20;
constexpr std::size_t kLwsRealizations = 20;
constexpr std::size_t kCmcRealizations = 20;
constexpr double kTrendSigma = 0.01;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

void note(Outcome& o, bool ok, const std::string& text) {
  o.pass = o.pass && ok;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += text + (ok ? "" : " [x]");
}

double mean_of(const ResultSet& rs, const std::string& estimator, int order) {
  const auto* a = rs.find_aggregate(estimator, order);
  return a ? a->mean : std::nan("");
}

double rmse_of(const ResultSet& rs, const std::string& estimator, int order) {
  const auto* a = rs.find_aggregate(estimator, order);
  return a ? a->rmse : std::nan("");
}

double mode_of(const LegendreSpectrum& s) {
  if (s.L.empty()) return std::nan("");
  const auto it = std::max_element(s.L.begin(), s.L.end());
  return s.h[static_cast<std::size_t>(it - s.L.begin())];
}

ExperimentConfig mrw_config(double nu, std::uint64_t seed, std::vector<double> p_list, bool mfdfa,
                            std::size_t realizations = kMrwRealizations) {
  auto c = default_experiment(ProcessKind::mrw);
  c.mrw.nu = nu;
  c.seed = seed;
  c.realizations = realizations;
  c.analysis.p_list = std::move(p_list);
  c.analysis.mfdfa = mfdfa;
  return c;
}

// ---------------------------------------------------------------------------

Outcome cascade_oracle() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const double w0 = 0.4, w1 = 0.6;
  const auto pyr = gen_deterministic_cascade(w0, w1, 14);
  const auto q = default_q_grid();
  double worst = 0.0;
  bool edge_ok = true;
  for (double p : {0.5, 1.0, 2.0, 4.0}) {
    const auto leaders = compute_p_leaders(pyr, p, Neighborhood::restricted);
    const int j1 = default_j1(1), j2 = default_j2(leaders);
    const auto weights = leader_weights(leaders, j1, j2);
    const auto table = structure_functions(leaders, q);
    const double eta = eta_hat(pyr, p, j1, j2);
    const auto corrected = zeta_hat(table, weights, Correction{p, eta, true});
    const auto plain = zeta_hat(table, weights, Correction{p, eta, false});
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double truth = cascade_eta(w0, w1, q[i]);
      worst = std::max(worst, std::abs(corrected[i] - truth));
      if (std::abs(std::abs(q[i]) - 5.0) < 1e-12)
        edge_ok = edge_ok && std::abs(plain[i] - truth) > std::abs(corrected[i] - truth);
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  note(o, worst < kCascadeTol, fmt("max |zeta-eta| %.2e < %.2f (restricted leaders)", worst, kCascadeTol));
  note(o, edge_ok, "uncorrected further at |q|=5");
  note(o, seconds < kCascadeSeconds, fmt("%.2f s < %.0f s", seconds, kCascadeSeconds));
  return o;
}

struct MrwRuns {
  ResultSet nu0;
  ResultSet nu07;
};

Outcome mrw_baseline(const ResultSet& rs) {
  Outcome o;
  const double c1 = mean_of(rs, "p=2", 1), c2 = mean_of(rs, "p=2", 2), c3 = mean_of(rs, "p=2", 3);
  note(o, std::abs(c1 - 0.76) <= kMrwC1Tol, fmt("c1 %.4f in 0.76+-%.2f", c1, kMrwC1Tol));
  note(o, std::abs(c2 + 0.08) <= kMrwC2Tol, fmt("c2 %.4f in -0.08+-%.2f", c2, kMrwC2Tol));
  note(o, std::abs(c3) <= kMrwC3Tol, fmt("c3 %.4f in 0+-%.2f", c3, kMrwC3Tol));
  return o;
}

Outcome critical_index() {
  Outcome o;
  const std::vector<std::pair<double, double>> table{{0.0, kInfinity}, {0.4, 25.0}, {0.6, 4.0}, {0.7, 1.5}, {0.73, 0.75}};
  bool oracle_ok = true;
  for (auto [nu, expected] : table) {
    MrwParams p;
    p.nu = nu;
    const double got = mrw_p0(p);
    oracle_ok = oracle_ok && (std::isinf(expected) ? std::isinf(got) : std::abs(got - expected) <= kP0OracleTol * expected);
  }
  note(o, oracle_ok, "oracle {inf,25,4,1.5,0.75}");

  for (double nu : {0.6, 0.7}) {
    auto c = mrw_config(nu, 303, {2.0}, false, kP0Realizations);
    std::vector<double> mean_eta;
    std::vector<double> single;
    WaveletScalingFunction curve;
    for (std::size_t i = 0; i < c.realizations; ++i) {
      const auto bundle = analyze_signal(synthesize(c, i).values, c.analysis);
      curve = bundle.eta_curve;
      if (mean_eta.empty()) mean_eta.assign(curve.eta.size(), 0.0);
      for (std::size_t k = 0; k < curve.eta.size(); ++k) mean_eta[k] += curve.eta[k] / static_cast<double>(c.realizations);
      single.push_back(bundle.p0_hat);
    }
    curve.eta = mean_eta;
    const double est = p0_hat(curve);
    std::sort(single.begin(), single.end());
    const double median = 0.5 * (single[single.size() / 2 - 1] + single[single.size() / 2]);
    MrwParams p;
    p.nu = nu;
    const double truth = mrw_p0(p);
    note(o, std::abs(est - truth) <= kP0RelTol * truth,
         fmt("nu=%.1f p0 %.3f vs %.2f (+-%.0f%%; median single %.3f)", nu, est, truth, 100 * kP0RelTol, median));
  }
  return o;
}

Outcome bound_and_bias() {
  Outcome o;
  auto c = mrw_config(0.6, 404, {2.0, 8.0}, false);
  const auto rs = run_experiment(c);
  const auto s2 = rs.mean_spectrum("p=2");
  double worst = -kInfinity;
  for (std::size_t i = 0; i < s2.h.size(); ++i)
    if (s2.h[i] <= 0.0) worst = std::max(worst, s2.L[i] - (1.0 + 2.0 * s2.h[i]));
  note(o, !std::isinf(worst) && worst <= kBoundSlack,
       std::isinf(worst) ? std::string("p=2 spectrum has no h<=0 samples")
                         : fmt("p=2 max L-(1+2h) on h<=0 %.4f <= %.2f", worst, kBoundSlack));
  const double truth_mode = mrw_cumulants(c.mrw).c1;
  const double mode8 = mode_of(rs.mean_spectrum("p=8"));
  note(o, mode8 - truth_mode > kModeShift, fmt("p=8 mode %.4f - %.2f > %.2f", mode8, truth_mode, kModeShift));
  return o;
}

Outcome rmse_ordering(const ResultSet& rs) {
  Outcome o;
  for (int m : {2, 3}) {
    const double small = rmse_of(rs, "p=0.5", m), leader = rmse_of(rs, "p=inf", m);
    note(o, small < leader && leader >= kLeaderRmseGain * small,
         fmt("c%d rmse p=0.5 %.4f, p=inf %.4f (ratio %.2f >= %.2f)", m, small, leader, leader / small, kLeaderRmseGain));
  }
  return o;
}

Outcome mfdfa_bias(const MrwRuns& runs) {
  Outcome o;
  const double c0 = mean_of(runs.nu0, "mfdfa", 1);
  note(o, std::abs(c0 - 0.76) <= kMfdfaC1Tol, fmt("nu=0 mfdfa c1 %.4f in 0.76+-%.2f", c0, kMfdfaC1Tol));
  const double c7 = mean_of(runs.nu07, "mfdfa", 1);
  note(o, c7 - 0.06 >= kMfdfaBiasMin, fmt("nu=0.7 mfdfa c1 %.4f - 0.06 >= %.2f", c7, kMfdfaBiasMin));
  const double l7 = mean_of(runs.nu07, "p=1", 1);
  note(o, std::abs(l7 - 0.06) <= kLeaderC1Tol, fmt("nu=0.7 p=1 c1 %.4f in 0.06+-%.2f", l7, kLeaderC1Tol));
  return o;
}

Outcome trend_robustness() {
  Outcome o;
  auto c = mrw_config(0.0, 505, {2.0}, true);
  c.mrw.sigma = kTrendSigma;
  c.analysis.n_vanishing = 4;
  c.analysis.mfdfa_degree = 3;
  c.analysis.estimate_p0 = false;
  const auto clean = run_experiment(c);
  c.trend.kind = TrendKind::cusp;
  const auto trended = run_experiment(c);
  const double lc = rmse_of(clean, "p=2", 2), lt = rmse_of(trended, "p=2", 2);
  const double mc = rmse_of(clean, "mfdfa", 2), mt = rmse_of(trended, "mfdfa", 2);
  note(o, lt <= kTrendLeaderFactor * lc, fmt("p=2 c2 rmse %.4f -> %.4f (<= %.0fx)", lc, lt, kTrendLeaderFactor));
  note(o, mt > kTrendMfdfaFactor * mc, fmt("mfdfa c2 rmse %.4f -> %.4f (> %.0fx)", mc, mt, kTrendMfdfaFactor));

  // Polynomials of degree <= N_psi - 1 are invisible to the p-leaders.
  MrwParams m;
  m.seed = 17;
  const auto x = gen_mrw(m, daubechies_filter(4));
  AnalysisOptions a;
  a.p_list = {0.5, 2.0, kInfinity};
  a.n_vanishing = 4;
  const auto base = analyze_signal(x, a);
  double worst = 0.0;
  for (int degree = 0; degree <= 3; ++degree) {
    TrendSpec poly{TrendKind::polynomial, {}};
    for (int k = 0; k <= degree; ++k) poly.coefficients.push_back(k % 2 ? -40.0 : 25.0);
    const auto moved = analyze_signal(add_trend(x, poly), a);
    for (std::size_t e = 0; e < base.estimators.size(); ++e) {
      for (int k = 0; k < 4; ++k)
        worst = std::max(worst, std::abs(base.estimators[e].estimates.c[k] - moved.estimators[e].estimates.c[k]));
      for (std::size_t i = 0; i < base.estimators[e].estimates.zeta.size(); ++i)
        worst = std::max(worst, std::abs(base.estimators[e].estimates.zeta[i] - moved.estimators[e].estimates.zeta[i]));
    }
  }
  note(o, worst < kPolyTol, fmt("polynomial degree<=3 shift %.2e < %.0e", worst, kPolyTol));
  o.detail += fmt(" (MRW increment sd %.2f)", kTrendSigma);
  return o;
}

Outcome lacunary() {
  Outcome o;
  auto c = default_experiment(ProcessKind::lws);
  c.seed = 606;
  c.realizations = kLwsRealizations;
  const auto rs = run_experiment(c);
  double previous = kInfinity;
  bool ordered = true;
  for (double p : c.analysis.p_list) {
    const auto s = rs.mean_spectrum(estimator_name(p));
    const double right = s.h.empty() ? std::nan("") : *std::max_element(s.h.begin(), s.h.end());
    const double truth = lws_right_endpoint(c.lws.alpha, c.lws.eta, p);
    ordered = ordered && right < previous;
    previous = right;
    note(o, std::abs(right - truth) <= kLwsTol, fmt("p=%s %.4f vs %.4f", format_p(p).c_str(), right, truth));
  }
  note(o, ordered, "decreasing in p");
  return o;
}

Outcome cascades_2d() {
  Outcome o;
  auto ln = default_experiment(ProcessKind::cmc_ln);
  ln.seed = 707;
  ln.realizations = kCmcRealizations;
  ln.analysis.p_list = {2.0};
  const auto rln = run_experiment(ln);
  const auto tln = *cumulant_truth(ln);
  const double c1 = mean_of(rln, "p=2", 1), c2 = mean_of(rln, "p=2", 2);
  note(o, std::abs(c1 - tln[0]) <= kCmcC1Tol, fmt("LN c1 %.4f in %.2f+-%.2f", c1, tln[0], kCmcC1Tol));
  note(o, std::abs(c2 - tln[1]) <= kCmcC2Tol, fmt("LN c2 %.4f in %.2f+-%.2f", c2, tln[1], kCmcC2Tol));

  auto lp = default_experiment(ProcessKind::cmc_lp);
  lp.seed = 708;
  lp.realizations = kCmcRealizations;
  lp.analysis.p_list = {2.0};
  const auto rlp = run_experiment(lp);
  const double c3 = mean_of(rlp, "p=2", 3);
  note(o, std::abs(c3 - 0.014) <= kCmcC3Tol, fmt("LP c3 %.4f in 0.014+-%.2f", c3, kCmcC3Tol));
  return o;
}

Outcome properties() {
  Outcome o;
  // Brute-force p-leaders on small pyramids.
  double brute = 0.0;
  Field2d field(32);
  field.values = oracle::white_noise(32 * 32, 3);
  const std::vector<CoefficientPyramid> pyramids{dwt1d(oracle::white_noise(64, 1), daubechies_filter(1)),
                                                 dwt1d(oracle::white_noise(64, 2), daubechies_filter(2)),
                                                 dwt2d(field, daubechies_filter(1))};
  for (const auto& pyr : pyramids)
    for (double p : {0.25, 0.5, 1.0, 2.0, 4.0, kInfinity})
      for (auto mode : {Neighborhood::full, Neighborhood::restricted}) {
        const auto fast = compute_p_leaders(pyr, p, mode);
        const auto slow = oracle::leaders_direct(pyr, p, mode);
        for (int j = 1; j <= fast.octave_count(); ++j)
          for (std::size_t i = 0; i < fast.octave(j).values.size(); ++i) {
            const double a = fast.octave(j).values[i], b = slow.octave(j).values[i];
            brute = std::max(brute, std::abs(a - b) / std::max(1.0, std::abs(b)));
            if (fast.octave(j).valid[i] != slow.octave(j).valid[i]) brute = kInfinity;
          }
      }
  note(o, brute <= kBruteTol, fmt("brute-force leaders %.1e", brute));

  // Perfect reconstruction.
  double recon = 0.0;
  const auto x = oracle::white_noise(2048, 4);
  for (int N = 1; N <= 10; ++N) {
    const auto pyr = dwt1d(x, daubechies_filter(N));
    const auto back = idwt1d(pyr, pyr.approx);
    for (std::size_t i = 0; i < x.size(); ++i) recon = std::max(recon, std::abs(back[i] - x[i]));
  }
  Field2d big(128);
  big.values = oracle::white_noise(128 * 128, 5);
  for (int N : {1, 3}) {
    const auto pyr = dwt2d(big, daubechies_filter(N));
    const auto back = idwt2d(pyr, pyr.approx);
    for (std::size_t i = 0; i < big.values.size(); ++i) recon = std::max(recon, std::abs(back.values[i] - big.values[i]));
  }
  note(o, recon <= kReconTol, fmt("reconstruction %.1e", recon));

  // Regression weight constraints.
  double weight = 0.0;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.5, 100.0);
  for (int j1 = 1; j1 <= 4; ++j1)
    for (int j2 = j1 + 2; j2 <= 12; ++j2) {
      std::vector<double> b;
      for (int j = j1; j <= j2; ++j) b.push_back(u(rng));
      const auto w = regression_weights(j1, j2, b);
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        s0 += w.w[i];
        s1 += w.x[i] * w.w[i];
      }
      weight = std::max({weight, std::abs(s0), std::abs(s1 - 1.0)});
    }
  note(o, weight <= kWeightTol, fmt("weights %.1e", weight));

  // zeta(0) and the correction identity on real leaders.
  MrwParams m;
  m.n = 1 << 14;
  m.seed = 8;
  const auto pyr = dwt1d(gen_mrw(m, daubechies_filter(2)), daubechies_filter(2));
  const auto q = default_q_grid();
  bool zero_ok = true;
  double identity = 0.0;
  for (double p : {0.5, 2.0}) {
    const auto leaders = compute_p_leaders(pyr, p);
    const int j1 = default_j1(1), j2 = default_j2(leaders);
    const auto w = leader_weights(leaders, j1, j2);
    const double eta = eta_hat(pyr, p, j1, j2);
    const auto table = structure_functions(leaders, q);
    const auto on = zeta_hat(table, w, Correction{p, eta, true});
    const auto off = zeta_hat(table, w, Correction{p, eta, false});
    double shift = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) shift += w.w[i] * std::log2(1.0 - std::exp2(-w.x[i] * eta));
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] == 0.0) zero_ok = zero_ok && on[i] == 0.0 && off[i] == 0.0;
      identity = std::max(identity, std::abs((on[i] - off[i]) + (q[i] / p) * shift));
    }
  }
  note(o, zero_ok, "zeta(0) == 0");
  note(o, identity <= kIdentityTol, fmt("correction identity %.1e", identity));

  // Unit-mean multipliers.
  bool mean_ok = true;
  for (auto kind : {CmcKind::log_normal, CmcKind::log_poisson}) {
    CmcParams params;
    params.kind = kind;
    auto r = make_rng(909);
    const std::size_t n = 100000;
    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = draw_cmc_multiplier(params, r);
      s += v;
      ss += v * v;
    }
    const double mean = s / n, sd = std::sqrt(ss / n - mean * mean);
    mean_ok = mean_ok && std::abs(mean - 1.0) <= kMeanSe * sd / std::sqrt(static_cast<double>(n));
  }
  note(o, mean_ok, fmt("E[W]=1 within %.0f SE", kMeanSe));
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&failed](int id, const char* name, const std::function<Outcome()>& run) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s %2d %-28s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds);
    std::fflush(stdout);
  };

  MrwRuns runs;
  report(1, "cascade oracle", cascade_oracle);
  report(2, "MRW baseline", [&runs] {
    runs.nu0 = run_experiment(mrw_config(0.0, 202, {0.5, 2.0, kInfinity}, true));
    return mrw_baseline(runs.nu0);
  });
  report(3, "critical Lebesgue index", critical_index);
  report(4, "bound and bias regime", bound_and_bias);
  report(5, "rmse ordering", [&runs] { return rmse_ordering(runs.nu0); });
  report(6, "MFDFA agreement and bias", [&runs] {
    runs.nu07 = run_experiment(mrw_config(0.7, 207, {1.0}, true));
    return mfdfa_bias(runs);
  });
  report(7, "trend robustness", trend_robustness);
  report(8, "lacunary p-dependence", lacunary);
  report(9, "2D cascades", cascades_2d);
  report(10, "property suites", properties);

  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
