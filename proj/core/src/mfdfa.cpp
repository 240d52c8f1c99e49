#include "plmf/mfdfa.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "plmf/error.hpp"

namespace plmf {

namespace {

// Least-squares detrending of fixed-length windows. Abscissae are centred and
// scaled to [-1, 1] so the Gram matrix stays well conditioned at N_P = 4.
class WindowFit {
 public:
  WindowFit(std::size_t a, int degree) : a_(a), basis_(static_cast<Eigen::Index>(a), degree + 1) {
    const double mid = 0.5 * static_cast<double>(a - 1);
    const double half = std::max(mid, 1.0);
    for (std::size_t i = 0; i < a; ++i) {
      const double t = (static_cast<double>(i) - mid) / half;
      double v = 1.0;
      for (int m = 0; m <= degree; ++m) {
        basis_(static_cast<Eigen::Index>(i), m) = v;
        v *= t;
      }
    }
    gram_.compute(basis_.transpose() * basis_);
  }

  double rms_residual(const double* y) const {
    const Eigen::Map<const Eigen::VectorXd> v(y, static_cast<Eigen::Index>(a_));
    const Eigen::VectorXd coef = gram_.solve(basis_.transpose() * v);
    const Eigen::VectorXd r = v - basis_ * coef;
    return std::sqrt(r.squaredNorm() / static_cast<double>(a_));
  }

 private:
  std::size_t a_;
  Eigen::MatrixXd basis_;
  Eigen::LDLT<Eigen::MatrixXd> gram_;
};

}  // namespace

std::vector<double> profile(std::span<const double> signal) {
  double mean = 0.0;
  for (double v : signal) mean += v;
  if (!signal.empty()) mean /= static_cast<double>(signal.size());
  std::vector<double> out(signal.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    acc += signal[i] - mean;
    out[i] = acc;
  }
  return out;
}

bool mfdfa_scale_admissible(std::size_t a, int degree) {
  return degree >= 0 && a >= static_cast<std::size_t>(degree) + 2;
}

int mfdfa_lost_octaves(int degree) {
  if (degree < 0) throw Error(Errc::invalid_parameter, "polynomial degree must be non-negative");
  int c = 0;
  while ((1 << c) < degree + 2) ++c;
  return c - 1;
}

std::vector<std::size_t> default_mfdfa_scales(std::size_t n, int degree) {
  std::vector<std::size_t> out;
  for (std::size_t a = 2; a <= n / 4; a *= 2)
    if (mfdfa_scale_admissible(a, degree)) out.push_back(a);
  return out;
}

FluctuationTable fluctuations(std::span<const double> series, std::span<const std::size_t> scales,
                              const FluctuationOptions& options) {
  if (options.degree < 0) throw Error(Errc::invalid_parameter, "polynomial degree must be non-negative");
  if (scales.empty()) throw Error(Errc::invalid_parameter, "no MFDFA scales given");
  for (double v : series)
    if (!std::isfinite(v)) throw Error(Errc::invalid_input, "series contains non-finite values");
  const std::size_t n = series.size();

  std::vector<double> data = options.integrate ? profile(series) : std::vector<double>(series.begin(), series.end());

  FluctuationTable table;
  table.degree = options.degree;
  table.integrated = options.integrate;
  table.both_ends = options.both_ends;
  for (std::size_t a : scales) {
    if (!mfdfa_scale_admissible(a, options.degree))
      throw Error(Errc::scale_too_small, "window of " + std::to_string(a) + " samples cannot fit degree " +
                                             std::to_string(options.degree) + " (needs >= " +
                                             std::to_string(options.degree + 2) + ")");
    if (a > n / 4)
      throw Error(Errc::insufficient_data,
                  "window of " + std::to_string(a) + " samples exceeds a quarter of the series (" +
                      std::to_string(n) + ")");
    const WindowFit fit(a, options.degree);
    const std::size_t windows = n / a;
    std::vector<double> row;
    row.reserve(options.both_ends ? 2 * windows : windows);
    for (std::size_t k = 0; k < windows; ++k) row.push_back(fit.rms_residual(data.data() + k * a));
    if (options.both_ends)
      for (std::size_t k = 0; k < windows; ++k) row.push_back(fit.rms_residual(data.data() + n - (k + 1) * a));
    table.scales.push_back(a);
    table.values.push_back(std::move(row));
  }
  return table;
}

Multiresolution to_multiresolution(const FluctuationTable& table) {
  Multiresolution mr;
  mr.dimension = 1;
  mr.source = MultiresolutionSource::mfdfa;
  for (std::size_t s = 0; s < table.scales.size(); ++s) {
    MultiresolutionLevel lvl;
    lvl.x = std::log2(static_cast<double>(table.scales[s]));
    lvl.values = table.values[s];
    mr.levels.push_back(std::move(lvl));
  }
  return mr;
}

RegressionWeights mfdfa_weights(const FluctuationTable& table, std::size_t a_min, std::size_t a_max,
                                WeightScheme scheme) {
  std::vector<double> x;
  std::vector<double> b;
  for (std::size_t s = 0; s < table.scales.size(); ++s) {
    const std::size_t a = table.scales[s];
    if (a < a_min || a > a_max) continue;
    x.push_back(std::log2(static_cast<double>(a)));
    b.push_back(scheme == WeightScheme::counts ? static_cast<double>(table.values[s].size()) : 1.0);
  }
  auto w = regression_weights_at(x, b);
  w.j1 = static_cast<int>(std::lround(x.front()));
  w.j2 = static_cast<int>(std::lround(x.back()));
  return w;
}

MfdfaResult mfdfa_analyze(const FluctuationTable& table, std::span<const double> q_grid,
                          const RegressionWeights& weights) {
  const auto mr = to_multiresolution(table);
  const Correction none;
  MfdfaResult out;
  auto& est = out.estimates;
  est.p = 2.0;
  est.corrected = false;
  est.j1 = weights.j1;
  est.j2 = weights.j2;
  est.q.assign(q_grid.begin(), q_grid.end());
  est.weights = weights;
  est.zeta = zeta_hat(structure_functions(mr, q_grid), weights, none);
  est.c = cm_hat(cumulants(mr, 4), weights, none);
  out.spectrum = legendre_parametric(mr, q_grid, weights, none);
  return out;
}

double dfa_exponent(const FluctuationTable& table, const RegressionWeights& weights) {
  std::vector<double> y;
  for (double wx : weights.x) {
    std::size_t s = 0;
    while (s < table.scales.size() && std::abs(std::log2(static_cast<double>(table.scales[s])) - wx) > 1e-9) ++s;
    if (s == table.scales.size())
      throw Error(Errc::invalid_parameter, "regression scale absent from the fluctuation table");
    double f2 = 0.0;
    for (double t : table.values[s]) f2 += t * t;
    f2 /= static_cast<double>(table.values[s].size());
    y.push_back(0.5 * std::log2(f2));
  }
  return weighted_slope(weights, y);
}

}  // namespace plmf
