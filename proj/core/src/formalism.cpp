#include "plmf/formalism.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "plmf/error.hpp"

namespace plmf {

namespace {

std::string level_name(const Multiresolution& mr, double x) {
  if (mr.source == MultiresolutionSource::mfdfa) return "scale 2^" + std::to_string(x);
  return "octave " + std::to_string(static_cast<int>(std::lround(x)));
}

// Index of each regression abscissa in the table's level list.
std::vector<std::size_t> match_levels(const RegressionWeights& weights, const std::vector<double>& x) {
  std::vector<std::size_t> rows;
  for (double wx : weights.x) {
    auto it = std::find_if(x.begin(), x.end(), [wx](double v) { return std::abs(v - wx) < 1e-9; });
    if (it == x.end())
      throw Error(Errc::invalid_parameter, "regression scale " + std::to_string(wx) + " absent from the table");
    rows.push_back(static_cast<std::size_t>(it - x.begin()));
  }
  return rows;
}

std::vector<std::size_t> used_levels(const Multiresolution& mr, const RegressionWeights& weights) {
  std::vector<double> x;
  for (const auto& lvl : mr.levels) x.push_back(lvl.x);
  return match_levels(weights, x);
}

void require_positive(const Multiresolution& mr, const MultiresolutionLevel& lvl, const char* why) {
  for (double v : lvl.values)
    if (!(v > 0.0))
      throw Error(Errc::degenerate_data,
                  "zero multiresolution quantity at " + level_name(mr, lvl.x) + " (" + why + ")");
}

// log2 of the mean of v^q over a level; q = 0 gives exactly 0.
double log2_mean_power(const Multiresolution& mr, const MultiresolutionLevel& lvl, double q) {
  if (lvl.values.empty())
    throw Error(Errc::insufficient_scales, "no valid values at " + level_name(mr, lvl.x));
  if (q == 0.0) return 0.0;
  if (q < 0.0) require_positive(mr, lvl, "negative moment order");
  double max_log = -kInfinity;
  for (double v : lvl.values)
    if (v > 0.0) max_log = std::max(max_log, q * std::log(v));
  if (max_log == -kInfinity)
    throw Error(Errc::degenerate_data, "all quantities vanish at " + level_name(mr, lvl.x));
  double sum = 0.0;
  for (double v : lvl.values)
    if (v > 0.0) sum += std::exp(q * std::log(v) - max_log);
  return (max_log + std::log(sum) - std::log(static_cast<double>(lvl.values.size()))) / std::numbers::ln2;
}

}  // namespace

std::string to_string(MultiresolutionSource source) {
  switch (source) {
    case MultiresolutionSource::leader:
      return "leader";
    case MultiresolutionSource::coefficient:
      return "coefficient";
    case MultiresolutionSource::mfdfa:
      return "mfdfa";
  }
  return "unknown";
}

Multiresolution to_multiresolution(const LeaderPyramid& leaders) {
  Multiresolution mr;
  mr.dimension = leaders.dimension;
  mr.source = MultiresolutionSource::leader;
  for (const auto& oct : leaders.octaves) {
    MultiresolutionLevel lvl;
    lvl.x = oct.j;
    lvl.values.reserve(oct.n_valid);
    for (std::size_t k = 0; k < oct.values.size(); ++k)
      if (oct.valid[k]) lvl.values.push_back(oct.values[k]);
    mr.levels.push_back(std::move(lvl));
  }
  return mr;
}

Multiresolution to_multiresolution(const CoefficientPyramid& pyramid) {
  Multiresolution mr;
  mr.dimension = pyramid.dimension;
  mr.source = MultiresolutionSource::coefficient;
  for (const auto& oct : pyramid.octaves) {
    MultiresolutionLevel lvl;
    lvl.x = oct.j;
    for (const auto& band : oct.bands)
      for (std::size_t k = 0; k < band.size(); ++k)
        if (oct.valid[k]) lvl.values.push_back(std::abs(band[k]));
    mr.levels.push_back(std::move(lvl));
  }
  return mr;
}

std::vector<double> default_q_grid() {
  std::vector<double> q;
  for (int i = 0; i <= 40; ++i) q.push_back(-5.0 + 0.25 * i);
  return q;
}

int default_j2(const LeaderPyramid& leaders, std::size_t min_valid) {
  int j2 = 0;
  for (const auto& oct : leaders.octaves)
    if (oct.n_valid >= min_valid) j2 = oct.j;
  return j2;
}

int default_j1(int dimension) { return dimension == 2 ? 3 : 4; }

RegressionWeights leader_weights(const LeaderPyramid& leaders, int j1, int j2, WeightScheme scheme) {
  if (j1 < 1 || j2 > leaders.octave_count() || j2 < j1 + 2)
    throw Error(Errc::insufficient_scales, "octave range [" + std::to_string(j1) + ", " + std::to_string(j2) +
                                               "] needs 3 octaves within 1.." +
                                               std::to_string(leaders.octave_count()));
  std::vector<double> b;
  for (int j = j1; j <= j2; ++j) {
    const auto n = leaders.octave(j).n_valid;
    if (n == 0)
      throw Error(Errc::insufficient_scales, "octave " + std::to_string(j) + " has no valid leaders");
    b.push_back(scheme == WeightScheme::counts ? static_cast<double>(n) : 1.0);
  }
  return regression_weights(j1, j2, b);
}

StructureFunctionTable structure_functions(const Multiresolution& mr, std::span<const double> q_grid) {
  StructureFunctionTable t;
  t.source = mr.source;
  t.q.assign(q_grid.begin(), q_grid.end());
  for (const auto& lvl : mr.levels) {
    t.x.push_back(lvl.x);
    t.n.push_back(lvl.values.size());
    std::vector<double> row;
    row.reserve(q_grid.size());
    if (lvl.values.empty()) {
      row.assign(q_grid.size(), std::nan(""));
    } else {
      for (double q : q_grid) row.push_back(log2_mean_power(mr, lvl, q));
    }
    t.log2_s.push_back(std::move(row));
  }
  return t;
}

StructureFunctionTable structure_functions(const LeaderPyramid& leaders, std::span<const double> q_grid) {
  return structure_functions(to_multiresolution(leaders), q_grid);
}

CumulantTable cumulants(const Multiresolution& mr, int m_max) {
  if (m_max < 1 || m_max > 4) throw Error(Errc::invalid_parameter, "cumulant order must be within 1..4");
  CumulantTable t;
  t.source = mr.source;
  t.m_max = m_max;
  for (const auto& lvl : mr.levels) {
    t.x.push_back(lvl.x);
    t.n.push_back(lvl.values.size());
    std::array<double, 4> c{};
    if (lvl.values.empty()) {
      c.fill(std::nan(""));
      t.c.push_back(c);
      continue;
    }
    require_positive(mr, lvl, "logarithm");
    const double n = static_cast<double>(lvl.values.size());
    double mean = 0.0;
    for (double v : lvl.values) mean += std::log(v);
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : lvl.values) {
      const double e = std::log(v) - mean;
      const double e2 = e * e;
      m2 += e2;
      m3 += e2 * e;
      m4 += e2 * e2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    c[0] = mean;
    if (m_max >= 2) c[1] = m2;
    if (m_max >= 3) c[2] = m3;
    if (m_max >= 4) c[3] = m4 - 3.0 * m2 * m2;
    t.c.push_back(c);
  }
  return t;
}

CumulantTable cumulants(const LeaderPyramid& leaders, int m_max) {
  return cumulants(to_multiresolution(leaders), m_max);
}

double correction_term(const Correction& corr, double j) {
  if (!corr.active()) return 0.0;
  if (!(corr.eta_p > 0.0) || !std::isfinite(corr.eta_p))
    throw Error(Errc::invalid_correction,
                "finite-size correction needs eta(p) > 0, got " + std::to_string(corr.eta_p));
  return std::log2(1.0 - std::exp2(-j * corr.eta_p)) / corr.p;
}

std::vector<double> zeta_hat(const StructureFunctionTable& table, const RegressionWeights& weights,
                             const Correction& corr) {
  const auto rows = match_levels(weights, table.x);
  std::vector<double> zeta(table.q.size(), 0.0);
  for (std::size_t iq = 0; iq < table.q.size(); ++iq) {
    const double q = table.q[iq];
    double s = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double y = table.log2_s[rows[i]][iq] - q * correction_term(corr, weights.x[i]);
      s += weights.w[i] * y;
    }
    zeta[iq] = q == 0.0 ? 0.0 : s;
  }
  return zeta;
}

std::array<double, 4> cm_hat(const CumulantTable& table, const RegressionWeights& weights, const Correction& corr) {
  const auto rows = match_levels(weights, table.x);
  std::array<double, 4> out{};
  for (int m = 1; m <= table.m_max; ++m) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double y = table.c[rows[i]][static_cast<std::size_t>(m - 1)];
      // The constant log(1 - 2^{-eta}) cancels against sum(w) = 0.
      if (m == 1) y -= correction_term(corr, weights.x[i]) * std::numbers::ln2;
      s += weights.w[i] * y;
    }
    out[static_cast<std::size_t>(m - 1)] = s / std::numbers::ln2;
  }
  return out;
}

LegendreSpectrum legendre_parametric(const Multiresolution& mr, std::span<const double> q_grid,
                                     const RegressionWeights& weights, const Correction& corr) {
  const auto rows = used_levels(mr, weights);
  LegendreSpectrum spec;
  spec.dimension = mr.dimension;
  spec.q.assign(q_grid.begin(), q_grid.end());
  spec.h.assign(q_grid.size(), 0.0);
  spec.L.assign(q_grid.size(), 0.0);

  const bool has_nonpositive_q = std::any_of(q_grid.begin(), q_grid.end(), [](double q) { return q <= 0.0; });
  std::vector<std::vector<double>> logs(rows.size());
  std::vector<double> counts(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& lvl = mr.levels[rows[i]];
    if (lvl.values.empty())
      throw Error(Errc::insufficient_scales, "no valid values at " + level_name(mr, lvl.x));
    counts[i] = static_cast<double>(lvl.values.size());
    logs[i].reserve(lvl.values.size());
    for (double v : lvl.values)
      if (v > 0.0) logs[i].push_back(std::log2(v));
    if (logs[i].size() != lvl.values.size() && has_nonpositive_q)
      require_positive(mr, lvl, "non-positive moment order");
    if (logs[i].empty()) throw Error(Errc::degenerate_data, "all quantities vanish at " + level_name(mr, lvl.x));
  }

  for (std::size_t iq = 0; iq < q_grid.size(); ++iq) {
    const double q = q_grid[iq];
    double h = 0.0;
    double L = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& lg = logs[i];
      double mx = -kInfinity;
      for (double v : lg) mx = std::max(mx, q * v);
      double z = 0.0;
      for (double v : lg) z += std::exp2(q * v - mx);
      const double log2_z = std::log2(z);
      double mean_log = 0.0;
      double entropy = 0.0;
      for (double v : lg) {
        const double log2_r = q * v - mx - log2_z;
        const double r = std::exp2(log2_r);
        mean_log += r * v;
        entropy += r * log2_r;
      }
      h += weights.w[i] * (mean_log - correction_term(corr, weights.x[i]));
      L += weights.w[i] * (entropy + std::log2(counts[i]));
    }
    spec.h[iq] = h;
    spec.L[iq] = mr.dimension + L;
  }
  return spec;
}

LegendreSpectrum legendre_parametric(const LeaderPyramid& leaders, std::span<const double> q_grid,
                                     const RegressionWeights& weights, const Correction& corr) {
  return legendre_parametric(to_multiresolution(leaders), q_grid, weights, corr);
}

LegendreSpectrum legendre_from_scaling(std::span<const double> q, std::span<const double> zeta, int dimension) {
  if (q.size() != zeta.size() || q.size() < 3)
    throw Error(Errc::invalid_input, "Legendre transform needs at least 3 matching (q, zeta) samples");
  LegendreSpectrum spec;
  spec.dimension = dimension;
  spec.q.assign(q.begin(), q.end());
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    double h;
    if (i == 0) {
      h = (zeta[1] - zeta[0]) / (q[1] - q[0]);
    } else if (i == n - 1) {
      h = (zeta[n - 1] - zeta[n - 2]) / (q[n - 1] - q[n - 2]);
    } else {
      // Three-point derivative on a possibly non-uniform grid.
      const double a = q[i] - q[i - 1];
      const double b = q[i + 1] - q[i];
      h = (a * a * zeta[i + 1] - b * b * zeta[i - 1] + (b * b - a * a) * zeta[i]) / (a * b * (a + b));
    }
    spec.h.push_back(h);
    spec.L.push_back(dimension + q[i] * h - zeta[i]);
  }
  return spec;
}

BoundReport check_bound(const LegendreSpectrum& spectrum, double p, int dimension, double tol) {
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(Errc::invalid_parameter, "bound check needs a finite p > 0");
  BoundReport report;
  for (std::size_t i = 0; i < spectrum.h.size(); ++i) {
    const double h = spectrum.h[i];
    if (h > 0.0) continue;
    const double excess = spectrum.L[i] - (dimension + h * p);
    if (excess > tol) {
      report.violations.push_back(i);
      report.max_violation = std::max(report.max_violation, excess);
    }
  }
  return report;
}

LegendreSpectrum cm_to_spectrum(const std::array<double, 4>& c, int dimension, std::size_t samples) {
  const double c1 = c[0], c2 = c[1], c3 = c[2], c4 = c[3];
  if (!(c2 < 0.0))
    throw Error(Errc::invalid_expansion, "log-cumulant expansion needs c2 < 0, got " + std::to_string(c2));
  if (samples < 2) throw Error(Errc::invalid_parameter, "need at least two spectrum samples");
  const double k2 = c2;
  const double k3 = -c3;
  const double k4 = -c4 + 3.0 * c3 * c3 / c2;
  const double half_width = std::sqrt(-2.0 * dimension * c2);
  LegendreSpectrum spec;
  spec.dimension = dimension;
  for (std::size_t i = 0; i < samples; ++i) {
    const double h = c1 - half_width + 2.0 * half_width * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double u = (h - c1) / c2;
    const double u2 = u * u;
    spec.h.push_back(h);
    spec.L.push_back(dimension + k2 / 2.0 * u2 + k3 / 6.0 * u2 * u + k4 / 24.0 * u2 * u2);
  }
  return spec;
}

double concavity_violation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::invalid_input, "concavity check needs matching samples");
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double t = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
    const double chord = (1.0 - t) * y[i - 1] + t * y[i + 1];
    worst = std::max(worst, chord - y[i]);
  }
  return worst;
}

LeaderAnalysis analyze_leaders(const LeaderPyramid& leaders, std::span<const double> q_grid,
                               const RegressionWeights& weights, const Correction& corr) {
  const auto mr = to_multiresolution(leaders);
  LeaderAnalysis out;
  auto& est = out.estimates;
  est.p = leaders.p;
  est.eta_p = corr.eta_p;
  est.corrected = corr.active();
  est.j1 = weights.j1;
  est.j2 = weights.j2;
  est.q.assign(q_grid.begin(), q_grid.end());
  est.weights = weights;
  est.zeta = zeta_hat(structure_functions(mr, q_grid), weights, corr);
  Multiresolution in_range = mr;
  in_range.levels.clear();
  for (std::size_t row : used_levels(mr, weights)) in_range.levels.push_back(mr.levels[row]);
  try {
    est.c = cm_hat(cumulants(in_range, 4), weights, corr);
  } catch (const Error& e) {
    if (e.code() != Errc::degenerate_data) throw;
    est.c.fill(std::nan(""));
  }
  out.spectrum = legendre_parametric(mr, q_grid, weights, corr);
  return out;
}

}  // namespace plmf
