#include "plmf/leaders.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plmf/error.hpp"
#include "plmf/regression.hpp"

namespace plmf {

namespace {

double max_abs_coefficient(const CoefficientPyramid& pyramid) {
  double m = 0.0;
  for (const auto& oct : pyramid.octaves)
    for (const auto& band : oct.bands)
      for (double c : band) m = std::max(m, std::abs(c));
  return m;
}

void check_octave_range(const CoefficientPyramid& pyramid, int j1, int j2) {
  if (j1 < 1 || j2 > pyramid.octave_count() || j2 < j1 + 2)
    throw Error(Errc::insufficient_scales, "octave range [" + std::to_string(j1) + ", " + std::to_string(j2) +
                                               "] needs 3 octaves within 1.." +
                                               std::to_string(pyramid.octave_count()));
  for (int j = j1; j <= j2; ++j)
    if (pyramid.octave(j).n_valid == 0)
      throw Error(Errc::insufficient_scales, "octave " + std::to_string(j) + " has no valid coefficients");
}

RegressionWeights coefficient_weights(const CoefficientPyramid& pyramid, int j1, int j2, WeightScheme scheme) {
  std::vector<double> b;
  for (int j = j1; j <= j2; ++j) {
    const auto& oct = pyramid.octave(j);
    b.push_back(scheme == WeightScheme::counts ? static_cast<double>(oct.n_valid * oct.bands.size()) : 1.0);
  }
  return regression_weights(j1, j2, b);
}

}  // namespace

LeaderPyramid compute_p_leaders(const CoefficientPyramid& pyramid, double p, Neighborhood mode) {
  if (!(p > 0.0)) throw Error(Errc::invalid_parameter, "p must be positive, got " + std::to_string(p));
  if (pyramid.octaves.empty()) throw Error(Errc::invalid_input, "empty coefficient pyramid");
  const int d = pyramid.dimension;
  if (d != 1 && d != 2) throw Error(Errc::invalid_input, "pyramid dimension must be 1 or 2");

  const bool sup = (p == kInfinity);
  // Sums are accumulated on |c| / scale so that large p cannot underflow the
  // dominant terms; the scale is restored after the 1/p root.
  const double scale = max_abs_coefficient(pyramid);
  const double inv_scale = scale > 0.0 ? 1.0 / scale : 1.0;
  const double child_weight = std::pow(2.0, -d);

  LeaderPyramid out;
  out.p = p;
  out.mode = mode;
  out.dimension = d;

  std::vector<double> r_prev;
  std::vector<std::uint8_t> v_prev;
  std::size_t extent_prev = 0;

  for (const auto& oct : pyramid.octaves) {
    const std::size_t n = oct.extent;
    const std::size_t positions = oct.positions();
    std::vector<double> r(positions);
    std::vector<std::uint8_t> v(positions);

    for (std::size_t idx = 0; idx < positions; ++idx) {
      double own = 0.0;
      for (const auto& band : oct.bands) {
        const double a = std::abs(band[idx]) * inv_scale;
        own = sup ? std::max(own, a) : own + std::pow(a, p);
      }
      bool valid = oct.valid[idx] != 0;
      if (!r_prev.empty()) {
        double children = 0.0;
        auto visit = [&](std::size_t child) {
          children = sup ? std::max(children, r_prev[child]) : children + r_prev[child];
          valid = valid && v_prev[child] != 0;
        };
        if (d == 1) {
          visit(2 * idx);
          visit(2 * idx + 1);
        } else {
          const std::size_t row = idx / n;
          const std::size_t col = idx % n;
          for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) visit((2 * row + a) * extent_prev + 2 * col + b);
        }
        own = sup ? std::max(own, children) : own + child_weight * children;
      }
      r[idx] = own;
      v[idx] = valid ? 1 : 0;
    }

    LeaderOctave lo;
    lo.j = oct.j;
    lo.extent = n;
    lo.values.resize(positions);
    lo.valid.resize(positions);
    for (std::size_t idx = 0; idx < positions; ++idx) {
      double acc = 0.0;
      bool valid = true;
      if (mode == Neighborhood::restricted) {
        acc = r[idx];
        valid = v[idx] != 0;
      } else if (d == 1) {
        const std::size_t lo_k = idx == 0 ? 0 : idx - 1;
        const std::size_t hi_k = std::min(idx + 1, n - 1);
        for (std::size_t k = lo_k; k <= hi_k; ++k) {
          acc = sup ? std::max(acc, r[k]) : acc + r[k];
          valid = valid && v[k] != 0;
        }
      } else {
        const std::size_t row = idx / n;
        const std::size_t col = idx % n;
        const std::size_t r0 = row == 0 ? 0 : row - 1;
        const std::size_t r1 = std::min(row + 1, n - 1);
        const std::size_t c0 = col == 0 ? 0 : col - 1;
        const std::size_t c1 = std::min(col + 1, n - 1);
        for (std::size_t rr = r0; rr <= r1; ++rr)
          for (std::size_t cc = c0; cc <= c1; ++cc) {
            const std::size_t k = rr * n + cc;
            acc = sup ? std::max(acc, r[k]) : acc + r[k];
            valid = valid && v[k] != 0;
          }
      }
      lo.values[idx] = scale * (sup ? acc : std::pow(acc, 1.0 / p));
      lo.valid[idx] = valid ? 1 : 0;
      if (valid) ++lo.n_valid;
    }
    out.octaves.push_back(std::move(lo));

    r_prev = std::move(r);
    v_prev = std::move(v);
    extent_prev = n;
  }
  return out;
}

double log2_coefficient_moment(const CoefficientPyramid& pyramid, int j, double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw Error(Errc::invalid_parameter, "p must be positive and finite");
  const auto& oct = pyramid.octave(j);
  // log-sum-exp over p*ln|c|.
  double max_log = -kInfinity;
  std::size_t count = 0;
  for (const auto& band : oct.bands)
    for (std::size_t idx = 0; idx < band.size(); ++idx) {
      if (!oct.valid[idx]) continue;
      ++count;
      const double a = std::abs(band[idx]);
      if (a > 0.0) max_log = std::max(max_log, p * std::log(a));
    }
  if (count == 0) throw Error(Errc::insufficient_scales, "octave " + std::to_string(j) + " has no valid coefficients");
  if (max_log == -kInfinity)
    throw Error(Errc::degenerate_data, "all coefficients vanish at octave " + std::to_string(j));
  double sum = 0.0;
  for (const auto& band : oct.bands)
    for (std::size_t idx = 0; idx < band.size(); ++idx) {
      if (!oct.valid[idx]) continue;
      const double a = std::abs(band[idx]);
      if (a > 0.0) sum += std::exp(p * std::log(a) - max_log);
    }
  return (max_log + std::log(sum) - std::log(static_cast<double>(count))) / std::log(2.0);
}

double eta_hat(const CoefficientPyramid& pyramid, double p, int j1, int j2, WeightScheme scheme) {
  check_octave_range(pyramid, j1, j2);
  const auto w = coefficient_weights(pyramid, j1, j2, scheme);
  std::vector<double> y;
  for (int j = j1; j <= j2; ++j) y.push_back(log2_coefficient_moment(pyramid, j, p));
  return weighted_slope(w, y);
}

double hmin(const CoefficientPyramid& pyramid, int j1, int j2, WeightScheme scheme) {
  check_octave_range(pyramid, j1, j2);
  const auto w = coefficient_weights(pyramid, j1, j2, scheme);
  std::vector<double> y;
  for (int j = j1; j <= j2; ++j) {
    const auto& oct = pyramid.octave(j);
    double m = 0.0;
    for (const auto& band : oct.bands)
      for (std::size_t idx = 0; idx < band.size(); ++idx)
        if (oct.valid[idx]) m = std::max(m, std::abs(band[idx]));
    if (m == 0.0)
      throw Error(Errc::degenerate_data, "supremum of coefficients is zero at octave " + std::to_string(j));
    y.push_back(std::log2(m));
  }
  return weighted_slope(w, y);
}

std::vector<double> default_p0_grid() { return {0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0}; }

WaveletScalingFunction wavelet_scaling_function(const CoefficientPyramid& pyramid, std::span<const double> p_grid,
                                                int j1, int j2, WeightScheme scheme) {
  check_octave_range(pyramid, j1, j2);
  WaveletScalingFunction out;
  out.p_grid.assign(p_grid.begin(), p_grid.end());
  out.j1 = j1;
  out.j2 = j2;
  const auto w = coefficient_weights(pyramid, j1, j2, scheme);
  out.weights = w.w;
  for (double p : p_grid) {
    std::vector<double> y;
    for (int j = j1; j <= j2; ++j) y.push_back(log2_coefficient_moment(pyramid, j, p));
    out.eta.push_back(weighted_slope(w, y));
  }
  return out;
}

double p0_hat(const WaveletScalingFunction& curve) {
  const auto& p = curve.p_grid;
  const auto& eta = curve.eta;
  if (p.size() != eta.size() || p.size() < 2)
    throw Error(Errc::invalid_input, "eta curve needs at least two grid points");
  for (std::size_t i = 1; i < p.size(); ++i)
    if (!(p[i] > p[i - 1])) throw Error(Errc::invalid_input, "p grid must be strictly increasing");

  std::size_t last = p.size();
  for (std::size_t i = p.size(); i-- > 0;)
    if (eta[i] > 0.0) {
      last = i;
      break;
    }
  if (last == p.size()) throw Error(Errc::no_valid_p, "eta(p) <= 0 on the whole grid");

  const std::size_t n = p.size();
  if (last == n - 1) {
    const double slope = (eta[n - 1] - eta[n - 2]) / (p[n - 1] - p[n - 2]);
    if (slope >= 0.0) return kInfinity;
    return p[n - 1] + eta[n - 1] / (-slope);
  }
  const double e0 = eta[last];
  const double e1 = eta[last + 1];
  return p[last] + e0 * (p[last + 1] - p[last]) / (e0 - e1);
}

}  // namespace plmf
