#include "plmf/dwt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Core>
#include <unsupported/Eigen/Polynomials>

#include "plmf/error.hpp"

namespace plmf {

namespace {

using cld = std::complex<long double>;

cld eval_poly(const std::vector<long double>& ascending, cld x, cld* derivative) {
  cld value = 0;
  cld slope = 0;
  for (auto it = ascending.rbegin(); it != ascending.rend(); ++it) {
    slope = slope * x + value;
    value = value * x + *it;
  }
  if (derivative) *derivative = slope;
  return value;
}

std::size_t ceil_log2(std::size_t v) {
  std::size_t r = 0;
  while ((std::size_t{1} << r) < v) ++r;
  return r;
}

std::size_t floor_log2(std::size_t v) {
  std::size_t r = 0;
  while ((v >> (r + 1)) != 0) ++r;
  return r;
}

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

// One periodic analysis step: a[k] = sum h[m] x[2k+m], d[k] = sum g[m] x[2k+m].
void analyze_step(const double* x, std::size_t n, std::size_t stride, const std::vector<double>& h,
                  const std::vector<double>& g, double* a, double* d, std::size_t out_stride) {
  const std::size_t half = n / 2;
  const std::size_t len = h.size();
  for (std::size_t k = 0; k < half; ++k) {
    double sa = 0.0;
    double sd = 0.0;
    std::size_t idx = (2 * k) % n;
    for (std::size_t m = 0; m < len; ++m) {
      const double v = x[idx * stride];
      sa += h[m] * v;
      sd += g[m] * v;
      if (++idx == n) idx = 0;
    }
    a[k * out_stride] = sa;
    d[k * out_stride] = sd;
  }
}

// Adjoint of analyze_step (exact inverse since the periodic filter bank is orthogonal).
void synthesize_step(const double* a, const double* d, std::size_t half, std::size_t in_stride,
                     const std::vector<double>& h, const std::vector<double>& g, double* x,
                     std::size_t stride) {
  const std::size_t n = 2 * half;
  const std::size_t len = h.size();
  for (std::size_t i = 0; i < n; ++i) x[i * stride] = 0.0;
  for (std::size_t k = 0; k < half; ++k) {
    const double av = a[k * in_stride];
    const double dv = d[k * in_stride];
    std::size_t idx = (2 * k) % n;
    for (std::size_t m = 0; m < len; ++m) {
      x[idx * stride] += h[m] * av + g[m] * dv;
      if (++idx == n) idx = 0;
    }
  }
}

CoefficientOctave make_octave(int j, std::size_t extent, int dimension, std::size_t prefix) {
  CoefficientOctave oct;
  oct.j = j;
  oct.extent = extent;
  oct.valid_prefix = std::min(prefix, extent);
  const std::size_t positions = dimension == 1 ? extent : extent * extent;
  oct.bands.assign(dimension == 1 ? 1 : 3, std::vector<double>(positions, 0.0));
  oct.valid.assign(positions, 0);
  if (dimension == 1) {
    for (std::size_t k = 0; k < oct.valid_prefix; ++k) oct.valid[k] = 1;
    oct.n_valid = oct.valid_prefix;
  } else {
    for (std::size_t r = 0; r < oct.valid_prefix; ++r)
      for (std::size_t c = 0; c < oct.valid_prefix; ++c) oct.valid[r * extent + c] = 1;
    oct.n_valid = oct.valid_prefix * oct.valid_prefix;
  }
  return oct;
}

double l1_factor(int j, int dimension) {
  // L2 -> L1 normalisation: 2^{-dj/2}.
  return std::pow(2.0, -0.5 * dimension * j);
}

void check_pyramid(const CoefficientPyramid& pyramid, std::span<const double> approx, int dimension) {
  if (pyramid.dimension != dimension)
    throw Error(Errc::invalid_input, "pyramid dimension mismatch");
  if (pyramid.octaves.empty()) throw Error(Errc::invalid_input, "empty pyramid");
  if (pyramid.filter.lowpass.empty()) throw Error(Errc::invalid_input, "pyramid carries no filter");
  std::size_t extent = pyramid.sample_count;
  for (const auto& oct : pyramid.octaves) {
    extent /= 2;
    const std::size_t positions = dimension == 1 ? extent : extent * extent;
    if (oct.extent != extent || oct.bands.size() != (dimension == 1 ? 1u : 3u))
      throw Error(Errc::invalid_input, "inconsistent octave shape at j=" + std::to_string(oct.j));
    for (const auto& band : oct.bands)
      if (band.size() != positions)
        throw Error(Errc::invalid_input, "inconsistent band size at j=" + std::to_string(oct.j));
  }
  const std::size_t expect = dimension == 1 ? extent : extent * extent;
  if (approx.size() != expect)
    throw Error(Errc::invalid_input, "approximation length " + std::to_string(approx.size()) +
                                         " does not match coarsest octave (" + std::to_string(expect) + ")");
}

}  // namespace

std::vector<double> WaveletFilter::highpass() const {
  const std::size_t len = lowpass.size();
  std::vector<double> g(len);
  for (std::size_t m = 0; m < len; ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    g[m] = sign * lowpass[len - 1 - m];
  }
  return g;
}

WaveletFilter daubechies_filter(int n) {
  if (n < 1 || n > 10)
    throw Error(Errc::unsupported_filter,
                "Daubechies filters are available for 1..10 vanishing moments, got " + std::to_string(n));

  // Daubechies polynomial P(y) = sum_k C(n-1+k, k) y^k, y = sin^2(w/2).
  std::vector<long double> p(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    long double binom = 1;
    for (int i = 1; i <= k; ++i) binom = binom * (n - 1 + i) / i;
    p[static_cast<std::size_t>(k)] = binom;
  }

  std::vector<cld> zeros;
  if (n > 1) {
    Eigen::VectorXd coeffs(n);
    for (int k = 0; k < n; ++k) coeffs[k] = static_cast<double>(p[static_cast<std::size_t>(k)]);
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
    solver.compute(coeffs);
    for (Eigen::Index i = 0; i < solver.roots().size(); ++i) {
      cld y(solver.roots()[i].real(), solver.roots()[i].imag());
      for (int it = 0; it < 8; ++it) {
        cld dp;
        const cld v = eval_poly(p, y, &dp);
        if (std::abs(dp) == 0) break;
        y -= v / dp;
      }
      // z + 1/z = 2 - 4y; keep the root inside the unit circle.
      const cld b = cld(2) - cld(4) * y;
      const cld disc = std::sqrt(b * b - cld(4));
      const cld z1 = (b + disc) / cld(2);
      const cld z2 = (b - disc) / cld(2);
      zeros.push_back(std::abs(z1) < std::abs(z2) ? z1 : z2);
    }
  }

  std::vector<cld> poly{cld(1)};
  auto multiply = [&poly](cld root) {  // poly *= (z - root)
    std::vector<cld> next(poly.size() + 1, cld(0));
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i + 1] += poly[i];
      next[i] -= root * poly[i];
    }
    poly = std::move(next);
  };
  for (int i = 0; i < n; ++i) multiply(cld(-1));
  for (const auto& z : zeros) multiply(z);

  const std::size_t len = poly.size();
  std::vector<long double> taps(len);
  long double sum = 0;
  for (std::size_t k = 0; k < len; ++k) {
    taps[k] = poly[len - 1 - k].real();
    sum += taps[k];
  }
  const long double scale = std::sqrt(2.0L) / sum;

  WaveletFilter f;
  f.family = "daubechies";
  f.vanishing_moments = n;
  f.lowpass.resize(len);
  for (std::size_t k = 0; k < len; ++k) f.lowpass[k] = static_cast<double>(taps[k] * scale);
  return f;
}

std::vector<std::size_t> valid_prefixes(std::size_t n, std::size_t filter_length, int octaves) {
  std::vector<std::size_t> out;
  std::size_t v = n;
  std::size_t extent = n;
  for (int j = 1; j <= octaves; ++j) {
    extent /= 2;
    v = v >= filter_length ? (v - filter_length) / 2 + 1 : 0;
    v = std::min(v, extent);
    out.push_back(v);
  }
  return out;
}

int analysis_depth(std::size_t sample_count, std::size_t filter_length, int dimension,
                   std::optional<int> max_octaves) {
  if (sample_count < 2 || filter_length < 2) return 0;
  int depth = static_cast<int>(floor_log2(sample_count)) - static_cast<int>(ceil_log2(filter_length));
  if (max_octaves) depth = std::min(depth, *max_octaves);
  for (; depth >= 1; --depth) {
    const std::size_t usable = (sample_count >> depth) << depth;
    const auto prefix = valid_prefixes(usable, filter_length, depth);
    std::size_t count = prefix.back();
    if (dimension == 2) count *= count;
    if (count >= 8) break;
  }
  return std::max(depth, 0);
}

CoefficientPyramid dwt1d(std::span<const double> signal, const WaveletFilter& filter,
                         std::optional<int> max_octaves) {
  const std::size_t len = filter.length();
  if (len < 2) throw Error(Errc::invalid_input, "filter has fewer than two taps");
  if (signal.size() < 2 * len)
    throw Error(Errc::insufficient_data, "signal of length " + std::to_string(signal.size()) +
                                             " is shorter than twice the filter length");
  for (double v : signal)
    if (!std::isfinite(v)) throw Error(Errc::invalid_input, "signal contains non-finite values");
  if (max_octaves && *max_octaves < 1) throw Error(Errc::invalid_parameter, "max_octaves must be >= 1");

  const int depth = analysis_depth(signal.size(), len, 1, max_octaves);
  if (depth < 1) throw Error(Errc::insufficient_data, "signal too short for a single valid octave");

  const std::size_t usable = (signal.size() >> depth) << depth;
  const auto prefix = valid_prefixes(usable, len, depth);
  const auto g = filter.highpass();

  CoefficientPyramid pyr;
  pyr.dimension = 1;
  pyr.sample_count = usable;
  pyr.filter = filter;

  std::vector<double> current(signal.begin(), signal.begin() + static_cast<std::ptrdiff_t>(usable));
  std::vector<double> next;
  for (int j = 1; j <= depth; ++j) {
    const std::size_t half = current.size() / 2;
    CoefficientOctave oct = make_octave(j, half, 1, prefix[static_cast<std::size_t>(j - 1)]);
    next.assign(half, 0.0);
    analyze_step(current.data(), current.size(), 1, filter.lowpass, g, next.data(), oct.bands[0].data(), 1);
    const double factor = l1_factor(j, 1);
    for (double& c : oct.bands[0]) c *= factor;
    pyr.octaves.push_back(std::move(oct));
    current.swap(next);
  }
  pyr.approx = std::move(current);
  return pyr;
}

CoefficientPyramid dwt2d(const Field2d& field, const WaveletFilter& filter, std::optional<int> max_octaves) {
  const std::size_t len = filter.length();
  const std::size_t side = field.side;
  if (field.values.size() != side * side)
    throw Error(Errc::invalid_input, "field is not square (" + std::to_string(field.values.size()) +
                                         " values for side " + std::to_string(side) + ")");
  if (!is_power_of_two(side)) throw Error(Errc::invalid_input, "field side must be a power of two");
  if (side < 4 * len)
    throw Error(Errc::insufficient_data, "field side " + std::to_string(side) + " below 4x filter length");
  for (double v : field.values)
    if (!std::isfinite(v)) throw Error(Errc::invalid_input, "field contains non-finite values");
  if (max_octaves && *max_octaves < 1) throw Error(Errc::invalid_parameter, "max_octaves must be >= 1");

  const int depth = analysis_depth(side, len, 2, max_octaves);
  if (depth < 1) throw Error(Errc::insufficient_data, "field too small for a single valid octave");
  const auto prefix = valid_prefixes(side, len, depth);
  const auto g = filter.highpass();

  CoefficientPyramid pyr;
  pyr.dimension = 2;
  pyr.sample_count = side;
  pyr.filter = filter;

  std::vector<double> current = field.values;
  std::size_t s = side;
  for (int j = 1; j <= depth; ++j) {
    const std::size_t half = s / 2;
    // Rows first: lo/hi are s rows by half columns.
    std::vector<double> lo(s * half), hi(s * half);
    for (std::size_t r = 0; r < s; ++r)
      analyze_step(current.data() + r * s, s, 1, filter.lowpass, g, lo.data() + r * half, hi.data() + r * half, 1);
    CoefficientOctave oct = make_octave(j, half, 2, prefix[static_cast<std::size_t>(j - 1)]);
    std::vector<double> ll(half * half);
    // Columns of lo -> ll (approx) and band 1 (high along rows).
    for (std::size_t c = 0; c < half; ++c) {
      analyze_step(lo.data() + c, s, half, filter.lowpass, g, ll.data() + c, oct.bands[1].data() + c, half);
      analyze_step(hi.data() + c, s, half, filter.lowpass, g, oct.bands[0].data() + c, oct.bands[2].data() + c,
                   half);
    }
    const double factor = l1_factor(j, 2);
    for (auto& band : oct.bands)
      for (double& v : band) v *= factor;
    pyr.octaves.push_back(std::move(oct));
    current.swap(ll);
    s = half;
  }
  pyr.approx = std::move(current);
  return pyr;
}

std::vector<double> idwt1d(const CoefficientPyramid& pyramid, std::span<const double> approx) {
  check_pyramid(pyramid, approx, 1);
  const auto& h = pyramid.filter.lowpass;
  const auto g = pyramid.filter.highpass();
  std::vector<double> current(approx.begin(), approx.end());
  std::vector<double> detail;
  std::vector<double> next;
  for (int j = pyramid.octave_count(); j >= 1; --j) {
    const auto& oct = pyramid.octave(j);
    const double factor = 1.0 / l1_factor(j, 1);
    detail.resize(oct.extent);
    for (std::size_t k = 0; k < oct.extent; ++k) detail[k] = oct.bands[0][k] * factor;
    next.assign(2 * oct.extent, 0.0);
    synthesize_step(current.data(), detail.data(), oct.extent, 1, h, g, next.data(), 1);
    current.swap(next);
  }
  return current;
}

Field2d idwt2d(const CoefficientPyramid& pyramid, std::span<const double> approx) {
  check_pyramid(pyramid, approx, 2);
  const auto& h = pyramid.filter.lowpass;
  const auto g = pyramid.filter.highpass();
  std::vector<double> current(approx.begin(), approx.end());
  for (int j = pyramid.octave_count(); j >= 1; --j) {
    const auto& oct = pyramid.octave(j);
    const std::size_t half = oct.extent;
    const std::size_t s = 2 * half;
    const double factor = 1.0 / l1_factor(j, 2);
    std::vector<std::vector<double>> bands(3);
    for (int b = 0; b < 3; ++b) {
      bands[static_cast<std::size_t>(b)] = oct.bands[static_cast<std::size_t>(b)];
      for (double& v : bands[static_cast<std::size_t>(b)]) v *= factor;
    }
    std::vector<double> lo(s * half), hi(s * half);
    for (std::size_t c = 0; c < half; ++c) {
      synthesize_step(current.data() + c, bands[1].data() + c, half, half, h, g, lo.data() + c, half);
      synthesize_step(bands[0].data() + c, bands[2].data() + c, half, half, h, g, hi.data() + c, half);
    }
    std::vector<double> out(s * s);
    for (std::size_t r = 0; r < s; ++r)
      synthesize_step(lo.data() + r * half, hi.data() + r * half, half, 1, h, g, out.data() + r * s, 1);
    current.swap(out);
  }
  Field2d field;
  field.side = pyramid.sample_count;
  field.values = std::move(current);
  return field;
}

CoefficientPyramid zero_pyramid(int dimension, std::size_t sample_count, const WaveletFilter& filter,
                                int octaves) {
  if (dimension != 1 && dimension != 2) throw Error(Errc::invalid_parameter, "dimension must be 1 or 2");
  if (octaves < 1) throw Error(Errc::invalid_parameter, "octaves must be >= 1");
  if (((sample_count >> octaves) << octaves) != sample_count || (sample_count >> octaves) < filter.length())
    throw Error(Errc::invalid_parameter, "sample count " + std::to_string(sample_count) +
                                             " incompatible with " + std::to_string(octaves) + " octaves");
  const auto prefix = valid_prefixes(sample_count, filter.length(), octaves);
  CoefficientPyramid pyr;
  pyr.dimension = dimension;
  pyr.sample_count = sample_count;
  pyr.filter = filter;
  std::size_t extent = sample_count;
  for (int j = 1; j <= octaves; ++j) {
    extent /= 2;
    pyr.octaves.push_back(make_octave(j, extent, dimension, prefix[static_cast<std::size_t>(j - 1)]));
  }
  pyr.approx.assign(dimension == 1 ? extent : extent * extent, 0.0);
  return pyr;
}

}  // namespace plmf
