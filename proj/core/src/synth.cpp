#include "plmf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fftw3.h>

#include "plmf/error.hpp"

namespace plmf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

int log2_exact(std::size_t v) {
  int r = 0;
  while ((std::size_t{1} << r) < v) ++r;
  return r;
}

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void fft_inplace(std::vector<std::complex<double>>& data) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

void check_cmc(const CmcParams& p) {
  if (!is_power_of_two(p.side)) throw Error(Errc::invalid_parameter, "cascade side must be a power of two");
  if (p.kind == CmcKind::log_normal) {
    if (!(p.m > 0.0)) throw Error(Errc::invalid_parameter, "log-normal cascade needs m > 0");
  } else {
    if (!(p.beta > 0.0 && p.beta < 1.0)) throw Error(Errc::invalid_parameter, "log-Poisson cascade needs 0 < beta < 1");
    if (!(p.gamma > 0.0)) throw Error(Errc::invalid_parameter, "log-Poisson cascade needs gamma > 0");
  }
}

void check_mrw(const MrwParams& p) {
  if (!(p.H > 0.5 && p.H < 1.0)) throw Error(Errc::invalid_parameter, "MRW needs H in (1/2, 1)");
  if (!(p.lambda > 0.0)) throw Error(Errc::invalid_parameter, "MRW needs lambda > 0");
  if (!(p.nu >= 0.0)) throw Error(Errc::invalid_parameter, "MRW differentiation order must be >= 0");
  if (!(p.sigma > 0.0)) throw Error(Errc::invalid_parameter, "MRW increment standard deviation must be positive");
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

CoefficientPyramid gen_deterministic_cascade(double omega0, double omega1, int J) {
  if (!(omega0 > 0.0) || !(omega1 > 0.0)) throw Error(Errc::invalid_parameter, "cascade multipliers must be positive");
  if (J < 4 || J > 30) throw Error(Errc::invalid_parameter, "cascade depth must be within 4..30");
  CoefficientPyramid pyr;
  pyr.dimension = 1;
  pyr.sample_count = std::size_t{1} << J;
  pyr.filter = daubechies_filter(1);
  pyr.octaves.resize(static_cast<std::size_t>(J));
  for (int j = J; j >= 1; --j) {
    auto& oct = pyr.octave(j);
    oct.j = j;
    oct.extent = std::size_t{1} << (J - j);
    oct.bands.assign(1, std::vector<double>(oct.extent));
    oct.valid.assign(oct.extent, 1);
    oct.n_valid = oct.extent;
    oct.valid_prefix = oct.extent;
    if (j == J) {
      oct.bands[0][0] = 1.0;
    } else {
      const auto& parent = pyr.octave(j + 1).bands[0];
      for (std::size_t k = 0; k < parent.size(); ++k) {
        oct.bands[0][2 * k] = omega0 * parent[k];
        oct.bands[0][2 * k + 1] = omega1 * parent[k];
      }
    }
  }
  pyr.approx.assign(1, 0.0);
  return pyr;
}

double cascade_eta(double omega0, double omega1, double q) {
  return 1.0 - std::log2(std::pow(omega0, q) + std::pow(omega1, q));
}

double fgn_autocovariance(double H, std::size_t lag) {
  const double k = static_cast<double>(lag);
  const double e = 2.0 * H;
  return 0.5 * (std::pow(k + 1.0, e) - 2.0 * std::pow(k, e) + std::pow(std::abs(k - 1.0), e));
}

std::vector<double> gen_gaussian_circulant(std::span<const double> r, std::mt19937_64& rng, int max_doublings) {
  const std::size_t n = r.size();
  if (n < 2) throw Error(Errc::invalid_parameter, "circulant embedding needs at least 2 lags");
  std::size_t m = 1;
  while (m < n) m *= 2;
  for (int attempt = 0; attempt <= max_doublings; ++attempt, m *= 2) {
    // First row of a 2m circulant: r(0..m), then mirrored; lags past the
    // supplied autocovariance are zero.
    const std::size_t size = 2 * m;
    std::vector<std::complex<double>> row(size);
    for (std::size_t k = 0; k <= m; ++k) {
      const double v = k < n ? r[k] : 0.0;
      row[k] = v;
      if (k > 0 && k < m) row[size - k] = v;
    }
    fft_inplace(row);
    double max_ev = 0.0;
    double min_ev = 0.0;
    for (const auto& z : row) {
      max_ev = std::max(max_ev, z.real());
      min_ev = std::min(min_ev, z.real());
    }
    if (min_ev < -1e-9 * max_ev) continue;

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::complex<double>> w(size);
    for (std::size_t k = 0; k < size; ++k) {
      const double scale = std::sqrt(std::max(row[k].real(), 0.0) / static_cast<double>(size));
      const double a = gauss(rng);
      const double b = gauss(rng);
      w[k] = scale * std::complex<double>(a, b);
    }
    fft_inplace(w);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = w[k].real();
    return out;
  }
  throw Error(Errc::embedding_failure, "circulant embedding is not non-negative definite after " +
                                           std::to_string(max_doublings) + " paddings");
}

double mrw_omega_covariance(const MrwParams& params, std::size_t lag) {
  const std::size_t L = params.L == 0 ? params.n : params.L;
  if (lag >= L) return 0.0;
  return params.lambda * params.lambda * std::log(static_cast<double>(L) / (static_cast<double>(lag) + 1.0));
}

std::vector<double> gen_mrw_omega(const MrwParams& params, std::mt19937_64& rng) {
  check_mrw(params);
  std::vector<double> r(params.n);
  for (std::size_t k = 0; k < params.n; ++k) r[k] = mrw_omega_covariance(params, k);
  auto omega = gen_gaussian_circulant(r, rng);
  const double var = r[0];
  for (double& v : omega) v -= var;
  return omega;
}

std::vector<double> gen_mrw(const MrwParams& params, const WaveletFilter& filter) {
  check_mrw(params);
  if (!is_power_of_two(params.n)) throw Error(Errc::invalid_parameter, "MRW length must be a power of two");
  auto rng = make_rng(params.seed);
  std::vector<double> r(params.n);
  for (std::size_t k = 0; k < params.n; ++k) r[k] = fgn_autocovariance(params.H, k);
  const auto g = gen_gaussian_circulant(r, rng);
  const auto omega = gen_mrw_omega(params, rng);
  std::vector<double> x(params.n);
  double acc = 0.0;
  for (std::size_t k = 0; k < params.n; ++k) {
    acc += params.sigma * g[k] * std::exp(omega[k]);
    x[k] = acc;
  }
  if (params.nu != 0.0) return frac_diff_signal(x, params.nu, filter);
  return x;
}

MrwCumulants mrw_cumulants(const MrwParams& params) {
  const double l2 = params.lambda * params.lambda;
  return {params.H + l2 / 2.0 - params.nu, -l2};
}

double mrw_eta(double p, const MrwParams& params) {
  if (!(p >= 0.0)) throw Error(Errc::invalid_parameter, "eta(p) needs p >= 0");
  const auto c = mrw_cumulants(params);
  const double pc = std::sqrt(-2.0 / c.c2);
  if (p <= pc) return c.c1 * p + c.c2 / 2.0 * p * p;
  return 1.0 + p * (c.c1 - std::sqrt(-2.0 * c.c2));
}

double mrw_p0(const MrwParams& params) {
  const double H = params.H;
  const double lam = params.lambda;
  const double nu = params.nu;
  const double b1 = H + lam * (lam / 2.0 - std::numbers::sqrt2);
  const double b2 = H + lam * (lam / 2.0 - 1.0 / std::numbers::sqrt2);
  const double b3 = H + lam * lam / 2.0;
  if (nu < 0.0) throw Error(Errc::invalid_parameter, "differentiation order must be >= 0");
  if (nu <= b1) return std::numeric_limits<double>::infinity();
  if (nu <= b2) return 1.0 / (nu - H - lam * (lam / 2.0 - std::numbers::sqrt2));
  if (nu <= b3) return 2.0 * (H + lam * lam / 2.0 - nu) / (lam * lam);
  throw Error(Errc::no_valid_p, "eta(p) < 0 for every p > 0 when nu > H + lambda^2/2");
}

LegendreSpectrum mrw_spectrum(const MrwParams& params, std::size_t samples) {
  const auto c = mrw_cumulants(params);
  return cm_to_spectrum({c.c1, c.c2, 0.0, 0.0}, 1, samples);
}

CoefficientPyramid frac_diff(const CoefficientPyramid& pyramid, double nu) {
  if (!(std::abs(nu) < 2.0)) throw Error(Errc::unsupported_order, "fractional order must satisfy |nu| < 2");
  CoefficientPyramid out = pyramid;
  const int J = out.octave_count();
  for (auto& oct : out.octaves) {
    const double factor = std::exp2(nu * (J - oct.j));
    for (auto& band : oct.bands)
      for (double& v : band) v *= factor;
  }
  return out;
}

std::vector<double> frac_diff_signal(std::span<const double> signal, double nu, const WaveletFilter& filter) {
  if (nu == 0.0) return {signal.begin(), signal.end()};
  const auto pyr = frac_diff(dwt1d(signal, filter), nu);
  return idwt1d(pyr, pyr.approx);
}

Field2d frac_diff_field(const Field2d& field, double nu, const WaveletFilter& filter) {
  if (nu == 0.0) return field;
  const auto pyr = frac_diff(dwt2d(field, filter), nu);
  return idwt2d(pyr, pyr.approx);
}

CoefficientPyramid gen_lws_pyramid(const LwsParams& params, const WaveletFilter& filter) {
  if (!(params.alpha > 0.0)) throw Error(Errc::invalid_parameter, "LWS needs alpha > 0");
  if (!(params.eta > 0.0 && params.eta < 1.0)) throw Error(Errc::invalid_parameter, "LWS needs eta in (0, 1)");
  if (!is_power_of_two(params.n)) throw Error(Errc::invalid_parameter, "LWS length must be a power of two");
  const int J = log2_exact(params.n);
  const int depth = J - log2_exact(filter.length());
  if (depth < 1) throw Error(Errc::insufficient_data, "LWS length too small for the filter");
  auto pyr = zero_pyramid(1, params.n, filter, depth);
  auto rng = make_rng(params.seed);
  std::vector<std::size_t> positions;
  for (auto& oct : pyr.octaves) {
    const double count_real = std::round(std::exp2(params.eta * (J - oct.j)));
    if (count_real > static_cast<double>(oct.extent))
      throw Error(Errc::parameter_inconsistency, "octave " + std::to_string(oct.j) + " would need " +
                                                     std::to_string(count_real) + " nonzero coefficients out of " +
                                                     std::to_string(oct.extent));
    const auto count = static_cast<std::size_t>(count_real);
    positions.resize(oct.extent);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `count` entries are a uniform draw.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, oct.extent - 1);
      std::swap(positions[i], positions[pick(rng)]);
    }
    const double amplitude = std::exp2(params.alpha * (oct.j - J));
    for (std::size_t i = 0; i < count; ++i) oct.bands[0][positions[i]] = amplitude;
  }
  return pyr;
}

std::vector<double> gen_lws(const LwsParams& params, const WaveletFilter& filter) {
  const auto pyr = gen_lws_pyramid(params, filter);
  return idwt1d(pyr, pyr.approx);
}

double lws_right_endpoint(double alpha, double eta, double p) {
  if (!(eta > 0.0 && eta < 1.0)) throw Error(Errc::invalid_parameter, "LWS needs eta in (0, 1)");
  if (!(p > 0.0)) throw Error(Errc::invalid_parameter, "p must be positive");
  if (p == kInfinity) return alpha / eta;
  return alpha / eta + (1.0 / eta - 1.0) / p;
}

LegendreSpectrum lws_spectrum(double alpha, double eta, double p, std::size_t samples) {
  if (!(alpha > 0.0)) throw Error(Errc::invalid_parameter, "LWS needs alpha > 0");
  if (samples < 2) throw Error(Errc::invalid_parameter, "need at least two spectrum samples");
  const double right = lws_right_endpoint(alpha, eta, p);
  const double inv_p = p == kInfinity ? 0.0 : 1.0 / p;
  LegendreSpectrum spec;
  spec.dimension = 1;
  for (std::size_t i = 0; i < samples; ++i) {
    const double h = alpha + (right - alpha) * static_cast<double>(i) / static_cast<double>(samples - 1);
    spec.h.push_back(h);
    spec.L.push_back(eta * (h + inv_p) / (alpha + inv_p));
  }
  return spec;
}

std::string to_string(CmcKind kind) { return kind == CmcKind::log_normal ? "log-normal" : "log-poisson"; }

double draw_cmc_multiplier(const CmcParams& params, std::mt19937_64& rng) {
  if (params.kind == CmcKind::log_normal) {
    std::normal_distribution<double> u(params.m, std::sqrt(2.0 * params.m / std::numbers::ln2));
    return std::exp2(-u(rng));
  }
  const double rate = -params.gamma * std::numbers::ln2 / (params.beta - 1.0);
  std::poisson_distribution<int> pi(rate);
  return std::exp2(params.gamma) * std::pow(params.beta, pi(rng));
}

Field2d gen_cmc2d_measure(const CmcParams& params, std::mt19937_64& rng) {
  check_cmc(params);
  Field2d cur(1, 1.0);
  while (cur.side < params.side) {
    Field2d next(cur.side * 2);
    for (std::size_t r = 0; r < cur.side; ++r)
      for (std::size_t c = 0; c < cur.side; ++c)
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b)
            next(2 * r + a, 2 * c + b) = cur(r, c) * draw_cmc_multiplier(params, rng);
    cur = std::move(next);
  }
  return cur;
}

Field2d gen_cmc2d(const CmcParams& params, const WaveletFilter& filter) {
  auto rng = make_rng(params.seed);
  const auto measure = gen_cmc2d_measure(params, rng);
  return frac_diff_field(measure, -params.alpha, filter);
}

double cmc_zeta(const CmcParams& params, double q) {
  check_cmc(params);
  if (params.kind == CmcKind::log_normal) return params.alpha * q + params.m * q - params.m * q * q;
  return params.alpha * q - params.gamma * q + params.gamma * (std::pow(params.beta, q) - 1.0) / (params.beta - 1.0);
}

std::array<double, 4> cmc_cumulants(const CmcParams& params) {
  check_cmc(params);
  if (params.kind == CmcKind::log_normal) return {params.m + params.alpha, -2.0 * params.m, 0.0, 0.0};
  const double lb = std::log(params.beta);
  const double k = params.gamma / (params.beta - 1.0);
  return {params.alpha + params.gamma * (lb / (params.beta - 1.0) - 1.0), k * lb * lb, k * lb * lb * lb,
          k * lb * lb * lb * lb};
}

LegendreSpectrum cmc_spectrum(const CmcParams& params, std::size_t samples) {
  check_cmc(params);
  if (samples < 2) throw Error(Errc::invalid_parameter, "need at least two spectrum samples");
  auto dzeta = [&params](double q) {
    if (params.kind == CmcKind::log_normal) return params.alpha + params.m - 2.0 * params.m * q;
    const double lb = std::log(params.beta);
    return params.alpha - params.gamma + params.gamma * std::pow(params.beta, q) * lb / (params.beta - 1.0);
  };
  LegendreSpectrum spec;
  spec.dimension = 2;
  const double qmax = 60.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double q = -qmax + 2.0 * qmax * static_cast<double>(i) / static_cast<double>(samples - 1);
    const double h = dzeta(q);
    const double D = 2.0 + q * h - cmc_zeta(params, q);
    if (D < 0.0) continue;
    spec.q.push_back(q);
    spec.h.push_back(h);
    spec.L.push_back(D);
  }
  return spec;
}

double cmc_spectrum_closed_form(const CmcParams& params, double h) {
  check_cmc(params);
  if (params.kind == CmcKind::log_normal) {
    const double u = h - params.alpha - params.m;
    return 2.0 - u * u / (4.0 * params.m);
  }
  const double lb = std::log(params.beta);
  const double s = h - params.alpha + params.gamma;
  const double arg = s * (params.beta - 1.0) / (params.gamma * lb);
  if (!(arg > 0.0)) return -std::numeric_limits<double>::infinity();
  return 2.0 + params.gamma / (params.beta - 1.0) + s / lb * (std::log(arg) - 1.0);
}

double cusp_trend(double t) { return 100.0 / std::sqrt(t + 0.01); }

std::vector<double> add_trend(std::span<const double> signal, const TrendSpec& trend) {
  std::vector<double> out(signal.begin(), signal.end());
  if (trend.kind == TrendKind::none || out.empty()) return out;
  const double denom = out.size() > 1 ? static_cast<double>(out.size() - 1) : 1.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = static_cast<double>(k) / denom;
    if (trend.kind == TrendKind::cusp) {
      out[k] += cusp_trend(t);
    } else {
      double v = 0.0;
      for (auto it = trend.coefficients.rbegin(); it != trend.coefficients.rend(); ++it) v = v * t + *it;
      out[k] += v;
    }
  }
  return out;
}

}  // namespace plmf
