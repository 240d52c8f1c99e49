#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "plmf/dwt.hpp"
#include "plmf/field.hpp"
#include "plmf/formalism.hpp"

namespace plmf {

/// Independent generator for realisation `stream` of a run seeded by `seed`.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

// ---------------------------------------------------------------------------
// Deterministic binomial wavelet cascade

/// Pyramid of 2^J samples: c = 1 on the single coarsest coefficient, then
/// c(j-1, 2k) = omega0 c(j, k) and c(j-1, 2k+1) = omega1 c(j, k). Every
/// position is valid.
CoefficientPyramid gen_deterministic_cascade(double omega0, double omega1, int J);

/// 1 - log2(omega0^q + omega1^q).
double cascade_eta(double omega0, double omega1, double q);

// ---------------------------------------------------------------------------
// Gaussian sequences

/// Zero-mean stationary Gaussian sequence of length n with autocovariance
/// r(0..n-1), by circulant embedding. The embedding is padded (doubling, up
/// to `max_doublings` times) until it is non-negative definite.
std::vector<double> gen_gaussian_circulant(std::span<const double> autocovariance, std::mt19937_64& rng,
                                           int max_doublings = 4);

/// Autocovariance of unit-variance fractional Gaussian noise.
double fgn_autocovariance(double H, std::size_t lag);

// ---------------------------------------------------------------------------
// Multifractal random walk

struct MrwParams {
  double H = 0.72;
  double lambda = 0.28284271247461901;  // sqrt(0.08)
  std::size_t L = 0;                    // 0 selects n
  std::size_t n = 1 << 16;
  double nu = 0.0;
  double sigma = 1.0;  // standard deviation of the fGn increments
  std::uint64_t seed = 0;
};

/// Covariance of the log-amplitude process at lag |k|.
double mrw_omega_covariance(const MrwParams& params, std::size_t lag);

/// Log-amplitude process omega alone (mean -Var[omega]).
std::vector<double> gen_mrw_omega(const MrwParams& params, std::mt19937_64& rng);

/// X(k) = sum_{i<=k} sigma G_H(i) exp(omega(i)) with G_H unit-variance fGn,
/// then wavelet-domain fractional differentiation of order nu with `filter`
/// when nu != 0.
std::vector<double> gen_mrw(const MrwParams& params, const WaveletFilter& filter);

struct MrwCumulants {
  double c1 = 0.0;
  double c2 = 0.0;
};
MrwCumulants mrw_cumulants(const MrwParams& params);

/// Wavelet scaling function eta(p): parabolic up to p = sqrt(2)/lambda, then
/// the tangent line, which keeps eta continuous and concave.
double mrw_eta(double p, const MrwParams& params);

/// Critical Lebesgue index, three-branch closed form. Infinite on the first
/// branch; throws no_valid_p once nu > H + lambda^2 / 2.
double mrw_p0(const MrwParams& params);

/// Parabolic spectrum 1 + (h - c1)^2 / (2 c2) on c1 +- sqrt(-2 c2).
LegendreSpectrum mrw_spectrum(const MrwParams& params, std::size_t samples = 201);

// ---------------------------------------------------------------------------
// Fractional integro-differentiation in the wavelet domain

/// Multiplies octave j by 2^{nu (J - j)} (J = coarsest octave). Negative nu
/// integrates. |nu| must be below 2.
CoefficientPyramid frac_diff(const CoefficientPyramid& pyramid, double nu);
std::vector<double> frac_diff_signal(std::span<const double> signal, double nu, const WaveletFilter& filter);
Field2d frac_diff_field(const Field2d& field, double nu, const WaveletFilter& filter);

// ---------------------------------------------------------------------------
// Lacunary wavelet series

struct LwsParams {
  double alpha = 0.2;
  double eta = 0.8;
  std::size_t n = 1 << 16;
  std::uint64_t seed = 0;
};

/// Octave j holds round(2^{eta (log2 n - j)}) nonzero coefficients of value
/// 2^{alpha (j - log2 n)} at distinct uniform positions.
CoefficientPyramid gen_lws_pyramid(const LwsParams& params, const WaveletFilter& filter);
std::vector<double> gen_lws(const LwsParams& params, const WaveletFilter& filter);

/// Linear p-spectrum eta (h + 1/p) / (alpha + 1/p) on [alpha, right endpoint].
LegendreSpectrum lws_spectrum(double alpha, double eta, double p, std::size_t samples = 101);
/// alpha / eta + (1/eta - 1) / p (alpha / eta for p = inf).
double lws_right_endpoint(double alpha, double eta, double p);

// ---------------------------------------------------------------------------
// 2D canonical Mandelbrot cascades

enum class CmcKind { log_normal, log_poisson };

struct CmcParams {
  CmcKind kind = CmcKind::log_normal;
  double m = 0.04;
  double beta = 0.8395;
  double gamma = 0.4195;
  std::size_t side = 1 << 10;
  double alpha = 0.2;
  std::uint64_t seed = 0;
};

std::string to_string(CmcKind kind);

/// One multiplier draw W with E[W] = 1.
double draw_cmc_multiplier(const CmcParams& params, std::mt19937_64& rng);

/// Split-and-multiply cascade on the full square, before integration.
Field2d gen_cmc2d_measure(const CmcParams& params, std::mt19937_64& rng);

/// Cascade followed by wavelet-domain fractional integration of order alpha.
Field2d gen_cmc2d(const CmcParams& params, const WaveletFilter& filter);

/// zeta(q) = alpha q - log2 E[W^q].
double cmc_zeta(const CmcParams& params, double q);
/// Log-cumulants c1..c4 of cmc_zeta.
std::array<double, 4> cmc_cumulants(const CmcParams& params);
/// Legendre transform of cmc_zeta on the support where D >= 0.
LegendreSpectrum cmc_spectrum(const CmcParams& params, std::size_t samples = 401);
/// Closed-form D(h) (log-normal parabola, or the log-Poisson expression).
double cmc_spectrum_closed_form(const CmcParams& params, double h);

// ---------------------------------------------------------------------------
// Trends

enum class TrendKind { none, cusp, polynomial };

struct TrendSpec {
  TrendKind kind = TrendKind::none;
  /// Polynomial coefficients in t on [0, 1], lowest degree first.
  std::vector<double> coefficients;
};

/// tau(t) = 100 (t + 0.01)^{-1/2}.
double cusp_trend(double t);

/// Adds the trend sampled at t_k = k / (n - 1).
std::vector<double> add_trend(std::span<const double> signal, const TrendSpec& trend);

}  // namespace plmf
