#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "plmf/leaders.hpp"
#include "plmf/regression.hpp"

namespace plmf {

enum class MultiresolutionSource { leader, coefficient, mfdfa };

std::string to_string(MultiresolutionSource source);

/// Valid multiresolution quantities at one scale. `x` is the regression
/// abscissa: the octave j for wavelet quantities, log2 of the window size for
/// MFDFA.
struct MultiresolutionLevel {
  double x = 0.0;
  std::vector<double> values;
};

/// Scale-indexed collection of non-negative multiresolution quantities, the
/// common input of every estimator below.
struct Multiresolution {
  int dimension = 1;
  MultiresolutionSource source = MultiresolutionSource::leader;
  std::vector<MultiresolutionLevel> levels;
};

Multiresolution to_multiresolution(const LeaderPyramid& leaders);
/// |c| over every subband, valid positions only.
Multiresolution to_multiresolution(const CoefficientPyramid& pyramid);

/// 41 points, uniform on [-5, 5].
std::vector<double> default_q_grid();

/// Largest octave keeping at least `min_valid` valid leaders.
int default_j2(const LeaderPyramid& leaders, std::size_t min_valid = 8);
int default_j1(int dimension);

/// Regression weights over octaves j1..j2 of a leader pyramid; counts uses
/// b_j = n_j.
RegressionWeights leader_weights(const LeaderPyramid& leaders, int j1, int j2,
                                 WeightScheme scheme = WeightScheme::counts);

struct StructureFunctionTable {
  MultiresolutionSource source = MultiresolutionSource::leader;
  std::vector<double> q;
  std::vector<double> x;
  std::vector<std::size_t> n;
  /// log2_s[level][iq] = log2 of the mean of value^q.
  std::vector<std::vector<double>> log2_s;
};

StructureFunctionTable structure_functions(const Multiresolution& mr, std::span<const double> q_grid);
StructureFunctionTable structure_functions(const LeaderPyramid& leaders, std::span<const double> q_grid);

struct CumulantTable {
  MultiresolutionSource source = MultiresolutionSource::leader;
  int m_max = 4;
  std::vector<double> x;
  std::vector<std::size_t> n;
  /// c[level][m-1] = C_m at that level, natural-log units.
  std::vector<std::array<double, 4>> c;
};

CumulantTable cumulants(const Multiresolution& mr, int m_max = 4);
CumulantTable cumulants(const LeaderPyramid& leaders, int m_max = 4);

/// Finite-resolution correction parameters. The correction is skipped for
/// p = inf and when `enabled` is false.
struct Correction {
  double p = kInfinity;
  double eta_p = 0.0;
  bool enabled = false;

  bool active() const { return enabled && p != kInfinity; }
};

/// log2(1 - 2^{-j eta}) / p, the per-octave finite-size term (zero when the
/// correction is inactive). Throws invalid_correction for eta <= 0.
double correction_term(const Correction& corr, double j);

std::vector<double> zeta_hat(const StructureFunctionTable& table, const RegressionWeights& weights,
                             const Correction& corr);

/// c_1..c_4 (entries beyond the table's m_max are zero).
std::array<double, 4> cm_hat(const CumulantTable& table, const RegressionWeights& weights, const Correction& corr);

struct LegendreSpectrum {
  int dimension = 1;
  std::vector<double> q;
  std::vector<double> h;
  std::vector<double> L;
};

/// Parametric (q-indexed) development of the Legendre spectrum. Vanishing
/// quantities are admitted only when every q is positive.
LegendreSpectrum legendre_parametric(const Multiresolution& mr, std::span<const double> q_grid,
                                     const RegressionWeights& weights, const Correction& corr);
LegendreSpectrum legendre_parametric(const LeaderPyramid& leaders, std::span<const double> q_grid,
                                     const RegressionWeights& weights, const Correction& corr);

/// Numerical Legendre transform of a sampled scaling function: h = dzeta/dq
/// by finite differences, L = d + q h - zeta.
LegendreSpectrum legendre_from_scaling(std::span<const double> q, std::span<const double> zeta, int dimension);

struct BoundReport {
  std::vector<std::size_t> violations;
  double max_violation = 0.0;
  bool ok() const { return violations.empty(); }
};

/// Flags samples with h <= 0 lying above the line d + h p by more than `tol`.
BoundReport check_bound(const LegendreSpectrum& spectrum, double p, int dimension, double tol = 0.0);

/// Polynomial spectrum from log-cumulants, truncated at order 4, sampled on
/// c1 +- sqrt(-2 d c2).
LegendreSpectrum cm_to_spectrum(const std::array<double, 4>& c, int dimension, std::size_t samples = 201);

/// Largest amount by which an interior sample falls below the chord of its
/// neighbours (0 for a concave sequence).
double concavity_violation(std::span<const double> x, std::span<const double> y);

struct ScalingEstimates {
  double p = kInfinity;
  double eta_p = 0.0;
  bool corrected = false;
  int j1 = 0;
  int j2 = 0;
  std::vector<double> q;
  std::vector<double> zeta;
  std::array<double, 4> c{};
  RegressionWeights weights;
};

struct LeaderAnalysis {
  ScalingEstimates estimates;
  LegendreSpectrum spectrum;
};

/// zeta_hat, cm_hat and legendre_parametric over one leader pyramid. The
/// log-cumulants are NaN when a leader inside the regression range vanishes.
LeaderAnalysis analyze_leaders(const LeaderPyramid& leaders, std::span<const double> q_grid,
                               const RegressionWeights& weights, const Correction& corr);

}  // namespace plmf
