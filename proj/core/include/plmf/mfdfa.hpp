#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "plmf/formalism.hpp"

namespace plmf {

/// Cumulative sum of the mean-removed signal.
std::vector<double> profile(std::span<const double> signal);

struct FluctuationTable {
  int degree = 1;
  bool integrated = false;
  bool both_ends = false;
  std::vector<std::size_t> scales;
  /// values[s][k]: RMS residual of the degree-N_P fit in window k of scale s.
  std::vector<std::vector<double>> values;
};

struct FluctuationOptions {
  int degree = 1;
  bool integrate = true;
  /// Also cut windows backwards from the last sample (doubles the count).
  bool both_ends = false;
};

/// Dyadic window sizes 2^j with N_P + 2 <= 2^j <= n / 4.
std::vector<std::size_t> default_mfdfa_scales(std::size_t n, int degree);

/// Smallest admissible window for a degree-N_P fit.
bool mfdfa_scale_admissible(std::size_t a, int degree);
/// Number of fine dyadic octaves that p-leaders reach but MFDFA cannot.
int mfdfa_lost_octaves(int degree);

FluctuationTable fluctuations(std::span<const double> series, std::span<const std::size_t> scales,
                              const FluctuationOptions& options = {});

Multiresolution to_multiresolution(const FluctuationTable& table);

/// Weights over the scales of `table` whose size lies in [a_min, a_max],
/// abscissa log2 a, confidence = window count (or 1).
RegressionWeights mfdfa_weights(const FluctuationTable& table, std::size_t a_min, std::size_t a_max,
                                WeightScheme scheme = WeightScheme::counts);

struct MfdfaResult {
  ScalingEstimates estimates;
  LegendreSpectrum spectrum;
};

MfdfaResult mfdfa_analyze(const FluctuationTable& table, std::span<const double> q_grid,
                          const RegressionWeights& weights);

/// Classical DFA exponent: slope of log2 sqrt(mean T^2) against log2 a.
double dfa_exponent(const FluctuationTable& table, const RegressionWeights& weights);

}  // namespace plmf
