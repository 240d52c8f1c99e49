#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "plmf/dwt.hpp"

namespace plmf {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Spatial extent of a leader: the cube and its 3^d - 1 neighbours, or the
/// cube alone.
enum class Neighborhood { full, restricted };

struct LeaderOctave {
  int j = 0;
  std::size_t extent = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
  std::size_t n_valid = 0;
};

struct LeaderPyramid {
  double p = 2.0;  // kInfinity for wavelet leaders
  Neighborhood mode = Neighborhood::full;
  int dimension = 1;
  std::vector<LeaderOctave> octaves;

  int octave_count() const { return static_cast<int>(octaves.size()); }
  const LeaderOctave& octave(int j) const { return octaves.at(static_cast<std::size_t>(j - 1)); }
  bool is_wavelet_leader() const { return p == kInfinity; }
};

/// p-leaders of a coefficient pyramid. For finite p the value at (j, k) is
///   ( sum_{j' <= j} sum_{lambda' in N(j,k)} sum_i |c|^p 2^{-d(j-j')} )^{1/p}
/// where N is 3*lambda or lambda, truncated at the signal edges. For p = inf
/// the sum becomes a supremum. A leader is valid only if every contributing
/// coefficient is valid. Cost is O(n) via the coarse-from-fine recursion.
LeaderPyramid compute_p_leaders(const CoefficientPyramid& pyramid, double p,
                                Neighborhood mode = Neighborhood::full);

enum class WeightScheme { counts, uniform };

/// Wavelet structure function log2 S_c(j, p): log2 of the mean of |c|^p over
/// valid coefficients (all subbands) at octave j.
double log2_coefficient_moment(const CoefficientPyramid& pyramid, int j, double p);

/// Weighted slope of log2 S_c(j,p) over [j1, j2].
double eta_hat(const CoefficientPyramid& pyramid, double p, int j1, int j2,
               WeightScheme scheme = WeightScheme::counts);

/// Weighted slope of log2 max|c| over [j1, j2].
double hmin(const CoefficientPyramid& pyramid, int j1, int j2, WeightScheme scheme = WeightScheme::counts);

struct WaveletScalingFunction {
  std::vector<double> p_grid;
  std::vector<double> eta;
  int j1 = 0;
  int j2 = 0;
  std::vector<double> weights;
};

/// Default p grid for critical-index estimation.
std::vector<double> default_p0_grid();

WaveletScalingFunction wavelet_scaling_function(const CoefficientPyramid& pyramid,
                                                std::span<const double> p_grid, int j1, int j2,
                                                WeightScheme scheme = WeightScheme::counts);

/// Critical Lebesgue index estimate sup{p : eta(p) > 0} from a sampled eta
/// curve, with linear interpolation (or extrapolation past the grid end).
/// Returns kInfinity when eta stays positive with a non-negative final slope.
double p0_hat(const WaveletScalingFunction& curve);

}  // namespace plmf
