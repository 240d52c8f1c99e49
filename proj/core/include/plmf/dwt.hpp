#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plmf/field.hpp"

namespace plmf {

/// Orthonormal lowpass filter of a compactly supported wavelet, stored in
/// minimum-phase order (largest taps first for Daubechies).
struct WaveletFilter {
  std::string family;
  int vanishing_moments = 0;
  std::vector<double> lowpass;

  std::size_t length() const { return lowpass.size(); }
  /// Quadrature mirror highpass g[m] = (-1)^m h[L-1-m].
  std::vector<double> highpass() const;
};

/// Daubechies filter with the requested number of vanishing moments (1..10),
/// built by spectral factorisation of the Daubechies polynomial.
WaveletFilter daubechies_filter(int n_vanishing_moments);

/// Detail coefficients of one octave. In 1D there is a single band of
/// `extent` values; in 2D there are three row-major bands of extent^2 values
/// (0: high along columns, 1: high along rows, 2: high along both).
struct CoefficientOctave {
  int j = 0;
  std::size_t extent = 0;
  std::vector<std::vector<double>> bands;
  /// Per-position validity (1 = untouched by periodic wrap-around).
  std::vector<std::uint8_t> valid;
  std::size_t n_valid = 0;
  /// Valid positions form the prefix [0, valid_prefix) along each axis.
  std::size_t valid_prefix = 0;

  std::size_t positions() const { return valid.size(); }
};

/// L1-normalised DWT coefficients; octave j = 1 is the finest scale.
struct CoefficientPyramid {
  int dimension = 1;
  /// Samples actually transformed (1D length or 2D side).
  std::size_t sample_count = 0;
  WaveletFilter filter;
  std::vector<CoefficientOctave> octaves;
  /// Coarsest approximation, L2-normalised (kept for synthesis).
  std::vector<double> approx;

  int octave_count() const { return static_cast<int>(octaves.size()); }
  const CoefficientOctave& octave(int j) const { return octaves.at(static_cast<std::size_t>(j - 1)); }
  CoefficientOctave& octave(int j) { return octaves.at(static_cast<std::size_t>(j - 1)); }
};

/// Octave depth used by dwt1d/dwt2d for `sample_count` samples: the formula
/// floor(log2 N) - ceil(log2 L), optionally limited by `max_octaves`, and
/// reduced until the coarsest octave keeps >= 8 valid coefficients.
int analysis_depth(std::size_t sample_count, std::size_t filter_length, int dimension,
                   std::optional<int> max_octaves = std::nullopt);

/// Length of the valid prefix at each octave 1..octaves for a periodic
/// transform of `n` samples with a filter of `filter_length` taps.
std::vector<std::size_t> valid_prefixes(std::size_t n, std::size_t filter_length, int octaves);

/// Periodic 1D DWT. Trailing samples beyond the largest multiple of 2^J are
/// dropped.
CoefficientPyramid dwt1d(std::span<const double> signal, const WaveletFilter& filter,
                         std::optional<int> max_octaves = std::nullopt);

/// Periodic separable 2D DWT of a square field whose side is a power of two.
CoefficientPyramid dwt2d(const Field2d& field, const WaveletFilter& filter,
                         std::optional<int> max_octaves = std::nullopt);

/// Inverse of dwt1d; `approx` must hold the coarsest approximation.
std::vector<double> idwt1d(const CoefficientPyramid& pyramid, std::span<const double> approx);

/// Inverse of dwt2d.
Field2d idwt2d(const CoefficientPyramid& pyramid, std::span<const double> approx);

/// All-zero pyramid with the given depth, for synthesis from prescribed
/// coefficients. No depth capping is applied beyond n_J >= filter length.
CoefficientPyramid zero_pyramid(int dimension, std::size_t sample_count, const WaveletFilter& filter,
                                int octaves);

}  // namespace plmf
