#pragma once

#include <span>
#include <vector>

namespace plmf {

/// Linear-regression weights w with sum(w) = 0 and sum(x * w) = 1, so that
/// sum(w * y) is the confidence-weighted least-squares slope of y against x.
struct RegressionWeights {
  int j1 = 0;
  int j2 = 0;
  std::vector<double> x;
  std::vector<double> confidence;
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
};

/// Weights over the integer octaves j1..j2 with confidences b_j (one per octave).
RegressionWeights regression_weights(int j1, int j2, std::span<const double> confidence);

/// Weights over arbitrary abscissae (e.g. log2 of MFDFA window sizes).
RegressionWeights regression_weights_at(std::span<const double> x, std::span<const double> confidence);

/// sum_j w_j y_j.
double weighted_slope(const RegressionWeights& weights, std::span<const double> y);

}  // namespace plmf
