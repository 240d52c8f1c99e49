#include "plmf/regression.hpp"

#include <cmath>
#include <string>

#include "plmf/error.hpp"

namespace plmf {

RegressionWeights regression_weights_at(std::span<const double> x, std::span<const double> confidence) {
  if (x.size() != confidence.size())
    throw Error(Errc::invalid_parameter, "regression abscissae and confidences differ in length");
  if (x.size() < 3)
    throw Error(Errc::insufficient_scales, "regression needs at least 3 scales, got " + std::to_string(x.size()));
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double b = confidence[i];
    if (!(b > 0.0) || !std::isfinite(b))
      throw Error(Errc::invalid_parameter, "regression confidences must be positive and finite");
    s0 += b;
    s1 += b * x[i];
    s2 += b * x[i] * x[i];
  }
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 1e-12 * s0 * s2))
    throw Error(Errc::singular_regression, "regression weights concentrate on a single scale");

  RegressionWeights out;
  out.x.assign(x.begin(), x.end());
  out.confidence.assign(confidence.begin(), confidence.end());
  out.w.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.w[i] = confidence[i] * (s0 * x[i] - s1) / det;
  return out;
}

RegressionWeights regression_weights(int j1, int j2, std::span<const double> confidence) {
  if (j2 < j1 + 2)
    throw Error(Errc::insufficient_scales,
                "octave range [" + std::to_string(j1) + ", " + std::to_string(j2) + "] has fewer than 3 octaves");
  if (confidence.size() != static_cast<std::size_t>(j2 - j1 + 1))
    throw Error(Errc::invalid_parameter, "one confidence weight per octave is required");
  std::vector<double> x;
  for (int j = j1; j <= j2; ++j) x.push_back(static_cast<double>(j));
  auto out = regression_weights_at(x, confidence);
  out.j1 = j1;
  out.j2 = j2;
  return out;
}

double weighted_slope(const RegressionWeights& weights, std::span<const double> y) {
  if (y.size() != weights.w.size()) throw Error(Errc::invalid_parameter, "regression input length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += weights.w[i] * y[i];
  return s;
}

}  // namespace plmf
