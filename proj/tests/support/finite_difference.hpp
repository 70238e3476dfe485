#pragma once

// Test-only numerical oracles. Nothing here calls into backward passes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

namespace cagan::testing {

// Central difference of `loss` with respect to values[index].
inline double central_difference(std::vector<double>& values, std::size_t index,
                                 const std::function<double()>& loss, double step = 1e-6) {
  const double saved = values[index];
  values[index] = saved + step;
  const double plus = loss();
  values[index] = saved - step;
  const double minus = loss();
  values[index] = saved;
  return (plus - minus) / (2.0 * step);
}

struct GradientComparison {
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
  std::size_t checked = 0;
};

// Compares an analytic gradient against central differences on up to
// `max_checks` coordinates (all when the tensor is small enough). `floor`
// bounds the denominator for gradients that are identically zero, such as a
// bias feeding an instance norm.
inline GradientComparison compare_gradient(std::vector<double>& values, const std::vector<double>& analytic,
                                           const std::function<double()>& loss, std::size_t max_checks,
                                           std::mt19937_64& rng, double step = 1e-6,
                                           double floor = 1e-4) {
  std::vector<std::size_t> indices(values.size());
  for (std::size_t k = 0; k < indices.size(); ++k) indices[k] = k;
  if (indices.size() > max_checks) {
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(max_checks);
  }
  double diff = 0.0;
  double norm_a = 0.0;
  double norm_n = 0.0;
  for (auto k : indices) {
    const double n = central_difference(values, k, loss, step);
    diff += (analytic[k] - n) * (analytic[k] - n);
    norm_a += analytic[k] * analytic[k];
    norm_n += n * n;
  }
  const double denom = std::max({std::sqrt(norm_a), std::sqrt(norm_n), floor});
  return {std::sqrt(diff) / denom, indices.size()};
}

}  // namespace cagan::testing
