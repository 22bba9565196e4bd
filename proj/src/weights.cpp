// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/weights.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "slopemix/errors.hpp"

namespace slopemix {

bool on_simplex(std::span<const double> values, double tolerance) {
  if (values.empty()) return false;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

MixtureWeights::MixtureWeights(std::vector<double> values) : values_(std::move(values)) {
  if (!on_simplex(values_))
    throw ValidationError("/weights", "mixture weights must be nonnegative and sum to 1");
}

MixtureWeights MixtureWeights::uniform(std::size_t n) {
  return MixtureWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

MixtureWeights MixtureWeights::one_hot(std::size_t n, std::size_t index) {
  std::vector<double> v(n, 0.0);
  v.at(index) = 1.0;
  return MixtureWeights(std::move(v));
}

std::vector<double> project_to_face(std::span<const double> values, const std::vector<bool>& allowed) {
  const std::size_t n = values.size();
  std::vector<double> active;
  for (std::size_t i = 0; i < n; ++i)
    if (allowed[i]) active.push_back(values[i]);
  std::vector<double> out(n, 0.0);
  if (active.empty()) return out;

  std::vector<double> sorted = active;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumsum += sorted[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!allowed[i]) continue;
    out[i] = std::max(0.0, values[i] - theta);
    sum += out[i];
  }
  // Rounding can leave the sum a few ulps away from one.
  if (sum > 0.0)
    for (double& v : out) v /= sum;
  return out;
}

MixtureWeights project_to_simplex(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("/weights", "cannot project non-finite values");
  if (values.empty()) throw ValidationError("/weights", "cannot project an empty vector");
  return MixtureWeights(project_to_face(values, std::vector<bool>(values.size(), true)));
}

}  // namespace slopemix
