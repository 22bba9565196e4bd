// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace slopemix {

/// A point on the probability simplex: nonnegative entries summing to one.
class MixtureWeights {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Throws ValidationError unless `values` lies on the simplex.
  explicit MixtureWeights(std::vector<double> values);

  static MixtureWeights uniform(std::size_t n);
  static MixtureWeights one_hot(std::size_t n, std::size_t index);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  friend bool operator==(const MixtureWeights&, const MixtureWeights&) = default;

 private:
  std::vector<double> values_;
};

bool on_simplex(std::span<const double> values, double tolerance = MixtureWeights::kSumTolerance);

/// Euclidean projection onto the probability simplex (sort-and-threshold).
MixtureWeights project_to_simplex(std::span<const double> values);

/// Projection onto the face of the simplex spanned by the coordinates with
/// `allowed[i]` set; the remaining coordinates are fixed to zero.
std::vector<double> project_to_face(std::span<const double> values, const std::vector<bool>& allowed);

}  // namespace slopemix
