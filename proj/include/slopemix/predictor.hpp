// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Loss predictors over the mixture weights. Both the linear extrapolation and
// the curve predictor are affine in w, so each reduces to an
// AffinePrediction that the solver consumes.

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "slopemix/curve_fit.hpp"
#include "slopemix/slopes.hpp"
#include "slopemix/weights.hpp"

namespace slopemix {

/// L_hat(w) = base + change * w, on normalized metrics.
struct AffinePrediction {
  Eigen::VectorXd base;    // M
  Eigen::MatrixXd change;  // M x N
  // Columns whose prediction was non-finite; the solver keeps their weight at zero.
  std::vector<bool> usable;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(change.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(change.cols()); }
  Eigen::VectorXd evaluate(std::span<const double> w) const;
};

struct LinearPredictor {
  SlopeMatrix slopes;
  int horizon = 1;

  AffinePrediction affine() const;
};

/// anchor_i + H * sum_j S_ij w_j for every domain, in slope-matrix row order.
std::vector<double> predict_linear(const LinearPredictor& predictor, const MixtureWeights& weights);

inline constexpr double kMaxHorizonRatio = 32.0;

struct CurvePredictor {
  std::vector<std::vector<FittedCurve>> curves;  // [domain][dataset]
  std::vector<double> anchor;
  int probe_steps = 1;
  int horizon = 1;
  double u_horizon = 1.0;
  bool horizon_clamped = false;
  // (domain, dataset) cells whose delta at u_horizon is not finite.
  std::vector<std::pair<std::size_t, std::size_t>> non_finite;

  AffinePrediction affine() const;
};

/// Fits a curve to every (domain, dataset) trajectory. Requires trajectories
/// with at least two interior points.
CurvePredictor fit_curves(const SlopeMatrix& slopes, int horizon, const FitOptions& options = {});

/// anchor_i + sum_j w_j * delta_ij(u_H); non-finite cells yield +inf for
/// any w that puts weight on their dataset.
std::vector<double> predict_curves(const CurvePredictor& predictor, const MixtureWeights& weights);

}  // namespace slopemix
