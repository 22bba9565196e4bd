// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/predictor.hpp"

#include <cmath>
#include <limits>

#include "slopemix/errors.hpp"

namespace slopemix {

Eigen::VectorXd AffinePrediction::evaluate(std::span<const double> w) const {
  if (w.size() != cols()) throw ValidationError("/weights", "weight count does not match the predictor");
  Eigen::VectorXd out = base;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] == 0.0) continue;
    const auto col = static_cast<Eigen::Index>(j);
    if (!usable.empty() && !usable[j]) {
      out.setConstant(std::numeric_limits<double>::infinity());
      return out;
    }
    out += w[j] * change.col(col);
  }
  return out;
}

AffinePrediction LinearPredictor::affine() const {
  if (horizon < 1) throw ValidationError("/horizon", "must be >= 1");
  AffinePrediction p;
  p.base = Eigen::Map<const Eigen::VectorXd>(slopes.anchor.data(), static_cast<Eigen::Index>(slopes.anchor.size()));
  p.change = static_cast<double>(horizon) * slopes.entries;
  p.usable.assign(slopes.cols(), true);
  return p;
}

std::vector<double> predict_linear(const LinearPredictor& predictor, const MixtureWeights& weights) {
  if (weights.size() != predictor.slopes.cols())
    throw ValidationError("/weights", "weight count does not match the slope matrix");
  if (predictor.slopes.anchor.size() != predictor.slopes.rows())
    throw ValidationError("/anchor", "anchor does not cover every domain");
  const Eigen::VectorXd v = predictor.affine().evaluate(weights.values());
  return {v.data(), v.data() + v.size()};
}

CurvePredictor fit_curves(const SlopeMatrix& slopes, int horizon, const FitOptions& options) {
  if (!slopes.has_trajectories()) throw ValidationError("/trajectories", "curve fitting needs probe trajectories");
  if (horizon < 1) throw ValidationError("/horizon", "must be >= 1");
  CurvePredictor p;
  p.anchor = slopes.anchor;
  p.probe_steps = slopes.probe_steps;
  p.horizon = horizon;
  p.u_horizon = static_cast<double>(horizon) / slopes.probe_steps;
  if (p.u_horizon > kMaxHorizonRatio) {
    p.u_horizon = kMaxHorizonRatio;
    p.horizon_clamped = true;
  }
  const std::size_t m = slopes.rows();
  const std::size_t n = slopes.cols();
  p.curves.assign(m, std::vector<FittedCurve>(n));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto& traj = slopes.trajectories[i][j];
      if (traj.size() < 3)
        throw ValidationError("/trajectories", "each trajectory needs the anchor and at least two interior points");
      std::vector<double> u, y;
      for (const auto& pt : traj) {
        u.push_back(pt.u);
        y.push_back(pt.value);
      }
      FitOptions cell = options;
      cell.seed = options.seed ^ (static_cast<std::uint64_t>(i) << 32 | j);
      p.curves[i][j] = select_curve(u, y, cell);
      if (!std::isfinite(p.curves[i][j].delta(p.u_horizon))) p.non_finite.emplace_back(i, j);
    }
  }
  return p;
}

AffinePrediction CurvePredictor::affine() const {
  const std::size_t m = curves.size();
  const std::size_t n = m == 0 ? 0 : curves.front().size();
  AffinePrediction p;
  p.base = Eigen::Map<const Eigen::VectorXd>(anchor.data(), static_cast<Eigen::Index>(anchor.size()));
  p.change = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  p.usable.assign(n, true);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = curves[i][j].delta(u_horizon);
      if (std::isfinite(d)) p.change(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      else p.usable[j] = false;
    }
  }
  return p;
}

std::vector<double> predict_curves(const CurvePredictor& predictor, const MixtureWeights& weights) {
  const Eigen::VectorXd v = predictor.affine().evaluate(weights.values());
  return {v.data(), v.data() + v.size()};
}

}  // namespace slopemix
