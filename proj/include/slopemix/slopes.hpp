// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Slope matrix estimation: per-dataset finite-difference probing from a
// snapshot, and the gradient-alignment surrogate.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slopemix/scenario.hpp"
#include "slopemix/trainer.hpp"

namespace slopemix {

struct TrajectoryPoint {
  double u = 0.0;      // probe progress, steps / probe_steps
  double value = 0.0;  // normalized metric
};

enum class SlopeSource { probe, gradient_alignment };
enum class AnchorSource { measured, recycled };

std::string_view to_string(SlopeSource source) noexcept;
std::string_view to_string(AnchorSource source) noexcept;

struct SlopeMatrix {
  Eigen::MatrixXd entries;     // M x N, normalized metric change per step
  std::vector<double> anchor;  // normalized L_i(theta_t), length M
  std::int64_t step = 0;
  int probe_steps = 1;
  SlopeSource source = SlopeSource::probe;
  AnchorSource anchor_source = AnchorSource::measured;
  std::vector<std::string> domain_ids;
  std::vector<std::string> dataset_ids;
  // trajectories[i][j]: anchor point (u = 0) followed by the intermediate
  // evaluations of domain i while probing dataset j. Empty when not recorded.
  std::vector<std::vector<std::vector<TrajectoryPoint>>> trajectories;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(entries.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(entries.cols()); }
  bool has_trajectories() const noexcept { return !trajectories.empty(); }
};

struct ProbeOptions {
  int probe_steps = 1;
  int eval_batches = 50;
  int n_evals = 0;  // intermediate evaluations per probe; 0 = endpoint only
  Split split = Split::eval;
  // Normalized anchor values reused from the main evaluation stream.
  std::optional<std::vector<double>> recycled_anchor;
};

/// Evaluation step counts for the intermediate probe evaluations:
/// round(k * probe_steps / n_evals), k = 1..n_evals.
std::vector<int> probe_eval_points(int probe_steps, int n_evals);

/// Normalized values of all scenario domains, in scenario order.
std::vector<double> evaluate_normalized(Trainer& trainer, const Scenario& scenario, int batches, Split split);

/// Probes each dataset for `probe_steps` steps from a snapshot and restores
/// the trainer afterwards (also on failure).
SlopeMatrix estimate_slopes(Trainer& trainer, const Scenario& scenario, const ProbeOptions& options);

/// S_ij = -lr * <g_i, d_j> on normalized metrics, anchor from an ordinary
/// evaluation (or recycled).
SlopeMatrix gradient_alignment_slopes(Trainer& trainer, const Scenario& scenario, int gradient_batches,
                                      int anchor_batches,
                                      std::optional<std::vector<double>> recycled_anchor = std::nullopt);

}  // namespace slopemix
