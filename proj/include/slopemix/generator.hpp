// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic scenario generation for the simulator.

#pragma once

#include <cstdint>

#include "slopemix/scenario.hpp"
#include "slopemix/sim_trainer.hpp"

namespace slopemix {

enum class Geometry {
  // Constrained optima scattered around the start point; a "generic"
  // non-target dataset sits near their centroid.
  standard,
  // Constrained domains come in opposing pairs around the start point, so
  // no point other than the start satisfies all of them.
  conflicting,
};

struct GeneratorOptions {
  int n_datasets = 3;
  int m_domains = 3;
  int target_datasets = 1;
  int target_domains = 1;
  int accuracy_constraints = 0;
  Geometry geometry = Geometry::standard;
  // Affine losses trained with plain SGD in deterministic mode: the regime
  // where the linear loss predictor is exact.
  bool linear_dynamics = false;
  SimMode mode = SimMode::stochastic;
  std::uint64_t seed = 0;

  int dim = 16;
  int total_steps = 2048;
  int batch_size = 8;
  int eval_every = 64;
  int eval_batches_full = 200;
  int eval_batches_reduced = 50;

  double learning_rate = 2e-3;
  double gradient_noise = 0.5;
  double eval_noise = 0.02;
  double curvature_floor = 0.1;  // delta in A = G^T G / d + delta I
  double target_radius = 3.0;
  double constraint_radius = 1.0;
  double target_gap = 1.0;       // target loss above its optimum at the start
  double constraint_gap = 0.3;   // constrained loss above its optimum at the start
  double overfit_radius = 0.8;   // target dataset optimum offset from its domain's
  int accuracy_quantum = 20;
  double accuracy_scale = 0.25;
};

/// Builds a validated scenario with an embedded simulator configuration.
Scenario generate_scenario(const GeneratorOptions& options);

/// Random symmetric positive-definite matrix G^T G / d + delta I.
Eigen::MatrixXd random_spd(int dim, double delta, std::mt19937_64& rng);
Eigen::VectorXd random_unit(int dim, std::mt19937_64& rng);

}  // namespace slopemix
