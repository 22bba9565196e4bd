// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// The adaptive mixture loop and the fixed-weight baselines it is compared
// against.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "slopemix/curve_fit.hpp"
#include "slopemix/run_log.hpp"
#include "slopemix/schedule.hpp"
#include "slopemix/solver.hpp"
#include "slopemix/trainer.hpp"

namespace slopemix {

enum class PredictorKind { linear, curves };
std::string_view to_string(PredictorKind kind) noexcept;

struct ControllerConfig {
  Scenario scenario;
  Schedule schedule;
  PredictorKind predictor = PredictorKind::linear;
  int n_evals = 5;  // probe evaluations per dataset for curves
  SlopeSource slope_source = SlopeSource::probe;
  int gradient_batches = 50;
  SolverGrid grid = SolverGrid::standard();
  bool recycle_evaluations = true;
  FitOptions fit;
  SolverOptions solver;
  // Called after every mixture update; for progress output.
  std::function<void(const UpdateRecord&)> on_update;
};

/// Throws ValidationError for inconsistent settings (curves without probing,
/// a schedule without step 0 or for a different run length).
void validate(const ControllerConfig& config);

/// Trains scenario.total_steps steps, re-solving the mixture at every
/// scheduled update. Trainer failures end the run early with a log marked
/// aborted; configuration errors throw.
RunLog run(const ControllerConfig& config, Trainer& trainer);

enum class BaselineScheme { uniform, proportional };
std::string_view to_string(BaselineScheme scheme) noexcept;

/// Target mass w over target datasets (equally, or in proportion to sample
/// budgets), 1 - w equally over the rest. Without non-target datasets the
/// targets receive all mass.
MixtureWeights fixed_weights(const Scenario& scenario, BaselineScheme scheme, double target_mass);

RunLog run_fixed_baseline(const Scenario& scenario, Trainer& trainer, BaselineScheme scheme, double target_mass);

struct SweepMember {
  BaselineScheme scheme = BaselineScheme::uniform;
  double target_mass = 0.0;
};

inline constexpr double kSweepMasses[] = {0.0, 0.2, 0.5, 0.8, 1.0};

/// Uniform at every mass, plus proportional where it differs from uniform
/// (skipped at w = 0, for a single target, for equal or unlimited budgets).
std::vector<SweepMember> sweep_members(const Scenario& scenario);

using TrainerFactory = std::function<std::unique_ptr<Trainer>()>;

/// Runs every sweep member on its own trainer, up to `jobs` at a time.
/// Results are in sweep_members order.
std::vector<RunLog> baseline_sweep(const Scenario& scenario, const TrainerFactory& factory, int jobs = 1);

}  // namespace slopemix
