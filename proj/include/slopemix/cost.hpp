// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Compute-cost accounting in units of one baseline run.
//
//   rho_t  = H_t * C_bp + (H_t / eval_every) * M * full * C_fwd
//   C_red  = M * reduced * C_fwd
//   beta_t = [N * (c_t * C_bp + f * C_red) + [no recycle] * C_red] / rho_t
//
// with f = 1 for the linear predictor and f = n_evals for curves.

#pragma once

#include <utility>
#include <vector>

#include "slopemix/scenario.hpp"
#include "slopemix/schedule.hpp"

namespace slopemix {

struct CostConfig {
  int n_datasets = 1;
  int m_domains = 1;
  int eval_every = 64;
  int eval_batches_full = 200;
  int eval_batches_reduced = 50;
  double fwd_cost = 1.0;   // C_fwd, one forward pass on a batch
  double step_cost = 3.0;  // C_bp, one training step on a batch
  int n_evals = 0;         // probe evaluations for curve fitting; 0 = linear
  bool recycling = true;

  static CostConfig from_scenario(const Scenario& scenario, int n_evals = 0);
};

void validate(const CostConfig& config);

double interval_baseline_cost(const CostConfig& config, double horizon);
double reduced_eval_cost(const CostConfig& config);
/// Evaluation work of the probes at one update: N * f * C_red.
double probe_eval_term(const CostConfig& config);
double update_overhead(const CostConfig& config, double horizon, double probe_steps, bool recycled);

struct UpdateCost {
  int step = 0;
  int horizon = 0;
  int probe_steps = 0;
  bool recycled = false;
  double rho = 0.0;
  double beta = 0.0;
};

struct CostBreakdown {
  std::vector<UpdateCost> updates;
  double baseline = 0.0;  // sum of rho_t
  double total = 0.0;     // sum of rho_t (1 + beta_t)
  double relative = 1.0;  // total / baseline; 1 for an empty schedule
};

/// An update recycles its anchor when recycling is on and it falls on the
/// evaluation grid.
bool recycles(const CostConfig& config, int step);

CostBreakdown cost_breakdown(const CostConfig& config, const Schedule& schedule);
double total_relative_cost(const CostConfig& config, const Schedule& schedule);

/// Mean relative cost over a list of (N, M) shapes, other settings fixed.
double average_relative_cost(const CostConfig& base, const Schedule& schedule,
                             const std::vector<std::pair<int, int>>& shapes);

}  // namespace slopemix
