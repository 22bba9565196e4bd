// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Metrics over run logs: feasibility, constrained perplexity reduction,
// max violation and best-of-k baseline statistics. Checkpoint selection reads
// the eval split only; reported reductions read the test split only.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "slopemix/run_log.hpp"

namespace slopemix {

struct CheckpointRecord {
  std::int64_t step = 0;
  std::vector<double> eval;  // normalized, every domain
  std::vector<double> test;  // normalized, every domain
};

/// The inputs every metric needs, extracted from a log (or built by hand).
struct CheckpointSet {
  std::vector<std::size_t> targets;
  std::vector<std::size_t> loss_targets;  // targets with a loss metric
  std::vector<std::size_t> constrained;
  std::vector<double> references;  // normalized, parallel to `constrained`
  CheckpointRecord step0;
  std::vector<CheckpointRecord> checkpoints;  // eval_every grid, including step 0
};

/// Full-budget evaluations on both splits at multiples of eval_every.
CheckpointSet checkpoints(const RunLog& log);

struct FeasibilityResult {
  bool feasible = false;
  std::optional<std::int64_t> witness;  // earliest qualifying step
};

/// Some eligible checkpoint has every constraint at or below its reference
/// and a strictly lower target sum than step 0 (eval split).
FeasibilityResult feasibility(const CheckpointSet& set, bool include_step0 = false);
FeasibilityResult feasibility(const RunLog& log, bool include_step0 = false);

struct ViolationResult {
  double value = 0.0;
  std::optional<std::int64_t> step;
};

/// min over eligible checkpoints of max_{i in C} max(0, L_i - ref_i), eval split.
ViolationResult max_violation(const CheckpointSet& set, bool include_step0 = false);
ViolationResult max_violation(const RunLog& log, bool include_step0 = false);

struct MetricReport {
  bool feasible = false;
  std::optional<std::int64_t> best_checkpoint_step;
  double ppl_reduction_pct = 0.0;
  double max_violation = 0.0;
  std::optional<std::int64_t> max_violation_step;
  // Test-split normalized change from step 0 at the best checkpoint, every
  // domain; empty when infeasible.
  std::vector<double> deltas;
};

/// (1 - exp(mean over loss targets of L_test(best) - L_test(0))) * 100 at the
/// feasible checkpoint with the lowest eval target sum (earliest on ties).
MetricReport constrained_ppl_reduction(const CheckpointSet& set, bool include_step0 = false);
MetricReport constrained_ppl_reduction(const RunLog& log, bool include_step0 = false);

struct BestOfK {
  double exact = 0.0;
  double monte_carlo = 0.0;
  double standard_error = 0.0;
};

/// E[max of k draws with replacement] = sum_v v [(F(v)/n)^k - (F(v-)/n)^k].
double best_of_k_exact(std::span<const double> pool, int k);
BestOfK best_of_k(std::span<const double> pool, int k, int trials, std::uint64_t seed);

double median(std::vector<double> values);

}  // namespace slopemix
