// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures and independent oracles for the test binaries.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "slopemix/cost.hpp"
#include "slopemix/scenario.hpp"
#include "slopemix/sim_trainer.hpp"
#include "slopemix/solver.hpp"

namespace slopemix::testing {

// Scenario skeleton with ids t0.. (target datasets), a0.. (non-target
// datasets), T0.. (target domains) and C0.. (constrained domains).
Scenario skeleton(int target_datasets, int other_datasets, int target_domains, int constrained_domains,
                  int total_steps = 256, int eval_every = 64);

// Deterministic quadratic simulator over `scenario` with random SPD
// curvature and centers drawn on spheres.
SimConfig random_quadratic_config(const Scenario& scenario, std::uint64_t seed, int dim = 6,
                                  double learning_rate = 1e-2);

// Embeds `config` as the scenario's simulator object.
Scenario with_simulator(Scenario scenario, const SimConfig& config);

QuadraticObjective affine_objective(std::vector<double> linear, double offset, int dim);
QuadraticObjective isotropic(std::vector<double> center, double offset, double curvature = 1.0);

// Random affine mixture problem: base ~ U(1, 3), change ~ N(0, 1), the
// references at base plus a slack in [-0.1, 0.3].
MixtureProblem random_affine_problem(std::mt19937_64& rng, int n, int m);

struct GridOptimum {
  bool feasible = false;
  double target_objective = 0.0;  // best feasible objective
  double max_violation = 0.0;     // smallest violation when infeasible
  std::vector<double> weights;
};

// Exhaustive search over {w : w_j = k_j / resolution, sum = 1}, evaluated
// with a hand-written loop rather than the library's objective functions.
GridOptimum grid_search(const MixtureProblem& problem, int resolution);

// All lattice points of the simplex at `resolution`.
std::vector<std::vector<double>> simplex_lattice(int n, int resolution);

// Exact predicted values, target objective and violation from raw loops.
std::vector<double> oracle_predicted(const MixtureProblem& problem, const std::vector<double>& w);
double oracle_target_objective(const MixtureProblem& problem, const std::vector<double>& w);
double oracle_violation(const MixtureProblem& problem, const std::vector<double>& w);

// Walks the run step by step and counts every training step and forward
// batch: probes, probe evaluations and anchors at updates, the main-stream
// evaluation at each grid step, then the training step itself.
struct EventCount {
  std::int64_t train_steps = 0;
  std::int64_t forward_batches = 0;
  std::int64_t baseline_train_steps = 0;
  std::int64_t baseline_forward_batches = 0;
  double total(const CostConfig& c) const { return train_steps * c.step_cost + forward_batches * c.fwd_cost; }
  double baseline(const CostConfig& c) const {
    return baseline_train_steps * c.step_cost + baseline_forward_batches * c.fwd_cost;
  }
};
EventCount count_events(const CostConfig& config, const Schedule& schedule);

// Delegates to another trainer; can hide the gradients capability and fail
// the n-th train call.
class WrappedTrainer final : public Trainer {
 public:
  explicit WrappedTrainer(Trainer& inner) : inner_(inner), caps_(inner.capabilities()) {}
  void hide_gradients() { caps_.gradients = false; }
  void fail_train_call(int n) { fail_at_ = n; }
  int train_calls() const noexcept { return train_calls_; }

  const TrainerCapabilities& capabilities() const override { return caps_; }
  CheckpointHandle snapshot() override { return inner_.snapshot(); }
  void restore(CheckpointHandle h) override { inner_.restore(h); }
  void release(CheckpointHandle h) override { inner_.release(h); }
  void train_steps(const TrainPlan& plan, int steps) override;
  EvalResult evaluate(const EvalRequest& request) override { return inner_.evaluate(request); }
  GradientReport gradient_report(const std::vector<std::string>& domains, const std::vector<std::string>& datasets,
                                 int batches) override;
  std::int64_t step() const override { return inner_.step(); }

 private:
  Trainer& inner_;
  TrainerCapabilities caps_;
  int fail_at_ = -1;
  int train_calls_ = 0;
};

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace slopemix::testing
