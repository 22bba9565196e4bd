// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// The trainer abstraction driven by the mixture controller. Implementations:
// SimTrainer (in-process synthetic trainer) and BridgeTrainer (external
// process over the line protocol).

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "slopemix/scenario.hpp"
#include "slopemix/weights.hpp"

namespace slopemix {

struct CheckpointHandle {
  std::uint64_t token = 0;
  friend bool operator==(const CheckpointHandle&, const CheckpointHandle&) = default;
};

struct DomainInfo {
  std::string id;
  MetricKind metric = MetricKind::loss;
};

struct TrainerCapabilities {
  std::vector<std::string> datasets;
  std::vector<DomainInfo> domains;
  bool gradients = false;
  int max_checkpoints = 0;  // 0 = unbounded
  bool concurrent_evaluate = false;
};

/// Train on a single dataset.
struct DatasetPlan {
  std::string dataset;
};

using TrainPlan = std::variant<DatasetPlan, MixtureWeights>;

struct EvalRequest {
  std::vector<std::string> domain_ids;
  int batches = 1;
  Split split = Split::eval;
};

struct EvalResult {
  std::map<std::string, double> values;  // raw metric, not normalized
  std::int64_t step = 0;
};

struct GradientReport {
  std::map<std::string, std::vector<double>> eval_gradients;      // g_i per domain
  std::map<std::string, std::vector<double>> dataset_directions;  // d_j per dataset
  double learning_rate = 0.0;
};

class Trainer {
 public:
  virtual ~Trainer() = default;

  virtual const TrainerCapabilities& capabilities() const = 0;

  /// Captures parameters and optimizer state. Does not perturb the trainer.
  virtual CheckpointHandle snapshot() = 0;
  virtual void restore(CheckpointHandle handle) = 0;
  virtual void release(CheckpointHandle handle) = 0;

  /// Runs `steps` optimizer updates under `plan`.
  virtual void train_steps(const TrainPlan& plan, int steps) = 0;

  /// Side-effect free.
  virtual EvalResult evaluate(const EvalRequest& request) = 0;

  /// Throws TrainerError(capability_unsupported) unless capabilities().gradients.
  virtual GradientReport gradient_report(const std::vector<std::string>& domain_ids,
                                         const std::vector<std::string>& dataset_ids,
                                         int batches) = 0;

  /// Number of optimizer updates applied so far (restored by restore()).
  virtual std::int64_t step() const = 0;
};

/// Ids advertised by a trainer must match the scenario exactly, including
/// metric kinds. Throws ValidationError naming the first mismatch.
void check_capabilities(const TrainerCapabilities& caps, const Scenario& scenario);

/// Restores a snapshot on every exit path unless dismissed.
class RestoreGuard {
 public:
  explicit RestoreGuard(Trainer& trainer) : trainer_(trainer), handle_(trainer.snapshot()) {}
  RestoreGuard(const RestoreGuard&) = delete;
  RestoreGuard& operator=(const RestoreGuard&) = delete;
  ~RestoreGuard();

  /// Restores and releases now; exceptions propagate.
  void restore_now();

 private:
  Trainer& trainer_;
  CheckpointHandle handle_;
  bool done_ = false;
};

}  // namespace slopemix
