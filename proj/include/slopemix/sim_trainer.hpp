// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multi-domain trainer. Every dataset and evaluation domain owns a
// quadratic (or affine) loss over a shared parameter vector; where their
// minimizers sit relative to each other decides transfer and interference.
// Training uses a from-scratch Adam (or plain SGD) whose full state can be
// snapshotted.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "slopemix/scenario.hpp"
#include "slopemix/trainer.hpp"

namespace slopemix {

/// f(x) = 1/2 (x - center)^T matrix (x - center) + linear^T x + offset.
/// `linear` may be empty (zero). A zero matrix with a nonzero linear term
/// gives the affine losses of the linear-dynamics mode.
struct QuadraticObjective {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd center;
  double offset = 0.0;
  Eigen::VectorXd linear;
};

/// Throws ValidationError on dimension mismatch.
double sim_loss(const QuadraticObjective& objective, const Eigen::VectorXd& state);
Eigen::VectorXd sim_gradient(const QuadraticObjective& objective, const Eigen::VectorXd& state);

/// Accuracy surrogate parameters for a domain with metric kind accuracy.
struct AccuracyMap {
  double scale = 1.0;
  double threshold = 0.0;
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// floor(Q * logistic((threshold - loss) / scale)) / Q. Piecewise constant and
/// nonincreasing in the loss.
double quantized_accuracy(double loss, const AccuracyMap& map, int quantum);

enum class SimMode { deterministic, stochastic };
enum class OptimizerKind { adam, sgd };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;
};

/// m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  t <- t+1
/// x <- x - lr * mhat / (sqrt(vhat) + eps), with mhat = m/(1-b1^t), vhat = v/(1-b2^t).
void adam_step(Eigen::VectorXd& params, AdamState& state, const Eigen::VectorXd& gradient,
               double learning_rate, const AdamParams& hp);

/// Direction mhat / (sqrt(vhat) + eps) the next Adam step would take if fed
/// `gradient`; the state is not modified.
Eigen::VectorXd adam_direction(const AdamState& state, const Eigen::VectorXd& gradient,
                               const AdamParams& hp);

struct SimConfig {
  int dim = 16;
  std::vector<QuadraticObjective> dataset_objectives;  // scenario dataset order
  std::vector<QuadraticObjective> domain_objectives;   // scenario domain order
  std::vector<std::optional<AccuracyMap>> accuracy;    // set for accuracy domains
  Eigen::VectorXd initial_state;                       // empty = zeros
  double learning_rate = 1e-3;
  AdamParams adam;
  OptimizerKind optimizer = OptimizerKind::adam;
  double gradient_noise = 0.0;  // per-batch gradient noise std
  double eval_noise = 0.0;      // per-batch evaluation noise std
  int accuracy_quantum = 20;
  SimMode mode = SimMode::deterministic;
  std::uint64_t seed = 0;
  int max_checkpoints = 0;  // 0 = unbounded
};

/// Parses the `simulator` object of a scenario file. Objectives are keyed by
/// dataset/domain id. Deterministic mode forces both noise levels to zero.
SimConfig sim_config_from_json(const nlohmann::json& doc, const Scenario& scenario);
nlohmann::json to_json(const SimConfig& config, const Scenario& scenario);
void validate(const SimConfig& config, const Scenario& scenario);

class SimTrainer final : public Trainer {
 public:
  SimTrainer(Scenario scenario, SimConfig config);

  /// Builds from the scenario's embedded `simulator` object.
  static SimTrainer from_scenario(const Scenario& scenario);

  const TrainerCapabilities& capabilities() const override { return caps_; }
  CheckpointHandle snapshot() override;
  void restore(CheckpointHandle handle) override;
  void release(CheckpointHandle handle) override;
  void train_steps(const TrainPlan& plan, int steps) override;
  EvalResult evaluate(const EvalRequest& request) override;
  GradientReport gradient_report(const std::vector<std::string>& domain_ids,
                                 const std::vector<std::string>& dataset_ids,
                                 int batches) override;
  std::int64_t step() const override { return state_.step; }

  const SimConfig& config() const noexcept { return config_; }
  const Eigen::VectorXd& parameters() const noexcept { return state_.theta; }
  const AdamState& optimizer_state() const noexcept { return state_.adam; }
  void set_learning_rate(double learning_rate);

  /// Noise-free underlying loss of a domain (the pre-quantization loss for
  /// accuracy domains).
  double true_loss(std::size_t domain) const;
  /// Noise-free raw metric value of a domain.
  double true_metric(std::size_t domain) const;

  /// Exact textual dump of the full mutable state (bit patterns), for
  /// state-equality checks.
  std::string state_dump() const;

  std::size_t held_checkpoints() const noexcept { return checkpoints_.size(); }

 private:
  struct State {
    Eigen::VectorXd theta;
    AdamState adam;
    std::mt19937_64 rng;
    std::vector<std::int64_t> cursor;  // samples consumed per finite dataset
    std::int64_t step = 0;
  };

  std::size_t require_dataset(const std::string& id) const;
  std::size_t require_domain(const std::string& id) const;
  std::vector<double> checked_weights(const TrainPlan& plan) const;
  Eigen::VectorXd batch_gradient(std::size_t dataset);
  void apply_update(const Eigen::VectorXd& gradient);
  double metric_at(std::size_t domain, double noise) const;
  std::uint64_t state_hash() const;

  Scenario scenario_;
  SimConfig config_;
  TrainerCapabilities caps_;
  State state_;
  std::map<std::uint64_t, State> checkpoints_;
  std::uint64_t next_token_ = 1;
};

namespace detail {
/// splitmix64 finalizer, used to derive independent seeded streams.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b) noexcept;
/// Standard normal via Box-Muller on 53-bit uniforms; platform independent.
double standard_normal(std::mt19937_64& rng);
double uniform01(std::mt19937_64& rng);
}  // namespace detail

}  // namespace slopemix
