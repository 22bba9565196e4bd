// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Penalized mixture problem over the simplex and the (lambda, epsilon) grid
// selection rule.
//
//   minimize   sum_{i in T} S_i . w + lambda * sum_{i in C} max(0, Lhat_i(w) - ref_i + eps)^2
//   over       w in the probability simplex
//
// S_i . w is the per-step target slope, i.e. the predicted change divided by
// the horizon.

#pragma once

#include <string>
#include <vector>

#include "slopemix/predictor.hpp"
#include "slopemix/weights.hpp"

namespace slopemix {

struct SolverGrid {
  std::vector<double> lambdas;   // positive, ascending
  std::vector<double> epsilons;  // nonnegative

  /// 15 log-spaced lambdas on [1, 5000] and 3 epsilons on [0, 0.1].
  static SolverGrid standard();
  static SolverGrid single(double lambda, double epsilon) { return {{lambda}, {epsilon}}; }
  std::size_t size() const noexcept { return lambdas.size() * epsilons.size(); }
};

void validate(const SolverGrid& grid);

struct MixtureProblem {
  AffinePrediction prediction;
  std::vector<std::string> domain_ids;  // row labels, for error messages
  std::vector<std::size_t> targets;
  std::vector<std::size_t> constrained;
  std::vector<double> references;  // normalized, parallel to `constrained`
  double horizon = 1.0;

  std::size_t n_datasets() const noexcept { return prediction.cols(); }
};

/// Builds a problem from a scenario's roles and normalized references
/// (indexed by domain; entries for target domains are ignored).
MixtureProblem make_problem(AffinePrediction prediction, const Scenario& scenario,
                            const std::vector<double>& normalized_references, double horizon);

struct SolverOptions {
  int max_iterations = 500;
  double tolerance = 1e-12;  // projected-gradient step norm
};

double penalized_objective(const MixtureProblem& problem, std::span<const double> w, double lambda,
                           double epsilon);
double target_objective(const MixtureProblem& problem, std::span<const double> w);
/// max over constraints of max(0, Lhat_i(w) - ref_i); epsilon plays no role.
double max_violation(const MixtureProblem& problem, std::span<const double> w);

/// Projected gradient with Barzilai-Borwein steps and backtracking, started
/// from the uniform point and from every vertex; the best end point wins.
MixtureWeights solve_penalized(const MixtureProblem& problem, double lambda, double epsilon,
                               const SolverOptions& options = {});

struct SolveOutcome {
  MixtureWeights weights{std::vector<double>{1.0}};
  bool feasible = false;
  double target_objective = 0.0;
  double max_violation = 0.0;
  double lambda = 0.0;
  double epsilon = 0.0;
  std::vector<double> predicted;  // Lhat(w), normalized, every domain
};

/// Scores a weight vector against the problem (feasibility ignores epsilon).
SolveOutcome classify(const MixtureProblem& problem, const MixtureWeights& weights, double lambda, double epsilon);

struct Selection {
  SolveOutcome chosen;
  std::vector<SolveOutcome> candidates;  // grid order: lambda-major
};

/// Solves every grid point. Feasible candidates compete on the target
/// objective; if none is feasible, on max violation. Ties go to the larger
/// lambda, then the larger epsilon, then the lexicographically smaller w.
Selection select_weights(const MixtureProblem& problem, const SolverGrid& grid, const SolverOptions& options = {});

/// The reduction rule alone, over precomputed candidates.
std::size_t select_index(const std::vector<SolveOutcome>& candidates);

}  // namespace slopemix
