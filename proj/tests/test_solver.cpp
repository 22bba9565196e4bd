// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "slopemix/errors.hpp"
#include "slopemix/solver.hpp"
#include "support.hpp"

using namespace slopemix;

namespace {

// Penalized objective from raw loops.
double oracle_penalized(const MixtureProblem& p, const std::vector<double>& w, double lambda, double epsilon) {
  const auto pred = testing::oracle_predicted(p, w);
  double f = testing::oracle_target_objective(p, w);
  for (std::size_t k = 0; k < p.constrained.size(); ++k) {
    const double h = pred[p.constrained[k]] - p.references[k] + epsilon;
    if (h > 0.0) f += lambda * h * h;
  }
  return f;
}

MixtureProblem single_constraint_problem(std::mt19937_64& rng, int n) {
  MixtureProblem p = testing::random_affine_problem(rng, n, 2);
  REQUIRE(p.constrained.size() == 1);
  return p;
}

SolveOutcome outcome(std::vector<double> w, bool feasible, double objective, double violation, double lambda,
                     double epsilon) {
  SolveOutcome o;
  o.weights = MixtureWeights(std::move(w));
  o.feasible = feasible;
  o.target_objective = objective;
  o.max_violation = violation;
  o.lambda = lambda;
  o.epsilon = epsilon;
  return o;
}

}  // namespace

TEST_CASE("standard grid") {
  const SolverGrid g = SolverGrid::standard();
  REQUIRE(g.lambdas.size() == 15);
  CHECK(g.lambdas.front() == 1.0);
  CHECK(g.lambdas.back() == 5000.0);
  const double ratio = std::pow(5000.0, 1.0 / 14.0);
  for (std::size_t k = 1; k < g.lambdas.size(); ++k) CHECK(g.lambdas[k] / g.lambdas[k - 1] == doctest::Approx(ratio));
  CHECK(g.epsilons == std::vector<double>{0.0, 0.05, 0.1});
  CHECK(g.size() == 45);
  CHECK_NOTHROW(validate(g));
  CHECK_THROWS_AS(validate(SolverGrid{{}, {0.0}}), ValidationError);
  CHECK_THROWS_AS(validate(SolverGrid{{2.0, 1.0}, {0.0}}), ValidationError);
  CHECK_THROWS_AS(validate(SolverGrid{{0.0}, {0.0}}), ValidationError);
  CHECK_THROWS_AS(validate(SolverGrid{{1.0}, {-0.1}}), ValidationError);
}

TEST_CASE("objective pieces agree with raw loops") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3), m = 2 + static_cast<int>(rng() % 5);
    MixtureProblem p = testing::random_affine_problem(rng, n, m);
    p.horizon = 1.0 + static_cast<double>(rng() % 100);
    for (const auto& w : testing::simplex_lattice(n, 4)) {
      CHECK(target_objective(p, w) == doctest::Approx(testing::oracle_target_objective(p, w)));
      CHECK(max_violation(p, w) == doctest::Approx(testing::oracle_violation(p, w)));
      CHECK(penalized_objective(p, w, 37.0, 0.05) == doctest::Approx(oracle_penalized(p, w, 37.0, 0.05)));
    }
  }
}

TEST_CASE("penalized solve reaches the lattice minimum") {
  // The penalized objective is convex, so the solver's end point must be at
  // least as good as the best point of a fine lattice.
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3), m = 2 + static_cast<int>(rng() % 5);
    const MixtureProblem p = testing::random_affine_problem(rng, n, m);
    const double lambda = std::pow(10.0, static_cast<double>(rng() % 4));
    const double eps = 0.05 * static_cast<double>(rng() % 3);
    const MixtureWeights w = solve_penalized(p, lambda, eps);
    double sum = 0.0;
    for (double x : w.values()) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    const double f = oracle_penalized(p, w.vector(), lambda, eps);
    double lattice = std::numeric_limits<double>::infinity();
    for (const auto& v : testing::simplex_lattice(n, n == 4 ? 60 : 200))
      lattice = std::min(lattice, oracle_penalized(p, v, lambda, eps));
    CHECK(f <= lattice + 1e-9 * std::max(1.0, std::abs(lattice)));
  }
}

TEST_CASE("violation does not grow with the penalty weight") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const MixtureProblem p = single_constraint_problem(rng, 2 + static_cast<int>(rng() % 3));
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : SolverGrid::standard().lambdas) {
      const double v = max_violation(p, solve_penalized(p, lambda, 0.0).values());
      CHECK(v <= prev + 1e-9);
      prev = v;
    }
  }
}

TEST_CASE("a margin never increases the violation") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const MixtureProblem p = single_constraint_problem(rng, 2 + static_cast<int>(rng() % 3));
    for (double lambda : {1.0, 30.0, 1000.0}) {
      const double v0 = max_violation(p, solve_penalized(p, lambda, 0.0).values());
      const double v1 = max_violation(p, solve_penalized(p, lambda, 0.1).values());
      CHECK(v1 <= v0 + 1e-9);
    }
  }
}

TEST_CASE("without constraints the best target vertex wins") {
  MixtureProblem p;
  p.prediction.base = Eigen::Vector2d(1.0, 1.0);
  p.prediction.change.resize(2, 3);
  p.prediction.change << -0.1, -0.5, 0.2, 0.0, 0.0, 0.0;
  p.targets = {0, 1};
  const Selection s = select_weights(p, SolverGrid::standard());
  CHECK(s.chosen.feasible);
  CHECK(s.chosen.weights.vector() == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(s.chosen.target_objective == doctest::Approx(-0.5));
  CHECK(s.candidates.size() == 45);
}

TEST_CASE("a binding constraint is respected") {
  // Dataset 0 helps the target and hurts the constraint; dataset 1 is
  // neutral. The constraint allows w0 <= 0.4.
  MixtureProblem p;
  p.prediction.base = Eigen::Vector2d(2.0, 1.0);
  p.prediction.change.resize(2, 2);
  p.prediction.change << -1.0, 0.0, 0.5, 0.0;
  p.targets = {0};
  p.constrained = {1};
  p.references = {1.2};
  const Selection s = select_weights(p, SolverGrid::standard());
  CHECK(s.chosen.feasible);
  CHECK(s.chosen.max_violation == 0.0);
  CHECK(s.chosen.weights[0] <= 0.4);
  CHECK(s.chosen.weights[0] >= 0.35);
  CHECK(s.chosen.predicted[1] <= 1.2);
}

TEST_CASE("infeasible problems minimize the violation") {
  MixtureProblem p;
  p.prediction.base = Eigen::Vector3d(2.0, 1.0, 1.0);
  p.prediction.change.resize(3, 2);
  p.prediction.change << -1.0, 0.0, 0.5, -0.5, -0.5, 0.5;
  p.targets = {0};
  p.constrained = {1, 2};
  p.references = {0.9, 0.9};
  const Selection s = select_weights(p, SolverGrid::standard());
  CHECK_FALSE(s.chosen.feasible);
  // Both constraints read 1 + 0.5 (w0 - w1) and 1 - 0.5 (w0 - w1); the
  // smallest worst case is 0.1 at w = (0.5, 0.5).
  CHECK(s.chosen.max_violation == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("selection tie rules") {
  SUBCASE("feasible beats infeasible regardless of objective") {
    const std::vector<SolveOutcome> c{outcome({1, 0}, false, -5.0, 0.1, 1, 0), outcome({0, 1}, true, 1.0, 0.0, 1, 0)};
    CHECK(select_index(c) == 1);
  }
  SUBCASE("lower objective among feasible") {
    const std::vector<SolveOutcome> c{outcome({1, 0}, true, -1.0, 0.0, 1, 0), outcome({0, 1}, true, -2.0, 0.0, 1, 0)};
    CHECK(select_index(c) == 1);
  }
  SUBCASE("lower violation when nothing is feasible") {
    const std::vector<SolveOutcome> c{outcome({1, 0}, false, -1.0, 0.3, 1, 0), outcome({0, 1}, false, 2.0, 0.2, 1, 0)};
    CHECK(select_index(c) == 1);
  }
  SUBCASE("ties prefer larger lambda, then larger epsilon, then smaller w") {
    const std::vector<SolveOutcome> a{outcome({1, 0}, true, 0.0, 0.0, 10, 0), outcome({1, 0}, true, 0.0, 0.0, 5, 0.1)};
    CHECK(select_index(a) == 0);
    const std::vector<SolveOutcome> b{outcome({1, 0}, true, 0.0, 0.0, 5, 0), outcome({1, 0}, true, 0.0, 0.0, 5, 0.05)};
    CHECK(select_index(b) == 1);
    const std::vector<SolveOutcome> c{outcome({0.6, 0.4}, true, 0.0, 0.0, 5, 0), outcome({0.4, 0.6}, true, 0.0, 0.0, 5, 0)};
    CHECK(select_index(c) == 1);
  }
  CHECK_THROWS_AS(select_index({}), ValidationError);
}

TEST_CASE("unusable columns get no weight") {
  MixtureProblem p;
  p.prediction.base = Eigen::Vector2d(1.0, 1.0);
  p.prediction.change.resize(2, 3);
  const double inf = std::numeric_limits<double>::infinity();
  p.prediction.change << -0.1, -0.2, inf, 0.0, 0.0, 0.0;
  p.prediction.usable = {true, true, false};
  p.targets = {0};
  p.constrained = {1};
  p.references = {1.0};
  const Selection s = select_weights(p, SolverGrid::standard());
  CHECK(s.chosen.weights[2] == 0.0);
  CHECK(s.chosen.weights[1] == 1.0);

  p.prediction.usable = {false, false, false};
  CHECK_THROWS_AS(solve_penalized(p, 1.0, 0.0), Error);
  p.prediction.usable = {true, true, true};
  CHECK_THROWS_AS(solve_penalized(p, 1.0, 0.0), Error);
}

TEST_CASE("problems built from a scenario") {
  const Scenario s = testing::skeleton(1, 1, 1, 2);
  AffinePrediction a;
  a.base = Eigen::Vector3d(1.0, 2.0, 3.0);
  a.change = Eigen::MatrixXd::Zero(3, 2);
  a.usable = {true, true};
  const MixtureProblem p = make_problem(a, s, {9.0, 2.5, 3.5}, 64.0);
  CHECK(p.targets == std::vector<std::size_t>{0});
  CHECK(p.constrained == std::vector<std::size_t>{1, 2});
  CHECK(p.references == std::vector<double>{2.5, 3.5});
  CHECK(p.horizon == 64.0);
  CHECK_THROWS_AS(make_problem(a, s, {1.0}, 64.0), ValidationError);
  CHECK_THROWS_AS(make_problem(a, testing::skeleton(1, 2, 1, 2), {1, 2, 3}, 64.0), ValidationError);
}

TEST_CASE("penalized optimum on a one-dimensional instance") {
  MixtureProblem p;
  p.prediction.base = Eigen::Vector2d(2.0, 1.0);
  p.prediction.change.resize(2, 2);
  p.prediction.change << -1.0, 0.0, 1.0, -1.0;
  p.targets = {0};
  p.constrained = {1};
  p.references = {1.0};
  const MixtureWeights w = solve_penalized(p, 5000.0, 0.0);
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-3));
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 1000; ++k) {
    const double x = k / 1000.0;
    best = std::min(best, oracle_penalized(p, {x, 1.0 - x}, 5000.0, 0.0));
  }
  // -w0 + 5000 (2 w0 - 1)^2 is minimized at w0 = 0.5 + 1/40000; the
  // 1e-3 lattice misses that by 1.25e-5 in objective.
  const double f = oracle_penalized(p, w.vector(), 5000.0, 0.0);
  CHECK(f == doctest::Approx(-0.5000125).epsilon(1e-12));
  CHECK(f <= best);
  CHECK(best - f <= 1.25e-5 + 1e-12);
}

TEST_CASE("grid selection against the brute-force optimum") {
  // Classification agrees with an exhaustive lattice search. The selected
  // point cannot beat the lattice by more than its resolution allows, and
  // when nothing is feasible it is the least-violating candidate.
  std::mt19937_64 rng(6);
  int feasible = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2), m = 2 + static_cast<int>(rng() % 4);
    const MixtureProblem p = testing::random_affine_problem(rng, n, m);
    const auto oracle = testing::grid_search(p, 100);
    const Selection s = select_weights(p, SolverGrid::standard());
    CHECK(s.chosen.feasible == oracle.feasible);
    if (oracle.feasible) {
      ++feasible;
      CHECK(s.chosen.target_objective >= oracle.target_objective - 0.1);
    } else {
      CHECK(s.chosen.max_violation >= oracle.max_violation - 0.1);
      for (const auto& c : s.candidates) CHECK(s.chosen.max_violation <= c.max_violation);
    }
  }
  CHECK(feasible > 10);
}
