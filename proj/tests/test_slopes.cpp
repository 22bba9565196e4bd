// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "slopemix/errors.hpp"
#include "slopemix/generator.hpp"
#include "slopemix/sim_trainer.hpp"
#include "slopemix/slopes.hpp"
#include "support.hpp"

using namespace slopemix;

namespace {

constexpr int kDim = 3;

// Affine losses trained with SGD: one step on dataset j changes domain i by
// exactly -lr * <a_i, b_j>.
struct AffineFixture {
  Scenario scenario;
  SimConfig config;
  std::vector<std::vector<double>> a, b;
};

AffineFixture affine_fixture(std::uint64_t seed, double lr = 0.01) {
  AffineFixture f;
  f.scenario = testing::skeleton(1, 2, 1, 2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  auto draw = [&] {
    std::vector<double> v(kDim);
    for (double& x : v) x = dist(rng);
    return v;
  };
  f.config.dim = kDim;
  f.config.learning_rate = lr;
  f.config.optimizer = OptimizerKind::sgd;
  f.config.mode = SimMode::deterministic;
  f.config.initial_state = Eigen::VectorXd::Zero(kDim);
  for (std::size_t j = 0; j < f.scenario.n_datasets(); ++j) {
    f.b.push_back(draw());
    f.config.dataset_objectives.push_back(testing::affine_objective(f.b.back(), 1.0, kDim));
  }
  for (std::size_t i = 0; i < f.scenario.m_domains(); ++i) {
    f.a.push_back(draw());
    f.config.domain_objectives.push_back(testing::affine_objective(f.a.back(), 2.0, kDim));
    f.config.accuracy.emplace_back(std::nullopt);
  }
  return f;
}

double at(const SlopeMatrix& s, std::size_t i, std::size_t j) {
  return s.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

ProbeOptions probe(int c, int n_evals = 0) {
  ProbeOptions o;
  o.probe_steps = c;
  o.n_evals = n_evals;
  return o;
}

}  // namespace

TEST_CASE("probe evaluation points") {
  CHECK(probe_eval_points(128, 5) == std::vector<int>{26, 51, 77, 102, 128});
  CHECK(probe_eval_points(4, 4) == std::vector<int>{1, 2, 3, 4});
  CHECK(probe_eval_points(7, 1) == std::vector<int>{7});
  for (int c : {1, 3, 16, 128})
    for (int n : {1, 2, 5, 9}) CHECK(probe_eval_points(c, n).back() == c);
}

TEST_CASE("affine losses give the exact slope") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AffineFixture f = affine_fixture(seed);
    SimTrainer t(f.scenario, f.config);
    const double lr = f.config.learning_rate;
    for (int c : {1, 4, 8, 33}) {
      const SlopeMatrix s = estimate_slopes(t, f.scenario, probe(c));
      REQUIRE(s.rows() == 3);
      REQUIRE(s.cols() == 3);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          double dot = 0.0;
          for (int k = 0; k < kDim; ++k) dot += f.a[i][static_cast<std::size_t>(k)] * f.b[j][static_cast<std::size_t>(k)];
          CHECK(std::abs(at(s, i, j) - (-lr * dot)) <= 1e-9);
        }
    }
  }
}

TEST_CASE("decoupled coordinates give zero slope") {
  // Dataset 0 moves coordinate 0 only; domain 2 reads coordinate 2 only.
  AffineFixture f = affine_fixture(1);
  f.config.dataset_objectives[0] = testing::affine_objective({1.0, 0.0, 0.0}, 0.0, kDim);
  f.config.domain_objectives[2] = testing::affine_objective({0.0, 0.0, 1.0}, 0.0, kDim);
  f.config.domain_objectives[1] = testing::affine_objective({1.0, 0.0, 0.0}, 0.0, kDim);
  SimTrainer t(f.scenario, f.config);
  const SlopeMatrix s = estimate_slopes(t, f.scenario, probe(16));
  CHECK(at(s, 2, 0) == 0.0);
  // Moving along -b lowers a loss aligned with b.
  CHECK(at(s, 1, 0) < 0.0);
  CHECK(at(s, 1, 0) == doctest::Approx(-f.config.learning_rate).epsilon(1e-12));
}

TEST_CASE("probing leaves the trainer untouched") {
  for (SimMode mode : {SimMode::deterministic, SimMode::stochastic}) {
    GeneratorOptions o;
    o.n_datasets = 3;
    o.m_domains = 4;
    o.dim = 8;
    o.mode = mode;
    o.seed = 9;
    const Scenario s = generate_scenario(o);
    SimTrainer t = SimTrainer::from_scenario(s);
    t.train_steps(MixtureWeights::uniform(3), 20);
    for (int c : {1, 2, 128}) {
      const std::string before = t.state_dump();
      const auto eval_before = t.evaluate({s.domain_ids(), 50, Split::eval}).values;
      (void)estimate_slopes(t, s, probe(c, 3));
      CHECK(t.state_dump() == before);
      CHECK(t.held_checkpoints() == 0);
      CHECK(t.evaluate({s.domain_ids(), 50, Split::eval}).values == eval_before);
    }
  }
}

TEST_CASE("columns do not depend on dataset order") {
  AffineFixture f = affine_fixture(4);
  f.config.optimizer = OptimizerKind::adam;
  // Swap in curved objectives so the slope depends on the state.
  for (auto& obj : f.config.dataset_objectives) {
    obj.matrix = Eigen::MatrixXd::Identity(kDim, kDim);
    obj.center = obj.linear;
    obj.linear.resize(0);
  }
  SimTrainer t(f.scenario, f.config);
  t.train_steps(MixtureWeights::uniform(3), 5);
  const SlopeMatrix s = estimate_slopes(t, f.scenario, probe(8));

  // Same trainer state, datasets listed in reverse.
  Scenario rev = f.scenario;
  std::reverse(rev.datasets.begin(), rev.datasets.end());
  SimConfig rc = f.config;
  std::reverse(rc.dataset_objectives.begin(), rc.dataset_objectives.end());
  SimTrainer tr(rev, rc);
  tr.train_steps(MixtureWeights::uniform(3), 5);
  const SlopeMatrix sr = estimate_slopes(tr, rev, probe(8));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(at(sr, i, 2 - j) == doctest::Approx(at(s, i, j)).epsilon(1e-10));
}

TEST_CASE("trajectories start at the anchor") {
  const AffineFixture f = affine_fixture(2);
  SimTrainer t(f.scenario, f.config);
  const SlopeMatrix s = estimate_slopes(t, f.scenario, probe(10, 5));
  REQUIRE(s.has_trajectories());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& tr = s.trajectories[i][j];
      REQUIRE(tr.size() == 6);
      CHECK(tr[0].u == 0.0);
      CHECK(tr[0].value == s.anchor[i]);
      CHECK(tr.back().u == 1.0);
      for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr[k].u > tr[k - 1].u);
      CHECK(at(s, i, j) == doctest::Approx((tr.back().value - tr[0].value) / 10).epsilon(1e-12));
    }
  const SlopeMatrix plain = estimate_slopes(t, f.scenario, probe(10));
  CHECK_FALSE(plain.has_trajectories());
}

TEST_CASE("anchors") {
  GeneratorOptions o;
  o.seed = 5;
  o.dim = 6;
  const Scenario s = generate_scenario(o);
  SimTrainer t = SimTrainer::from_scenario(s);
  SUBCASE("measured anchor is a reduced-budget evaluation on the requested split") {
    ProbeOptions p = probe(4);
    p.eval_batches = 50;
    p.split = Split::test;
    const SlopeMatrix m = estimate_slopes(t, s, p);
    CHECK(m.anchor_source == AnchorSource::measured);
    CHECK(m.anchor == evaluate_normalized(t, s, 50, Split::test));
  }
  SUBCASE("recycled anchor is used verbatim") {
    ProbeOptions p = probe(4);
    p.recycled_anchor = std::vector<double>{1.0, 2.0, 3.0};
    const SlopeMatrix m = estimate_slopes(t, s, p);
    CHECK(m.anchor_source == AnchorSource::recycled);
    CHECK(m.anchor == std::vector<double>{1.0, 2.0, 3.0});
  }
  SUBCASE("recycled anchor must cover every domain") {
    ProbeOptions p = probe(4);
    p.recycled_anchor = std::vector<double>{1.0};
    CHECK_THROWS_AS(estimate_slopes(t, s, p), ValidationError);
  }
  SUBCASE("accuracy anchors are negated") {
    GeneratorOptions oa = o;
    oa.accuracy_constraints = 1;
    const Scenario sa = generate_scenario(oa);
    SimTrainer ta = SimTrainer::from_scenario(sa);
    const auto raw = ta.evaluate({sa.domain_ids(), 50, Split::eval}).values;
    const auto norm = evaluate_normalized(ta, sa, 50, Split::eval);
    for (std::size_t i = 0; i < sa.m_domains(); ++i) {
      const double v = raw.at(sa.eval_domains[i].id);
      CHECK(norm[i] == (sa.eval_domains[i].metric == MetricKind::accuracy ? -v : v));
    }
  }
}

TEST_CASE("invalid probe options") {
  const AffineFixture f = affine_fixture(0);
  SimTrainer t(f.scenario, f.config);
  CHECK_THROWS_AS(estimate_slopes(t, f.scenario, probe(0)), ValidationError);
  CHECK_THROWS_AS(estimate_slopes(t, f.scenario, probe(4, -1)), ValidationError);
}

TEST_CASE("a failing probe still restores the trainer") {
  GeneratorOptions o;
  o.seed = 3;
  o.dim = 6;
  o.mode = SimMode::stochastic;
  const Scenario s = generate_scenario(o);
  SimTrainer inner = SimTrainer::from_scenario(s);
  inner.train_steps(MixtureWeights::uniform(3), 7);
  const std::string before = inner.state_dump();
  testing::WrappedTrainer t(inner);
  t.fail_train_call(2);
  CHECK_THROWS_AS(estimate_slopes(t, s, probe(16)), TrainerError);
  CHECK(inner.state_dump() == before);
  CHECK(inner.held_checkpoints() == 0);
}

TEST_CASE("gradient alignment") {
  SUBCASE("orthogonal directions give zero, aligned ones a decrease") {
    Scenario s = testing::skeleton(1, 1, 1, 1);
    SimConfig c;
    c.dim = 2;
    c.learning_rate = 0.1;
    c.mode = SimMode::deterministic;
    c.initial_state = Eigen::VectorXd::Zero(2);
    c.dataset_objectives = {testing::isotropic({1.0, 0.0}, 0.0), testing::isotropic({0.0, 1.0}, 0.0)};
    c.domain_objectives = {testing::isotropic({1.0, 0.0}, 0.0), testing::isotropic({-1.0, 0.0}, 0.0)};
    c.accuracy.assign(2, std::nullopt);
    SimTrainer t(s, c);
    const SlopeMatrix g = gradient_alignment_slopes(t, s, 1, 50);
    CHECK(g.source == SlopeSource::gradient_alignment);
    CHECK(g.probe_steps == 1);
    CHECK(std::abs(at(g, 0, 1)) <= 1e-12);
    CHECK(std::abs(at(g, 1, 1)) <= 1e-12);
    CHECK(at(g, 0, 0) < 0.0);
    CHECK(at(g, 1, 0) > 0.0);
  }
  SUBCASE("missing capability") {
    const AffineFixture f = affine_fixture(0);
    SimTrainer inner(f.scenario, f.config);
    testing::WrappedTrainer t(inner);
    t.hide_gradients();
    try {
      gradient_alignment_slopes(t, f.scenario, 1, 50);
      FAIL("expected capability_unsupported");
    } catch (const TrainerError& e) {
      CHECK(e.code() == TrainerErrc::capability_unsupported);
    }
  }
  SUBCASE("first-order error shrinks with the learning rate") {
    GeneratorOptions o;
    o.seed = 12;
    o.dim = 8;
    o.mode = SimMode::deterministic;
    const Scenario s = generate_scenario(o);
    std::vector<double> errors;
    for (double lr : {1e-2, 1e-3, 1e-4}) {
      SimTrainer t = SimTrainer::from_scenario(s);
      t.set_learning_rate(1e-2);
      t.train_steps(MixtureWeights::uniform(3), 5);
      t.set_learning_rate(lr);
      const SlopeMatrix g = gradient_alignment_slopes(t, s, 1, 50);
      const SlopeMatrix p = estimate_slopes(t, s, probe(1));
      const double scale = g.entries.cwiseAbs().maxCoeff();
      errors.push_back((p.entries - g.entries).cwiseAbs().maxCoeff() / scale);
    }
    CHECK(errors[0] / errors[1] >= 5.0);
    CHECK(errors[1] / errors[2] >= 5.0);
  }
}
