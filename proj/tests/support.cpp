// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

#include "slopemix/errors.hpp"
#include "slopemix/generator.hpp"

namespace slopemix::testing {

Scenario skeleton(int target_datasets, int other_datasets, int target_domains, int constrained_domains,
                  int total_steps, int eval_every) {
  Scenario s;
  s.name = "fixture";
  for (int j = 0; j < target_datasets; ++j) s.datasets.push_back({"t" + std::to_string(j), DatasetRole::target, {}});
  for (int j = 0; j < other_datasets; ++j)
    s.datasets.push_back({"a" + std::to_string(j), DatasetRole::non_target, {}});
  for (int i = 0; i < target_domains; ++i)
    s.eval_domains.push_back({"T" + std::to_string(i), DomainRole::target, MetricKind::loss, {}});
  for (int i = 0; i < constrained_domains; ++i)
    s.eval_domains.push_back({"C" + std::to_string(i), DomainRole::constrained, MetricKind::loss, {}});
  s.total_steps = total_steps;
  s.eval_every = eval_every;
  s.batch_size = 8;
  s.eval_batches_full = 200;
  s.eval_batches_reduced = 50;
  return s;
}

SimConfig random_quadratic_config(const Scenario& scenario, std::uint64_t seed, int dim, double learning_rate) {
  std::mt19937_64 rng(seed);
  SimConfig c;
  c.dim = dim;
  c.learning_rate = learning_rate;
  c.mode = SimMode::deterministic;
  c.seed = seed;
  c.initial_state = Eigen::VectorXd::Zero(dim);
  for (std::size_t j = 0; j < scenario.n_datasets(); ++j)
    c.dataset_objectives.push_back({random_spd(dim, 0.1, rng), 2.0 * random_unit(dim, rng), 1.0, {}});
  for (std::size_t i = 0; i < scenario.m_domains(); ++i) {
    c.domain_objectives.push_back({random_spd(dim, 0.1, rng), 1.5 * random_unit(dim, rng), 0.5, {}});
    c.accuracy.emplace_back(std::nullopt);
  }
  return c;
}

Scenario with_simulator(Scenario scenario, const SimConfig& config) {
  scenario.simulator = to_json(config, scenario);
  return scenario;
}

QuadraticObjective affine_objective(std::vector<double> linear, double offset, int dim) {
  QuadraticObjective f;
  f.matrix = Eigen::MatrixXd::Zero(dim, dim);
  f.center = Eigen::VectorXd::Zero(dim);
  f.offset = offset;
  f.linear = Eigen::Map<Eigen::VectorXd>(linear.data(), static_cast<Eigen::Index>(linear.size()));
  return f;
}

QuadraticObjective isotropic(std::vector<double> center, double offset, double curvature) {
  const auto d = static_cast<Eigen::Index>(center.size());
  QuadraticObjective f;
  f.matrix = curvature * Eigen::MatrixXd::Identity(d, d);
  f.center = Eigen::Map<Eigen::VectorXd>(center.data(), d);
  f.offset = offset;
  return f;
}

MixtureProblem random_affine_problem(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> base_dist(1.0, 3.0), slack_dist(-0.1, 0.3);
  std::normal_distribution<double> change_dist(0.0, 1.0);
  std::uniform_int_distribution<int> targets_dist(1, std::max(1, m - 1));
  MixtureProblem p;
  p.prediction.base.resize(m);
  p.prediction.change.resize(m, n);
  p.prediction.usable.assign(static_cast<std::size_t>(n), true);
  for (int i = 0; i < m; ++i) {
    p.prediction.base(i) = base_dist(rng);
    for (int j = 0; j < n; ++j) p.prediction.change(i, j) = change_dist(rng);
    p.domain_ids.push_back("d" + std::to_string(i));
  }
  const int n_targets = targets_dist(rng);
  for (int i = 0; i < m; ++i) {
    if (i < n_targets) {
      p.targets.push_back(static_cast<std::size_t>(i));
    } else {
      p.constrained.push_back(static_cast<std::size_t>(i));
      p.references.push_back(p.prediction.base(i) + slack_dist(rng));
    }
  }
  p.horizon = 1.0;
  return p;
}

std::vector<std::vector<double>> simplex_lattice(int n, int resolution) {
  std::vector<std::vector<double>> out;
  std::vector<int> k(static_cast<std::size_t>(n), 0);
  // Enumerate compositions of `resolution` into n parts.
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == n - 1) {
      k[static_cast<std::size_t>(pos)] = left;
      std::vector<double> w(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(j)] = static_cast<double>(k[static_cast<std::size_t>(j)]) / resolution;
      out.push_back(std::move(w));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      k[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, resolution);
  return out;
}

std::vector<double> oracle_predicted(const MixtureProblem& p, const std::vector<double>& w) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < p.prediction.change.rows(); ++i) {
    double v = p.prediction.base(i);
    for (Eigen::Index j = 0; j < p.prediction.change.cols(); ++j) v += p.prediction.change(i, j) * w[static_cast<std::size_t>(j)];
    out.push_back(v);
  }
  return out;
}

double oracle_target_objective(const MixtureProblem& p, const std::vector<double>& w) {
  double total = 0.0;
  for (std::size_t i : p.targets)
    for (Eigen::Index j = 0; j < p.prediction.change.cols(); ++j)
      total += p.prediction.change(static_cast<Eigen::Index>(i), j) * w[static_cast<std::size_t>(j)];
  return total / p.horizon;
}

double oracle_violation(const MixtureProblem& p, const std::vector<double>& w) {
  const auto pred = oracle_predicted(p, w);
  double v = 0.0;
  for (std::size_t k = 0; k < p.constrained.size(); ++k) v = std::max(v, pred[p.constrained[k]] - p.references[k]);
  return v;
}

GridOptimum grid_search(const MixtureProblem& p, int resolution) {
  GridOptimum best;
  best.target_objective = std::numeric_limits<double>::infinity();
  best.max_violation = std::numeric_limits<double>::infinity();
  for (const auto& w : simplex_lattice(static_cast<int>(p.prediction.change.cols()), resolution)) {
    const double v = oracle_violation(p, w);
    if (v <= 0.0) {
      const double obj = oracle_target_objective(p, w);
      if (!best.feasible || obj < best.target_objective) {
        best.feasible = true;
        best.target_objective = obj;
        best.max_violation = 0.0;
        best.weights = w;
      }
    } else if (!best.feasible && v < best.max_violation) {
      best.max_violation = v;
      best.weights = w;
    }
  }
  return best;
}

EventCount count_events(const CostConfig& c, const Schedule& schedule) {
  EventCount e;
  const int f = c.n_evals > 0 ? c.n_evals : 1;
  for (int t = 0; t < schedule.total_steps; ++t) {
    const bool on_grid = t % c.eval_every == 0;
    if (schedule.contains(t)) {
      const int probe = probe_budget(schedule, t);
      for (int j = 0; j < c.n_datasets; ++j) {
        for (int k = 0; k < probe; ++k) ++e.train_steps;
        for (int k = 0; k < f; ++k)
          for (int i = 0; i < c.m_domains; ++i) e.forward_batches += c.eval_batches_reduced;
      }
      if (!(c.recycling && on_grid))
        for (int i = 0; i < c.m_domains; ++i) e.forward_batches += c.eval_batches_reduced;
    }
    if (on_grid)
      for (int i = 0; i < c.m_domains; ++i) {
        e.forward_batches += c.eval_batches_full;
        e.baseline_forward_batches += c.eval_batches_full;
      }
    ++e.train_steps;
    ++e.baseline_train_steps;
  }
  return e;
}

void WrappedTrainer::train_steps(const TrainPlan& plan, int steps) {
  if (++train_calls_ == fail_at_) {
    inner_.train_steps(plan, 1);  // leave the state dirty before failing
    throw TrainerError(TrainerErrc::process_exited, "injected failure");
  }
  inner_.train_steps(plan, steps);
}

GradientReport WrappedTrainer::gradient_report(const std::vector<std::string>& domains,
                                               const std::vector<std::string>& datasets, int batches) {
  if (!caps_.gradients) throw TrainerError(TrainerErrc::capability_unsupported, "hidden");
  return inner_.gradient_report(domains, datasets, batches);
}

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "slopemix-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace slopemix::testing
