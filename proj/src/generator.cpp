// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/generator.hpp"

#include <cmath>

#include "slopemix/errors.hpp"

namespace slopemix {

Eigen::MatrixXd random_spd(int dim, double delta, std::mt19937_64& rng) {
  Eigen::MatrixXd g(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) g(r, c) = detail::standard_normal(rng);
  Eigen::MatrixXd a = g.transpose() * g / static_cast<double>(dim);
  a += delta * Eigen::MatrixXd::Identity(dim, dim);
  return 0.5 * (a + a.transpose());
}

Eigen::VectorXd random_unit(int dim, std::mt19937_64& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = detail::standard_normal(rng);
  return v / v.norm();
}

namespace {

// Quadratic with its minimum at `center` whose value at the origin exceeds
// the minimum by exactly `gap`.
QuadraticObjective anchored_quadratic(const Eigen::VectorXd& center, double gap, double floor_value,
                                      double delta, std::mt19937_64& rng) {
  const int dim = static_cast<int>(center.size());
  QuadraticObjective f;
  f.matrix = random_spd(dim, delta, rng);
  const double raw = 0.5 * center.dot(f.matrix * center);
  if (raw > 0.0) f.matrix *= gap / raw;
  f.center = center;
  f.offset = floor_value;
  return f;
}

QuadraticObjective affine(int dim, double scale, double offset, std::mt19937_64& rng) {
  QuadraticObjective f;
  f.matrix = Eigen::MatrixXd::Zero(dim, dim);
  f.center = Eigen::VectorXd::Zero(dim);
  f.linear = scale * random_unit(dim, rng);
  f.offset = offset;
  return f;
}

}  // namespace

Scenario generate_scenario(const GeneratorOptions& o) {
  if (o.n_datasets < 1 || o.m_domains < 1) throw ValidationError("/generate", "need N >= 1 and M >= 1");
  if (o.target_datasets < 1 || o.target_datasets > o.n_datasets)
    throw ValidationError("/generate/targets", "target dataset count must be in [1, N]");
  if (o.target_domains < 0 || o.target_domains > o.m_domains)
    throw ValidationError("/generate/target_domains", "target domain count must be in [0, M]");
  const int n_constraints = o.m_domains - o.target_domains;
  if (o.accuracy_constraints < 0 || o.accuracy_constraints > n_constraints)
    throw ValidationError("/generate/accuracy_constraints", "must not exceed the constraint count");

  std::mt19937_64 rng(detail::combine_seed(o.seed, 0x9e4e));
  const int d = o.dim;

  Scenario s;
  s.name = "synthetic-n" + std::to_string(o.n_datasets) + "-m" + std::to_string(o.m_domains) + "-s" +
           std::to_string(o.seed);
  s.total_steps = o.total_steps;
  s.batch_size = o.batch_size;
  s.eval_every = o.eval_every;
  s.eval_batches_full = o.eval_batches_full;
  s.eval_batches_reduced = o.eval_batches_reduced;
  s.seed = o.seed;

  for (int j = 0; j < o.n_datasets; ++j) {
    DatasetSpec spec;
    const bool target = j < o.target_datasets;
    spec.id = target ? "target" + std::to_string(j) : "aux" + std::to_string(j - o.target_datasets);
    spec.role = target ? DatasetRole::target : DatasetRole::non_target;
    if (target) spec.sample_budget = 1000 * (j + 1);
    s.datasets.push_back(spec);
  }
  for (int i = 0; i < o.m_domains; ++i) {
    EvalDomainSpec spec;
    const bool target = i < o.target_domains;
    spec.id = target ? "eval_target" + std::to_string(i) : "keep" + std::to_string(i - o.target_domains);
    spec.role = target ? DomainRole::target : DomainRole::constrained;
    spec.metric = (!target && i - o.target_domains < o.accuracy_constraints) ? MetricKind::accuracy
                                                                             : MetricKind::loss;
    s.eval_domains.push_back(spec);
  }

  SimConfig c;
  c.dim = d;
  c.learning_rate = o.learning_rate;
  c.mode = o.linear_dynamics ? SimMode::deterministic : o.mode;
  c.optimizer = o.linear_dynamics ? OptimizerKind::sgd : OptimizerKind::adam;
  c.gradient_noise = c.mode == SimMode::deterministic ? 0.0 : o.gradient_noise;
  c.eval_noise = c.mode == SimMode::deterministic ? 0.0 : o.eval_noise;
  c.accuracy_quantum = o.accuracy_quantum;
  c.seed = o.seed;
  c.initial_state = Eigen::VectorXd::Zero(d);

  if (o.linear_dynamics) {
    for (int j = 0; j < o.n_datasets; ++j) c.dataset_objectives.push_back(affine(d, 1.0, 2.0, rng));
    for (int i = 0; i < o.m_domains; ++i) {
      c.domain_objectives.push_back(affine(d, 1.0, 2.5, rng));
      c.accuracy.emplace_back(std::nullopt);
      if (s.eval_domains[i].metric == MetricKind::accuracy)
        c.accuracy.back() = AccuracyMap{o.accuracy_scale, 2.5};
    }
  } else {
    std::vector<Eigen::VectorXd> target_centers;
    for (int i = 0; i < std::max(1, o.target_domains); ++i)
      target_centers.push_back(o.target_radius * random_unit(d, rng));

    std::vector<Eigen::VectorXd> constraint_centers;
    for (int k = 0; k < n_constraints; ++k) {
      if (o.geometry == Geometry::conflicting) {
        if (k % 2 == 0) constraint_centers.push_back(o.constraint_radius * random_unit(d, rng));
        else constraint_centers.push_back(-constraint_centers.back());
      } else {
        constraint_centers.push_back(o.constraint_radius * random_unit(d, rng));
      }
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (const auto& v : constraint_centers) centroid += v;
    if (!constraint_centers.empty()) centroid /= static_cast<double>(constraint_centers.size());

    for (int i = 0; i < o.m_domains; ++i) {
      if (i < o.target_domains) {
        c.domain_objectives.push_back(
            anchored_quadratic(target_centers[i], o.target_gap, 1.5, o.curvature_floor, rng));
        c.accuracy.emplace_back(std::nullopt);
        continue;
      }
      const int k = i - o.target_domains;
      QuadraticObjective f;
      if (o.geometry == Geometry::conflicting && k % 2 == 1) {
        // Mirror image of the previous constraint: same curvature, opposite optimum.
        f = c.domain_objectives.back();
        f.center = constraint_centers[k];
      } else {
        f = anchored_quadratic(constraint_centers[k], o.constraint_gap, 2.0, o.curvature_floor, rng);
      }
      c.domain_objectives.push_back(f);
      if (s.eval_domains[i].metric == MetricKind::accuracy) {
        // Start in the middle of a quantization cell so small loss changes do
        // not move the accuracy.
        const double start_loss = sim_loss(f, c.initial_state);
        const double p_mid = (std::floor(o.accuracy_quantum * 0.5) + 0.5) / o.accuracy_quantum;
        const double threshold = start_loss + o.accuracy_scale * std::log(p_mid / (1.0 - p_mid));
        c.accuracy.emplace_back(AccuracyMap{o.accuracy_scale, threshold});
      } else {
        c.accuracy.emplace_back(std::nullopt);
      }
    }

    for (int j = 0; j < o.n_datasets; ++j) {
      Eigen::VectorXd center;
      if (j < o.target_datasets) {
        const auto& base = target_centers[static_cast<std::size_t>(j) % target_centers.size()];
        center = base + o.overfit_radius * random_unit(d, rng);
      } else if ((j - o.target_datasets) % 2 == 0 && !constraint_centers.empty()) {
        // Generic corpus: close to what the constrained domains already know.
        center = centroid + 0.3 * o.constraint_radius * random_unit(d, rng);
      } else {
        center = o.target_radius * random_unit(d, rng);
      }
      QuadraticObjective f;
      f.matrix = random_spd(d, o.curvature_floor, rng);
      f.center = center;
      f.offset = 1.0;
      c.dataset_objectives.push_back(f);
    }
  }

  s.simulator = to_json(c, s);
  validate(s);
  validate(c, s);
  return s;
}

}  // namespace slopemix
