// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/slopes.hpp"

#include <cmath>

#include "slopemix/errors.hpp"

namespace slopemix {

std::string_view to_string(SlopeSource source) noexcept {
  return source == SlopeSource::probe ? "probe" : "gradient_alignment";
}
std::string_view to_string(AnchorSource source) noexcept {
  return source == AnchorSource::measured ? "measured" : "recycled";
}

std::vector<int> probe_eval_points(int probe_steps, int n_evals) {
  std::vector<int> points;
  for (int k = 1; k <= n_evals; ++k)
    points.push_back(static_cast<int>(std::lround(static_cast<double>(k) * probe_steps / n_evals)));
  return points;
}

std::vector<double> evaluate_normalized(Trainer& trainer, const Scenario& scenario, int batches, Split split) {
  EvalRequest request{scenario.domain_ids(), batches, split};
  const EvalResult result = trainer.evaluate(request);
  std::vector<double> out;
  out.reserve(scenario.m_domains());
  for (const auto& d : scenario.eval_domains) {
    auto it = result.values.find(d.id);
    if (it == result.values.end())
      throw TrainerError(TrainerErrc::protocol, "evaluation result lacks domain '" + d.id + "'");
    out.push_back(normalize_metric(it->second, d.metric));
  }
  return out;
}

namespace {

SlopeMatrix empty_matrix(const Scenario& scenario, std::int64_t step) {
  SlopeMatrix s;
  s.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(scenario.m_domains()),
                                    static_cast<Eigen::Index>(scenario.n_datasets()));
  s.step = step;
  s.domain_ids = scenario.domain_ids();
  s.dataset_ids = scenario.dataset_ids();
  return s;
}

void check_anchor(const std::optional<std::vector<double>>& anchor, const Scenario& scenario) {
  if (anchor && anchor->size() != scenario.m_domains())
    throw ValidationError("/anchor", "recycled anchor must cover every evaluation domain");
}

}  // namespace

SlopeMatrix estimate_slopes(Trainer& trainer, const Scenario& scenario, const ProbeOptions& options) {
  if (options.probe_steps < 1) throw ValidationError("/probe_steps", "must be >= 1");
  if (options.n_evals < 0) throw ValidationError("/n_evals", "must be >= 0");
  check_anchor(options.recycled_anchor, scenario);

  SlopeMatrix s = empty_matrix(scenario, trainer.step());
  s.probe_steps = options.probe_steps;
  s.source = SlopeSource::probe;
  if (options.recycled_anchor) {
    s.anchor = *options.recycled_anchor;
    s.anchor_source = AnchorSource::recycled;
  } else {
    s.anchor = evaluate_normalized(trainer, scenario, options.eval_batches, options.split);
    s.anchor_source = AnchorSource::measured;
  }

  const std::size_t m = scenario.m_domains();
  const std::size_t n = scenario.n_datasets();
  const std::vector<int> points =
      options.n_evals > 0 ? probe_eval_points(options.probe_steps, options.n_evals) : std::vector<int>{options.probe_steps};
  if (options.n_evals > 0) {
    s.trajectories.assign(m, std::vector<std::vector<TrajectoryPoint>>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) s.trajectories[i][j].push_back({0.0, s.anchor[i]});
  }

  for (std::size_t j = 0; j < n; ++j) {
    RestoreGuard guard(trainer);
    const DatasetPlan plan{scenario.datasets[j].id};
    int done = 0;
    std::vector<double> last;
    for (int target : points) {
      if (target > done) {
        trainer.train_steps(plan, target - done);
        done = target;
      }
      last = evaluate_normalized(trainer, scenario, options.eval_batches, options.split);
      if (options.n_evals > 0) {
        const double u = static_cast<double>(done) / options.probe_steps;
        for (std::size_t i = 0; i < m; ++i) s.trajectories[i][j].push_back({u, last[i]});
      }
    }
    guard.restore_now();
    for (std::size_t i = 0; i < m; ++i)
      s.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (last[i] - s.anchor[i]) / options.probe_steps;
  }
  return s;
}

SlopeMatrix gradient_alignment_slopes(Trainer& trainer, const Scenario& scenario, int gradient_batches,
                                      int anchor_batches, std::optional<std::vector<double>> recycled_anchor) {
  if (!trainer.capabilities().gradients)
    throw TrainerError(TrainerErrc::capability_unsupported, "trainer does not report gradients");
  check_anchor(recycled_anchor, scenario);

  SlopeMatrix s = empty_matrix(scenario, trainer.step());
  s.source = SlopeSource::gradient_alignment;
  s.probe_steps = 1;
  if (recycled_anchor) {
    s.anchor = std::move(*recycled_anchor);
    s.anchor_source = AnchorSource::recycled;
  } else {
    s.anchor = evaluate_normalized(trainer, scenario, anchor_batches, Split::eval);
  }

  const GradientReport report =
      trainer.gradient_report(scenario.domain_ids(), scenario.dataset_ids(), gradient_batches);
  for (std::size_t i = 0; i < scenario.m_domains(); ++i) {
    const auto& domain = scenario.eval_domains[i];
    auto gi = report.eval_gradients.find(domain.id);
    if (gi == report.eval_gradients.end())
      throw TrainerError(TrainerErrc::protocol, "gradient report lacks domain '" + domain.id + "'");
    for (std::size_t j = 0; j < scenario.n_datasets(); ++j) {
      auto dj = report.dataset_directions.find(scenario.datasets[j].id);
      if (dj == report.dataset_directions.end())
        throw TrainerError(TrainerErrc::protocol,
                           "gradient report lacks dataset '" + scenario.datasets[j].id + "'");
      if (dj->second.size() != gi->second.size())
        throw TrainerError(TrainerErrc::protocol, "gradient dimensionality mismatch");
      double dot = 0.0;
      for (std::size_t k = 0; k < gi->second.size(); ++k) dot += gi->second[k] * dj->second[k];
      // The step moves along -d_j; the sign flip maps accuracy to loss orientation.
      s.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          normalize_metric(-report.learning_rate * dot, domain.metric);
    }
  }
  return s;
}

}  // namespace slopemix
