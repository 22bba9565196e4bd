// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/cost.hpp"

#include "slopemix/errors.hpp"

namespace slopemix {

CostConfig CostConfig::from_scenario(const Scenario& scenario, int n_evals) {
  CostConfig c;
  c.n_datasets = static_cast<int>(scenario.n_datasets());
  c.m_domains = static_cast<int>(scenario.m_domains());
  c.eval_every = scenario.eval_every;
  c.eval_batches_full = scenario.eval_batches_full;
  c.eval_batches_reduced = scenario.eval_batches_reduced;
  c.n_evals = n_evals;
  return c;
}

void validate(const CostConfig& c) {
  if (c.n_datasets < 1 || c.m_domains < 1) throw ValidationError("/cost", "N and M must be positive");
  if (c.eval_every < 1) throw ValidationError("/cost/eval_every", "must be positive");
  if (c.eval_batches_full < 0 || c.eval_batches_reduced < 0)
    throw ValidationError("/cost", "evaluation budgets must be nonnegative");
  if (!(c.fwd_cost > 0.0) || !(c.step_cost >= c.fwd_cost))
    throw ValidationError("/cost", "need C_bp >= C_fwd > 0");
  if (c.n_evals < 0) throw ValidationError("/cost/n_evals", "must be nonnegative");
}

double interval_baseline_cost(const CostConfig& c, double horizon) {
  return horizon * c.step_cost +
         (horizon / c.eval_every) * c.m_domains * static_cast<double>(c.eval_batches_full) * c.fwd_cost;
}

double reduced_eval_cost(const CostConfig& c) {
  return c.m_domains * static_cast<double>(c.eval_batches_reduced) * c.fwd_cost;
}

double probe_eval_term(const CostConfig& c) {
  const int f = c.n_evals > 0 ? c.n_evals : 1;
  return c.n_datasets * (f * reduced_eval_cost(c));
}

namespace {

double overhead_numerator(const CostConfig& c, double probe_steps, bool recycled) {
  return c.n_datasets * (probe_steps * c.step_cost) + probe_eval_term(c) + (recycled ? 0.0 : reduced_eval_cost(c));
}

}  // namespace

double update_overhead(const CostConfig& c, double horizon, double probe_steps, bool recycled) {
  return overhead_numerator(c, probe_steps, recycled) / interval_baseline_cost(c, horizon);
}

bool recycles(const CostConfig& c, int step) { return c.recycling && step % c.eval_every == 0; }

CostBreakdown cost_breakdown(const CostConfig& c, const Schedule& schedule) {
  validate(c);
  CostBreakdown out;
  for (int t : schedule.update_steps) {
    UpdateCost u;
    u.step = t;
    u.horizon = schedule.horizon(t);
    u.probe_steps = probe_budget(schedule, t);
    u.recycled = recycles(c, t);
    u.rho = interval_baseline_cost(c, u.horizon);
    u.beta = update_overhead(c, u.horizon, u.probe_steps, u.recycled);
    out.baseline += u.rho;
    out.total += u.rho + overhead_numerator(c, u.probe_steps, u.recycled);
    out.updates.push_back(u);
  }
  out.relative = out.updates.empty() ? 1.0 : out.total / out.baseline;
  return out;
}

double total_relative_cost(const CostConfig& c, const Schedule& schedule) {
  return cost_breakdown(c, schedule).relative;
}

double average_relative_cost(const CostConfig& base, const Schedule& schedule,
                             const std::vector<std::pair<int, int>>& shapes) {
  if (shapes.empty()) throw ValidationError("/shapes", "need at least one (N, M) pair");
  double sum = 0.0;
  for (const auto& [n, m] : shapes) {
    CostConfig c = base;
    c.n_datasets = n;
    c.m_domains = m;
    sum += total_relative_cost(c, schedule);
  }
  return sum / static_cast<double>(shapes.size());
}

}  // namespace slopemix
