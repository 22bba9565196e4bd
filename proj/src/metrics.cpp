// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "slopemix/errors.hpp"
#include "slopemix/sim_trainer.hpp"

namespace slopemix {

CheckpointSet checkpoints(const RunLog& log) {
  const Scenario& s = log.scenario;
  CheckpointSet set;
  set.targets = s.target_domains();
  set.constrained = s.constrained_domains();
  for (std::size_t i : set.targets)
    if (s.eval_domains[i].metric == MetricKind::loss) set.loss_targets.push_back(i);
  for (std::size_t i : set.constrained)
    set.references.push_back(normalize_metric(log.step0_values[i], s.eval_domains[i].metric));

  auto normalized = [&](const std::vector<double>& raw) {
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = normalize_metric(raw[i], s.eval_domains[i].metric);
    return out;
  };
  std::map<std::int64_t, CheckpointRecord> by_step;
  std::map<std::int64_t, int> seen;
  for (const auto& e : log.eval_history) {
    if (e.batches != s.eval_batches_full || e.step % s.eval_every != 0) continue;
    auto& rec = by_step[e.step];
    rec.step = e.step;
    (e.split == Split::eval ? rec.eval : rec.test) = normalized(e.values);
    seen[e.step] |= e.split == Split::eval ? 1 : 2;
  }
  for (auto& [step, rec] : by_step)
    if (seen[step] == 3) set.checkpoints.push_back(std::move(rec));
  if (set.checkpoints.empty() || set.checkpoints.front().step != 0)
    throw ValidationError("/eval_history", "log lacks full step-0 evaluations on both splits");
  set.step0 = set.checkpoints.front();
  return set;
}

namespace {

double target_sum(const CheckpointSet& set, const std::vector<double>& values) {
  double sum = 0.0;
  for (std::size_t i : set.targets) sum += values[i];
  return sum;
}

double violation(const CheckpointSet& set, const std::vector<double>& values) {
  double v = 0.0;
  for (std::size_t k = 0; k < set.constrained.size(); ++k)
    v = std::max(v, values[set.constrained[k]] - set.references[k]);
  return v;
}

bool qualifies(const CheckpointSet& set, const CheckpointRecord& c) {
  return violation(set, c.eval) == 0.0 && target_sum(set, c.eval) < target_sum(set, set.step0.eval);
}

bool eligible(const CheckpointRecord& c, bool include_step0) { return include_step0 || c.step != 0; }

}  // namespace

FeasibilityResult feasibility(const CheckpointSet& set, bool include_step0) {
  FeasibilityResult r;
  for (const auto& c : set.checkpoints) {
    if (!eligible(c, include_step0) || !qualifies(set, c)) continue;
    r.feasible = true;
    r.witness = c.step;
    break;
  }
  return r;
}

FeasibilityResult feasibility(const RunLog& log, bool include_step0) {
  return feasibility(checkpoints(log), include_step0);
}

ViolationResult max_violation(const CheckpointSet& set, bool include_step0) {
  ViolationResult r;
  for (const auto& c : set.checkpoints) {
    if (!eligible(c, include_step0)) continue;
    const double v = violation(set, c.eval);
    if (!r.step || v < r.value) {
      r.value = v;
      r.step = c.step;
    }
  }
  return r;
}

ViolationResult max_violation(const RunLog& log, bool include_step0) {
  return max_violation(checkpoints(log), include_step0);
}

MetricReport constrained_ppl_reduction(const CheckpointSet& set, bool include_step0) {
  MetricReport report;
  const ViolationResult v = max_violation(set, include_step0);
  report.max_violation = v.value;
  report.max_violation_step = v.step;

  const CheckpointRecord* best = nullptr;
  for (const auto& c : set.checkpoints) {
    if (!eligible(c, include_step0) || !qualifies(set, c)) continue;
    if (best == nullptr || target_sum(set, c.eval) < target_sum(set, best->eval)) best = &c;
  }
  if (best == nullptr) return report;
  report.feasible = true;
  report.best_checkpoint_step = best->step;
  for (std::size_t i = 0; i < best->test.size(); ++i) report.deltas.push_back(best->test[i] - set.step0.test[i]);
  if (!set.loss_targets.empty()) {
    double mean_log_ratio = 0.0;
    for (std::size_t i : set.loss_targets) mean_log_ratio += best->test[i] - set.step0.test[i];
    mean_log_ratio /= static_cast<double>(set.loss_targets.size());
    report.ppl_reduction_pct = (1.0 - std::exp(mean_log_ratio)) * 100.0;
  }
  return report;
}

MetricReport constrained_ppl_reduction(const RunLog& log, bool include_step0) {
  return constrained_ppl_reduction(checkpoints(log), include_step0);
}

double best_of_k_exact(std::span<const double> pool, int k) {
  if (pool.empty()) throw ValidationError("/pool", "pool must be nonempty");
  if (k < 1) throw ValidationError("/k", "k must be >= 1");
  std::vector<double> v(pool.begin(), pool.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double e = 0.0;
  std::size_t lo = 0;
  while (lo < v.size()) {
    std::size_t hi = lo;
    while (hi < v.size() && v[hi] == v[lo]) ++hi;
    // F(v-) = lo, F(v) = hi values at or below.
    e += v[lo] * (std::pow(hi / n, k) - std::pow(lo / n, k));
    lo = hi;
  }
  return e;
}

BestOfK best_of_k(std::span<const double> pool, int k, int trials, std::uint64_t seed) {
  BestOfK r;
  r.exact = best_of_k_exact(pool, k);
  if (trials < 1) throw ValidationError("/trials", "trials must be >= 1");
  std::mt19937_64 rng(detail::combine_seed(seed, 0xb0c));
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    double best = -std::numeric_limits<double>::infinity();
    for (int d = 0; d < k; ++d) {
      const auto idx = static_cast<std::size_t>(detail::uniform01(rng) * static_cast<double>(pool.size()));
      best = std::max(best, pool[std::min(idx, pool.size() - 1)]);
    }
    sum += best;
    sum_sq += best * best;
  }
  r.monte_carlo = sum / trials;
  const double var = trials > 1 ? std::max(0.0, (sum_sq - trials * r.monte_carlo * r.monte_carlo) / (trials - 1)) : 0.0;
  r.standard_error = std::sqrt(var / trials);
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("/values", "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace slopemix
