// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/controller.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <sstream>
#include <thread>

#include "slopemix/errors.hpp"
#include "slopemix/predictor.hpp"
#include "slopemix/sim_trainer.hpp"
#include "slopemix/slopes.hpp"

namespace slopemix {

using nlohmann::json;

std::string_view to_string(PredictorKind kind) noexcept {
  return kind == PredictorKind::linear ? "linear" : "curves";
}

std::string_view to_string(BaselineScheme scheme) noexcept {
  return scheme == BaselineScheme::uniform ? "uniform" : "proportional";
}

void validate(const ControllerConfig& c) {
  validate(c.scenario);
  validate(c.grid);
  if (c.predictor == PredictorKind::curves && c.slope_source != SlopeSource::probe)
    throw ValidationError("/predictor", "the curve predictor needs probe slopes");
  if (c.predictor == PredictorKind::curves && c.n_evals < 2)
    throw ValidationError("/n_evals", "curve fitting needs at least two probe evaluations");
  if (c.schedule.total_steps != c.scenario.total_steps)
    throw ValidationError("/schedule", "schedule was built for a different run length");
  if (c.schedule.update_steps.empty() || c.schedule.update_steps.front() != 0)
    throw ValidationError("/schedule", "schedule must contain step 0");
  if (c.gradient_batches < 1) throw ValidationError("/gradient_batches", "must be >= 1");
}

namespace {

// Shared bookkeeping of controller and baseline runs: step-0 references and
// the full-budget evaluations on the eval_every grid.
class MainLoop {
 public:
  MainLoop(const Scenario& scenario, Trainer& trainer, RunLog& log)
      : scenario_(scenario), trainer_(trainer), log_(log), ids_(scenario.domain_ids()) {}

  void start() {
    check_capabilities(trainer_.capabilities(), scenario_);
    if (trainer_.step() != 0) throw ValidationError("/trainer", "trainer must start at step 0");
    log_.scenario = scenario_;
    evaluate_full(0);
    log_.step0_values = last_full(0, scenario_.reference_split);
    for (auto& d : log_.scenario.eval_domains)
      if (d.role == DomainRole::constrained)
        d.reference = log_.step0_values[*scenario_.domain_index(d.id)];
    for (std::size_t i = 0; i < ids_.size(); ++i)
      references_.push_back(normalize_metric(log_.step0_values[i], scenario_.eval_domains[i].metric));
  }

  // Trains up to `until`, evaluating at each eval_every boundary on the way.
  void train_until(const MixtureWeights& w, std::int64_t until) {
    while (step_ < until) {
      const std::int64_t every = scenario_.eval_every;
      const std::int64_t next_eval = (step_ / every + 1) * every;
      const std::int64_t stop = std::min(until, next_eval);
      trainer_.train_steps(w, static_cast<int>(stop - step_));
      step_ = stop;
      log_.training_steps = step_;
      if (step_ % every == 0) evaluate_full(step_);
    }
  }

  std::vector<double> last_full(std::int64_t step, Split split) const {
    for (auto it = log_.eval_history.rbegin(); it != log_.eval_history.rend(); ++it)
      if (it->step == step && it->split == split && it->batches == scenario_.eval_batches_full) return it->values;
    throw Error("no full evaluation recorded at step " + std::to_string(step));
  }

  std::vector<double> normalized(const std::vector<double>& raw) const {
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = normalize_metric(raw[i], scenario_.eval_domains[i].metric);
    return out;
  }

  const std::vector<double>& references() const { return references_; }
  std::int64_t step() const { return step_; }

 private:
  void evaluate_full(std::int64_t step) {
    for (Split split : {Split::eval, Split::test}) {
      const EvalResult r = trainer_.evaluate({ids_, scenario_.eval_batches_full, split});
      EvalRecord rec;
      rec.step = step;
      rec.split = split;
      rec.batches = scenario_.eval_batches_full;
      for (const auto& id : ids_) {
        auto it = r.values.find(id);
        if (it == r.values.end()) throw TrainerError(TrainerErrc::protocol, "evaluation lacks domain '" + id + "'");
        rec.values.push_back(it->second);
      }
      log_.eval_history.push_back(std::move(rec));
    }
  }

  const Scenario& scenario_;
  Trainer& trainer_;
  RunLog& log_;
  std::vector<std::string> ids_;
  std::vector<double> references_;  // normalized, every domain
  std::int64_t step_ = 0;
};

json echo(const ControllerConfig& c) {
  return {{"schedule", c.schedule.spec.str()},
          {"update_steps", c.schedule.update_steps},
          {"c_max", c.schedule.c_max},
          {"predictor", to_string(c.predictor)},
          {"n_evals", c.predictor == PredictorKind::curves ? c.n_evals : 0},
          {"slopes", c.slope_source == SlopeSource::probe ? "probe" : "grad-align"},
          {"gradient_batches", c.gradient_batches},
          {"grid", {{"lambdas", c.grid.lambdas}, {"epsilons", c.grid.epsilons}}},
          {"recycle_evaluations", c.recycle_evaluations},
          {"seed", c.scenario.seed}};
}

std::string format_double(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

RunLog run(const ControllerConfig& config, Trainer& trainer) {
  validate(config);
  const Scenario& s = config.scenario;
  RunLog log;
  log.kind = RunKind::controller;
  log.config = echo(config);
  log.scenario = s;

  CostConfig cost_config = CostConfig::from_scenario(s, config.predictor == PredictorKind::curves ? config.n_evals : 0);
  cost_config.recycling = config.recycle_evaluations;
  const CostBreakdown costs = cost_breakdown(cost_config, config.schedule);
  log.relative_cost = costs.relative;

  MainLoop loop(s, trainer, log);
  try {
    loop.start();
    MixtureWeights w = MixtureWeights::uniform(s.n_datasets());
    for (std::size_t u = 0; u < config.schedule.size(); ++u) {
      const int t = config.schedule.update_steps[u];
      loop.train_until(w, t);

      UpdateRecord rec;
      rec.step = t;
      rec.horizon = config.schedule.horizon(t);
      rec.probe_steps = probe_budget(config.schedule, t);
      rec.cost = costs.updates[u];

      std::optional<std::vector<double>> anchor;
      if (config.recycle_evaluations && t % s.eval_every == 0)
        anchor = loop.normalized(loop.last_full(t, Split::eval));

      SlopeMatrix slopes;
      if (config.slope_source == SlopeSource::probe) {
        ProbeOptions probe;
        probe.probe_steps = rec.probe_steps;
        probe.eval_batches = s.eval_batches_reduced;
        probe.n_evals = config.predictor == PredictorKind::curves ? config.n_evals : 0;
        probe.split = Split::eval;
        probe.recycled_anchor = anchor;
        slopes = estimate_slopes(trainer, s, probe);
      } else {
        slopes = gradient_alignment_slopes(trainer, s, config.gradient_batches, s.eval_batches_reduced, anchor);
      }
      rec.slope_source = slopes.source;
      rec.anchor_source = slopes.anchor_source;
      rec.slopes = slopes.entries;
      rec.anchor = slopes.anchor;

      AffinePrediction prediction;
      if (config.predictor == PredictorKind::linear) {
        prediction = LinearPredictor{slopes, rec.horizon}.affine();
      } else {
        FitOptions fit = config.fit;
        fit.seed = detail::combine_seed(s.seed ^ config.fit.seed, static_cast<std::uint64_t>(t));
        const CurvePredictor curves = fit_curves(slopes, rec.horizon, fit);
        rec.u_horizon = curves.u_horizon;
        if (curves.horizon_clamped)
          rec.warnings.push_back("horizon ratio " + format_double(static_cast<double>(rec.horizon) / rec.probe_steps) +
                                 " clamped to " + format_double(kMaxHorizonRatio));
        for (const auto& [i, j] : curves.non_finite)
          rec.warnings.push_back("non-finite curve prediction for domain '" + s.eval_domains[i].id + "', dataset '" +
                                 s.datasets[j].id + "'");
        for (std::size_t i = 0; i < curves.curves.size(); ++i)
          for (std::size_t j = 0; j < curves.curves[i].size(); ++j) rec.curves.push_back({i, j, curves.curves[i][j]});
        prediction = curves.affine();
      }

      const MixtureProblem problem = make_problem(std::move(prediction), s, loop.references(), rec.horizon);
      Selection sel = select_weights(problem, config.grid, config.solver);
      w = sel.chosen.weights;
      rec.chosen = select_index(sel.candidates);
      rec.candidates = std::move(sel.candidates);
      log.weight_trajectory.push_back({t, w, sel.chosen});
      if (config.on_update) config.on_update(rec);
      log.updates.push_back(std::move(rec));
    }
    loop.train_until(w, s.total_steps);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    log.aborted = true;
    log.abort_reason = e.what();
  }
  return log;
}

MixtureWeights fixed_weights(const Scenario& scenario, BaselineScheme scheme, double target_mass) {
  if (!(target_mass >= 0.0 && target_mass <= 1.0)) throw ValidationError("/w", "target mass must lie in [0, 1]");
  const auto targets = scenario.target_datasets();
  const auto others = scenario.non_target_datasets();
  const double mass = others.empty() ? 1.0 : target_mass;
  std::vector<double> w(scenario.n_datasets(), 0.0);
  if (scheme == BaselineScheme::uniform) {
    for (std::size_t j : targets) w[j] = mass / static_cast<double>(targets.size());
  } else {
    double total = 0.0;
    for (std::size_t j : targets) {
      const auto& b = scenario.datasets[j].sample_budget;
      if (!b)
        throw ValidationError("/datasets/" + scenario.datasets[j].id + "/sample_budget",
                              "proportional weights need finite target budgets");
      total += static_cast<double>(*b);
    }
    for (std::size_t j : targets) w[j] = mass * static_cast<double>(*scenario.datasets[j].sample_budget) / total;
  }
  for (std::size_t j : others) w[j] = (1.0 - mass) / static_cast<double>(others.size());
  return project_to_simplex(w);
}

RunLog run_fixed_baseline(const Scenario& scenario, Trainer& trainer, BaselineScheme scheme, double target_mass) {
  validate(scenario);
  const MixtureWeights w = fixed_weights(scenario, scheme, target_mass);
  RunLog log;
  log.kind = RunKind::baseline;
  log.config = {{"scheme", to_string(scheme)}, {"target_mass", target_mass}, {"seed", scenario.seed}};
  log.scenario = scenario;
  log.relative_cost = 1.0;
  MainLoop loop(scenario, trainer, log);
  try {
    loop.start();
    log.weight_trajectory.push_back({0, w, std::nullopt});
    loop.train_until(w, scenario.total_steps);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    log.aborted = true;
    log.abort_reason = e.what();
  }
  return log;
}

std::vector<SweepMember> sweep_members(const Scenario& scenario) {
  const auto targets = scenario.target_datasets();
  bool finite = true;
  bool equal = true;
  for (std::size_t j : targets) {
    const auto& b = scenario.datasets[j].sample_budget;
    if (!b) finite = false;
    else if (*b != *scenario.datasets[targets.front()].sample_budget) equal = false;
  }
  const bool proportional = finite && targets.size() > 1 && !equal;
  std::vector<SweepMember> out;
  for (double w : kSweepMasses) out.push_back({BaselineScheme::uniform, w});
  if (proportional) {
    for (double w : kSweepMasses) {
      if (w == 0.0) continue;
      if (fixed_weights(scenario, BaselineScheme::proportional, w) == fixed_weights(scenario, BaselineScheme::uniform, w))
        continue;
      out.push_back({BaselineScheme::proportional, w});
    }
  }
  return out;
}

std::vector<RunLog> baseline_sweep(const Scenario& scenario, const TrainerFactory& factory, int jobs) {
  const auto members = sweep_members(scenario);
  std::vector<RunLog> logs(members.size());
  std::vector<std::exception_ptr> errors(members.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < members.size(); k = next++) {
      try {
        auto trainer = factory();
        logs[k] = run_fixed_baseline(scenario, *trainer, members[k].scheme, members[k].target_mass);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(members.size(), 1)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return logs;
}

}  // namespace slopemix
