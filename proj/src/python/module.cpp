// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Python bindings. Structured values cross the boundary as plain dicts and
// lists, converted through the json module.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "slopemix/controller.hpp"
#include "slopemix/cost.hpp"
#include "slopemix/curve_fit.hpp"
#include "slopemix/errors.hpp"
#include "slopemix/generator.hpp"
#include "slopemix/metrics.hpp"
#include "slopemix/sim_trainer.hpp"
#include "slopemix/solver.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace slopemix;

namespace {

json to_cpp(const py::object& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return json::parse(text);
}

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Scenario scenario_arg(const py::object& obj) { return scenario_from_json(to_cpp(obj)); }

py::object generate(int n, int m, std::uint64_t seed, int targets, int target_domains, int accuracy_constraints,
                    const std::string& geometry, bool linear_dynamics, bool deterministic, int steps) {
  GeneratorOptions o;
  o.n_datasets = n;
  o.m_domains = m;
  o.seed = seed;
  o.target_datasets = targets;
  o.target_domains = target_domains;
  o.accuracy_constraints = accuracy_constraints;
  if (geometry != "standard" && geometry != "conflicting")
    throw ValidationError("geometry", "expected standard or conflicting");
  o.geometry = geometry == "conflicting" ? Geometry::conflicting : Geometry::standard;
  o.linear_dynamics = linear_dynamics;
  if (deterministic) o.mode = SimMode::deterministic;
  o.total_steps = steps;
  return to_py(to_json(generate_scenario(o)));
}

py::object run_controller(const py::object& scenario_obj, const std::string& schedule, const std::string& predictor,
                          int n_evals, const std::string& slopes, bool recycle) {
  ControllerConfig config;
  config.scenario = scenario_arg(scenario_obj);
  config.schedule = build_schedule(ScheduleSpec::parse(schedule), config.scenario.total_steps);
  config.predictor = predictor == "curves" ? PredictorKind::curves : PredictorKind::linear;
  if (predictor != "linear" && predictor != "curves") throw ValidationError("predictor", "expected linear or curves");
  config.n_evals = n_evals;
  if (slopes != "probe" && slopes != "grad-align") throw ValidationError("slopes", "expected probe or grad-align");
  config.slope_source = slopes == "grad-align" ? SlopeSource::gradient_alignment : SlopeSource::probe;
  config.recycle_evaluations = recycle;
  json log;
  {
    py::gil_scoped_release release;
    SimTrainer trainer = SimTrainer::from_scenario(config.scenario);
    log = to_json(run(config, trainer));
  }
  return to_py(log);
}

py::object run_baseline(const py::object& scenario_obj, const std::string& scheme, double w) {
  const Scenario s = scenario_arg(scenario_obj);
  if (scheme != "uniform" && scheme != "proportional") throw ValidationError("scheme", "expected uniform or proportional");
  json log;
  {
    py::gil_scoped_release release;
    SimTrainer trainer = SimTrainer::from_scenario(s);
    log = to_json(run_fixed_baseline(
        s, trainer, scheme == "proportional" ? BaselineScheme::proportional : BaselineScheme::uniform, w));
  }
  return to_py(log);
}

py::object sweep(const py::object& scenario_obj, int jobs) {
  const Scenario s = scenario_arg(scenario_obj);
  json out = json::array();
  {
    py::gil_scoped_release release;
    for (const auto& log :
         baseline_sweep(s, [&] { return std::make_unique<SimTrainer>(SimTrainer::from_scenario(s)); }, jobs))
      out.push_back(to_json(log));
  }
  return to_py(out);
}

py::dict report(const py::object& log_obj, bool include_step0) {
  const RunLog log = run_log_from_json(to_cpp(log_obj));
  const MetricReport r = constrained_ppl_reduction(log, include_step0);
  py::dict d;
  d["feasible"] = r.feasible;
  d["best_checkpoint_step"] = r.best_checkpoint_step ? py::object(py::int_(*r.best_checkpoint_step)) : py::none();
  d["ppl_reduction_pct"] = r.ppl_reduction_pct;
  d["max_violation"] = r.max_violation;
  d["max_violation_step"] = r.max_violation_step ? py::object(py::int_(*r.max_violation_step)) : py::none();
  d["deltas"] = r.deltas;
  d["relative_cost"] = log.relative_cost;
  return d;
}

py::dict best_of(const std::vector<double>& pool, int k, int trials, std::uint64_t seed) {
  const BestOfK b = best_of_k(pool, k, trials, seed);
  py::dict d;
  d["exact"] = b.exact;
  d["monte_carlo"] = b.monte_carlo;
  d["standard_error"] = b.standard_error;
  return d;
}

py::dict cost(const py::object& scenario_obj, const std::string& schedule, const std::string& predictor, int n_evals,
              double c_bp, double c_fwd, bool recycle) {
  const Scenario s = scenario_arg(scenario_obj);
  CostConfig c = CostConfig::from_scenario(s, predictor == "curves" ? n_evals : 0);
  c.step_cost = c_bp;
  c.fwd_cost = c_fwd;
  c.recycling = recycle;
  const CostBreakdown b = cost_breakdown(c, build_schedule(ScheduleSpec::parse(schedule), s.total_steps));
  py::list updates;
  for (const auto& u : b.updates) {
    py::dict e;
    e["step"] = u.step;
    e["horizon"] = u.horizon;
    e["probe_steps"] = u.probe_steps;
    e["recycled"] = u.recycled;
    e["rho"] = u.rho;
    e["beta"] = u.beta;
    updates.append(e);
  }
  py::dict d;
  d["updates"] = updates;
  d["baseline"] = b.baseline;
  d["total"] = b.total;
  d["relative"] = b.relative;
  return d;
}

py::dict schedule(const std::string& spec, int total_steps, int c_max) {
  const Schedule s = build_schedule(ScheduleSpec::parse(spec), total_steps, c_max);
  std::vector<int> horizons, probes;
  for (int t : s.update_steps) {
    horizons.push_back(s.horizon(t));
    probes.push_back(probe_budget(s, t));
  }
  py::dict d;
  d["spec"] = s.spec.str();
  d["steps"] = s.update_steps;
  d["horizons"] = horizons;
  d["probe_steps"] = probes;
  return d;
}

py::dict curve_dict(const FittedCurve& c) {
  py::dict d;
  d["family"] = std::string(to_string(c.family));
  d["params"] = c.params;
  d["rss"] = c.rss;
  d["aicc"] = c.aicc;
  d["n_points"] = c.n_points;
  d["converged"] = c.converged;
  return d;
}

py::dict fit_curve(const std::vector<double>& u, const std::vector<double>& y, std::uint64_t seed) {
  FitOptions o;
  o.seed = seed;
  const CurveSelection sel = select_curve_detailed(u, y, o);
  py::dict d = curve_dict(sel.chosen);
  py::list cands;
  for (const auto& c : sel.candidates) cands.append(curve_dict(c));
  d["candidates"] = cands;
  return d;
}

double curve_at(const std::string& family, const std::vector<double>& params, double u) {
  return curve_value(curve_family_from_string(family), params, u);
}

py::dict solve(const std::vector<double>& base, const std::vector<std::vector<double>>& change,
               const std::vector<std::size_t>& targets, const std::vector<std::size_t>& constrained,
               const std::vector<double>& references, double horizon, std::optional<std::vector<double>> lambdas,
               std::optional<std::vector<double>> epsilons) {
  if (change.size() != base.size()) throw ValidationError("change", "needs one row per entry of base");
  MixtureProblem p;
  const auto m = static_cast<Eigen::Index>(base.size());
  const auto n = static_cast<Eigen::Index>(change.empty() ? 0 : change[0].size());
  p.prediction.base = Eigen::Map<const Eigen::VectorXd>(base.data(), m);
  p.prediction.change.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(change[i].size()) != n) throw ValidationError("change", "ragged rows");
    for (Eigen::Index j = 0; j < n; ++j) p.prediction.change(i, j) = change[i][j];
  }
  p.prediction.usable.assign(n, true);
  for (Eigen::Index i = 0; i < m; ++i) p.domain_ids.push_back("d" + std::to_string(i));
  p.targets = targets;
  p.constrained = constrained;
  p.references = references;
  p.horizon = horizon;
  SolverGrid grid = SolverGrid::standard();
  if (lambdas) grid.lambdas = *lambdas;
  if (epsilons) grid.epsilons = *epsilons;
  validate(grid);
  const Selection sel = select_weights(p, grid);
  py::dict d;
  d["weights"] = sel.chosen.weights.vector();
  d["feasible"] = sel.chosen.feasible;
  d["target_objective"] = sel.chosen.target_objective;
  d["max_violation"] = sel.chosen.max_violation;
  d["lambda"] = sel.chosen.lambda;
  d["epsilon"] = sel.chosen.epsilon;
  d["predicted"] = sel.chosen.predicted;
  return d;
}

}  // namespace

PYBIND11_MODULE(_slopemix, m) {
  m.doc() = "Constrained dynamic data-mixture controller";

  // Leaked on purpose: the exception types live as long as the interpreter.
  static PyObject* base_error = py::exception<Error>(m, "SlopemixError").release().ptr();
  static PyObject* validation_error = py::exception<ValidationError>(m, "ValidationError", base_error).release().ptr();
  static PyObject* parse_error = py::exception<ParseError>(m, "ParseError", base_error).release().ptr();
  static PyObject* trainer_error = py::exception<TrainerError>(m, "TrainerError", base_error).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation_error, e.what());
    } catch (const ParseError& e) {
      py::set_error(parse_error, e.what());
    } catch (const TrainerError& e) {
      py::set_error(trainer_error, e.what());
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    } catch (const json::exception& e) {
      py::set_error(parse_error, e.what());
    }
  });

  m.def("generate_scenario", &generate, py::arg("n"), py::arg("m"), py::arg("seed") = 0, py::arg("targets") = 1,
        py::arg("target_domains") = 1, py::arg("accuracy_constraints") = 0, py::arg("geometry") = "standard",
        py::arg("linear_dynamics") = false, py::arg("deterministic") = false, py::arg("steps") = 2048,
        "Seeded synthetic scenario as a dict.");
  m.def("run", &run_controller, py::arg("scenario"), py::arg("schedule") = "dense", py::arg("predictor") = "linear",
        py::arg("n_evals") = 5, py::arg("slopes") = "probe", py::arg("recycle") = true,
        "Runs the controller on the scenario's simulator; returns the run log.");
  m.def("run_baseline", &run_baseline, py::arg("scenario"), py::arg("scheme") = "uniform", py::arg("w") = 0.5);
  m.def("baseline_sweep", &sweep, py::arg("scenario"), py::arg("jobs") = 1);
  m.def("report", &report, py::arg("log"), py::arg("include_step0") = false);
  m.def("best_of_k", &best_of, py::arg("pool"), py::arg("k"), py::arg("trials") = 100000, py::arg("seed") = 0);
  m.def("cost", &cost, py::arg("scenario"), py::arg("schedule") = "dense", py::arg("predictor") = "linear",
        py::arg("n_evals") = 5, py::arg("c_bp") = 3.0, py::arg("c_fwd") = 1.0, py::arg("recycle") = true);
  m.def("schedule", &schedule, py::arg("spec"), py::arg("total_steps"), py::arg("c_max") = kDefaultProbeCap);
  m.def("fit_curve", &fit_curve, py::arg("u"), py::arg("y"), py::arg("seed") = 0);
  m.def("curve_value", &curve_at, py::arg("family"), py::arg("params"), py::arg("u"));
  m.def("solve", &solve, py::arg("base"), py::arg("change"), py::arg("targets"), py::arg("constrained"),
        py::arg("references"), py::arg("horizon") = 1.0, py::arg("lambdas") = py::none(),
        py::arg("epsilons") = py::none());
}
