// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/run_log.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "slopemix/errors.hpp"

namespace slopemix {

using nlohmann::json;

std::string_view to_string(RunKind kind) noexcept {
  return kind == RunKind::controller ? "controller" : "baseline";
}

const MixtureWeights& RunLog::weights_at(std::int64_t step) const {
  if (weight_trajectory.empty()) throw ValidationError("/weight_trajectory", "log has no weights");
  const WeightEntry* current = &weight_trajectory.front();
  for (const auto& e : weight_trajectory) {
    if (e.step > step) break;
    current = &e;
  }
  return current->weights;
}

namespace {

// Non-finite values serialize as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}
std::vector<double> read_numbers(const json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(read_number(x));
  return v;
}

json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}
Eigen::MatrixXd read_matrix(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_number(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
  return m;
}

json by_id(const std::vector<std::string>& ids, const std::vector<double>& values) {
  json o = json::object();
  for (std::size_t k = 0; k < ids.size() && k < values.size(); ++k) o[ids[k]] = number(values[k]);
  return o;
}
std::vector<double> from_ids(const std::vector<std::string>& ids, const json& o, const std::string& path) {
  std::vector<double> v;
  for (const auto& id : ids) {
    if (!o.contains(id)) throw ParseError(path, "missing value for '" + id + "'");
    v.push_back(read_number(o.at(id)));
  }
  return v;
}

json to_json(const UpdateCost& c) {
  return {{"step", c.step}, {"horizon", c.horizon}, {"probe_steps", c.probe_steps},
          {"recycled", c.recycled}, {"rho", c.rho}, {"beta", c.beta}};
}
UpdateCost update_cost_from_json(const json& j) {
  UpdateCost c;
  c.step = j.at("step").get<int>();
  c.horizon = j.at("horizon").get<int>();
  c.probe_steps = j.at("probe_steps").get<int>();
  c.recycled = j.at("recycled").get<bool>();
  c.rho = j.at("rho").get<double>();
  c.beta = j.at("beta").get<double>();
  return c;
}

SlopeSource slope_source_from_string(const std::string& s) {
  if (s == "probe") return SlopeSource::probe;
  if (s == "gradient_alignment") return SlopeSource::gradient_alignment;
  throw ParseError("/updates/slope_source", "unknown slope source '" + s + "'");
}

}  // namespace

json to_json(const SolveOutcome& o) {
  return {{"weights", o.weights.vector()},    {"feasible", o.feasible},
          {"target_objective", number(o.target_objective)},
          {"max_violation", number(o.max_violation)},
          {"lambda", o.lambda},               {"epsilon", o.epsilon},
          {"predicted", numbers(o.predicted)}};
}

SolveOutcome solve_outcome_from_json(const json& j) {
  SolveOutcome o;
  o.weights = MixtureWeights(j.at("weights").get<std::vector<double>>());
  o.feasible = j.at("feasible").get<bool>();
  o.target_objective = read_number(j.at("target_objective"));
  o.max_violation = read_number(j.at("max_violation"));
  o.lambda = j.at("lambda").get<double>();
  o.epsilon = j.at("epsilon").get<double>();
  o.predicted = read_numbers(j.at("predicted"));
  return o;
}

json to_json(const RunLog& log) {
  const auto ids = log.scenario.domain_ids();
  json doc;
  doc["version"] = log.version;
  doc["kind"] = to_string(log.kind);
  doc["scenario"] = to_json(log.scenario);
  doc["config"] = log.config;
  doc["step0_values"] = by_id(ids, log.step0_values);

  json weights = json::array();
  for (const auto& e : log.weight_trajectory) {
    json w = {{"step", e.step}, {"weights", e.weights.vector()}};
    if (e.outcome) w["outcome"] = to_json(*e.outcome);
    weights.push_back(std::move(w));
  }
  doc["weight_trajectory"] = std::move(weights);

  json evals = json::array();
  for (const auto& e : log.eval_history)
    evals.push_back({{"step", e.step}, {"split", to_string(e.split)}, {"batches", e.batches},
                     {"values", by_id(ids, e.values)}});
  doc["eval_history"] = std::move(evals);

  json updates = json::array();
  for (const auto& u : log.updates) {
    json j;
    j["step"] = u.step;
    j["horizon"] = u.horizon;
    j["probe_steps"] = u.probe_steps;
    j["slope_source"] = to_string(u.slope_source);
    j["anchor_source"] = to_string(u.anchor_source);
    j["slopes"] = matrix(u.slopes);
    j["anchor"] = numbers(u.anchor);
    if (!u.curves.empty()) {
      json cells = json::array();
      for (const auto& c : u.curves)
        cells.push_back({{"domain", c.domain},
                         {"dataset", c.dataset},
                         {"family", to_string(c.curve.family)},
                         {"params", numbers(c.curve.params)},
                         {"rss", number(c.curve.rss)},
                         {"aicc", number(c.curve.aicc)},
                         {"n_points", c.curve.n_points},
                         {"converged", c.curve.converged}});
      j["curves"] = std::move(cells);
      j["u_horizon"] = u.u_horizon;
    }
    j["warnings"] = u.warnings;
    json cands = json::array();
    for (const auto& c : u.candidates) cands.push_back(to_json(c));
    j["candidates"] = std::move(cands);
    j["chosen"] = u.chosen;
    j["cost"] = to_json(u.cost);
    updates.push_back(std::move(j));
  }
  doc["updates"] = std::move(updates);
  doc["relative_cost"] = log.relative_cost;
  doc["training_steps"] = log.training_steps;
  doc["aborted"] = log.aborted;
  if (log.aborted) doc["abort_reason"] = log.abort_reason;
  return doc;
}

RunLog run_log_from_json(const json& doc) {
  try {
    RunLog log;
    log.version = doc.at("version").get<int>();
    if (log.version != kRunLogVersion)
      throw ParseError("/version", "unsupported run log version " + std::to_string(log.version));
    const auto kind = doc.at("kind").get<std::string>();
    if (kind != "controller" && kind != "baseline") throw ParseError("/kind", "unknown run kind '" + kind + "'");
    log.kind = kind == "controller" ? RunKind::controller : RunKind::baseline;
    log.scenario = scenario_from_json(doc.at("scenario"));
    log.config = doc.value("config", json::object());
    const auto ids = log.scenario.domain_ids();
    log.step0_values = from_ids(ids, doc.at("step0_values"), "/step0_values");

    for (const auto& w : doc.at("weight_trajectory")) {
      WeightEntry e;
      e.step = w.at("step").get<std::int64_t>();
      e.weights = MixtureWeights(w.at("weights").get<std::vector<double>>());
      if (w.contains("outcome")) e.outcome = solve_outcome_from_json(w.at("outcome"));
      log.weight_trajectory.push_back(std::move(e));
    }
    for (const auto& e : doc.at("eval_history")) {
      EvalRecord r;
      r.step = e.at("step").get<std::int64_t>();
      r.split = split_from_string(e.at("split").get<std::string>());
      r.batches = e.at("batches").get<int>();
      r.values = from_ids(ids, e.at("values"), "/eval_history/values");
      log.eval_history.push_back(std::move(r));
    }
    for (const auto& j : doc.at("updates")) {
      UpdateRecord u;
      u.step = j.at("step").get<std::int64_t>();
      u.horizon = j.at("horizon").get<int>();
      u.probe_steps = j.at("probe_steps").get<int>();
      u.slope_source = slope_source_from_string(j.at("slope_source").get<std::string>());
      u.anchor_source = j.at("anchor_source").get<std::string>() == "recycled" ? AnchorSource::recycled
                                                                                : AnchorSource::measured;
      u.slopes = read_matrix(j.at("slopes"));
      u.anchor = read_numbers(j.at("anchor"));
      if (j.contains("curves")) {
        for (const auto& c : j.at("curves")) {
          CurveCell cell;
          cell.domain = c.at("domain").get<std::size_t>();
          cell.dataset = c.at("dataset").get<std::size_t>();
          cell.curve.family = curve_family_from_string(c.at("family").get<std::string>());
          cell.curve.params = read_numbers(c.at("params"));
          cell.curve.rss = read_number(c.at("rss"));
          cell.curve.aicc = read_number(c.at("aicc"));
          cell.curve.n_points = c.at("n_points").get<int>();
          cell.curve.converged = c.at("converged").get<bool>();
          u.curves.push_back(std::move(cell));
        }
        u.u_horizon = j.at("u_horizon").get<double>();
      }
      u.warnings = j.value("warnings", std::vector<std::string>{});
      for (const auto& c : j.at("candidates")) u.candidates.push_back(solve_outcome_from_json(c));
      u.chosen = j.at("chosen").get<std::size_t>();
      u.cost = update_cost_from_json(j.at("cost"));
      log.updates.push_back(std::move(u));
    }
    log.relative_cost = doc.at("relative_cost").get<double>();
    log.training_steps = doc.at("training_steps").get<std::int64_t>();
    log.aborted = doc.at("aborted").get<bool>();
    log.abort_reason = doc.value("abort_reason", std::string{});
    return log;
  } catch (const json::exception& e) {
    throw ParseError("/", std::string("malformed run log: ") + e.what());
  }
}

std::string dump_run_log(const RunLog& log) { return to_json(log).dump(2) + "\n"; }

void write_run_log(const RunLog& log, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << dump_run_log(log);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

RunLog read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  try {
    return run_log_from_json(doc);
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.what());
  }
}

}  // namespace slopemix
