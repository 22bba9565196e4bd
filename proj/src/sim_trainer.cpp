// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/sim_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "slopemix/errors.hpp"

namespace slopemix {

using nlohmann::json;

namespace detail {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

namespace {

constexpr std::uint64_t kEvalStream = 0xe7a1;
constexpr std::uint64_t kBatchStream = 0xba7c;
constexpr std::uint64_t kGradStream = 0x62ad;

void check_dim(const QuadraticObjective& f, const Eigen::VectorXd& x) {
  const auto d = x.size();
  if (f.center.size() != d || f.matrix.rows() != d || f.matrix.cols() != d ||
      (f.linear.size() != 0 && f.linear.size() != d))
    throw ValidationError("/state", "dimension mismatch between objective and state");
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(path + "/" + std::to_string(i), "expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::VectorXd row = vector_from_json(j[static_cast<std::size_t>(r)], path + "/" + std::to_string(r));
    if (row.size() != rows) throw ParseError(path + "/" + std::to_string(r), "matrix must be square");
    m.row(r) = row.transpose();
  }
  return m;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return out;
}

QuadraticObjective objective_from_json(const json& j, int dim, const std::string& path) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  QuadraticObjective f;
  if (auto it = j.find("matrix"); it != j.end())
    f.matrix = matrix_from_json(*it, path + "/matrix");
  else
    f.matrix = Eigen::MatrixXd::Zero(dim, dim);
  if (auto it = j.find("center"); it != j.end())
    f.center = vector_from_json(*it, path + "/center");
  else
    f.center = Eigen::VectorXd::Zero(dim);
  if (auto it = j.find("offset"); it != j.end()) {
    if (!it->is_number()) throw ParseError(path + "/offset", "expected a number");
    f.offset = it->get<double>();
  }
  if (auto it = j.find("linear"); it != j.end()) f.linear = vector_from_json(*it, path + "/linear");
  if (f.matrix.rows() != dim || f.center.size() != dim || (f.linear.size() != 0 && f.linear.size() != dim))
    throw ValidationError(path, "objective dimension does not match simulator dim " + std::to_string(dim));
  return f;
}

json objective_to_json(const QuadraticObjective& f) {
  json j{{"matrix", to_json(f.matrix)}, {"center", to_json(f.center)}, {"offset", f.offset}};
  if (f.linear.size() != 0) j["linear"] = to_json(f.linear);
  return j;
}

void validate_objective(const QuadraticObjective& f, const std::string& path) {
  if (!f.matrix.allFinite() || !f.center.allFinite() || !std::isfinite(f.offset) ||
      (f.linear.size() != 0 && !f.linear.allFinite()))
    throw ValidationError(path, "objective must be finite");
  if ((f.matrix - f.matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + f.matrix.cwiseAbs().maxCoeff()))
    throw ValidationError(path + "/matrix", "matrix must be symmetric");
  if (f.matrix.isZero(0.0)) {
    if (f.linear.size() == 0 || f.linear.isZero(0.0))
      throw ValidationError(path, "a zero matrix requires a nonzero linear term (affine loss)");
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.matrix, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw ValidationError(path + "/matrix", "matrix must be positive definite");
}

}  // namespace

double sim_loss(const QuadraticObjective& f, const Eigen::VectorXd& x) {
  check_dim(f, x);
  const Eigen::VectorXd r = x - f.center;
  double value = 0.5 * r.dot(f.matrix * r) + f.offset;
  if (f.linear.size() != 0) value += f.linear.dot(x);
  return value;
}

Eigen::VectorXd sim_gradient(const QuadraticObjective& f, const Eigen::VectorXd& x) {
  check_dim(f, x);
  Eigen::VectorXd g = f.matrix * (x - f.center);
  if (f.linear.size() != 0) g += f.linear;
  return g;
}

double quantized_accuracy(double loss, const AccuracyMap& map, int quantum) {
  const double p = logistic((map.threshold - loss) / map.scale);
  const double q = static_cast<double>(quantum);
  return std::floor(q * p) / q;
}

void adam_step(Eigen::VectorXd& params, AdamState& s, const Eigen::VectorXd& g, double lr,
               const AdamParams& hp) {
  if (s.m.size() != g.size()) s.m = Eigen::VectorXd::Zero(g.size());
  if (s.v.size() != g.size()) s.v = Eigen::VectorXd::Zero(g.size());
  s.t += 1;
  s.m = hp.beta1 * s.m + (1.0 - hp.beta1) * g;
  s.v = hp.beta2 * s.v + (1.0 - hp.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(s.t));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double mhat = s.m(i) / c1;
    const double vhat = s.v(i) / c2;
    params(i) -= lr * mhat / (std::sqrt(vhat) + hp.epsilon);
  }
}

Eigen::VectorXd adam_direction(const AdamState& s, const Eigen::VectorXd& g, const AdamParams& hp) {
  AdamState next = s;
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(g.size());
  // One unit-rate step from the origin yields exactly -direction.
  adam_step(probe, next, g, 1.0, hp);
  return -probe;
}

SimConfig sim_config_from_json(const json& doc, const Scenario& scenario) {
  if (!doc.is_object()) throw ParseError("/simulator", "expected an object");
  SimConfig c;
  c.seed = scenario.seed;
  auto num = [&](const char* key, double& out) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_number()) throw ParseError(std::string("/simulator/") + key, "expected a number");
      out = it->get<double>();
    }
  };
  auto integer = [&](const char* key, auto& out) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_number_integer()) throw ParseError(std::string("/simulator/") + key, "expected an integer");
      out = it->get<std::remove_reference_t<decltype(out)>>();
    }
  };
  integer("dim", c.dim);
  if (c.dim <= 0) throw ValidationError("/simulator/dim", "must be positive");
  num("learning_rate", c.learning_rate);
  num("gradient_noise", c.gradient_noise);
  num("eval_noise", c.eval_noise);
  integer("accuracy_quantum", c.accuracy_quantum);
  integer("max_checkpoints", c.max_checkpoints);
  integer("seed", c.seed);
  if (auto it = doc.find("mode"); it != doc.end()) {
    const auto m = it->get<std::string>();
    if (m == "deterministic") c.mode = SimMode::deterministic;
    else if (m == "stochastic") c.mode = SimMode::stochastic;
    else throw ParseError("/simulator/mode", "expected 'deterministic' or 'stochastic'");
  }
  if (auto it = doc.find("optimizer"); it != doc.end()) {
    const auto m = it->get<std::string>();
    if (m == "adam") c.optimizer = OptimizerKind::adam;
    else if (m == "sgd") c.optimizer = OptimizerKind::sgd;
    else throw ParseError("/simulator/optimizer", "expected 'adam' or 'sgd'");
  }
  if (auto it = doc.find("adam"); it != doc.end()) {
    if (!it->is_object()) throw ParseError("/simulator/adam", "expected an object");
    c.adam.beta1 = it->value("beta1", c.adam.beta1);
    c.adam.beta2 = it->value("beta2", c.adam.beta2);
    c.adam.epsilon = it->value("epsilon", c.adam.epsilon);
  }
  if (auto it = doc.find("initial_state"); it != doc.end())
    c.initial_state = vector_from_json(*it, "/simulator/initial_state");

  const json& datasets = doc.contains("datasets") ? doc.at("datasets") : json::object();
  const json& domains = doc.contains("domains") ? doc.at("domains") : json::object();
  for (const auto& d : scenario.datasets) {
    const std::string path = "/simulator/datasets/" + d.id;
    if (!datasets.contains(d.id)) throw ValidationError(path, "missing objective for dataset");
    c.dataset_objectives.push_back(objective_from_json(datasets.at(d.id), c.dim, path));
  }
  for (const auto& d : scenario.eval_domains) {
    const std::string path = "/simulator/domains/" + d.id;
    if (!domains.contains(d.id)) throw ValidationError(path, "missing objective for domain");
    const json& dj = domains.at(d.id);
    c.domain_objectives.push_back(objective_from_json(dj, c.dim, path));
    if (auto it = dj.find("accuracy"); it != dj.end()) {
      AccuracyMap map;
      map.scale = it->value("scale", 1.0);
      map.threshold = it->value("threshold", 0.0);
      c.accuracy.emplace_back(map);
    } else {
      c.accuracy.emplace_back(std::nullopt);
    }
  }
  if (c.mode == SimMode::deterministic) {
    c.gradient_noise = 0.0;
    c.eval_noise = 0.0;
  }
  validate(c, scenario);
  return c;
}

json to_json(const SimConfig& c, const Scenario& scenario) {
  json doc;
  doc["dim"] = c.dim;
  doc["mode"] = c.mode == SimMode::deterministic ? "deterministic" : "stochastic";
  doc["optimizer"] = c.optimizer == OptimizerKind::adam ? "adam" : "sgd";
  doc["learning_rate"] = c.learning_rate;
  doc["adam"] = {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}};
  doc["gradient_noise"] = c.gradient_noise;
  doc["eval_noise"] = c.eval_noise;
  doc["accuracy_quantum"] = c.accuracy_quantum;
  doc["seed"] = c.seed;
  doc["max_checkpoints"] = c.max_checkpoints;
  if (c.initial_state.size() != 0) doc["initial_state"] = to_json(c.initial_state);
  doc["datasets"] = json::object();
  for (std::size_t j = 0; j < scenario.datasets.size(); ++j)
    doc["datasets"][scenario.datasets[j].id] = objective_to_json(c.dataset_objectives[j]);
  doc["domains"] = json::object();
  for (std::size_t i = 0; i < scenario.eval_domains.size(); ++i) {
    json dj = objective_to_json(c.domain_objectives[i]);
    if (c.accuracy[i]) dj["accuracy"] = {{"scale", c.accuracy[i]->scale}, {"threshold", c.accuracy[i]->threshold}};
    doc["domains"][scenario.eval_domains[i].id] = std::move(dj);
  }
  return doc;
}

void validate(const SimConfig& c, const Scenario& scenario) {
  if (c.dim <= 0) throw ValidationError("/simulator/dim", "must be positive");
  if (c.dataset_objectives.size() != scenario.n_datasets())
    throw ValidationError("/simulator/datasets", "one objective per dataset is required");
  if (c.domain_objectives.size() != scenario.m_domains() || c.accuracy.size() != scenario.m_domains())
    throw ValidationError("/simulator/domains", "one objective per domain is required");
  if (!(c.learning_rate > 0.0)) throw ValidationError("/simulator/learning_rate", "must be positive");
  if (!(c.adam.beta1 > 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 > 0.0 && c.adam.beta2 < 1.0))
    throw ValidationError("/simulator/adam", "betas must lie in (0, 1)");
  if (!(c.adam.epsilon > 0.0)) throw ValidationError("/simulator/adam/epsilon", "must be positive");
  if (c.gradient_noise < 0.0 || c.eval_noise < 0.0)
    throw ValidationError("/simulator", "noise levels must be nonnegative");
  if (c.mode == SimMode::deterministic && (c.gradient_noise != 0.0 || c.eval_noise != 0.0))
    throw ValidationError("/simulator", "deterministic mode requires zero noise");
  if (c.accuracy_quantum <= 0) throw ValidationError("/simulator/accuracy_quantum", "must be positive");
  if (c.initial_state.size() != 0 && c.initial_state.size() != c.dim)
    throw ValidationError("/simulator/initial_state", "dimension mismatch");
  for (std::size_t j = 0; j < c.dataset_objectives.size(); ++j)
    validate_objective(c.dataset_objectives[j], "/simulator/datasets/" + scenario.datasets[j].id);
  for (std::size_t i = 0; i < c.domain_objectives.size(); ++i) {
    const std::string path = "/simulator/domains/" + scenario.eval_domains[i].id;
    validate_objective(c.domain_objectives[i], path);
    const bool is_acc = scenario.eval_domains[i].metric == MetricKind::accuracy;
    if (is_acc != c.accuracy[i].has_value())
      throw ValidationError(path + "/accuracy",
                            "accuracy parameters are required exactly for accuracy-metric domains");
    if (is_acc && !(c.accuracy[i]->scale > 0.0))
      throw ValidationError(path + "/accuracy/scale", "must be positive");
  }
}

SimTrainer::SimTrainer(Scenario scenario, SimConfig config)
    : scenario_(std::move(scenario)), config_(std::move(config)) {
  validate(config_, scenario_);
  caps_.datasets = scenario_.dataset_ids();
  for (const auto& d : scenario_.eval_domains) caps_.domains.push_back({d.id, d.metric});
  caps_.gradients = true;
  caps_.max_checkpoints = config_.max_checkpoints;
  caps_.concurrent_evaluate = true;

  state_.theta = config_.initial_state.size() ? config_.initial_state : Eigen::VectorXd::Zero(config_.dim);
  state_.adam.m = Eigen::VectorXd::Zero(config_.dim);
  state_.adam.v = Eigen::VectorXd::Zero(config_.dim);
  state_.rng.seed(detail::combine_seed(config_.seed, 0x5eed));
  state_.cursor.assign(scenario_.n_datasets(), 0);
}

SimTrainer SimTrainer::from_scenario(const Scenario& scenario) {
  if (!scenario.simulator)
    throw ValidationError("/simulator", "scenario has no embedded simulator configuration");
  return SimTrainer(scenario, sim_config_from_json(*scenario.simulator, scenario));
}

void SimTrainer::set_learning_rate(double learning_rate) {
  if (!(learning_rate > 0.0)) throw ValidationError("/simulator/learning_rate", "must be positive");
  config_.learning_rate = learning_rate;
}

CheckpointHandle SimTrainer::snapshot() {
  if (config_.max_checkpoints > 0 && checkpoints_.size() >= static_cast<std::size_t>(config_.max_checkpoints))
    throw TrainerError(TrainerErrc::capacity, "checkpoint capacity exhausted");
  const std::uint64_t token = next_token_++;
  checkpoints_.emplace(token, state_);
  return {token};
}

void SimTrainer::restore(CheckpointHandle handle) {
  auto it = checkpoints_.find(handle.token);
  if (it == checkpoints_.end())
    throw TrainerError(TrainerErrc::unknown_handle, "no checkpoint " + std::to_string(handle.token));
  state_ = it->second;
}

void SimTrainer::release(CheckpointHandle handle) {
  if (checkpoints_.erase(handle.token) == 0)
    throw TrainerError(TrainerErrc::unknown_handle, "no checkpoint " + std::to_string(handle.token));
}

std::size_t SimTrainer::require_dataset(const std::string& id) const {
  if (auto idx = scenario_.dataset_index(id)) return *idx;
  throw TrainerError(TrainerErrc::unknown_dataset, "unknown dataset '" + id + "'");
}

std::size_t SimTrainer::require_domain(const std::string& id) const {
  if (auto idx = scenario_.domain_index(id)) return *idx;
  throw TrainerError(TrainerErrc::unknown_domain, "unknown domain '" + id + "'");
}

std::vector<double> SimTrainer::checked_weights(const TrainPlan& plan) const {
  const std::size_t n = scenario_.n_datasets();
  if (const auto* single = std::get_if<DatasetPlan>(&plan)) {
    std::vector<double> w(n, 0.0);
    w[require_dataset(single->dataset)] = 1.0;
    return w;
  }
  const auto& mix = std::get<MixtureWeights>(plan);
  if (mix.size() != n)
    throw TrainerError(TrainerErrc::invalid_weights,
                       "expected " + std::to_string(n) + " weights, got " + std::to_string(mix.size()));
  return mix.vector();
}

Eigen::VectorXd SimTrainer::batch_gradient(std::size_t j) {
  Eigen::VectorXd g = sim_gradient(config_.dataset_objectives[j], state_.theta);
  if (config_.gradient_noise == 0.0) return g;
  const auto& budget = scenario_.datasets[j].sample_budget;
  if (budget) {
    // Finite pool: the batch sequence repeats every epoch, so repeated
    // passes see the same per-batch noise.
    const std::int64_t batches_per_epoch =
        std::max<std::int64_t>(1, (*budget + scenario_.batch_size - 1) / scenario_.batch_size);
    const std::int64_t batch = (state_.cursor[j] / scenario_.batch_size) % batches_per_epoch;
    std::mt19937_64 stream(detail::combine_seed(
        detail::combine_seed(config_.seed, kBatchStream + j), static_cast<std::uint64_t>(batch)));
    for (Eigen::Index k = 0; k < g.size(); ++k) g(k) += config_.gradient_noise * detail::standard_normal(stream);
    state_.cursor[j] += scenario_.batch_size;
  } else {
    for (Eigen::Index k = 0; k < g.size(); ++k)
      g(k) += config_.gradient_noise * detail::standard_normal(state_.rng);
    state_.cursor[j] += scenario_.batch_size;
  }
  return g;
}

void SimTrainer::apply_update(const Eigen::VectorXd& gradient) {
  if (config_.optimizer == OptimizerKind::adam) {
    adam_step(state_.theta, state_.adam, gradient, config_.learning_rate, config_.adam);
  } else {
    state_.theta -= config_.learning_rate * gradient;
    state_.adam.t += 1;
  }
  state_.step += 1;
}

void SimTrainer::train_steps(const TrainPlan& plan, int steps) {
  if (steps < 1) throw TrainerError(TrainerErrc::invalid_argument, "steps must be >= 1");
  const std::vector<double> w = checked_weights(plan);
  const std::size_t n = w.size();
  for (int s = 0; s < steps; ++s) {
    if (config_.mode == SimMode::deterministic) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(config_.dim);
      for (std::size_t j = 0; j < n; ++j)
        if (w[j] != 0.0) g += w[j] * sim_gradient(config_.dataset_objectives[j], state_.theta);
      apply_update(g);
    } else {
      const double u = detail::uniform01(state_.rng);
      double cumulative = 0.0;
      std::size_t pick = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (w[j] <= 0.0) continue;
        cumulative += w[j];
        pick = j;
        if (u < cumulative) break;
      }
      apply_update(batch_gradient(pick));
    }
  }
}

double SimTrainer::true_loss(std::size_t domain) const {
  return sim_loss(config_.domain_objectives.at(domain), state_.theta);
}

double SimTrainer::metric_at(std::size_t domain, double noise) const {
  const double loss = true_loss(domain) + noise;
  if (const auto& acc = config_.accuracy[domain]) return quantized_accuracy(loss, *acc, config_.accuracy_quantum);
  return loss;
}

double SimTrainer::true_metric(std::size_t domain) const { return metric_at(domain, 0.0); }

std::uint64_t SimTrainer::state_hash() const {
  std::uint64_t h = 0x51a7e;
  for (Eigen::Index i = 0; i < state_.theta.size(); ++i) {
    std::uint64_t bits = 0;
    const double x = state_.theta(i);
    std::memcpy(&bits, &x, sizeof bits);
    h = detail::combine_seed(h, bits);
  }
  return h;
}

EvalResult SimTrainer::evaluate(const EvalRequest& request) {
  if (request.batches < 1) throw TrainerError(TrainerErrc::invalid_argument, "batches must be >= 1");
  EvalResult result;
  result.step = state_.step;
  const std::uint64_t h = state_hash();
  for (const auto& id : request.domain_ids) {
    const std::size_t i = require_domain(id);
    double noise = 0.0;
    if (config_.eval_noise > 0.0) {
      // Mean of per-batch noise over a fixed batch sequence; a smaller budget
      // reads a prefix of the same batches.
      std::mt19937_64 stream(detail::combine_seed(
          detail::combine_seed(detail::combine_seed(config_.seed, kEvalStream + static_cast<std::uint64_t>(request.split)),
                               i),
          h));
      double sum = 0.0;
      for (int b = 0; b < request.batches; ++b) sum += detail::standard_normal(stream);
      noise = config_.eval_noise * sum / request.batches;
    }
    result.values[id] = metric_at(i, noise);
  }
  return result;
}

GradientReport SimTrainer::gradient_report(const std::vector<std::string>& domain_ids,
                                           const std::vector<std::string>& dataset_ids, int batches) {
  if (batches < 1) throw TrainerError(TrainerErrc::invalid_argument, "batches must be >= 1");
  GradientReport report;
  report.learning_rate = config_.learning_rate;
  const double noise_scale = config_.gradient_noise / std::sqrt(static_cast<double>(batches));
  const std::uint64_t h = state_hash();
  auto add_noise = [&](Eigen::VectorXd& g, std::uint64_t stream_id) {
    if (noise_scale == 0.0) return;
    std::mt19937_64 stream(detail::combine_seed(detail::combine_seed(config_.seed, kGradStream + stream_id), h));
    for (Eigen::Index k = 0; k < g.size(); ++k) g(k) += noise_scale * detail::standard_normal(stream);
  };
  auto to_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };

  for (const auto& id : domain_ids) {
    const std::size_t i = require_domain(id);
    Eigen::VectorXd g = sim_gradient(config_.domain_objectives[i], state_.theta);
    add_noise(g, 1000 + i);
    if (const auto& acc = config_.accuracy[i]) {
      // Gradient of the unquantized accuracy curve, the smooth surrogate.
      const double p = logistic((acc->threshold - true_loss(i)) / acc->scale);
      g *= -p * (1.0 - p) / acc->scale;
    }
    report.eval_gradients[id] = to_vec(g);
  }
  for (const auto& id : dataset_ids) {
    const std::size_t j = require_dataset(id);
    Eigen::VectorXd g = sim_gradient(config_.dataset_objectives[j], state_.theta);
    add_noise(g, 2000 + j);
    const Eigen::VectorXd d =
        config_.optimizer == OptimizerKind::adam ? adam_direction(state_.adam, g, config_.adam) : g;
    report.dataset_directions[id] = to_vec(d);
  }
  return report;
}

std::string SimTrainer::state_dump() const {
  std::ostringstream out;
  auto dump = [&](const char* name, const Eigen::VectorXd& v) {
    out << name << ":";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      std::uint64_t bits = 0;
      const double x = v(i);
      std::memcpy(&bits, &x, sizeof bits);
      out << ' ' << std::hex << bits << std::dec;
    }
    out << '\n';
  };
  dump("theta", state_.theta);
  dump("m", state_.adam.m);
  dump("v", state_.adam.v);
  out << "t: " << state_.adam.t << "\nstep: " << state_.step << "\ncursor:";
  for (auto c : state_.cursor) out << ' ' << c;
  out << "\nrng: " << state_.rng << '\n';
  return out.str();
}

}  // namespace slopemix
