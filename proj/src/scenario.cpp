// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/scenario.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "slopemix/errors.hpp"

namespace slopemix {

using nlohmann::json;

std::string_view to_string(TrainerErrc code) noexcept {
  switch (code) {
    case TrainerErrc::unknown_handle: return "unknown_handle";
    case TrainerErrc::unknown_dataset: return "unknown_dataset";
    case TrainerErrc::unknown_domain: return "unknown_domain";
    case TrainerErrc::invalid_weights: return "invalid_weights";
    case TrainerErrc::invalid_argument: return "invalid_argument";
    case TrainerErrc::capability_unsupported: return "capability_unsupported";
    case TrainerErrc::capacity: return "capacity";
    case TrainerErrc::protocol: return "protocol";
    case TrainerErrc::timeout: return "timeout";
    case TrainerErrc::process_exited: return "process_exited";
  }
  return "unknown";
}

TrainerErrc trainer_errc_from_string(std::string_view code) {
  for (auto c : {TrainerErrc::unknown_handle, TrainerErrc::unknown_dataset,
                 TrainerErrc::unknown_domain, TrainerErrc::invalid_weights,
                 TrainerErrc::invalid_argument, TrainerErrc::capability_unsupported,
                 TrainerErrc::capacity, TrainerErrc::protocol, TrainerErrc::timeout,
                 TrainerErrc::process_exited}) {
    if (to_string(c) == code) return c;
  }
  return TrainerErrc::protocol;
}

std::string_view to_string(DatasetRole role) noexcept {
  return role == DatasetRole::target ? "target" : "non_target";
}
std::string_view to_string(DomainRole role) noexcept {
  return role == DomainRole::target ? "target" : "constrained";
}
std::string_view to_string(MetricKind kind) noexcept {
  return kind == MetricKind::loss ? "loss" : "accuracy";
}
std::string_view to_string(Split split) noexcept {
  return split == Split::eval ? "eval" : "test";
}

Split split_from_string(std::string_view text) {
  if (text == "eval") return Split::eval;
  if (text == "test") return Split::test;
  throw ParseError("", "unknown split '" + std::string(text) + "'");
}

MetricKind metric_from_string(std::string_view text) {
  if (text == "loss") return MetricKind::loss;
  if (text == "accuracy") return MetricKind::accuracy;
  throw ParseError("", "unknown metric kind '" + std::string(text) + "'");
}

namespace {

template <typename Pred>
std::vector<std::size_t> indices_where(std::size_t n, Pred pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (pred(i)) out.push_back(i);
  return out;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "/" + key, "missing required field");
  return *it;
}

std::string read_string(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw ParseError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

std::int64_t read_int(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) throw ParseError(path + "/" + key, "expected an integer");
  return v.get<std::int64_t>();
}

int read_positive(const json& obj, const std::string& key, const std::string& path) {
  auto v = read_int(obj, key, path);
  if (v <= 0 || v > std::numeric_limits<int>::max())
    throw ValidationError(path + "/" + key, "must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::size_t> Scenario::target_domains() const {
  return indices_where(eval_domains.size(),
                       [&](std::size_t i) { return eval_domains[i].role == DomainRole::target; });
}
std::vector<std::size_t> Scenario::constrained_domains() const {
  return indices_where(eval_domains.size(), [&](std::size_t i) {
    return eval_domains[i].role == DomainRole::constrained;
  });
}
std::vector<std::size_t> Scenario::target_datasets() const {
  return indices_where(datasets.size(),
                       [&](std::size_t i) { return datasets[i].role == DatasetRole::target; });
}
std::vector<std::size_t> Scenario::non_target_datasets() const {
  return indices_where(datasets.size(),
                       [&](std::size_t i) { return datasets[i].role == DatasetRole::non_target; });
}

std::optional<std::size_t> Scenario::dataset_index(std::string_view id) const {
  for (std::size_t i = 0; i < datasets.size(); ++i)
    if (datasets[i].id == id) return i;
  return std::nullopt;
}
std::optional<std::size_t> Scenario::domain_index(std::string_view id) const {
  for (std::size_t i = 0; i < eval_domains.size(); ++i)
    if (eval_domains[i].id == id) return i;
  return std::nullopt;
}
std::vector<std::string> Scenario::dataset_ids() const {
  std::vector<std::string> ids;
  for (const auto& d : datasets) ids.push_back(d.id);
  return ids;
}
std::vector<std::string> Scenario::domain_ids() const {
  std::vector<std::string> ids;
  for (const auto& d : eval_domains) ids.push_back(d.id);
  return ids;
}

void validate(const Scenario& s) {
  if (s.datasets.empty()) throw ValidationError("/datasets", "at least one dataset is required");
  if (s.eval_domains.empty())
    throw ValidationError("/eval_domains", "at least one evaluation domain is required");

  std::set<std::string> seen;
  for (std::size_t i = 0; i < s.datasets.size(); ++i) {
    const auto& d = s.datasets[i];
    const std::string path = "/datasets/" + std::to_string(i);
    if (d.id.empty()) throw ValidationError(path + "/id", "dataset id must be non-empty");
    if (!seen.insert(d.id).second)
      throw ValidationError(path + "/id", "duplicate dataset id '" + d.id + "'");
    if (d.sample_budget && *d.sample_budget <= 0)
      throw ValidationError(path + "/sample_budget", "must be a positive integer");
  }
  if (s.target_datasets().empty())
    throw ValidationError("/datasets", "at least one dataset must have role 'target'");

  seen.clear();
  for (std::size_t i = 0; i < s.eval_domains.size(); ++i) {
    const auto& d = s.eval_domains[i];
    const std::string path = "/eval_domains/" + std::to_string(i);
    if (d.id.empty()) throw ValidationError(path + "/id", "domain id must be non-empty");
    if (!seen.insert(d.id).second)
      throw ValidationError(path + "/id", "duplicate evaluation domain id '" + d.id + "'");
  }

  auto positive = [](int v, const char* path) {
    if (v <= 0) throw ValidationError(path, "must be a positive integer");
  };
  positive(s.total_steps, "/total_steps");
  positive(s.batch_size, "/batch_size");
  positive(s.eval_every, "/eval_every");
  positive(s.eval_batches_full, "/eval_batches_full");
  positive(s.eval_batches_reduced, "/eval_batches_reduced");
  if (s.eval_batches_reduced > s.eval_batches_full)
    throw ValidationError("/eval_batches_reduced", "must not exceed eval_batches_full");
}

Scenario scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("", "scenario document must be a JSON object");
  Scenario s;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("/name", "expected a string");
    s.name = it->get<std::string>();
  }

  const json& datasets = require(doc, "datasets", "");
  if (!datasets.is_array()) throw ParseError("/datasets", "expected an array");
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const std::string path = "/datasets/" + std::to_string(i);
    const json& d = datasets[i];
    if (!d.is_object()) throw ParseError(path, "expected an object");
    DatasetSpec spec;
    spec.id = read_string(d, "id", path);
    const std::string role = read_string(d, "role", path);
    if (role == "target") spec.role = DatasetRole::target;
    else if (role == "non_target") spec.role = DatasetRole::non_target;
    else throw ParseError(path + "/role", "expected 'target' or 'non_target', got '" + role + "'");
    if (auto it = d.find("sample_budget"); it != d.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw ParseError(path + "/sample_budget", "expected an integer");
      spec.sample_budget = it->get<std::int64_t>();
    }
    s.datasets.push_back(std::move(spec));
  }

  const json& domains = require(doc, "eval_domains", "");
  if (!domains.is_array()) throw ParseError("/eval_domains", "expected an array");
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const std::string path = "/eval_domains/" + std::to_string(i);
    const json& d = domains[i];
    if (!d.is_object()) throw ParseError(path, "expected an object");
    EvalDomainSpec spec;
    spec.id = read_string(d, "id", path);
    const std::string role = read_string(d, "role", path);
    if (role == "target") spec.role = DomainRole::target;
    else if (role == "constrained") spec.role = DomainRole::constrained;
    else throw ParseError(path + "/role", "expected 'target' or 'constrained', got '" + role + "'");
    const std::string metric = read_string(d, "metric", path);
    if (metric == "loss") spec.metric = MetricKind::loss;
    else if (metric == "accuracy") spec.metric = MetricKind::accuracy;
    else throw ParseError(path + "/metric", "expected 'loss' or 'accuracy', got '" + metric + "'");
    if (auto it = d.find("reference"); it != d.end() && !it->is_null()) {
      if (!it->is_number()) throw ParseError(path + "/reference", "expected a number");
      spec.reference = it->get<double>();
    }
    s.eval_domains.push_back(std::move(spec));
  }

  s.total_steps = read_positive(doc, "total_steps", "");
  s.batch_size = read_positive(doc, "batch_size", "");
  s.eval_every = read_positive(doc, "eval_every", "");
  s.eval_batches_full = read_positive(doc, "eval_batches_full", "");
  s.eval_batches_reduced = read_positive(doc, "eval_batches_reduced", "");
  const json& seed = require(doc, "seed", "");
  if (!seed.is_number_integer()) throw ParseError("/seed", "expected an integer");
  s.seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>()
                                     : static_cast<std::uint64_t>(seed.get<std::int64_t>());

  if (auto it = doc.find("reference_split"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("/reference_split", "expected a string");
    const auto text = it->get<std::string>();
    if (text != "eval" && text != "test")
      throw ParseError("/reference_split", "expected 'eval' or 'test'");
    s.reference_split = split_from_string(text);
  }
  if (auto it = doc.find("simulator"); it != doc.end()) {
    if (!it->is_object()) throw ParseError("/simulator", "expected an object");
    s.simulator = *it;
  }

  validate(s);
  return s;
}

json to_json(const Scenario& s) {
  json doc;
  if (!s.name.empty()) doc["name"] = s.name;
  doc["datasets"] = json::array();
  for (const auto& d : s.datasets) {
    json j{{"id", d.id}, {"role", to_string(d.role)}};
    if (d.sample_budget) j["sample_budget"] = *d.sample_budget;
    doc["datasets"].push_back(std::move(j));
  }
  doc["eval_domains"] = json::array();
  for (const auto& d : s.eval_domains) {
    json j{{"id", d.id}, {"role", to_string(d.role)}, {"metric", to_string(d.metric)}};
    if (d.reference) j["reference"] = *d.reference;
    doc["eval_domains"].push_back(std::move(j));
  }
  doc["total_steps"] = s.total_steps;
  doc["batch_size"] = s.batch_size;
  doc["eval_every"] = s.eval_every;
  doc["eval_batches_full"] = s.eval_batches_full;
  doc["eval_batches_reduced"] = s.eval_batches_reduced;
  doc["seed"] = s.seed;
  doc["reference_split"] = to_string(s.reference_split);
  if (s.simulator) doc["simulator"] = *s.simulator;
  return doc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("", "cannot open scenario file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("", "malformed scenario file '" + path.string() + "': " + e.what());
  }
  Scenario s = scenario_from_json(doc);
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

}  // namespace slopemix
