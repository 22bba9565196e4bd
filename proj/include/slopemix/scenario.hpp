// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scenario model: datasets, evaluation domains, their roles and metric kinds.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace slopemix {

enum class DatasetRole { target, non_target };
enum class DomainRole { target, constrained };
enum class MetricKind { loss, accuracy };
enum class Split { eval, test };

std::string_view to_string(DatasetRole role) noexcept;
std::string_view to_string(DomainRole role) noexcept;
std::string_view to_string(MetricKind kind) noexcept;
std::string_view to_string(Split split) noexcept;
Split split_from_string(std::string_view text);
MetricKind metric_from_string(std::string_view text);

struct DatasetSpec {
  std::string id;
  DatasetRole role = DatasetRole::non_target;
  std::optional<std::int64_t> sample_budget;  // absent = unlimited
};

struct EvalDomainSpec {
  std::string id;
  DomainRole role = DomainRole::constrained;
  MetricKind metric = MetricKind::loss;
  std::optional<double> reference;  // raw metric value; filled at run start
};

struct Scenario {
  std::string name;
  std::vector<DatasetSpec> datasets;
  std::vector<EvalDomainSpec> eval_domains;
  int total_steps = 2048;
  int batch_size = 8;
  int eval_every = 64;
  int eval_batches_full = 200;
  int eval_batches_reduced = 50;
  std::uint64_t seed = 0;
  // Split on which step-0 reference values are measured.
  Split reference_split = Split::eval;
  // Embedded simulator configuration, kept as raw JSON; see sim_trainer.hpp.
  std::optional<nlohmann::json> simulator;

  std::size_t n_datasets() const noexcept { return datasets.size(); }
  std::size_t m_domains() const noexcept { return eval_domains.size(); }

  std::vector<std::size_t> target_domains() const;
  std::vector<std::size_t> constrained_domains() const;
  std::vector<std::size_t> target_datasets() const;
  std::vector<std::size_t> non_target_datasets() const;

  std::optional<std::size_t> dataset_index(std::string_view id) const;
  std::optional<std::size_t> domain_index(std::string_view id) const;
  std::vector<std::string> dataset_ids() const;
  std::vector<std::string> domain_ids() const;
};

/// Checks every scenario invariant; throws ValidationError with the field path.
void validate(const Scenario& scenario);

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Scenario& scenario);

/// Reads and validates a scenario file. Throws ParseError or ValidationError.
Scenario load_scenario(const std::filesystem::path& path);

/// Maps a raw metric value to loss orientation (lower is better).
constexpr double normalize_metric(double value, MetricKind kind) noexcept {
  return kind == MetricKind::accuracy ? -value : value;
}

constexpr double denormalize_metric(double value, MetricKind kind) noexcept {
  return kind == MetricKind::accuracy ? -value : value;
}

}  // namespace slopemix
