// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// RunLog: everything a controller or baseline run produced. Reports are
// computed from logs alone. Serialized as versioned JSON; see
// docs/run-log.md.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slopemix/cost.hpp"
#include "slopemix/curve_fit.hpp"
#include "slopemix/scenario.hpp"
#include "slopemix/slopes.hpp"
#include "slopemix/solver.hpp"

namespace slopemix {

inline constexpr int kRunLogVersion = 1;

enum class RunKind { controller, baseline };
std::string_view to_string(RunKind kind) noexcept;

struct EvalRecord {
  std::int64_t step = 0;
  Split split = Split::eval;
  int batches = 0;
  std::vector<double> values;  // raw metric, scenario domain order
};

struct CurveCell {
  std::size_t domain = 0;
  std::size_t dataset = 0;
  FittedCurve curve;
};

struct UpdateRecord {
  std::int64_t step = 0;
  int horizon = 0;
  int probe_steps = 0;
  SlopeSource slope_source = SlopeSource::probe;
  AnchorSource anchor_source = AnchorSource::measured;
  Eigen::MatrixXd slopes;      // M x N
  std::vector<double> anchor;  // normalized
  // Curve predictor details; empty for the linear predictor.
  std::vector<CurveCell> curves;
  double u_horizon = 0.0;
  std::vector<std::string> warnings;
  std::vector<SolveOutcome> candidates;
  std::size_t chosen = 0;
  UpdateCost cost;
};

struct WeightEntry {
  std::int64_t step = 0;
  MixtureWeights weights{std::vector<double>{1.0}};
  std::optional<SolveOutcome> outcome;  // absent for baselines
};

struct RunLog {
  int version = kRunLogVersion;
  RunKind kind = RunKind::controller;
  Scenario scenario;     // with references filled in
  nlohmann::json config;  // echo of the run settings
  std::vector<double> step0_values;  // raw, reference split, full budget, every domain
  std::vector<WeightEntry> weight_trajectory;
  std::vector<EvalRecord> eval_history;
  std::vector<UpdateRecord> updates;
  double relative_cost = 1.0;
  std::int64_t training_steps = 0;
  bool aborted = false;
  std::string abort_reason;

  /// Mixture in force at `step` (the latest entry at or before it).
  const MixtureWeights& weights_at(std::int64_t step) const;
};

nlohmann::json to_json(const SolveOutcome& outcome);
SolveOutcome solve_outcome_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunLog& log);
RunLog run_log_from_json(const nlohmann::json& doc);

/// Two-space indented JSON with a trailing newline.
std::string dump_run_log(const RunLog& log);
void write_run_log(const RunLog& log, const std::filesystem::path& path);
RunLog read_run_log(const std::filesystem::path& path);

}  // namespace slopemix
