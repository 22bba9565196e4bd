// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Update schedules: the steps at which the mixture is re-solved, the horizon
// to the next update and the probe budget at each update.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace slopemix {

enum class ScheduleKind { no_warmup, light_warmup, dense_warmup, fixed_interval, explicit_steps };

std::string_view to_string(ScheduleKind kind) noexcept;

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::dense_warmup;
  int interval = 0;        // fixed_interval only
  std::vector<int> steps;  // explicit_steps only

  /// Parses "none", "light", "dense", "fixed:H" or "explicit:a,b,c".
  static ScheduleSpec parse(std::string_view text);
  std::string str() const;
};

inline constexpr int kDefaultProbeCap = 128;

struct Schedule {
  ScheduleSpec spec;
  std::vector<int> update_steps;  // strictly increasing, within [0, total_steps)
  int total_steps = 0;
  int c_max = kDefaultProbeCap;

  std::size_t size() const noexcept { return update_steps.size(); }
  bool contains(int step) const;
  /// Distance to the next update, or to total_steps for the last one.
  int horizon(int step) const;
};

/// Throws ValidationError for T < 2, a fixed interval outside (0, T), or an
/// explicit list that is not strictly increasing within [0, T).
Schedule build_schedule(const ScheduleSpec& spec, int total_steps, int c_max = kDefaultProbeCap);

/// c_t = min(H_t, c_max) for geometric and explicit schedules; c_t = H for a
/// fixed interval H. Throws ValidationError if `step` is not an update step.
int probe_budget(const Schedule& schedule, int step);

}  // namespace slopemix
