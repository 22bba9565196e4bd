// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "slopemix/errors.hpp"

namespace slopemix {

std::string_view to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::no_warmup: return "none";
    case ScheduleKind::light_warmup: return "light";
    case ScheduleKind::dense_warmup: return "dense";
    case ScheduleKind::fixed_interval: return "fixed";
    case ScheduleKind::explicit_steps: return "explicit";
  }
  return "dense";
}

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError("/schedule", "invalid " + std::string(what) + " '" + std::string(text) + "'");
  return value;
}

}  // namespace

ScheduleSpec ScheduleSpec::parse(std::string_view text) {
  ScheduleSpec s;
  if (text == "none") s.kind = ScheduleKind::no_warmup;
  else if (text == "light") s.kind = ScheduleKind::light_warmup;
  else if (text == "dense") s.kind = ScheduleKind::dense_warmup;
  else if (text.starts_with("fixed:")) {
    s.kind = ScheduleKind::fixed_interval;
    s.interval = parse_int(text.substr(6), "interval");
  } else if (text.starts_with("explicit:")) {
    s.kind = ScheduleKind::explicit_steps;
    std::string_view rest = text.substr(9);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      s.steps.push_back(parse_int(rest.substr(0, comma), "step"));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (s.steps.empty()) throw ValidationError("/schedule", "explicit schedule needs at least one step");
  } else {
    throw ValidationError("/schedule", "unknown schedule '" + std::string(text) + "'");
  }
  return s;
}

std::string ScheduleSpec::str() const {
  std::ostringstream out;
  out << to_string(kind);
  if (kind == ScheduleKind::fixed_interval) out << ':' << interval;
  if (kind == ScheduleKind::explicit_steps) {
    out << ':';
    for (std::size_t k = 0; k < steps.size(); ++k) out << (k ? "," : "") << steps[k];
  }
  return out.str();
}

bool Schedule::contains(int step) const {
  return std::binary_search(update_steps.begin(), update_steps.end(), step);
}

int Schedule::horizon(int step) const {
  const auto it = std::lower_bound(update_steps.begin(), update_steps.end(), step);
  if (it == update_steps.end() || *it != step)
    throw ValidationError("/schedule", "step " + std::to_string(step) + " is not an update step");
  const auto next = std::next(it);
  return (next == update_steps.end() ? total_steps : *next) - step;
}

Schedule build_schedule(const ScheduleSpec& spec, int total_steps, int c_max) {
  if (total_steps < 2) throw ValidationError("/total_steps", "must be >= 2");
  if (c_max < 1) throw ValidationError("/c_max", "must be >= 1");
  Schedule s;
  s.spec = spec;
  s.total_steps = total_steps;
  s.c_max = c_max;
  std::vector<int> steps;
  switch (spec.kind) {
    case ScheduleKind::dense_warmup: steps = {0, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024}; break;
    case ScheduleKind::light_warmup: steps = {0, 8, 16, 32, 64, 128, 256, 512, 1024}; break;
    case ScheduleKind::no_warmup: steps = {0, 64, 128, 256, 512, 1024}; break;
    case ScheduleKind::fixed_interval:
      if (spec.interval <= 0 || spec.interval >= total_steps)
        throw ValidationError("/schedule", "fixed interval must lie in (0, total_steps)");
      for (int t = 0; t < total_steps; t += spec.interval) steps.push_back(t);
      break;
    case ScheduleKind::explicit_steps:
      for (std::size_t k = 0; k < spec.steps.size(); ++k) {
        const int t = spec.steps[k];
        if (t < 0 || t >= total_steps)
          throw ValidationError("/schedule", "step " + std::to_string(t) + " outside [0, total_steps)");
        if (k > 0 && t <= spec.steps[k - 1])
          throw ValidationError("/schedule", "explicit steps must be strictly increasing");
      }
      steps = spec.steps;
      break;
  }
  std::erase_if(steps, [&](int t) { return t >= total_steps; });
  s.update_steps = std::move(steps);
  return s;
}

int probe_budget(const Schedule& schedule, int step) {
  const int h = schedule.horizon(step);
  if (schedule.spec.kind == ScheduleKind::fixed_interval) return schedule.spec.interval;
  return std::min(h, schedule.c_max);
}

}  // namespace slopemix
