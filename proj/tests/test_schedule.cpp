// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <iterator>

#include "slopemix/errors.hpp"
#include "slopemix/schedule.hpp"

using namespace slopemix;

namespace {

Schedule make(std::string_view spec, int total = 2048) { return build_schedule(ScheduleSpec::parse(spec), total); }

}  // namespace

TEST_CASE("geometric schedules") {
  CHECK(make("dense").update_steps == std::vector<int>{0, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024});
  CHECK(make("light").size() == 9);
  CHECK(make("none").update_steps == std::vector<int>{0, 64, 128, 256, 512, 1024});

  std::vector<int> diff;
  const auto dense = make("dense").update_steps, light = make("light").update_steps;
  std::set_difference(dense.begin(), dense.end(), light.begin(), light.end(), std::back_inserter(diff));
  CHECK(diff == std::vector<int>{2, 4});
  for (std::string_view k : {"none", "light", "dense"}) {
    const auto steps = make(k).update_steps;
    CHECK(std::vector<int>(steps.end() - 5, steps.end()) == std::vector<int>{64, 128, 256, 512, 1024});
  }
  // Shorter runs drop the tail beyond the end.
  CHECK(make("dense", 300).update_steps == std::vector<int>{0, 2, 4, 8, 16, 32, 64, 128, 256});
}

TEST_CASE("fixed intervals") {
  CHECK(make("fixed:128").size() == 16);
  CHECK(make("fixed:256").size() == 8);
  CHECK(make("fixed:512").update_steps == std::vector<int>{0, 512, 1024, 1536});
  CHECK_THROWS_AS(make("fixed:0"), ValidationError);
  CHECK_THROWS_AS(make("fixed:2048"), ValidationError);
  CHECK_THROWS_AS(make("fixed:-4"), ValidationError);
}

TEST_CASE("horizons tile the run") {
  for (std::string_view k : {"none", "light", "dense", "fixed:128", "fixed:300", "explicit:0,5,99"})
    for (int total : {2048, 1000, 120}) {
      if (k == "fixed:300" && total <= 300) continue;
      if (k == "fixed:128" && total <= 128) continue;
      if (k.starts_with("explicit") && total <= 99) continue;
      const Schedule s = make(k, total);
      int sum = 0;
      for (int t : s.update_steps) sum += s.horizon(t);
      CHECK(sum == total);
    }
}

TEST_CASE("probe budgets") {
  const Schedule dense = make("dense");
  CHECK(probe_budget(dense, 0) == 2);
  CHECK(probe_budget(dense, 32) == 32);
  CHECK(probe_budget(dense, 1024) == 128);
  CHECK(dense.horizon(1024) == 1024);
  for (int t : make("fixed:128").update_steps) CHECK(probe_budget(make("fixed:128"), t) == 128);
  // The last fixed interval may be short; the budget stays at H.
  const Schedule odd = make("fixed:300", 1000);
  CHECK(odd.horizon(900) == 100);
  CHECK(probe_budget(odd, 900) == 300);
  CHECK(probe_budget(build_schedule(ScheduleSpec::parse("dense"), 2048, 16), 1024) == 16);
  CHECK_THROWS_AS(probe_budget(dense, 3), ValidationError);
  CHECK_THROWS_AS(dense.horizon(5000), ValidationError);
}

TEST_CASE("spec parsing") {
  for (std::string_view text : {"none", "light", "dense", "fixed:64", "explicit:0,10,20"})
    CHECK(ScheduleSpec::parse(text).str() == text);
  const ScheduleSpec e = ScheduleSpec::parse("explicit:0,7,9");
  CHECK(e.kind == ScheduleKind::explicit_steps);
  CHECK(e.steps == std::vector<int>{0, 7, 9});
  for (std::string_view bad : {"", "weekly", "fixed:", "fixed:1x", "explicit:", "explicit:1,,2"})
    CHECK_THROWS_AS(ScheduleSpec::parse(bad), ValidationError);
  CHECK_THROWS_AS(make("explicit:0,5,5"), ValidationError);
  CHECK_THROWS_AS(make("explicit:0,3000"), ValidationError);
  CHECK_THROWS_AS(make("dense", 1), ValidationError);
}
