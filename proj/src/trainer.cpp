// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/trainer.hpp"

#include <set>

#include "slopemix/errors.hpp"

namespace slopemix {

void check_capabilities(const TrainerCapabilities& caps, const Scenario& scenario) {
  std::set<std::string> advertised(caps.datasets.begin(), caps.datasets.end());
  for (const auto& d : scenario.datasets)
    if (!advertised.count(d.id))
      throw ValidationError("/datasets", "trainer does not provide dataset '" + d.id + "'");
  std::set<std::string> expected;
  for (const auto& d : scenario.datasets) expected.insert(d.id);
  for (const auto& id : caps.datasets)
    if (!expected.count(id))
      throw ValidationError("/datasets", "trainer advertises unexpected dataset '" + id + "'");

  for (const auto& d : scenario.eval_domains) {
    const DomainInfo* found = nullptr;
    for (const auto& info : caps.domains)
      if (info.id == d.id) found = &info;
    if (!found)
      throw ValidationError("/eval_domains", "trainer does not provide domain '" + d.id + "'");
    if (found->metric != d.metric)
      throw ValidationError("/eval_domains", "metric kind mismatch for domain '" + d.id + "'");
  }
  for (const auto& info : caps.domains)
    if (!scenario.domain_index(info.id))
      throw ValidationError("/eval_domains",
                            "trainer advertises unexpected domain '" + info.id + "'");
}

RestoreGuard::~RestoreGuard() {
  if (done_) return;
  try {
    trainer_.restore(handle_);
    trainer_.release(handle_);
  } catch (...) {
    // Already unwinding from the original failure; nothing better to report.
  }
}

void RestoreGuard::restore_now() {
  done_ = true;
  trainer_.restore(handle_);
  trainer_.release(handle_);
}

}  // namespace slopemix
