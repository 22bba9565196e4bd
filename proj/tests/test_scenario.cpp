// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <random>

#include "slopemix/errors.hpp"
#include "slopemix/scenario.hpp"
#include "slopemix/weights.hpp"
#include "support.hpp"

using namespace slopemix;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json::parse(R"({
    "datasets": [{"id": "d0", "role": "target"}],
    "eval_domains": [{"id": "e0", "role": "constrained", "metric": "loss"}],
    "total_steps": 2048, "batch_size": 8, "eval_every": 64,
    "eval_batches_full": 200, "eval_batches_reduced": 50, "seed": 7
  })");
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("smallest valid scenario loads") {
  testing::TempDir dir;
  write(dir / "s.json", minimal_doc().dump());
  const Scenario s = load_scenario(dir / "s.json");
  CHECK(s.n_datasets() == 1);
  CHECK(s.m_domains() == 1);
  CHECK(s.seed == 7);
  CHECK(s.reference_split == Split::eval);
  CHECK_FALSE(s.eval_domains[0].reference.has_value());
}

TEST_CASE("four datasets and seven constraints") {
  json doc = minimal_doc();
  doc["datasets"] = json::parse(R"([
    {"id": "NM", "role": "target", "sample_budget": 1000},
    {"id": "GF", "role": "target", "sample_budget": 300},
    {"id": "WP", "role": "non_target"},
    {"id": "FW", "role": "non_target"}])");
  doc["eval_domains"] = json::array();
  doc["eval_domains"].push_back({{"id", "NM"}, {"role", "target"}, {"metric", "loss"}});
  doc["eval_domains"].push_back({{"id", "GF"}, {"role", "target"}, {"metric", "loss"}});
  for (const char* id : {"tiny1", "tiny2", "tiny3", "tiny4", "SQ", "BQ", "MS"})
    doc["eval_domains"].push_back({{"id", id}, {"role", "constrained"}, {"metric", "loss"}});
  const Scenario s = scenario_from_json(doc);
  CHECK(s.n_datasets() == 4);
  CHECK(s.m_domains() >= 7);
  CHECK(s.constrained_domains().size() == 7);
  CHECK(s.target_datasets() == std::vector<std::size_t>{0, 1});
  CHECK(s.datasets[1].sample_budget == 300);
  CHECK_FALSE(s.datasets[2].sample_budget.has_value());
}

TEST_CASE("duplicate dataset id names the id") {
  json doc = minimal_doc();
  doc["datasets"].push_back({{"id", "d0"}, {"role", "non_target"}});
  try {
    scenario_from_json(doc);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("d0") != std::string::npos);
    CHECK(e.path() == "/datasets/1/id");
  }
}

TEST_CASE("validation and parse errors carry field paths") {
  SUBCASE("no target dataset") {
    json doc = minimal_doc();
    doc["datasets"][0]["role"] = "non_target";
    CHECK_THROWS_AS(scenario_from_json(doc), ValidationError);
  }
  SUBCASE("reduced budget above full") {
    json doc = minimal_doc();
    doc["eval_batches_reduced"] = 500;
    try {
      scenario_from_json(doc);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.path() == "/eval_batches_reduced");
    }
  }
  SUBCASE("bad metric kind") {
    json doc = minimal_doc();
    doc["eval_domains"][0]["metric"] = "bleu";
    try {
      scenario_from_json(doc);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.path() == "/eval_domains/0/metric");
    }
  }
  SUBCASE("missing field") {
    json doc = minimal_doc();
    doc.erase("total_steps");
    CHECK_THROWS_AS(scenario_from_json(doc), ParseError);
  }
  SUBCASE("malformed file") {
    testing::TempDir dir;
    write(dir / "bad.json", "{\"datasets\": [");
    CHECK_THROWS_AS(load_scenario(dir / "bad.json"), ParseError);
  }
  SUBCASE("non-positive budget") {
    json doc = minimal_doc();
    doc["datasets"][0]["sample_budget"] = 0;
    CHECK_THROWS_AS(scenario_from_json(doc), ValidationError);
  }
}

TEST_CASE("roles partition the evaluation domains") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int t = static_cast<int>(rng() % 4), c = static_cast<int>(rng() % 4) + (t == 0 ? 1 : 0);
    const Scenario s = testing::skeleton(1, 1, t, c);
    auto targets = s.target_domains();
    auto constrained = s.constrained_domains();
    std::vector<int> seen(s.m_domains(), 0);
    for (auto i : targets) ++seen[i];
    for (auto i : constrained) ++seen[i];
    for (int v : seen) CHECK(v == 1);
  }
}

TEST_CASE("scenario json round trip") {
  Scenario s = testing::skeleton(2, 1, 1, 2);
  s.datasets[0].sample_budget = 123;
  s.eval_domains[2].metric = MetricKind::accuracy;
  s.reference_split = Split::test;
  const Scenario back = scenario_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
}

TEST_CASE("metric normalization") {
  CHECK(normalize_metric(2.0, MetricKind::loss) == 2.0);
  CHECK(normalize_metric(0.75, MetricKind::accuracy) == -0.75);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist(0.0, 100.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = dist(rng);
    for (MetricKind m : {MetricKind::loss, MetricKind::accuracy}) {
      CHECK(denormalize_metric(normalize_metric(x, m), m) == x);
      CHECK(normalize_metric(normalize_metric(x, m), m) == x);
    }
  }
}

TEST_CASE("mixture weights") {
  CHECK_THROWS_AS(MixtureWeights({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(MixtureWeights({-0.1, 1.1}), ValidationError);
  CHECK(MixtureWeights::uniform(4)[2] == doctest::Approx(0.25));
  CHECK(MixtureWeights::one_hot(3, 1).vector() == std::vector<double>{0, 1, 0});
}

TEST_CASE("simplex projection") {
  SUBCASE("points on the simplex are unchanged") {
    const std::vector<double> w{0.2, 0.3, 0.5};
    const auto p = project_to_simplex(w);
    for (std::size_t j = 0; j < 3; ++j) CHECK(p[j] == doctest::Approx(w[j]).epsilon(1e-15));
  }
  SUBCASE("symmetric point") {
    const auto p = project_to_simplex(std::vector<double>{0.8, 0.8});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
  }
  SUBCASE("KKT conditions on random vectors") {
    // x = argmin |x - v|^2 on the simplex iff x = max(v - tau, 0) for a
    // scalar tau: stationarity on the support, v_j - tau <= 0 off it.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v(5);
      for (double& x : v) x = dist(rng);
      const auto p = project_to_simplex(v);
      double sum = 0.0;
      for (std::size_t j = 0; j < 5; ++j) sum += p[j];
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      double tau = 0.0;
      int support = 0;
      for (std::size_t j = 0; j < 5; ++j)
        if (p[j] > 0.0) {
          tau += v[j] - p[j];
          ++support;
        }
      REQUIRE(support > 0);
      tau /= support;
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(p[j] >= 0.0);
        if (p[j] > 0.0) CHECK(std::abs(v[j] - p[j] - tau) <= 1e-9);
        else CHECK(v[j] - tau <= 1e-9);
      }
    }
  }
}
