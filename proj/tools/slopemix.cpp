// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// slopemix command-line tool.
//
// Exit codes: 0 success, 2 usage error, 3 invalid input (parse or
// validation), 4 trainer failure (launch, protocol, aborted run), 5 other
// errors. Failures print one JSON object on stderr:
//   {"error":"<category>","message":"..."}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <glob.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "slopemix/bridge.hpp"
#include "slopemix/controller.hpp"
#include "slopemix/cost.hpp"
#include "slopemix/errors.hpp"
#include "slopemix/generator.hpp"
#include "slopemix/metrics.hpp"
#include "slopemix/process.hpp"
#include "slopemix/sim_trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slopemix;

namespace {

enum Exit { kOk = 0, kUsage = 2, kInput = 3, kTrainer = 4, kOther = 5 };

constexpr const char* kOutDirEnv = "SLOPEMIX_OUT_DIR";

struct Failure {
  int code;
  std::string category;
  std::string message;
};

fs::path default_out_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return env && *env ? fs::path(env) : fs::path(".");
}

struct TrainerChoice {
  std::vector<std::string> spec{"sim"};
  double timeout_seconds = 300.0;
  std::string record;
};

void add_trainer_options(CLI::App* cmd, TrainerChoice& t) {
  cmd->add_option("--trainer", t.spec, "sim, or exec CMD to drive an external trainer")->expected(1, 2);
  cmd->add_option("--timeout", t.timeout_seconds, "Per-call timeout for external trainers, seconds");
  cmd->add_option("--record-transcript", t.record, "Write the protocol transcript of an external trainer here");
}

class Session {
 public:
  Session(const TrainerChoice& choice, const Scenario& scenario) {
    if (choice.spec.empty() || choice.spec[0] == "sim") {
      if (choice.spec.size() > 1) throw CLI::ValidationError("--trainer", "sim takes no command");
      trainer_ = std::make_unique<SimTrainer>(SimTrainer::from_scenario(scenario));
      return;
    }
    if (choice.spec[0] != "exec" || choice.spec.size() != 2)
      throw CLI::ValidationError("--trainer", "expected 'sim' or 'exec CMD'");
    std::unique_ptr<Transport> transport = ProcessTransport::shell(choice.spec[1]);
    if (!choice.record.empty()) {
      auto rec = std::make_unique<RecordingTransport>(std::move(transport));
      recorder_ = rec.get();
      transport = std::move(rec);
      record_path_ = choice.record;
    }
    BridgeOptions opts;
    opts.call_timeout = std::chrono::milliseconds(static_cast<long long>(choice.timeout_seconds * 1000));
    opts.seed = scenario.seed;
    auto bridge = std::make_unique<BridgeTrainer>(std::move(transport), &scenario, opts);
    bridge_ = bridge.get();
    trainer_ = std::move(bridge);
  }

  ~Session() {
    try {
      finish();
    } catch (...) {
    }
  }

  Trainer& trainer() { return *trainer_; }

  void finish() {
    if (bridge_ && !finished_) {
      finished_ = true;
      bridge_->shutdown();
    }
    if (recorder_ && !record_path_.empty()) {
      write_transcript(recorder_->transcript(), record_path_);
      record_path_.clear();
    }
  }

 private:
  std::unique_ptr<Trainer> trainer_;
  BridgeTrainer* bridge_ = nullptr;
  RecordingTransport* recorder_ = nullptr;
  std::string record_path_;
  bool finished_ = false;
};

std::string format_weights(const MixtureWeights& w) {
  std::ostringstream out;
  out << '[' << std::fixed << std::setprecision(4);
  for (std::size_t j = 0; j < w.size(); ++j) out << (j ? "," : "") << w[j];
  out << ']';
  return out.str();
}

std::string file_stem_for(const Scenario& s) {
  std::string name = s.name.empty() ? "scenario" : s.name;
  for (char& c : name)
    if (c == '/' || c == ' ') c = '_';
  return name;
}

// ------------------------------------------------------------------- run

struct RunArgs {
  std::string scenario;
  std::string schedule = "dense";
  std::string predictor = "linear";
  int n_evals = 5;
  std::string slopes = "probe";
  int gradient_batches = 50;
  bool no_recycle = false;
  std::string reference_split;
  std::string out;
  bool quiet = false;
  TrainerChoice trainer;
};

int cmd_run(const RunArgs& a) {
  Scenario scenario = load_scenario(a.scenario);
  if (!a.reference_split.empty()) scenario.reference_split = split_from_string(a.reference_split);
  ControllerConfig config;
  config.scenario = scenario;
  config.schedule = build_schedule(ScheduleSpec::parse(a.schedule), scenario.total_steps);
  config.predictor = a.predictor == "curves" ? PredictorKind::curves : PredictorKind::linear;
  config.n_evals = a.n_evals;
  config.slope_source = a.slopes == "grad-align" ? SlopeSource::gradient_alignment : SlopeSource::probe;
  config.gradient_batches = a.gradient_batches;
  config.recycle_evaluations = !a.no_recycle;
  if (!a.quiet) {
    config.on_update = [](const UpdateRecord& u) {
      const auto& c = u.candidates[u.chosen];
      std::cout << "update step=" << u.step << " horizon=" << u.horizon << " probe_steps=" << u.probe_steps
                << " anchor=" << to_string(u.anchor_source) << " feasible=" << (c.feasible ? 1 : 0)
                << " lambda=" << c.lambda << " epsilon=" << c.epsilon << " max_violation=" << c.max_violation
                << " weights=" << format_weights(c.weights) << '\n'
                << std::flush;
    };
  }
  const fs::path out = !a.out.empty() ? fs::path(a.out)
                                      : default_out_dir() / (file_stem_for(scenario) + "-" + a.predictor + "-" +
                                                             a.slopes + ".json");
  Session session(a.trainer, scenario);
  RunLog log = run(config, session.trainer());
  if (!log.aborted) session.finish();
  write_run_log(log, out);
  if (log.aborted) throw TrainerError(TrainerErrc::process_exited, "run aborted: " + log.abort_reason);
  const MetricReport report = constrained_ppl_reduction(log);
  if (!a.quiet)
    std::cout << "done steps=" << log.training_steps << " updates=" << log.updates.size()
              << " feasible=" << (report.feasible ? 1 : 0) << " ppl_reduction_pct=" << report.ppl_reduction_pct
              << " relative_cost=" << log.relative_cost << " log=" << out.string() << '\n';
  return kOk;
}

// -------------------------------------------------------------- baseline

struct BaselineArgs {
  std::string scenario;
  std::string scheme = "sweep";
  double w = 0.5;
  int jobs = 1;
  std::string out_dir;
  TrainerChoice trainer;
};

std::string baseline_name(const Scenario& s, BaselineScheme scheme, double w) {
  std::ostringstream out;
  out << file_stem_for(s) << "-baseline-" << to_string(scheme) << "-w" << std::fixed << std::setprecision(2) << w
      << ".json";
  return out.str();
}

int cmd_baseline(const BaselineArgs& a) {
  const Scenario scenario = load_scenario(a.scenario);
  const fs::path dir = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  std::vector<SweepMember> members;
  if (a.scheme == "sweep") members = sweep_members(scenario);
  else members.push_back({a.scheme == "proportional" ? BaselineScheme::proportional : BaselineScheme::uniform, a.w});

  std::vector<RunLog> logs;
  if (a.scheme == "sweep" && a.trainer.spec.front() == "sim") {
    logs = baseline_sweep(
        scenario, [&] { return std::make_unique<SimTrainer>(SimTrainer::from_scenario(scenario)); }, a.jobs);
  } else {
    for (const auto& m : members) {
      Session session(a.trainer, scenario);
      logs.push_back(run_fixed_baseline(scenario, session.trainer(), m.scheme, m.target_mass));
      if (!logs.back().aborted) session.finish();
    }
  }
  bool aborted = false;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const fs::path path = dir / baseline_name(scenario, members[k].scheme, members[k].target_mass);
    write_run_log(logs[k], path);
    const MetricReport r = constrained_ppl_reduction(logs[k]);
    std::cout << "baseline scheme=" << to_string(members[k].scheme) << " w=" << members[k].target_mass
              << " feasible=" << (r.feasible ? 1 : 0) << " ppl_reduction_pct=" << r.ppl_reduction_pct
              << " log=" << path.string() << '\n';
    aborted = aborted || logs[k].aborted;
  }
  if (aborted) throw TrainerError(TrainerErrc::process_exited, "a baseline run aborted");
  return kOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> logs;
  int best_of_k = 3;
  int trials = 100000;
  std::uint64_t seed = 0;
  bool include_step0 = false;
  bool json_out = false;
  std::string plot_data;
};

std::vector<fs::path> expand(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const auto& p : patterns) {
    glob_t g{};
    if (::glob(p.c_str(), 0, nullptr, &g) == 0)
      for (std::size_t k = 0; k < g.gl_pathc; ++k) out.emplace_back(g.gl_pathv[k]);
    ::globfree(&g);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string describe(const RunLog& log) {
  if (log.kind == RunKind::baseline) {
    std::ostringstream out;
    out << log.config.value("scheme", "?") << " w=" << log.config.value("target_mass", 0.0);
    return out.str();
  }
  return log.config.value("schedule", "?") + " " + log.config.value("predictor", "?") + " " +
         log.config.value("slopes", "?");
}

int cmd_report(const ReportArgs& a) {
  const auto paths = expand(a.logs);
  if (paths.empty()) throw ValidationError("--logs", "no run logs match");

  struct Row {
    std::string path, scenario, kind, label;
    MetricReport report;
    double cost;
  };
  std::vector<Row> rows;
  json plot = json::array();
  for (const auto& p : paths) {
    const RunLog log = read_run_log(p);
    Row r{p.string(), log.scenario.name, std::string(to_string(log.kind)), describe(log),
          constrained_ppl_reduction(log, a.include_step0), log.relative_cost};
    rows.push_back(r);
    if (!a.plot_data.empty()) {
      json weights = json::array();
      for (const auto& e : log.weight_trajectory) weights.push_back({{"step", e.step}, {"weights", e.weights.vector()}});
      json evals = json::array();
      for (const auto& e : log.eval_history) {
        json values = json::object();
        for (std::size_t i = 0; i < e.values.size(); ++i) values[log.scenario.eval_domains[i].id] = e.values[i];
        evals.push_back({{"step", e.step}, {"split", to_string(e.split)}, {"values", values}});
      }
      plot.push_back({{"log", p.string()}, {"datasets", log.scenario.dataset_ids()}, {"weights", weights},
                      {"evaluations", evals}});
    }
  }

  // Per-scenario aggregation: controller runs against the baseline pool.
  std::map<std::string, std::vector<const Row*>> by_scenario;
  for (const auto& r : rows) by_scenario[r.scenario].push_back(&r);
  json table = json::array();
  for (const auto& [name, group] : by_scenario) {
    std::vector<double> pool, controller;
    int base_feasible = 0, ctrl_feasible = 0;
    for (const Row* r : group) {
      if (r->kind == "baseline") {
        pool.push_back(r->report.ppl_reduction_pct);
        base_feasible += r->report.feasible;
      } else {
        controller.push_back(r->report.ppl_reduction_pct);
        ctrl_feasible += r->report.feasible;
      }
    }
    json entry = {{"scenario", name}, {"baseline_runs", pool.size()}, {"controller_runs", controller.size()}};
    if (!pool.empty()) {
      const BestOfK b = best_of_k(pool, a.best_of_k, a.trials, a.seed);
      entry["baseline_feasible_rate"] = static_cast<double>(base_feasible) / pool.size();
      entry["best_of_k"] = {{"k", a.best_of_k}, {"exact", b.exact}, {"monte_carlo", b.monte_carlo},
                            {"standard_error", b.standard_error}};
    }
    if (!controller.empty()) {
      entry["controller_feasible_rate"] = static_cast<double>(ctrl_feasible) / controller.size();
      entry["controller_median_reduction_pct"] = median(controller);
    }
    table.push_back(entry);
  }

  if (a.json_out) {
    json runs = json::array();
    for (const auto& r : rows)
      runs.push_back({{"log", r.path},
                      {"scenario", r.scenario},
                      {"kind", r.kind},
                      {"label", r.label},
                      {"feasible", r.report.feasible},
                      {"best_checkpoint_step", r.report.best_checkpoint_step ? json(*r.report.best_checkpoint_step) : json()},
                      {"ppl_reduction_pct", r.report.ppl_reduction_pct},
                      {"max_violation", r.report.max_violation},
                      {"relative_cost", r.cost}});
    std::cout << json{{"runs", runs}, {"scenarios", table}}.dump(2) << '\n';
  } else {
    std::cout << std::left << std::setw(28) << "scenario" << std::setw(12) << "kind" << std::setw(26) << "run"
              << std::right << std::setw(9) << "feasible" << std::setw(12) << "ppl_red_%" << std::setw(14)
              << "max_violation" << std::setw(8) << "cost" << '\n';
    for (const auto& r : rows)
      std::cout << std::left << std::setw(28) << r.scenario << std::setw(12) << r.kind << std::setw(26) << r.label
                << std::right << std::setw(9) << (r.report.feasible ? "yes" : "no") << std::setw(12) << std::fixed
                << std::setprecision(3) << r.report.ppl_reduction_pct << std::setw(14) << std::setprecision(5)
                << r.report.max_violation << std::setw(8) << std::setprecision(3) << r.cost << '\n';
    std::cout << '\n';
    for (const auto& e : table) {
      std::cout << "scenario " << e["scenario"].get<std::string>();
      if (e.contains("best_of_k"))
        std::cout << " baseline_feasible_rate=" << e["baseline_feasible_rate"].get<double>() << " best_of_"
                  << a.best_of_k << "=" << e["best_of_k"]["exact"].get<double>();
      if (e.contains("controller_median_reduction_pct"))
        std::cout << " controller_feasible_rate=" << e["controller_feasible_rate"].get<double>()
                  << " controller_median_reduction_pct=" << e["controller_median_reduction_pct"].get<double>();
      std::cout << '\n';
    }
  }
  if (!a.plot_data.empty()) {
    std::ofstream out(a.plot_data);
    if (!out) throw Error("cannot write '" + a.plot_data + "'");
    out << plot.dump() << '\n';
  }
  return kOk;
}

// ------------------------------------------------------------------ cost

struct CostArgs {
  std::string scenario;
  std::string schedule = "dense";
  std::string predictor = "linear";
  int n_evals = 5;
  double c_bp = 3.0;
  double c_fwd = 1.0;
  bool no_recycle = false;
  bool json_out = false;
};

int cmd_cost(const CostArgs& a) {
  const Scenario scenario = load_scenario(a.scenario);
  const Schedule schedule = build_schedule(ScheduleSpec::parse(a.schedule), scenario.total_steps);
  CostConfig c = CostConfig::from_scenario(scenario, a.predictor == "curves" ? a.n_evals : 0);
  c.step_cost = a.c_bp;
  c.fwd_cost = a.c_fwd;
  c.recycling = !a.no_recycle;
  const CostBreakdown b = cost_breakdown(c, schedule);
  if (a.json_out) {
    json updates = json::array();
    for (const auto& u : b.updates)
      updates.push_back({{"step", u.step}, {"horizon", u.horizon}, {"probe_steps", u.probe_steps},
                         {"recycled", u.recycled}, {"rho", u.rho}, {"beta", u.beta}});
    std::cout << json{{"schedule", schedule.spec.str()}, {"updates", updates}, {"baseline", b.baseline},
                      {"total", b.total}, {"relative", b.relative}}
                     .dump(2)
              << '\n';
    return kOk;
  }
  std::cout << std::setw(6) << "step" << std::setw(9) << "H_t" << std::setw(7) << "c_t" << std::setw(10) << "recycled"
            << std::setw(14) << "rho_t" << std::setw(12) << "beta_t" << '\n';
  for (const auto& u : b.updates)
    std::cout << std::setw(6) << u.step << std::setw(9) << u.horizon << std::setw(7) << u.probe_steps << std::setw(10)
              << (u.recycled ? "yes" : "no") << std::setw(14) << std::fixed << std::setprecision(1) << u.rho
              << std::setw(12) << std::setprecision(5) << u.beta << '\n';
  std::cout << "total_relative_cost " << std::setprecision(6) << b.relative << '\n';
  return kOk;
}

// -------------------------------------------------------------- generate

struct GenerateArgs {
  GeneratorOptions options;
  std::string geometry = "standard";
  bool deterministic = false;
  std::string name;
  std::string out;
};

int cmd_generate(GenerateArgs a) {
  a.options.geometry = a.geometry == "conflicting" ? Geometry::conflicting : Geometry::standard;
  if (a.deterministic) a.options.mode = SimMode::deterministic;
  Scenario s = generate_scenario(a.options);
  if (!a.name.empty()) s.name = a.name;
  const std::string text = to_json(s).dump(2) + "\n";
  if (a.out.empty() || a.out == "-") {
    std::cout << text;
  } else {
    const fs::path p(a.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw Error("cannot write '" + a.out + "'");
    out << text;
  }
  return kOk;
}

// ------------------------------------------------------------- serve-sim

int cmd_serve_sim(const std::string& scenario_path) {
  const Scenario scenario = load_scenario(scenario_path);
  SimTrainer trainer = SimTrainer::from_scenario(scenario);
  return serve(trainer, std::cin, std::cout);
}

void print_failure(const Failure& f) {
  std::cerr << json{{"error", f.category}, {"message", f.message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained dynamic data-mixture controller"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "slopemix 0.1.0");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Train with the adaptive mixture controller");
  run_cmd->add_option("--scenario", run_args.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--schedule", run_args.schedule, "none | light | dense | fixed:H | explicit:a,b,c");
  run_cmd->add_option("--predictor", run_args.predictor)->check(CLI::IsMember({"linear", "curves"}));
  run_cmd->add_option("--n-evals", run_args.n_evals, "Probe evaluations per dataset for curves");
  run_cmd->add_option("--slopes", run_args.slopes)->check(CLI::IsMember({"probe", "grad-align"}));
  run_cmd->add_option("--gradient-batches", run_args.gradient_batches);
  run_cmd->add_flag("--no-recycle", run_args.no_recycle, "Always re-measure probe anchors");
  run_cmd->add_option("--reference-split", run_args.reference_split)->check(CLI::IsMember({"eval", "test"}));
  run_cmd->add_option("--out", run_args.out, "Run log path");
  run_cmd->add_flag("--quiet", run_args.quiet);
  add_trainer_options(run_cmd, run_args.trainer);

  BaselineArgs base_args;
  auto* base_cmd = app.add_subcommand("baseline", "Train with fixed mixtures");
  base_cmd->add_option("--scenario", base_args.scenario)->required()->check(CLI::ExistingFile);
  base_cmd->add_option("--scheme", base_args.scheme)->check(CLI::IsMember({"uniform", "proportional", "sweep"}));
  base_cmd->add_option("--w", base_args.w, "Target mass")->check(CLI::Range(0.0, 1.0));
  base_cmd->add_option("--jobs", base_args.jobs, "Concurrent sweep members")->check(CLI::PositiveNumber);
  base_cmd->add_option("--out-dir", base_args.out_dir);
  add_trainer_options(base_cmd, base_args.trainer);

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Metrics over run logs");
  report_cmd->add_option("--logs", report_args.logs, "Log files or glob patterns")->required();
  report_cmd->add_option("--best-of-k", report_args.best_of_k)->check(CLI::PositiveNumber);
  report_cmd->add_option("--trials", report_args.trials)->check(CLI::PositiveNumber);
  report_cmd->add_option("--seed", report_args.seed);
  report_cmd->add_flag("--include-step0", report_args.include_step0);
  report_cmd->add_flag("--json", report_args.json_out);
  report_cmd->add_option("--emit-plot-data", report_args.plot_data, "Write plot-ready series to this file");

  CostArgs cost_args;
  auto* cost_cmd = app.add_subcommand("cost", "Compute-cost breakdown of a schedule");
  cost_cmd->add_option("--scenario", cost_args.scenario)->required()->check(CLI::ExistingFile);
  cost_cmd->add_option("--schedule", cost_args.schedule);
  cost_cmd->add_option("--predictor", cost_args.predictor)->check(CLI::IsMember({"linear", "curves"}));
  cost_cmd->add_option("--n-evals", cost_args.n_evals);
  cost_cmd->add_option("--c-bp", cost_args.c_bp, "Cost of one training step on a batch");
  cost_cmd->add_option("--c-fwd", cost_args.c_fwd, "Cost of one forward pass on a batch");
  cost_cmd->add_flag("--no-recycle", cost_args.no_recycle);
  cost_cmd->add_flag("--json", cost_args.json_out);

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "Emit a seeded synthetic scenario");
  gen_cmd->add_option("--n", gen_args.options.n_datasets, "Datasets")->required();
  gen_cmd->add_option("--m", gen_args.options.m_domains, "Evaluation domains")->required();
  gen_cmd->add_option("--seed", gen_args.options.seed);
  gen_cmd->add_option("--targets", gen_args.options.target_datasets, "Target datasets");
  gen_cmd->add_option("--target-domains", gen_args.options.target_domains);
  gen_cmd->add_option("--accuracy-constraints", gen_args.options.accuracy_constraints);
  gen_cmd->add_option("--geometry", gen_args.geometry)->check(CLI::IsMember({"standard", "conflicting"}));
  gen_cmd->add_flag("--linear-dynamics", gen_args.options.linear_dynamics);
  gen_cmd->add_flag("--deterministic", gen_args.deterministic);
  gen_cmd->add_option("--steps", gen_args.options.total_steps);
  gen_cmd->add_option("--name", gen_args.name);
  gen_cmd->add_option("--out", gen_args.out, "Output file (default stdout)");

  std::string serve_scenario;
  auto* serve_cmd = app.add_subcommand("serve-sim", "Serve the synthetic trainer over the line protocol on stdio");
  serve_cmd->add_option("--scenario", serve_scenario)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_failure({kUsage, "usage", e.what()});
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_args);
    if (*base_cmd) return cmd_baseline(base_args);
    if (*report_cmd) return cmd_report(report_args);
    if (*cost_cmd) return cmd_cost(cost_args);
    if (*gen_cmd) return cmd_generate(gen_args);
    if (*serve_cmd) return cmd_serve_sim(serve_scenario);
  } catch (const CLI::Error& e) {
    print_failure({kUsage, "usage", e.what()});
    return kUsage;
  } catch (const ParseError& e) {
    print_failure({kInput, "parse", e.what()});
    return kInput;
  } catch (const ValidationError& e) {
    print_failure({kInput, "validation", e.what()});
    return kInput;
  } catch (const TrainerError& e) {
    print_failure({kTrainer, "trainer", e.what()});
    return kTrainer;
  } catch (const std::exception& e) {
    print_failure({kOther, "error", e.what()});
    return kOther;
  }
  return kOther;
}
