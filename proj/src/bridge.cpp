// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/bridge.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "slopemix/sim_trainer.hpp"

namespace slopemix {

using nlohmann::json;

namespace {

// Offending input quoted in error messages, truncated.
std::string quote(const std::string& bytes) {
  constexpr std::size_t kMax = 200;
  std::string s = bytes.size() > kMax ? bytes.substr(0, kMax) + "..." : bytes;
  return json(s).dump(-1, ' ', false, json::error_handler_t::replace);
}

json error_reply(const json& id, std::string_view code, const std::string& message) {
  return {{"id", id}, {"kind", "error"}, {"code", code}, {"message", message}};
}

template <typename T>
T field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw TrainerError(TrainerErrc::invalid_argument, std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw TrainerError(TrainerErrc::invalid_argument, std::string("field '") + name + "' has the wrong type");
  }
}

Split wire_split(const std::string& s) {
  if (s == "eval") return Split::eval;
  if (s == "test") return Split::test;
  throw TrainerError(TrainerErrc::invalid_argument, "split must be 'eval' or 'test'");
}

}  // namespace

// ---------------------------------------------------------------- server

std::string TrainerServer::handle(const std::string& line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error&) {
    return error_reply(nullptr, "protocol", "malformed request " + quote(line)).dump();
  }
  if (!request.is_object() || !request.contains("id") || !request["id"].is_number_integer() ||
      !request.contains("kind") || !request["kind"].is_string())
    return error_reply(request.is_object() && request.contains("id") ? request["id"] : json(nullptr), "protocol",
                       "request needs an integer id and a string kind: " + quote(line))
        .dump();
  const json id = request["id"];
  try {
    json reply = dispatch(request);
    reply["id"] = id;
    reply["kind"] = "reply";
    return reply.dump();
  } catch (const TrainerError& e) {
    std::string message = e.what();
    const std::string prefix = std::string(to_string(e.code())) + ": ";
    if (message.rfind(prefix, 0) == 0) message = message.substr(prefix.size());
    return error_reply(id, to_string(e.code()), message).dump();
  } catch (const std::exception& e) {
    return error_reply(id, "invalid_argument", e.what()).dump();
  }
}

json TrainerServer::dispatch(const json& r) {
  const std::string kind = r["kind"].get<std::string>();
  if (kind == "hello") {
    if (r.contains("protocol") && r["protocol"] != kProtocolVersion)
      throw TrainerError(TrainerErrc::protocol, "unsupported protocol version " + r["protocol"].dump());
    const auto& caps = trainer_.capabilities();
    json domains = json::array();
    for (const auto& d : caps.domains) domains.push_back({{"id", d.id}, {"metric", to_string(d.metric)}});
    return {{"protocol", kProtocolVersion},
            {"datasets", caps.datasets},
            {"domains", std::move(domains)},
            {"gradients", caps.gradients},
            {"max_checkpoints", caps.max_checkpoints}};
  }
  if (kind == "snapshot") {
    const CheckpointHandle h = trainer_.snapshot();
    const std::uint64_t token = next_handle_++;
    handles_[token] = h;
    return {{"handle", token}};
  }
  if (kind == "restore" || kind == "release") {
    const auto token = field<std::uint64_t>(r, "handle");
    auto it = handles_.find(token);
    if (it == handles_.end()) throw TrainerError(TrainerErrc::unknown_handle, "unknown handle " + std::to_string(token));
    if (kind == "restore") {
      trainer_.restore(it->second);
      return {{"step", trainer_.step()}};
    }
    trainer_.release(it->second);
    handles_.erase(it);
    return json::object();
  }
  if (kind == "train") {
    const int steps = field<int>(r, "steps");
    if (steps < 1) throw TrainerError(TrainerErrc::invalid_argument, "steps must be >= 1");
    if (r.contains("dataset")) {
      trainer_.train_steps(DatasetPlan{field<std::string>(r, "dataset")}, steps);
    } else if (r.contains("weights")) {
      std::vector<double> w = field<std::vector<double>>(r, "weights");
      if (w.size() != trainer_.capabilities().datasets.size() || !on_simplex(w))
        throw TrainerError(TrainerErrc::invalid_weights, "weights must be a point on the simplex over the advertised datasets");
      trainer_.train_steps(MixtureWeights(std::move(w)), steps);
    } else {
      throw TrainerError(TrainerErrc::invalid_argument, "train needs 'dataset' or 'weights'");
    }
    return {{"step", trainer_.step()}};
  }
  if (kind == "evaluate") {
    EvalRequest req;
    req.domain_ids = field<std::vector<std::string>>(r, "domains");
    req.batches = field<int>(r, "batches");
    req.split = wire_split(r.value("split", std::string("eval")));
    if (req.batches < 1) throw TrainerError(TrainerErrc::invalid_argument, "batches must be >= 1");
    const EvalResult res = trainer_.evaluate(req);
    json values = json::object();
    for (const auto& [k, v] : res.values) values[k] = v;
    return {{"values", std::move(values)}, {"step", res.step}};
  }
  if (kind == "gradients") {
    const auto batches = field<int>(r, "batches");
    if (batches < 1) throw TrainerError(TrainerErrc::invalid_argument, "batches must be >= 1");
    const GradientReport g = trainer_.gradient_report(field<std::vector<std::string>>(r, "domains"),
                                                      field<std::vector<std::string>>(r, "datasets"), batches);
    return {{"eval_gradients", g.eval_gradients},
            {"dataset_directions", g.dataset_directions},
            {"learning_rate", g.learning_rate}};
  }
  if (kind == "shutdown") {
    finished_ = true;
    return json::object();
  }
  throw TrainerError(TrainerErrc::protocol, "unknown request kind '" + kind + "'");
}

int serve(Trainer& trainer, std::istream& in, std::ostream& out) {
  TrainerServer server(trainer);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << server.handle(line) << '\n' << std::flush;
    if (server.finished()) return 0;
  }
  return 1;
}

// ------------------------------------------------------------ transports

LoopbackTransport::LoopbackTransport(std::unique_ptr<Trainer> trainer)
    : trainer_(std::move(trainer)), server_(*trainer_) {}

void LoopbackTransport::send_line(const std::string& line) { pending_.push_back(server_.handle(line)); }

std::string LoopbackTransport::receive_line(std::chrono::milliseconds) {
  if (pending_.empty()) throw TrainerError(TrainerErrc::timeout, "no reply pending");
  std::string line = std::move(pending_.front());
  pending_.pop_front();
  return line;
}

std::vector<TranscriptLine> read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open transcript");
  std::vector<TranscriptLine> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    if (line.size() < 2 || (line[0] != '>' && line[0] != '<') || line[1] != ' ')
      throw ParseError(path.string() + ":" + std::to_string(number), "expected a '> ' or '< ' prefix");
    lines.push_back({line[0] == '>', line.substr(2)});
  }
  return lines;
}

void write_transcript(const std::vector<TranscriptLine>& lines, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  for (const auto& l : lines) out << (l.outgoing ? "> " : "< ") << l.text << '\n';
}

void RecordingTransport::send_line(const std::string& line) {
  lines_.push_back({true, line});
  inner_->send_line(line);
}

std::string RecordingTransport::receive_line(std::chrono::milliseconds timeout) {
  std::string line = inner_->receive_line(timeout);
  lines_.push_back({false, line});
  return line;
}

void ReplayTransport::send_line(const std::string& line) {
  if (next_ >= lines_.size() || !lines_[next_].outgoing)
    throw TrainerError(TrainerErrc::protocol, "unexpected request " + quote(line) + " at transcript line " +
                                                  std::to_string(next_ + 1));
  if (lines_[next_].text != line)
    throw TrainerError(TrainerErrc::protocol, "request " + quote(line) + " differs from transcript line " +
                                                  std::to_string(next_ + 1) + " " + quote(lines_[next_].text));
  ++next_;
}

std::string ReplayTransport::receive_line(std::chrono::milliseconds) {
  if (next_ >= lines_.size() || lines_[next_].outgoing)
    throw TrainerError(TrainerErrc::protocol, "transcript has no reply at line " + std::to_string(next_ + 1));
  return lines_[next_++].text;
}

// ---------------------------------------------------------------- bridge

BridgeTrainer::BridgeTrainer(std::unique_ptr<Transport> transport, const Scenario* scenario, BridgeOptions options)
    : transport_(std::move(transport)), options_(options) {
  const json hello = call({{"kind", "hello"}, {"protocol", kProtocolVersion}});
  try {
    if (hello.at("protocol").get<int>() != kProtocolVersion)
      throw TrainerError(TrainerErrc::protocol,
                         "protocol version mismatch: peer speaks " + hello.at("protocol").dump());
    wire_datasets_ = hello.at("datasets").get<std::vector<std::string>>();
    for (const auto& d : hello.at("domains"))
      caps_.domains.push_back({d.at("id").get<std::string>(), metric_from_string(d.at("metric").get<std::string>())});
    caps_.gradients = hello.value("gradients", false);
    caps_.max_checkpoints = hello.value("max_checkpoints", 0);
  } catch (const json::exception& e) {
    throw TrainerError(TrainerErrc::protocol, std::string("malformed hello reply: ") + e.what());
  } catch (const ValidationError& e) {
    throw TrainerError(TrainerErrc::protocol, std::string("malformed hello reply: ") + e.what());
  }
  caps_.datasets = wire_datasets_;
  caps_.concurrent_evaluate = false;
  if (scenario != nullptr) {
    check_capabilities(caps_, *scenario);
    caps_.datasets = scenario->dataset_ids();
  }
}

BridgeTrainer::~BridgeTrainer() {
  if (closed_) return;
  try {
    shutdown();
  } catch (...) {
    // Peer already gone.
  }
}

json BridgeTrainer::call(json request) {
  if (closed_) throw TrainerError(TrainerErrc::process_exited, "bridge already shut down");
  const std::int64_t id = next_id_++;
  request["id"] = id;
  transport_->send_line(request.dump());
  const std::string line = transport_->receive_line(options_.call_timeout);
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::parse_error&) {
    throw TrainerError(TrainerErrc::protocol, "malformed reply " + quote(line));
  }
  if (!reply.is_object() || !reply.contains("id") || reply["id"] != id)
    throw TrainerError(TrainerErrc::protocol, "reply does not answer request " + std::to_string(id) + ": " + quote(line));
  const std::string kind = reply.value("kind", "");
  if (kind == "error") {
    TrainerErrc code = TrainerErrc::protocol;
    try {
      code = trainer_errc_from_string(reply.value("code", ""));
    } catch (const std::exception&) {
    }
    throw TrainerError(code, reply.value("message", std::string("error reply")));
  }
  if (kind != "reply") throw TrainerError(TrainerErrc::protocol, "unexpected reply kind in " + quote(line));
  return reply;
}

CheckpointHandle BridgeTrainer::snapshot() {
  const json r = call({{"kind", "snapshot"}});
  return CheckpointHandle{r.at("handle").get<std::uint64_t>()};
}

void BridgeTrainer::restore(CheckpointHandle handle) {
  const json r = call({{"kind", "restore"}, {"handle", handle.token}});
  step_ = r.value("step", step_);
}

void BridgeTrainer::release(CheckpointHandle handle) { call({{"kind", "release"}, {"handle", handle.token}}); }

void BridgeTrainer::train_steps(const TrainPlan& plan, int steps) {
  if (steps < 1) throw TrainerError(TrainerErrc::invalid_argument, "steps must be >= 1");
  json request = {{"kind", "train"}, {"steps", steps}};
  request["seed"] = detail::combine_seed(options_.seed, static_cast<std::uint64_t>(next_id_));
  if (const auto* d = std::get_if<DatasetPlan>(&plan)) {
    request["dataset"] = d->dataset;
  } else {
    const auto& w = std::get<MixtureWeights>(plan);
    if (w.size() != caps_.datasets.size())
      throw TrainerError(TrainerErrc::invalid_weights, "weight count does not match the datasets");
    std::vector<double> wire(wire_datasets_.size(), 0.0);
    for (std::size_t k = 0; k < wire_datasets_.size(); ++k)
      for (std::size_t j = 0; j < caps_.datasets.size(); ++j)
        if (caps_.datasets[j] == wire_datasets_[k]) wire[k] = w[j];
    request["weights"] = wire;
  }
  const json r = call(std::move(request));
  step_ = r.value("step", step_ + steps);
}

EvalResult BridgeTrainer::evaluate(const EvalRequest& request) {
  const json r = call({{"kind", "evaluate"},
                       {"domains", request.domain_ids},
                       {"batches", request.batches},
                       {"split", to_string(request.split)}});
  EvalResult out;
  out.step = r.value("step", step_);
  try {
    for (const auto& [k, v] : r.at("values").items()) out.values[k] = v.get<double>();
  } catch (const json::exception& e) {
    throw TrainerError(TrainerErrc::protocol, std::string("malformed evaluate reply: ") + e.what());
  }
  for (const auto& id : request.domain_ids)
    if (!out.values.count(id)) throw TrainerError(TrainerErrc::protocol, "evaluate reply lacks domain '" + id + "'");
  return out;
}

GradientReport BridgeTrainer::gradient_report(const std::vector<std::string>& domain_ids,
                                              const std::vector<std::string>& dataset_ids, int batches) {
  if (!caps_.gradients) throw TrainerError(TrainerErrc::capability_unsupported, "peer does not report gradients");
  const json r = call({{"kind", "gradients"}, {"domains", domain_ids}, {"datasets", dataset_ids}, {"batches", batches}});
  GradientReport g;
  try {
    g.eval_gradients = r.at("eval_gradients").get<std::map<std::string, std::vector<double>>>();
    g.dataset_directions = r.at("dataset_directions").get<std::map<std::string, std::vector<double>>>();
    g.learning_rate = r.at("learning_rate").get<double>();
  } catch (const json::exception& e) {
    throw TrainerError(TrainerErrc::protocol, std::string("malformed gradients reply: ") + e.what());
  }
  return g;
}

std::optional<int> BridgeTrainer::shutdown() {
  if (closed_) return std::nullopt;
  call({{"kind", "shutdown"}});
  closed_ = true;
  return transport_->wait_exit(options_.call_timeout);
}

}  // namespace slopemix
