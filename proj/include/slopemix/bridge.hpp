// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited JSON protocol for external trainers. The bridge sends one
// request object per line and expects exactly one reply (or error) per
// request, in order. See docs/protocol.md.

#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slopemix/errors.hpp"
#include "slopemix/trainer.hpp"

namespace slopemix {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::chrono::milliseconds kDefaultCallTimeout{300'000};

/// A bidirectional line channel. Lines never contain '\n'.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_line(const std::string& line) = 0;
  /// Throws TrainerError(timeout) or TrainerError(process_exited).
  virtual std::string receive_line(std::chrono::milliseconds timeout) = 0;
  /// Waits for the peer to finish after shutdown; returns its exit status
  /// when known.
  virtual std::optional<int> wait_exit(std::chrono::milliseconds timeout) {
    (void)timeout;
    return 0;
  }
  /// Recent diagnostics from the peer (e.g. the child's stderr tail).
  virtual std::string diagnostics() const { return {}; }
};

/// Serves a Trainer over the protocol: one request line in, one reply out.
class TrainerServer {
 public:
  explicit TrainerServer(Trainer& trainer) : trainer_(trainer) {}

  /// Never throws: malformed input and trainer failures become error replies.
  std::string handle(const std::string& line);
  bool finished() const noexcept { return finished_; }

 private:
  nlohmann::json dispatch(const nlohmann::json& request);

  Trainer& trainer_;
  std::map<std::uint64_t, CheckpointHandle> handles_;
  std::uint64_t next_handle_ = 1;
  bool finished_ = false;
};

/// Reads requests from `in` until shutdown or end of input; returns 0 after
/// a shutdown request, 1 if input ended first.
int serve(Trainer& trainer, std::istream& in, std::ostream& out);

/// In-process peer backed by a TrainerServer.
class LoopbackTransport final : public Transport {
 public:
  explicit LoopbackTransport(std::unique_ptr<Trainer> trainer);
  void send_line(const std::string& line) override;
  std::string receive_line(std::chrono::milliseconds timeout) override;
  Trainer& trainer() { return *trainer_; }

 private:
  std::unique_ptr<Trainer> trainer_;
  TrainerServer server_;
  std::deque<std::string> pending_;
};

/// One exchanged line; `outgoing` is bridge-to-trainer.
struct TranscriptLine {
  bool outgoing = true;
  std::string text;
};

/// Transcript files hold one line per message, prefixed "> " for requests
/// and "< " for replies.
std::vector<TranscriptLine> read_transcript(const std::filesystem::path& path);
void write_transcript(const std::vector<TranscriptLine>& lines, const std::filesystem::path& path);

/// Forwards to another transport and records every line.
class RecordingTransport final : public Transport {
 public:
  explicit RecordingTransport(std::unique_ptr<Transport> inner) : inner_(std::move(inner)) {}
  void send_line(const std::string& line) override;
  std::string receive_line(std::chrono::milliseconds timeout) override;
  std::optional<int> wait_exit(std::chrono::milliseconds timeout) override { return inner_->wait_exit(timeout); }
  std::string diagnostics() const override { return inner_->diagnostics(); }
  const std::vector<TranscriptLine>& transcript() const noexcept { return lines_; }

 private:
  std::unique_ptr<Transport> inner_;
  std::vector<TranscriptLine> lines_;
};

/// Mock peer that answers from a transcript. Each request must equal the
/// recorded one byte for byte, otherwise TrainerError(protocol).
class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(std::vector<TranscriptLine> lines) : lines_(std::move(lines)) {}
  void send_line(const std::string& line) override;
  std::string receive_line(std::chrono::milliseconds timeout) override;
  bool exhausted() const noexcept { return next_ == lines_.size(); }

 private:
  std::vector<TranscriptLine> lines_;
  std::size_t next_ = 0;
};

struct BridgeOptions {
  std::chrono::milliseconds call_timeout = kDefaultCallTimeout;
  std::uint64_t seed = 0;  // train requests carry a seed derived from this and the request id
};

/// Trainer implementation that forwards every call as one request/reply
/// round trip. Not safe for concurrent use.
class BridgeTrainer final : public Trainer {
 public:
  /// Performs the handshake. With a scenario, the advertised ids are
  /// validated against it and datasets are reported in scenario order.
  BridgeTrainer(std::unique_ptr<Transport> transport, const Scenario* scenario = nullptr, BridgeOptions options = {});
  ~BridgeTrainer() override;

  const TrainerCapabilities& capabilities() const override { return caps_; }
  CheckpointHandle snapshot() override;
  void restore(CheckpointHandle handle) override;
  void release(CheckpointHandle handle) override;
  void train_steps(const TrainPlan& plan, int steps) override;
  EvalResult evaluate(const EvalRequest& request) override;
  GradientReport gradient_report(const std::vector<std::string>& domain_ids,
                                 const std::vector<std::string>& dataset_ids, int batches) override;
  std::int64_t step() const override { return step_; }

  /// Sends shutdown and waits for the peer to exit; returns its exit status.
  std::optional<int> shutdown();
  Transport& transport() { return *transport_; }

 private:
  nlohmann::json call(nlohmann::json request);

  std::unique_ptr<Transport> transport_;
  BridgeOptions options_;
  TrainerCapabilities caps_;
  std::vector<std::string> wire_datasets_;  // the peer's dataset order
  std::int64_t next_id_ = 1;
  std::int64_t step_ = 0;
  bool closed_ = false;
};

}  // namespace slopemix
