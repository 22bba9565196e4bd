// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0
//
// Child process speaking the line protocol on its standard streams (POSIX).

#pragma once

#include <string>
#include <vector>

#include <sys/types.h>

#include "slopemix/bridge.hpp"

namespace slopemix {

class ProcessTransport final : public Transport {
 public:
  /// Starts argv[0] with the given arguments (PATH lookup). Throws
  /// TrainerError(process_exited) if the program cannot be started.
  explicit ProcessTransport(std::vector<std::string> argv);
  /// Runs `command` through /bin/sh.
  static std::unique_ptr<ProcessTransport> shell(const std::string& command);
  ~ProcessTransport() override;

  ProcessTransport(const ProcessTransport&) = delete;
  ProcessTransport& operator=(const ProcessTransport&) = delete;

  void send_line(const std::string& line) override;
  std::string receive_line(std::chrono::milliseconds timeout) override;
  std::optional<int> wait_exit(std::chrono::milliseconds timeout) override;
  std::string diagnostics() const override { return stderr_tail_; }

  pid_t pid() const noexcept { return pid_; }

 private:
  void drain_stderr();
  [[noreturn]] void fail_exited(const std::string& what);

  pid_t pid_ = -1;
  int in_fd_ = -1;   // child's stdin
  int out_fd_ = -1;  // child's stdout
  int err_fd_ = -1;  // child's stderr
  std::string buffer_;
  std::string stderr_tail_;
  std::optional<int> status_;
};

}  // namespace slopemix
