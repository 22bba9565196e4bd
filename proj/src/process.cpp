// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#include "slopemix/process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace slopemix {

namespace {

constexpr std::size_t kStderrTail = 4096;

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exit status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "signal " + std::to_string(WTERMSIG(status));
  return "status " + std::to_string(status);
}

}  // namespace

ProcessTransport::ProcessTransport(std::vector<std::string> argv) {
  if (argv.empty()) throw TrainerError(TrainerErrc::process_exited, "empty trainer command");
  ignore_sigpipe();
  int in_pipe[2], out_pipe[2], err_pipe[2], exec_pipe[2];
  if (::pipe(in_pipe) || ::pipe(out_pipe) || ::pipe(err_pipe) || ::pipe2(exec_pipe, O_CLOEXEC))
    throw TrainerError(TrainerErrc::process_exited, std::string("pipe: ") + std::strerror(errno));

  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) throw TrainerError(TrainerErrc::process_exited, std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1], exec_pipe[0]})
      ::close(fd);
    ::execvp(args[0], args.data());
    const int err = errno;
    [[maybe_unused]] auto n = ::write(exec_pipe[1], &err, sizeof err);
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(exec_pipe[1]);
  in_fd_ = in_pipe[1];
  out_fd_ = out_pipe[0];
  err_fd_ = err_pipe[0];
  ::fcntl(err_fd_, F_SETFL, ::fcntl(err_fd_, F_GETFL) | O_NONBLOCK);

  int child_errno = 0;
  const auto n = ::read(exec_pipe[0], &child_errno, sizeof child_errno);
  ::close(exec_pipe[0]);
  if (n == static_cast<ssize_t>(sizeof child_errno)) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
    status_ = status;
    close_fd(in_fd_);
    close_fd(out_fd_);
    close_fd(err_fd_);
    throw TrainerError(TrainerErrc::process_exited,
                       "cannot start '" + argv[0] + "': " + std::strerror(child_errno));
  }
}

std::unique_ptr<ProcessTransport> ProcessTransport::shell(const std::string& command) {
  return std::make_unique<ProcessTransport>(std::vector<std::string>{"/bin/sh", "-c", "exec " + command});
}

ProcessTransport::~ProcessTransport() {
  close_fd(in_fd_);
  if (!status_ && pid_ > 0) {
    if (!wait_exit(std::chrono::milliseconds(2000)) && !status_) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }
  close_fd(out_fd_);
  close_fd(err_fd_);
}

void ProcessTransport::drain_stderr() {
  if (err_fd_ < 0) return;
  char buf[4096];
  for (;;) {
    const auto n = ::read(err_fd_, buf, sizeof buf);
    if (n > 0) {
      stderr_tail_.append(buf, static_cast<std::size_t>(n));
      if (stderr_tail_.size() > kStderrTail) stderr_tail_.erase(0, stderr_tail_.size() - kStderrTail);
      continue;
    }
    if (n == 0) close_fd(err_fd_);
    break;
  }
}

void ProcessTransport::fail_exited(const std::string& what) {
  // Give the child a moment to flush stderr and exit.
  wait_exit(std::chrono::milliseconds(500));
  drain_stderr();
  std::string msg = what;
  if (status_) msg += " (" + describe_status(*status_) + ")";
  if (!stderr_tail_.empty()) msg += "; stderr tail: " + stderr_tail_;
  throw TrainerError(TrainerErrc::process_exited, msg);
}

void ProcessTransport::send_line(const std::string& line) {
  if (in_fd_ < 0) fail_exited("trainer input is closed");
  std::string data = line + '\n';
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(in_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_exited("trainer process stopped reading");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ProcessTransport::receive_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (out_fd_ < 0) fail_exited("trainer process closed its output");
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      drain_stderr();
      throw TrainerError(TrainerErrc::timeout, "no reply within " + std::to_string(timeout.count()) + " ms");
    }
    pollfd fds[2] = {{out_fd_, POLLIN, 0}, {err_fd_, POLLIN, 0}};
    const int rc = ::poll(fds, err_fd_ >= 0 ? 2 : 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (rc < 0 && errno != EINTR) fail_exited(std::string("poll: ") + std::strerror(errno));
    if (err_fd_ >= 0 && (fds[1].revents & (POLLIN | POLLHUP))) drain_stderr();
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char buf[65536];
      const auto n = ::read(out_fd_, buf, sizeof buf);
      if (n > 0) buffer_.append(buf, static_cast<std::size_t>(n));
      else if (n == 0) close_fd(out_fd_);
    }
  }
}

std::optional<int> ProcessTransport::wait_exit(std::chrono::milliseconds timeout) {
  close_fd(in_fd_);
  if (status_) return WIFEXITED(*status_) ? std::optional<int>(WEXITSTATUS(*status_)) : std::nullopt;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      status_ = status;
      return WIFEXITED(status) ? std::optional<int>(WEXITSTATUS(status)) : std::nullopt;
    }
    if (r < 0 || std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    drain_stderr();
    ::usleep(5000);
  }
}

}  // namespace slopemix
