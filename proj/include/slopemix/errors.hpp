// Copyright (c) 2026 The slopemix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slopemix {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document. `path` is a JSON-pointer-like field path
/// ("/datasets/2/id"), empty when the document itself failed to parse.
class ParseError : public Error {
 public:
  ParseError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class TrainerErrc {
  unknown_handle,
  unknown_dataset,
  unknown_domain,
  invalid_weights,
  invalid_argument,
  capability_unsupported,
  capacity,
  protocol,
  timeout,
  process_exited,
};

std::string_view to_string(TrainerErrc code) noexcept;
TrainerErrc trainer_errc_from_string(std::string_view code);

class TrainerError : public Error {
 public:
  TrainerError(TrainerErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}
  TrainerErrc code() const noexcept { return code_; }

 private:
  TrainerErrc code_;
};

}  // namespace slopemix
