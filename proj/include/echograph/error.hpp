// Copyright 2026 The Echograph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace echograph {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kData = 2,
  kNumerical = 3,
};

/// Base of every error raised by the library. Each subclass knows which
/// exit code it maps to so the CLI can translate exceptions uniformly.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const { return ExitCode::kData; }
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("configuration error: " + what) {}
  ExitCode exit_code() const override { return ExitCode::kUsage; }
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage error: " + what) {}
  ExitCode exit_code() const override { return ExitCode::kUsage; }
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse error: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("i/o error: " + what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape error: " + what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain error: " + what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("input error: " + what) {}
};

class ReconciliationError : public Error {
 public:
  explicit ReconciliationError(const std::string& what)
      : Error("reconciliation error: " + what) {}
};

/// Raised when a training loss turns non-finite.
class TrainingDivergence : public Error {
 public:
  TrainingDivergence(const std::string& what, long step)
      : Error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
  ExitCode exit_code() const override { return ExitCode::kNumerical; }
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace echograph
