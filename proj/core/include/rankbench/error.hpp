/*
 * Copyright 2026 The rankbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace rankbench {

// Failure categories. The CLI maps them onto exit codes:
// usage -> 1, schema/parse/data -> 2, numerical -> 3.
enum class ErrorKind { kUsage, kSchema, kParse, kData, kNumerical };

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& m) : Error(ErrorKind::kUsage, m) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& m) : Error(ErrorKind::kSchema, m) {}
};

// Carries the 1-based data row (header excluded) that failed to parse.
class ParseError : public Error {
 public:
  ParseError(const std::string& m, std::size_t row)
      : Error(ErrorKind::kParse, m), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& m) : Error(ErrorKind::kData, m) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& m)
      : Error(ErrorKind::kNumerical, m) {}
};

int exit_code_for(ErrorKind kind);

}  // namespace rankbench
