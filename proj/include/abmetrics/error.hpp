// Copyright 2026 The abmetrics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef ABMETRICS_ERROR_HPP_
#define ABMETRICS_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace abmetrics {

enum class ErrorKind {
  kDomain,         // argument outside the mathematical domain
  kDegenerate,     // zero denominator or too little data
  kParse,          // malformed input text
  kSchema,         // well-formed input that violates the data model
  kMissingMetric,  // metric not present where it is required
  kDuplicateId,
  kInestimable,    // empty class, rate has no denominator
  kArity,          // list length does not match what the rule expects
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kDegenerate: return "degenerate input";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kMissingMetric: return "missing metric";
    case ErrorKind::kDuplicateId: return "duplicate id";
    case ErrorKind::kInestimable: return "inestimable";
    case ErrorKind::kArity: return "arity error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

// Every failure raised by the library. The optional line number refers to
// the 1-based line of the corpus or CSV input that triggered it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(format(kind, message, line)),
        kind_(kind),
        line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message,
                            std::optional<std::size_t> line) {
    std::string out(to_string(kind));
    if (line) out += " (line " + std::to_string(*line) + ")";
    out += ": ";
    out += message;
    return out;
  }

  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace abmetrics

#endif  // ABMETRICS_ERROR_HPP_
