// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Error categories. Every failure surfaced by the library derives from
// plm::Error; the CLI maps the category onto a process exit code.

#pragma once

#include <stdexcept>
#include <string>

namespace plm {

enum class ErrorCategory { kShape, kConfig, kData, kNumeric, kIndex, kLoad, kContract };

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string &message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

  private:
    ErrorCategory category_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string &m) : Error(ErrorCategory::kShape, "shape error: " + m) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string &m) : Error(ErrorCategory::kConfig, "config error: " + m) {}
};
struct DataError : Error {
    explicit DataError(const std::string &m) : Error(ErrorCategory::kData, "data error: " + m) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string &m) : Error(ErrorCategory::kNumeric, "numeric error: " + m) {}
};
struct IndexError : Error {
    explicit IndexError(const std::string &m) : Error(ErrorCategory::kIndex, "index error: " + m) {}
};
struct LoadError : Error {
    explicit LoadError(const std::string &m) : Error(ErrorCategory::kLoad, "load error: " + m) {}
};
struct ContractError : Error {
    explicit ContractError(const std::string &m) : Error(ErrorCategory::kContract, "contract error: " + m) {}
};

} // namespace plm
