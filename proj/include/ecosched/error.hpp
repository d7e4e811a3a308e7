// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecosched {

// Raised for malformed user input (workload configs, CSV files, grids).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A schedule that cannot run on the modelled GPU.
class InvalidScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The enumerated search space exceeds what exhaustive evaluation allows.
class SpaceTooLargeError : public std::runtime_error {
 public:
  SpaceTooLargeError(std::size_t size, std::size_t limit)
      : std::runtime_error("search space has " + std::to_string(size) +
                           " configurations, exhaustive limit is " +
                           std::to_string(limit)),
        size_(size),
        limit_(limit) {}

  std::size_t size() const { return size_; }
  std::size_t limit() const { return limit_; }

 private:
  std::size_t size_;
  std::size_t limit_;
};

}  // namespace ecosched
