// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Core value types shared by the simulator, the optimizer and the
// composition algorithms. Units are fixed everywhere: milliseconds, Joules,
// Watts and MHz.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ecosched/error.hpp"

namespace ecosched {

// ---------------------------------------------------------------------------
// Search grids
// ---------------------------------------------------------------------------

class FrequencyGrid {
 public:
  FrequencyGrid() = default;
  explicit FrequencyGrid(std::vector<double> values_mhz) : values_(std::move(values_mhz)) {
    if (values_.empty()) throw ConfigError("frequency grid is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] > 0.0)) throw ConfigError("frequency grid values must be positive");
      if (i > 0 && !(values_[i] > values_[i - 1]))
        throw ConfigError("frequency grid must be strictly ascending");
    }
  }

  // Inclusive range lo, lo+stride, ... while <= hi.
  static FrequencyGrid range(double lo_mhz, double hi_mhz, double stride_mhz) {
    if (!(stride_mhz > 0.0)) throw ConfigError("frequency stride must be positive");
    std::vector<double> v;
    for (int i = 0;; ++i) {
      double f = lo_mhz + i * stride_mhz;
      if (f > hi_mhz + 1e-9) break;
      v.push_back(f);
    }
    return FrequencyGrid(std::move(v));
  }

  // 900..=1410 MHz, stride 30.
  static FrequencyGrid defaults() { return range(900.0, 1410.0, 30.0); }

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  bool contains(double f_mhz) const {
    return std::any_of(values_.begin(), values_.end(),
                       [&](double v) { return std::abs(v - f_mhz) < 1e-9; });
  }

 private:
  std::vector<double> values_;
};

class SmGrid {
 public:
  SmGrid() = default;
  SmGrid(std::vector<int> values, int num_sms) : values_(std::move(values)) {
    if (values_.empty()) throw ConfigError("SM grid is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (values_[i] < 1 || values_[i] > num_sms)
        throw ConfigError("SM grid value " + std::to_string(values_[i]) +
                          " outside [1, " + std::to_string(num_sms) + "]");
      if (i > 0 && values_[i] <= values_[i - 1])
        throw ConfigError("SM grid must be strictly ascending");
    }
  }

  static SmGrid range(int lo, int hi, int stride, int num_sms) {
    if (stride < 1) throw ConfigError("SM stride must be >= 1");
    std::vector<int> v;
    for (int s = lo; s <= hi; s += stride) v.push_back(s);
    return SmGrid(std::move(v), num_sms);
  }

  // 1..=20 for groups smaller than 4 GPUs, otherwise 3..=30 stride 3.
  static SmGrid defaults(int comm_group_size, int num_sms) {
    return comm_group_size < 4 ? range(1, 20, 1, num_sms) : range(3, 30, 3, num_sms);
  }

  const std::vector<int>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  int min() const { return values_.front(); }
  int max() const { return values_.back(); }
  bool contains(int s) const { return std::find(values_.begin(), values_.end(), s) != values_.end(); }

 private:
  std::vector<int> values_;
};

// ---------------------------------------------------------------------------
// Launch timing
// ---------------------------------------------------------------------------

// Either sequential execution (no overlap) or an overlap window: the
// communication kernel is co-launched with computation kernel `start` and the
// computation stream joins it after `span` kernels. Partitions repeat back to
// back across blocks, so a window may wrap past the last kernel.
class LaunchTiming {
 public:
  static constexpr LaunchTiming sequential() { return LaunchTiming(-1, 0); }
  static constexpr LaunchTiming overlap(int start, int span) { return LaunchTiming(start, span); }

  constexpr bool is_sequential() const { return start_ < 0; }
  constexpr int start() const { return start_; }
  constexpr int span() const { return span_; }

  // Valid for a partition with `num_comp` computation kernels.
  constexpr bool valid_for(int num_comp) const {
    if (is_sequential()) return true;
    return start_ >= 0 && start_ < num_comp && span_ >= 1 && span_ <= num_comp;
  }

  // Ordinal category index: 0 for sequential, then windows ordered by
  // (start, span). `max_span` is the largest span in the space.
  constexpr int ordinal(int max_span) const {
    return is_sequential() ? 0 : 1 + start_ * max_span + (span_ - 1);
  }

  std::string to_string() const {
    if (is_sequential()) return "sequential";
    return "overlap:" + std::to_string(start_) + ":" + std::to_string(span_);
  }

  static LaunchTiming parse(const std::string& s) {
    if (s == "sequential") return sequential();
    const std::string prefix = "overlap:";
    if (s.rfind(prefix, 0) == 0) {
      auto rest = s.substr(prefix.size());
      auto colon = rest.find(':');
      if (colon != std::string::npos) {
        try {
          std::size_t p1 = 0, p2 = 0;
          int start = std::stoi(rest.substr(0, colon), &p1);
          int span = std::stoi(rest.substr(colon + 1), &p2);
          if (p1 == colon && p2 == rest.size() - colon - 1 && start >= 0 && span >= 1)
            return overlap(start, span);
        } catch (const std::exception&) {
        }
      }
    }
    throw ConfigError("unparseable launch timing '" + s + "'");
  }

  friend constexpr auto operator<=>(const LaunchTiming&, const LaunchTiming&) = default;

 private:
  constexpr LaunchTiming(int start, int span) : start_(start), span_(span) {}
  int start_;
  int span_;
};

// One candidate execution schedule. sm_alloc is 0 for sequential timing.
struct ScheduleConfig {
  double frequency_mhz = 0.0;
  int sm_alloc = 0;
  LaunchTiming timing = LaunchTiming::sequential();

  static ScheduleConfig sequential(double f_mhz) { return {f_mhz, 0, LaunchTiming::sequential()}; }

  // Lexicographic (frequency, sm, timing) order used for every tie-break.
  friend auto operator<=>(const ScheduleConfig&, const ScheduleConfig&) = default;
  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

// ---------------------------------------------------------------------------
// Kernels and partitions
// ---------------------------------------------------------------------------

enum class KernelKind { kComputeBound, kMemoryBound, kCommunication };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::kComputeBound: return "compute-bound";
    case KernelKind::kMemoryBound: return "memory-bound";
    case KernelKind::kCommunication: return "communication";
  }
  return "?";
}

struct KernelSpec {
  std::string name;
  double flops = 0.0;
  double bytes = 0.0;
  double comm_bytes = 0.0;

  static KernelSpec compute(std::string name, double flops, double bytes) {
    KernelSpec k{std::move(name), flops, bytes, 0.0};
    k.validate();
    return k;
  }
  static KernelSpec communication(std::string name, double comm_bytes) {
    KernelSpec k{std::move(name), 0.0, 0.0, comm_bytes};
    k.validate();
    return k;
  }

  bool is_communication() const { return comm_bytes > 0.0; }

  void validate() const {
    if (flops < 0.0 || bytes < 0.0 || comm_bytes < 0.0)
      throw ConfigError("kernel '" + name + "' has negative work");
    const bool has_comp = flops + bytes > 0.0;
    if (has_comp == is_communication())
      throw ConfigError("kernel '" + name +
                        "' must carry either computation work or communication bytes");
  }
};

enum class PartitionClass { kSmall, kMedium, kLarge };

inline const char* to_string(PartitionClass c) {
  switch (c) {
    case PartitionClass::kSmall: return "small";
    case PartitionClass::kMedium: return "medium";
    case PartitionClass::kLarge: return "large";
  }
  return "?";
}

// The computation kernels of one nanobatch plus the (possibly fused)
// communication kernel of the other.
struct PartitionSpec {
  std::string name;
  std::vector<KernelSpec> comp_kernels;
  KernelSpec comm_kernel;
  int comm_group_size = 1;

  void validate() const {
    if (comp_kernels.empty()) throw ConfigError("partition '" + name + "' has no computation kernels");
    for (const auto& k : comp_kernels) {
      k.validate();
      if (k.is_communication())
        throw ConfigError("partition '" + name + "': kernel '" + k.name + "' is not a computation kernel");
    }
    comm_kernel.validate();
    if (!comm_kernel.is_communication())
      throw ConfigError("partition '" + name + "': comm kernel carries no communication bytes");
    if (comm_group_size < 1) throw ConfigError("partition '" + name + "': comm group size must be >= 1");
  }

  int num_comp() const { return static_cast<int>(comp_kernels.size()); }

  PartitionClass partition_class() const {
    if (comp_kernels.size() <= 1) return PartitionClass::kSmall;
    if (comp_kernels.size() <= 3) return PartitionClass::kMedium;
    return PartitionClass::kLarge;
  }
};

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

struct Measurement {
  double time_ms = 0.0;
  double dyn_energy_j = 0.0;
  double static_energy_j = 0.0;
  double total_energy_j = 0.0;

  // Static energy is P_static x wall time; total is the exact sum.
  static Measurement from(double time_ms, double dyn_energy_j, double p_static_w) {
    Measurement m;
    m.time_ms = time_ms;
    m.dyn_energy_j = dyn_energy_j;
    m.static_energy_j = p_static_w * time_ms / 1000.0;
    m.total_energy_j = m.dyn_energy_j + m.static_energy_j;
    return m;
  }

  friend bool operator==(const Measurement&, const Measurement&) = default;
};

// ---------------------------------------------------------------------------
// Pareto machinery (two objectives, both minimised)
// ---------------------------------------------------------------------------

struct TimeEnergy {
  double time_ms = 0.0;
  double energy_j = 0.0;
  friend bool operator==(const TimeEnergy&, const TimeEnergy&) = default;
};

inline bool dominates(const TimeEnergy& p, const TimeEnergy& q) {
  return p.time_ms <= q.time_ms && p.energy_j <= q.energy_j &&
         (p.time_ms < q.time_ms || p.energy_j < q.energy_j);
}

template <class Payload>
struct FrontierPoint {
  double time_ms = 0.0;
  double energy_j = 0.0;
  Payload payload{};

  TimeEnergy objectives() const { return {time_ms, energy_j}; }
};

struct NoPayload {
  friend auto operator<=>(const NoPayload&, const NoPayload&) = default;
};

// Non-dominated points sorted by time ascending, hence energy strictly
// descending. Only get_frontier() and from_points() construct one.
template <class Payload = NoPayload>
class ParetoFrontier {
 public:
  using Point = FrontierPoint<Payload>;

  ParetoFrontier() = default;

  // Adopts points that already form a valid frontier; throws otherwise.
  static ParetoFrontier from_points(std::vector<Point> points) {
    ParetoFrontier f;
    f.points_ = std::move(points);
    f.check_invariants();
    return f;
  }

  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }
  const Point& min_time() const { return points_.front(); }
  const Point& min_energy() const { return points_.back(); }

  std::vector<TimeEnergy> objectives() const {
    std::vector<TimeEnergy> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.objectives());
    return out;
  }

  void check_invariants() const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i].time_ms) || !std::isfinite(points_[i].energy_j))
        throw std::invalid_argument("frontier point has non-finite coordinates");
      if (i > 0 && !(points_[i].time_ms > points_[i - 1].time_ms &&
                     points_[i].energy_j < points_[i - 1].energy_j))
        throw std::invalid_argument("frontier points are not strictly time-ascending / energy-descending");
    }
  }

 private:
  std::vector<Point> points_;
};

namespace detail {
template <class T>
concept ThreeWayOrdered = requires(const T& a, const T& b) {
  { a < b } -> std::convertible_to<bool>;
};
}  // namespace detail

// Exactly the non-dominated subset of `points`, sorted by time. Duplicate
// (time, energy) pairs collapse to the payload that sorts first (or the first
// in input order when the payload is unordered).
template <class Payload>
ParetoFrontier<Payload> get_frontier(std::vector<FrontierPoint<Payload>> points) {
  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    if (a.time_ms != b.time_ms) return a.time_ms < b.time_ms;
    if (a.energy_j != b.energy_j) return a.energy_j < b.energy_j;
    if constexpr (detail::ThreeWayOrdered<Payload>) {
      return a.payload < b.payload;
    } else {
      return false;
    }
  });
  std::vector<FrontierPoint<Payload>> kept;
  for (auto& p : points) {
    // Within equal times the lowest energy sorts first, so any later point
    // with the same time fails the strict energy test.
    if (kept.empty() || p.energy_j < kept.back().energy_j) kept.push_back(std::move(p));
  }
  return ParetoFrontier<Payload>::from_points(std::move(kept));
}

inline ParetoFrontier<NoPayload> get_frontier(const std::vector<TimeEnergy>& points) {
  std::vector<FrontierPoint<NoPayload>> v;
  v.reserve(points.size());
  for (const auto& p : points) v.push_back({p.time_ms, p.energy_j, {}});
  return get_frontier(std::move(v));
}

}  // namespace ecosched
