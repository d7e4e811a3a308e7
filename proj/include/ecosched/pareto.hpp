// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Two-objective dominated hypervolume and hypervolume improvement.

#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "ecosched/domain.hpp"

namespace ecosched {

// Upper-right corner of the box hypervolume is measured in. Weakly worse than
// every observed point.
struct RefPoint {
  double time_ms = 0.0;
  double energy_j = 0.0;
  friend bool operator==(const RefPoint&, const RefPoint&) = default;
};

// r = (1.1 * max time, 1.1 * max energy).
inline RefPoint compute_ref_point(std::span<const TimeEnergy> observations) {
  if (observations.empty()) throw std::invalid_argument("compute_ref_point: no observations");
  double t = observations.front().time_ms, e = observations.front().energy_j;
  for (const auto& p : observations) {
    t = std::max(t, p.time_ms);
    e = std::max(e, p.energy_j);
  }
  return {1.1 * t, 1.1 * e};
}

namespace detail {
// Sweep over a frontier already sorted by time (energy descending).
inline double sweep_area(std::span<const TimeEnergy> sorted, const RefPoint& r) {
  double area = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double next_t = i + 1 < sorted.size() ? sorted[i + 1].time_ms : r.time_ms;
    area += (r.energy_j - sorted[i].energy_j) * (next_t - sorted[i].time_ms);
  }
  return area;
}
}  // namespace detail

// Area dominated by the frontier inside the reference box, by the sorted sweep
// sum (r.e - e_i) * (t_{i+1} - t_i) with t_{n+1} = r.t.
template <class Payload>
double hypervolume(const ParetoFrontier<Payload>& frontier, const RefPoint& r) {
  for (const auto& p : frontier)
    if (p.time_ms > r.time_ms || p.energy_j > r.energy_j)
      throw std::invalid_argument("hypervolume: frontier point lies outside the reference box");
  auto obj = frontier.objectives();
  return detail::sweep_area(obj, r);
}

// HV(frontier + candidate) - HV(frontier). Candidates on or beyond the
// reference box boundary contribute nothing.
template <class Payload>
double hvi(const ParetoFrontier<Payload>& frontier, const TimeEnergy& candidate, const RefPoint& r) {
  if (!(candidate.time_ms < r.time_ms) || !(candidate.energy_j < r.energy_j)) return 0.0;
  // Area of the candidate's box not already covered. Frontier energies descend
  // with time, so the covered part of the candidate box is a staircase.
  double gain = 0.0;
  double cursor = candidate.time_ms;  // left edge of the next uncovered strip
  double cap = r.energy_j;            // the strip is already covered above this energy
  for (const auto& p : frontier) {
    if (p.time_ms >= r.time_ms || p.energy_j >= r.energy_j) continue;
    if (p.time_ms <= candidate.time_ms) {
      cap = std::min(cap, p.energy_j);
      continue;
    }
    if (cap > candidate.energy_j) gain += (cap - candidate.energy_j) * (p.time_ms - cursor);
    cursor = p.time_ms;
    cap = std::min(cap, p.energy_j);
    if (cap <= candidate.energy_j) break;
  }
  if (cap > candidate.energy_j) gain += (cap - candidate.energy_j) * (r.time_ms - cursor);
  return std::max(0.0, gain);
}

}  // namespace ecosched
