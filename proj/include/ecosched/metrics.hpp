// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Frontier comparison metrics with step interpolation: only frontier points
// are realizable schedules, so no value is interpolated between them.

#pragma once

#include <limits>
#include <optional>
#include <stdexcept>

#include "ecosched/domain.hpp"

namespace ecosched {

// Minimum energy among points finishing within `deadline_ms`.
template <class P>
std::optional<double> energy_at(const ParetoFrontier<P>& f, double deadline_ms) {
  std::optional<double> best;
  for (const auto& p : f)
    if (p.time_ms <= deadline_ms && (!best || p.energy_j < *best)) best = p.energy_j;
  return best;
}

// Minimum time among points within `budget_j`.
template <class P>
std::optional<double> time_at(const ParetoFrontier<P>& f, double budget_j) {
  std::optional<double> best;
  for (const auto& p : f)
    if (p.energy_j <= budget_j && (!best || p.time_ms < *best)) best = p.time_ms;
  return best;
}

struct IsoMetrics {
  // Percent energy saved by B at the baseline's fastest time; NaN when B has
  // no point that fast.
  double iso_time_energy_reduction_pct = std::numeric_limits<double>::quiet_NaN();
  // Percent time saved by B at the baseline's lowest energy; NaN when B has no
  // point that cheap.
  double iso_energy_time_reduction_pct = std::numeric_limits<double>::quiet_NaN();
};

// Candidate B against baseline A; both must be non-empty.
template <class PA, class PB>
IsoMetrics iso_metrics(const ParetoFrontier<PA>& a, const ParetoFrontier<PB>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("iso_metrics: empty frontier");
  IsoMetrics m;
  const double t_star = a.min_time().time_ms;
  const double e_a = *energy_at(a, t_star);
  if (auto e_b = energy_at(b, t_star)) m.iso_time_energy_reduction_pct = 100.0 * (e_a - *e_b) / e_a;
  const double e_star = a.min_energy().energy_j;
  const double t_a = *time_at(a, e_star);
  if (auto t_b = time_at(b, e_star)) m.iso_energy_time_reduction_pct = 100.0 * (t_a - *t_b) / t_a;
  return m;
}

}  // namespace ecosched
