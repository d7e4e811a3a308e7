// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Property suites run by the verify command: the constant-frequency energy
// inequality over random traces, and the profiling-protocol sensitivity
// sweeps against the simulated thermal model.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ecosched/oracle.hpp"
#include "ecosched/reference.hpp"
#include "ecosched/rng.hpp"
#include "ecosched/simgpu.hpp"

namespace ecosched {

struct JensenFuzzReport {
  int traces = 0;
  int constant_traces = 0;
  int violations = 0;            // e_const > e_fluct beyond tolerance
  int equality_mismatches = 0;   // equality on a fluctuating trace or inequality on a constant one
  double min_rel_gap = std::numeric_limits<double>::infinity();  // over fluctuating traces
  bool passed() const { return violations == 0 && equality_mismatches == 0; }
};

// Random piecewise-constant traces; every tenth trace is constant.
inline FreqTrace random_trace(Rng& rng, double f_lo_mhz, double f_hi_mhz, bool constant) {
  std::uniform_int_distribution<int> segs(1, 12);
  std::uniform_real_distribution<double> freq(f_lo_mhz, f_hi_mhz);
  std::uniform_real_distribution<double> dur(0.1, 50.0);
  FreqTrace t;
  const int n = constant ? segs(rng) : std::max(2, segs(rng));
  const double f0 = freq(rng);
  for (int i = 0; i < n; ++i) t.segments.push_back({constant ? f0 : freq(rng), dur(rng)});
  if (!constant && t.is_constant()) t.segments.back().frequency_mhz = f_lo_mhz == f0 ? f_hi_mhz : f_lo_mhz;
  return t;
}

inline JensenFuzzReport jensen_fuzz(int traces, std::uint64_t seed, const GpuModel& gpu) {
  JensenFuzzReport rep;
  Rng rng = make_rng(seed, "jensen");
  for (int i = 0; i < traces; ++i) {
    const bool constant = i % 10 == 0;
    FreqTrace t = random_trace(rng, 210.0, gpu.f_max_mhz, constant);
    auto r = check_constant_frequency(t, gpu.kappa_w_per_ghz3, gpu.p_static_w);
    ++rep.traces;
    if (constant) ++rep.constant_traces;
    if (!r.holds) ++rep.violations;
    if (r.equality != constant) ++rep.equality_mismatches;
    if (!constant) rep.min_rel_gap = std::min(rep.min_rel_gap, (r.e_fluct_j - r.e_const_j) / r.e_fluct_j);
  }
  return rep;
}

struct SweepPoint {
  double setting_s = 0.0;
  double mean_energy_j = 0.0;
  double std_energy_j = 0.0;
};

namespace detail {
inline SweepPoint summarize(double setting, const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return {setting, mean, sd};
}
}  // namespace detail

struct ProtocolStudy {
  PartitionSpec partition = reference::attention();
  ScheduleConfig config{1410.0, 8, LaunchTiming::overlap(0, 4)};
  GpuModel gpu{};
  ThermalModel thermal = ThermalModel::typical();
  ProfilingProtocol base{1.0, 5.0, 5.0, 0.05, 0};
  int trials = 10;
  std::uint64_t seed = 0;
};

// Trial i uses the same noise stream at every setting, so differences between
// settings come from the protocol alone.
inline std::uint64_t trial_seed(const ProtocolStudy& s, int trial) { return derive_seed(s.seed, "trial", trial); }

// Measurement-energy spread of a cold measurement per window length.
inline std::vector<SweepPoint> window_sweep(const ProtocolStudy& s, const std::vector<double>& windows_s) {
  std::vector<SweepPoint> out;
  for (double w : windows_s) {
    ProfilingProtocol p = s.base;
    p.window_s = w;
    std::vector<double> xs;
    for (int i = 0; i < s.trials; ++i) {
      auto state = ProfilerState::fresh(s.thermal, trial_seed(s, i));
      xs.push_back(measure(s.partition, s.config, s.gpu, s.thermal, p, state).total_energy_j);
    }
    out.push_back(detail::summarize(w, xs));
  }
  return out;
}

// Energy of the second of two back-to-back measurements per cooldown length;
// residual heat from the first inflates the second.
inline std::vector<SweepPoint> cooldown_sweep(const ProtocolStudy& s, const std::vector<double>& cooldowns_s) {
  std::vector<SweepPoint> out;
  for (double c : cooldowns_s) {
    ProfilingProtocol p = s.base;
    p.cooldown_s = c;
    std::vector<double> xs;
    for (int i = 0; i < s.trials; ++i) {
      auto state = ProfilerState::fresh(s.thermal, trial_seed(s, i));
      measure(s.partition, s.config, s.gpu, s.thermal, p, state);
      xs.push_back(measure(s.partition, s.config, s.gpu, s.thermal, p, state).total_energy_j);
    }
    out.push_back(detail::summarize(c, xs));
  }
  return out;
}

inline bool std_nonincreasing(const std::vector<SweepPoint>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].std_energy_j > pts[i - 1].std_energy_j) return false;
  return true;
}

inline bool mean_nonincreasing(const std::vector<SweepPoint>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].mean_energy_j > pts[i - 1].mean_energy_j) return false;
  return true;
}

// The last step recovers at most `frac` of the total drop, and there is a drop.
inline bool mean_plateaus(const std::vector<SweepPoint>& pts, double frac = 0.1) {
  if (pts.size() < 3) return false;
  double total = pts.front().mean_energy_j - pts.back().mean_energy_j;
  double last = pts[pts.size() - 2].mean_energy_j - pts.back().mean_energy_j;
  return total > 0.0 && last <= frac * total;
}

}  // namespace ecosched
