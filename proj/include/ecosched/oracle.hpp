// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Ground truth: exhaustive schedule enumeration, a memoized Pareto DP over
// interleavings of two operation sequences, and the constant-frequency energy
// inequality checker.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ecosched/domain.hpp"
#include "ecosched/error.hpp"
#include "ecosched/mbo.hpp"
#include "ecosched/simgpu.hpp"

namespace ecosched {

// ---------------------------------------------------------------------------
// Exhaustive search
// ---------------------------------------------------------------------------

inline constexpr std::size_t kExhaustiveLimit = 1'000'000;

struct ExhaustiveResult {
  std::vector<EvaluatedRow> rows;
  ParetoFrontier<EvaluatedRow> frontier;        // (time, dynamic energy)
  ParetoFrontier<EvaluatedRow> frontier_total;  // (time, total energy)
  std::size_t evaluations = 0;
};

// Noise-free, thermally inert evaluation of every config in the space.
inline ExhaustiveResult exhaustive_frontier(const PartitionSpec& partition, const GpuModel& gpu,
                                            const SearchSpace& space, std::size_t limit = kExhaustiveLimit) {
  auto configs = enumerate_space(partition, space, &gpu);
  if (configs.size() > limit) throw SpaceTooLargeError(configs.size(), limit);
  ExhaustiveResult r;
  r.rows.reserve(configs.size());
  for (const auto& c : configs) {
    r.rows.push_back({c, simulate_schedule(partition, c, gpu), 0, PassLabel::kInit});
    ++r.evaluations;
  }
  r.frontier = rows_frontier(r.rows);
  r.frontier_total = rows_frontier(r.rows, true);
  return r;
}

// ---------------------------------------------------------------------------
// Launch-timing DP
// ---------------------------------------------------------------------------

struct OpSequencePair {
  std::vector<KernelSpec> s1;  // computation sequence
  std::vector<KernelSpec> s2;  // the other nanobatch's sequence, holding the communication
  int max_overlap_len = 9;

  void validate() const {
    if (s1.empty() || s2.empty()) throw std::invalid_argument("OpSequencePair: both sequences must be non-empty");
    if (max_overlap_len < 0) throw std::invalid_argument("OpSequencePair: max_overlap_len must be >= 0");
  }
};

struct OpCost {
  double time_ms = 0.0;
  double energy_j = 0.0;
};

// Costs of the DP's transitions. `overlap(anchor_seq, anchor, other_start,
// len)` prices op `anchor` of sequence `anchor_seq` (0 = s1, 1 = s2) running
// alongside ops [other_start, other_start + len) of the other sequence, or
// returns nullopt when that overlap is not allowed.
struct DpEvaluator {
  std::function<OpCost(int seq, int index)> single;
  std::function<std::optional<OpCost>(int anchor_seq, int anchor, int other_start, int len)> overlap;
};

// Serial costs from sequential execution and overlap costs from a transient
// partition; only communication x computation overlaps are allowed. Energies
// are totals so serial and overlapped steps add up consistently. `pair` must
// outlive the evaluator.
inline DpEvaluator simulator_evaluator(const OpSequencePair& pair, const GpuModel& gpu, double freq_mhz,
                                       int sm_alloc) {
  DpEvaluator ev;
  ev.single = [&pair, gpu, freq_mhz](int seq, int index) {
    const KernelSpec& k = seq == 0 ? pair.s1[index] : pair.s2[index];
    Measurement m = sequential_cost(std::span<const KernelSpec>(&k, 1), freq_mhz, gpu);
    return OpCost{m.time_ms, m.total_energy_j};
  };
  ev.overlap = [&pair, gpu, freq_mhz, sm_alloc](int anchor_seq, int anchor, int other_start,
                                                int len) -> std::optional<OpCost> {
    const auto& a_seq = anchor_seq == 0 ? pair.s1 : pair.s2;
    const auto& o_seq = anchor_seq == 0 ? pair.s2 : pair.s1;
    const KernelSpec& a = a_seq[anchor];
    PartitionSpec p;
    p.name = "transient";
    if (a.is_communication()) {
      for (int i = 0; i < len; ++i) {
        if (o_seq[other_start + i].is_communication()) return std::nullopt;
        p.comp_kernels.push_back(o_seq[other_start + i]);
      }
      p.comm_kernel = a;
    } else {
      if (len != 1 || !o_seq[other_start].is_communication()) return std::nullopt;
      p.comp_kernels.push_back(a);
      p.comm_kernel = o_seq[other_start];
    }
    Measurement m = simulate_schedule(p, {freq_mhz, sm_alloc, LaunchTiming::overlap(0, len)}, gpu);
    return OpCost{m.time_ms, m.total_energy_j};
  };
  return ev;
}

namespace detail {

// Drops interior points of smallest exclusive hypervolume contribution until
// at most `cap` remain; the two extremes are always kept.
inline std::vector<TimeEnergy> prune_by_contribution(std::vector<TimeEnergy> pts, std::size_t cap) {
  if (cap == 0 || pts.size() <= cap) return pts;
  cap = std::max<std::size_t>(cap, 2);
  while (pts.size() > cap) {
    std::size_t worst = 1;
    double worst_c = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
      double c = (pts[i + 1].time_ms - pts[i].time_ms) * (pts[i - 1].energy_j - pts[i].energy_j);
      if (c < worst_c) {
        worst_c = c;
        worst = i;
      }
    }
    pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  return pts;
}

}  // namespace detail

struct DpOptions {
  // Per-state frontier cap; 0 keeps every non-dominated point.
  std::size_t state_cap = 64;
};

// P(i, j) is the frontier of finishing s1[i..] and s2[j..]. Each state takes
// the Pareto-minimal union of: run s1[i] alone; run s2[j] alone; overlap s1[i]
// with s2[j..j+k); overlap s2[j] with s1[i..i+k), for 1 <= k <= cap.
class LaunchTimingDp {
 public:
  LaunchTimingDp(const OpSequencePair& pair, DpEvaluator ev, DpOptions opts = {})
      : pair_(pair), ev_(std::move(ev)), opts_(opts) {
    pair_.validate();
    n1_ = static_cast<int>(pair_.s1.size());
    n2_ = static_cast<int>(pair_.s2.size());
    memo_.assign(static_cast<std::size_t>((n1_ + 1) * (n2_ + 1)), std::nullopt);
  }

  ParetoFrontier<NoPayload> solve() { return get_frontier(state(0, 0)); }

  // Frontier of a memoized state; computes it if needed.
  const std::vector<TimeEnergy>& state(int i, int j) {
    auto& slot = memo_[static_cast<std::size_t>(i * (n2_ + 1) + j)];
    if (slot) return *slot;
    std::vector<TimeEnergy> cand;
    if (i == n1_ && j == n2_) {
      cand.push_back({0.0, 0.0});
    } else {
      auto extend = [&](const OpCost& c, int ni, int nj) {
        for (const auto& p : state(ni, nj)) cand.push_back({c.time_ms + p.time_ms, c.energy_j + p.energy_j});
      };
      if (i < n1_) extend(ev_.single(0, i), i + 1, j);
      if (j < n2_) extend(ev_.single(1, j), i, j + 1);
      for (int k = 1; k <= pair_.max_overlap_len; ++k) {
        if (i < n1_ && j + k <= n2_)
          if (auto c = ev_.overlap(0, i, j, k)) extend(*c, i + 1, j + k);
        if (j < n2_ && i + k <= n1_)
          if (auto c = ev_.overlap(1, j, i, k)) extend(*c, i + k, j + 1);
      }
    }
    slot = detail::prune_by_contribution(get_frontier(cand).objectives(), opts_.state_cap);
    ++states_;
    return *slot;
  }

  std::size_t states_solved() const { return states_; }

 private:
  OpSequencePair pair_;
  DpEvaluator ev_;
  DpOptions opts_;
  int n1_ = 0, n2_ = 0;
  std::vector<std::optional<std::vector<TimeEnergy>>> memo_;
  std::size_t states_ = 0;
};

inline ParetoFrontier<NoPayload> dp_launch_frontier(const OpSequencePair& pair, const DpEvaluator& ev,
                                                    DpOptions opts = {}) {
  LaunchTimingDp dp(pair, ev, opts);
  return dp.solve();
}

struct SubproblemCount {
  long long overlap_patterns = 0;
  long long total = 0;
  friend bool operator==(const SubproblemCount&, const SubproblemCount&) = default;
};

// Communication x computation only: each communication op can co-launch with
// any window of up to `cap` computation ops over the cyclic computation order
// (num_comp * min(cap, num_comp) windows), plus one serial subproblem per op.
inline SubproblemCount count_subproblems(int num_comp, int num_comm, int cap) {
  if (num_comp < 1 || num_comm < 1 || cap < 0) throw std::invalid_argument("count_subproblems: invalid sizes");
  SubproblemCount c;
  c.overlap_patterns = static_cast<long long>(num_comm) * num_comp * std::min(cap, num_comp);
  c.total = c.overlap_patterns + num_comp + num_comm;
  return c;
}

inline SubproblemCount count_subproblems(const OpSequencePair& pair) {
  pair.validate();
  int comm = 0, comp = 0;
  for (const auto* seq : {&pair.s1, &pair.s2})
    for (const auto& k : *seq) (k.is_communication() ? comm : comp) += 1;
  if (comp == 0 || comm == 0) throw std::invalid_argument("count_subproblems: need computation and communication ops");
  return count_subproblems(comp, comm, pair.max_overlap_len);
}

// ---------------------------------------------------------------------------
// Constant-frequency inequality
// ---------------------------------------------------------------------------

struct FreqSegment {
  double frequency_mhz = 0.0;
  double duration_ms = 0.0;
};

struct FreqTrace {
  std::vector<FreqSegment> segments;

  void validate() const {
    if (segments.empty()) throw std::invalid_argument("FreqTrace: no segments");
    for (const auto& s : segments)
      if (!(s.frequency_mhz > 0.0) || !(s.duration_ms > 0.0))
        throw std::invalid_argument("FreqTrace: frequencies and durations must be positive");
  }
  double duration_ms() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration_ms;
    return t;
  }
  bool is_constant() const {
    return std::all_of(segments.begin(), segments.end(),
                       [&](const FreqSegment& s) { return s.frequency_mhz == segments.front().frequency_mhz; });
  }
};

struct ConstantFrequencyReport {
  double e_fluct_j = 0.0;
  double e_const_j = 0.0;
  double f_bar_mhz = 0.0;
  bool holds = false;
  bool equality = false;
};

inline constexpr double kConstantFrequencyRelTol = 1e-12;

// Running at the time-averaged frequency for the same duration never costs
// more energy than the fluctuating trace, with P = kappa * f^3 + p_static
// (f in GHz, kappa in W/GHz^3).
inline ConstantFrequencyReport check_constant_frequency(const FreqTrace& trace, double kappa_w_per_ghz3,
                                                        double p_static_w) {
  trace.validate();
  ConstantFrequencyReport r;
  const double t_s = trace.duration_ms() / 1000.0;
  double cube_integral = 0.0, f_integral = 0.0;
  for (const auto& s : trace.segments) {
    double f = s.frequency_mhz / 1000.0, d = s.duration_ms / 1000.0;
    cube_integral += f * f * f * d;
    f_integral += f * d;
  }
  r.e_fluct_j = kappa_w_per_ghz3 * cube_integral + p_static_w * t_s;
  if (trace.is_constant()) {
    r.f_bar_mhz = trace.segments.front().frequency_mhz;
    r.e_const_j = r.e_fluct_j;
    r.equality = true;
  } else {
    double f_bar = f_integral / t_s;
    r.f_bar_mhz = f_bar * 1000.0;
    r.e_const_j = kappa_w_per_ghz3 * t_s * f_bar * f_bar * f_bar + p_static_w * t_s;
    r.equality = r.e_const_j == r.e_fluct_j;
  }
  r.holds = r.e_const_j <= r.e_fluct_j * (1.0 + kConstantFrequencyRelTol);
  return r;
}

}  // namespace ecosched
