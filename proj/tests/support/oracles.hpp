// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations the library is checked against. Each
// oracle trades speed for obviousness: quadratic dominance filters, grid
// areas, unmemoized path enumeration and full Cartesian products.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "ecosched/compose.hpp"
#include "ecosched/domain.hpp"
#include "ecosched/oracle.hpp"
#include "ecosched/pareto.hpp"

namespace ecosched::testing {

// ---------------------------------------------------------------------------
// Pareto sets
// ---------------------------------------------------------------------------

// Non-dominated subset by checking every pair, duplicates collapsed, sorted
// by time.
inline std::vector<TimeEnergy> pairwise_frontier(const std::vector<TimeEnergy>& pts) {
  std::vector<TimeEnergy> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      const auto& p = pts[j];
      const auto& q = pts[i];
      dominated = p.time_ms <= q.time_ms && p.energy_j <= q.energy_j &&
                  (p.time_ms < q.time_ms || p.energy_j < q.energy_j);
    }
    if (dominated) continue;
    if (std::find(out.begin(), out.end(), pts[i]) == out.end()) out.push_back(pts[i]);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time_ms < b.time_ms; });
  return out;
}

// Equal as sets of points, each coordinate within `rel` relative tolerance.
inline bool same_point_set(const std::vector<TimeEnergy>& a, const std::vector<TimeEnergy>& b, double rel = 1e-9) {
  if (a.size() != b.size()) return false;
  auto close = [rel](double x, double y) { return std::abs(x - y) <= rel * std::max({1.0, std::abs(x), std::abs(y)}); };
  std::vector<char> used(b.size(), 0);
  for (const auto& p : a) {
    bool found = false;
    for (std::size_t j = 0; j < b.size() && !found; ++j) {
      if (!used[j] && close(p.time_ms, b[j].time_ms) && close(p.energy_j, b[j].energy_j)) used[j] = found = true;
    }
    if (!found) return false;
  }
  return true;
}

// Every point of each side lies within `rel` of some point on the other.
// Sums reached through different addition orders can leave two copies of one
// point a few ulps apart on a frontier, so multiplicity is ignored.
inline bool equivalent_frontiers(const std::vector<TimeEnergy>& a, const std::vector<TimeEnergy>& b,
                                 double rel = 1e-9) {
  auto close = [rel](double x, double y) { return std::abs(x - y) <= rel * std::max({1.0, std::abs(x), std::abs(y)}); };
  auto covered = [&](const std::vector<TimeEnergy>& from, const std::vector<TimeEnergy>& to) {
    return std::all_of(from.begin(), from.end(), [&](const TimeEnergy& p) {
      return std::any_of(to.begin(), to.end(),
                         [&](const TimeEnergy& q) { return close(p.time_ms, q.time_ms) && close(p.energy_j, q.energy_j); });
    });
  };
  return covered(a, b) && covered(b, a);
}

// ---------------------------------------------------------------------------
// Hypervolume
// ---------------------------------------------------------------------------

// Area of the union of boxes [p, r] by compressing coordinates into a grid and
// summing every covered cell.
inline double rect_union_area(const std::vector<TimeEnergy>& pts, const RefPoint& r) {
  std::vector<double> xs = {r.time_ms}, ys = {r.energy_j};
  for (const auto& p : pts) {
    xs.push_back(std::min(p.time_ms, r.time_ms));
    ys.push_back(std::min(p.energy_j, r.energy_j));
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      double cx = 0.5 * (xs[i] + xs[i + 1]), cy = 0.5 * (ys[j] + ys[j + 1]);
      for (const auto& p : pts) {
        if (p.time_ms <= cx && p.energy_j <= cy) {
          area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
          break;
        }
      }
    }
  }
  return area;
}

// Monte-Carlo estimate of the dominated area: uniform samples over the box
// spanned by the best coordinates and r. `sorted` is a frontier sorted by time.
inline double monte_carlo_area(const std::vector<TimeEnergy>& sorted, const RefPoint& r, int samples,
                               std::mt19937_64& rng) {
  double t_lo = r.time_ms, e_lo = r.energy_j;
  for (const auto& p : sorted) {
    t_lo = std::min(t_lo, p.time_ms);
    e_lo = std::min(e_lo, p.energy_j);
  }
  std::uniform_real_distribution<double> ut(t_lo, r.time_ms), ue(e_lo, r.energy_j);
  long hits = 0;
  for (int s = 0; s < samples; ++s) {
    double x = ut(rng), y = ue(rng);
    // Last point with time <= x carries the least energy among those.
    auto it = std::upper_bound(sorted.begin(), sorted.end(), x,
                               [](double v, const TimeEnergy& p) { return v < p.time_ms; });
    if (it != sorted.begin() && std::prev(it)->energy_j <= y) ++hits;
  }
  return (r.time_ms - t_lo) * (r.energy_j - e_lo) * static_cast<double>(hits) / samples;
}

// ---------------------------------------------------------------------------
// Launch-timing DP
// ---------------------------------------------------------------------------

// Every complete schedule of the pair, walked step by step without memo or
// pruning, reduced to its frontier at the end.
inline std::vector<TimeEnergy> brute_force_interleavings(const OpSequencePair& pair, const DpEvaluator& ev) {
  const int n1 = static_cast<int>(pair.s1.size()), n2 = static_cast<int>(pair.s2.size());
  std::vector<TimeEnergy> finished;
  std::function<void(int, int, double, double)> walk = [&](int i, int j, double t, double e) {
    if (i == n1 && j == n2) {
      finished.push_back({t, e});
      return;
    }
    auto step = [&](const OpCost& c, int ni, int nj) { walk(ni, nj, t + c.time_ms, e + c.energy_j); };
    if (i < n1) step(ev.single(0, i), i + 1, j);
    if (j < n2) step(ev.single(1, j), i, j + 1);
    for (int k = 1; k <= pair.max_overlap_len; ++k) {
      if (i < n1 && j + k <= n2)
        if (auto c = ev.overlap(0, i, j, k)) step(*c, i + 1, j + k);
      if (j < n2 && i + k <= n1)
        if (auto c = ev.overlap(1, j, i, k)) step(*c, i + k, j + 1);
    }
  };
  walk(0, 0, 0.0, 0.0);
  return pairwise_frontier(finished);
}

// Random but fixed transition costs. Overlaps are allowed with probability
// `p_allow`, and overlapping never costs more time than running serially.
class TableEvaluator {
 public:
  TableEvaluator(const OpSequencePair& pair, std::uint64_t seed, double p_allow) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> t(0.5, 5.0), u(0.0, 1.0);
    for (int s = 0; s < 2; ++s) {
      const auto& seq = s == 0 ? pair.s1 : pair.s2;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        double time = t(rng);
        single_[{s, static_cast<int>(i)}] = {time, 90.0 * time / 1000.0 + 0.01 * t(rng)};
      }
    }
    for (int s = 0; s < 2; ++s) {
      const int na = static_cast<int>((s == 0 ? pair.s1 : pair.s2).size());
      const int no = static_cast<int>((s == 0 ? pair.s2 : pair.s1).size());
      for (int a = 0; a < na; ++a)
        for (int o = 0; o < no; ++o)
          for (int k = 1; k <= pair.max_overlap_len && o + k <= no; ++k) {
            if (u(rng) >= p_allow) continue;
            double serial_t = single_[{s, a}].time_ms, serial_e = single_[{s, a}].energy_j;
            for (int q = 0; q < k; ++q) {
              serial_t += single_[{1 - s, o + q}].time_ms;
              serial_e += single_[{1 - s, o + q}].energy_j;
            }
            double time = serial_t * (0.55 + 0.45 * u(rng));
            double energy = serial_e * (0.8 + 0.4 * u(rng));
            overlap_[{s, a, o, k}] = {time, energy};
          }
    }
  }

  DpEvaluator evaluator() const {
    DpEvaluator ev;
    ev.single = [this](int seq, int index) { return single_.at({seq, index}); };
    ev.overlap = [this](int a_seq, int a, int o, int len) -> std::optional<OpCost> {
      auto it = overlap_.find({a_seq, a, o, len});
      if (it == overlap_.end()) return std::nullopt;
      return it->second;
    };
    return ev;
  }

 private:
  std::map<std::pair<int, int>, OpCost> single_;
  std::map<std::array<int, 4>, OpCost> overlap_;
};

// ---------------------------------------------------------------------------
// Microbatch composition
// ---------------------------------------------------------------------------

// Every (frequency, option per type) combination, summed over the partition
// sequence instance by instance, as (time, total energy).
inline std::vector<TimeEnergy> brute_force_microbatch(const MicrobatchSpec& spec, const PartitionFrontierTable& table,
                                                      double p_static_w) {
  std::vector<std::string> types;
  for (const auto& t : spec.partition_sequence)
    if (std::find(types.begin(), types.end(), t) == types.end()) types.push_back(t);
  std::vector<TimeEnergy> all;
  for (const auto& [f, np] : spec.non_partition_costs) {
    bool everywhere = true;
    for (const auto& t : types) everywhere = everywhere && table.at(t).count(f) && !table.at(t).at(f).empty();
    if (!everywhere) continue;
    std::vector<std::size_t> pick(types.size(), 0);
    while (true) {
      double time = np.time_ms, dyn = np.dyn_energy_j;
      for (const auto& inst : spec.partition_sequence) {
        std::size_t ti = std::find(types.begin(), types.end(), inst) - types.begin();
        const auto& o = table.at(inst).at(f)[pick[ti]];
        time += o.time_ms;
        dyn += o.energy_j;
      }
      all.push_back({time, dyn + p_static_w * time / 1000.0});
      std::size_t d = 0;
      while (d < types.size() && ++pick[d] == table.at(types[d]).at(f).size()) pick[d++] = 0;
      if (d == types.size()) break;
    }
  }
  return pairwise_frontier(all);
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct RefOp {
  int mb = 0;
  bool backward = false;
};

// 1F1B program of one stage: S - s - 1 warm-up forwards (at most M), then
// strict alternation, then the remaining backwards.
inline std::vector<RefOp> ref_stage_program(int S, int M, int s, bool with_backward) {
  std::vector<RefOp> prog;
  if (!with_backward) {
    for (int m = 0; m < M; ++m) prog.push_back({m, false});
    return prog;
  }
  const int warm = std::min(S - s - 1, M);
  int nf = 0, nb = 0;
  while (nf < warm) prog.push_back({nf++, false});
  bool fwd_turn = true;
  while (nf < M || nb < M) {
    if ((fwd_turn && nf < M) || nb >= M) prog.push_back({nf++, false});
    else prog.push_back({nb++, true});
    fwd_turn = !fwd_turn;
  }
  return prog;
}

struct RefPipelineResult {
  double time_ms = 0.0;
  double energy_j = 0.0;
};

// Fixpoint simulation: sweep the stages, starting any op whose dependencies
// have finished. Energy is all dynamic energy plus static power over every
// stage for the whole makespan, which counts busy, idle and switching time.
inline RefPipelineResult ref_simulate_pipeline(const PipelineCosts& c, const Assignment& a) {
  const int S = c.spec.num_stages, M = c.spec.num_microbatches;
  const bool bw = c.spec.backward;
  auto opt_of = [&](int s, int m, bool backward) -> const OpOption& {
    const auto& opts = backward ? c.stages[s].backward : c.stages[s].forward;
    return opts[a[c.spec.op_id(s, m, backward ? Direction::kBackward : Direction::kForward)]];
  };
  std::vector<std::vector<RefOp>> prog(S);
  for (int s = 0; s < S; ++s) prog[s] = ref_stage_program(S, M, s, bw);
  std::map<std::tuple<int, int, bool>, double> done;  // (stage, mb, backward) -> finish
  std::vector<std::size_t> pc(S, 0);
  std::vector<double> free_at(S, 0.0), last_freq(S, -1.0);
  double dyn = 0.0, makespan = 0.0;
  std::size_t remaining = 0;
  for (const auto& p : prog) remaining += p.size();
  while (remaining > 0) {
    bool moved = false;
    for (int s = 0; s < S; ++s) {
      if (pc[s] >= prog[s].size()) continue;
      const RefOp op = prog[s][pc[s]];
      double ready = 0.0;
      if (!op.backward && s > 0) {
        auto it = done.find({s - 1, op.mb, false});
        if (it == done.end()) continue;
        ready = it->second;
      }
      if (op.backward && s + 1 < S) {
        auto it = done.find({s + 1, op.mb, true});
        if (it == done.end()) continue;
        ready = it->second;
      }
      const OpOption& o = opt_of(s, op.mb, op.backward);
      double start = free_at[s];
      if (last_freq[s] >= 0.0 && last_freq[s] != o.frequency_mhz) start += c.freq_switch_ms;
      start = std::max(start, ready);
      double finish = start + o.time_ms;
      done[{s, op.mb, op.backward}] = finish;
      free_at[s] = finish;
      last_freq[s] = o.frequency_mhz;
      dyn += o.dyn_energy_j;
      makespan = std::max(makespan, finish);
      ++pc[s];
      --remaining;
      moved = true;
    }
    if (!moved) throw std::logic_error("reference pipeline deadlocked");
  }
  return {makespan, dyn + c.p_static_w * S * makespan / 1000.0};
}

// Every assignment of options to ops, simulated by the reference pipeline.
inline std::vector<TimeEnergy> brute_force_iteration(const PipelineCosts& c) {
  const int n = c.spec.num_ops();
  Assignment a(n, 0);
  std::vector<TimeEnergy> all;
  while (true) {
    auto r = ref_simulate_pipeline(c, a);
    all.push_back({r.time_ms, r.energy_j});
    int d = 0;
    while (d < n && ++a[d] == static_cast<int>(c.options(d).size())) a[d++] = 0;
    if (d == n) break;
  }
  return pairwise_frontier(all);
}

}  // namespace ecosched::testing
