// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Lifting partition frontiers to microbatch and training-iteration frontiers,
// plus the partition-detection preprocessing (communication fusion and
// memory-bound grouping) and a 1F1B pipeline emulator.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ecosched/domain.hpp"
#include "ecosched/error.hpp"
#include "ecosched/simgpu.hpp"

namespace ecosched {

// ---------------------------------------------------------------------------
// Partition detection preprocessing
// ---------------------------------------------------------------------------

// Consecutive communication kernels become one kernel sharing an SM allocation.
inline KernelSpec fuse_comm_kernels(const std::vector<KernelSpec>& kernels) {
  if (kernels.empty()) throw std::invalid_argument("fuse_comm_kernels: no kernels");
  if (kernels.size() == 1) return kernels.front();
  KernelSpec fused;
  for (const auto& k : kernels) {
    if (!k.is_communication()) throw std::invalid_argument("fuse_comm_kernels: '" + k.name + "' is not communication");
    fused.name += (fused.name.empty() ? "" : "+") + k.name;
    fused.comm_bytes += k.comm_bytes;
  }
  return fused;
}

// Largest comm group size among fused kernels.
inline int fused_group_size(const std::vector<int>& group_sizes) {
  if (group_sizes.empty()) throw std::invalid_argument("fused_group_size: empty");
  return *std::max_element(group_sizes.begin(), group_sizes.end());
}

// Maximal runs of memory-bound kernels collapse into one logical kernel with
// summed work, shrinking the launch-timing space.
inline std::vector<KernelSpec> group_memory_bound(const std::vector<KernelSpec>& kernels, const GpuModel& gpu) {
  std::vector<KernelSpec> out;
  bool open_run = false;
  for (const auto& k : kernels) {
    const bool mem = !k.is_communication() && kernel_kind(k, gpu) == KernelKind::kMemoryBound;
    if (mem && open_run) {
      KernelSpec& g = out.back();
      g.name += "+" + k.name;
      g.flops += k.flops;
      g.bytes += k.bytes;
      continue;
    }
    out.push_back(k);
    open_run = mem;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Microbatch frontier
// ---------------------------------------------------------------------------

// A partition's options at one frequency: (time, dynamic energy) frontier.
using PartitionFrontier = ParetoFrontier<ScheduleConfig>;
// type name -> frequency (MHz) -> frontier
using PartitionFrontierTable = std::map<std::string, std::map<double, PartitionFrontier>>;

struct StepCost {
  double time_ms = 0.0;
  double dyn_energy_j = 0.0;
  friend bool operator==(const StepCost&, const StepCost&) = default;
};

struct MicrobatchSpec {
  std::string name;
  std::vector<std::string> partition_sequence;
  // Components outside partitions, run sequentially; keyed by frequency.
  std::map<double, StepCost> non_partition_costs;

  // Instances per type, ordered by type name.
  std::vector<std::pair<std::string, int>> multiplicities() const {
    std::map<std::string, int> m;
    for (const auto& t : partition_sequence) ++m[t];
    return {m.begin(), m.end()};
  }
};

// One microbatch candidate: a uniform frequency and one shared config per
// partition type, or the all-sequential execution model.
struct MicrobatchChoice {
  double frequency_mhz = 0.0;
  bool sequential = false;
  std::vector<std::pair<std::string, ScheduleConfig>> per_type;
  double dyn_energy_j = 0.0;

  friend auto operator<=>(const MicrobatchChoice&, const MicrobatchChoice&) = default;
  friend bool operator==(const MicrobatchChoice&, const MicrobatchChoice&) = default;
};

// (time, total energy) frontier of microbatch candidates.
using MicrobatchFrontier = ParetoFrontier<MicrobatchChoice>;

inline double total_energy(double time_ms, double dyn_energy_j, double p_static_w) {
  return dyn_energy_j + p_static_w * time_ms / 1000.0;
}

// Frequencies at which every referenced partition type has a frontier.
inline std::vector<double> common_frequencies(const MicrobatchSpec& spec, const PartitionFrontierTable& table) {
  std::vector<double> out;
  bool first = true;
  for (const auto& [type, count] : spec.multiplicities()) {
    auto it = table.find(type);
    if (it == table.end()) throw ConfigError("microbatch '" + spec.name + "' references unknown partition '" + type + "'");
    std::vector<double> fs;
    for (const auto& [f, fr] : it->second)
      if (!fr.empty()) fs.push_back(f);
    if (first) {
      out = fs;
      first = false;
    } else {
      std::vector<double> both;
      std::set_intersection(out.begin(), out.end(), fs.begin(), fs.end(), std::back_inserter(both));
      out = std::move(both);
    }
  }
  return out;
}

// Per frequency, the Minkowski sum of each type's options scaled by its
// multiplicity, pruned to the (time, dynamic) frontier after every type,
// plus the non-partition cost. Pruning is exact: extensions of a dominated
// partial sum stay dominated, and the (time, total) frontier is a subset of
// the (time, dynamic) one.
inline MicrobatchFrontier microbatch_frontier(const MicrobatchSpec& spec, const PartitionFrontierTable& table,
                                              double p_static_w) {
  if (spec.partition_sequence.empty()) throw ConfigError("microbatch '" + spec.name + "' has no partitions");
  const auto mult = spec.multiplicities();
  const auto freqs = common_frequencies(spec, table);
  if (freqs.empty()) throw ConfigError("microbatch '" + spec.name + "': no frequency common to all partition types");

  std::vector<FrontierPoint<MicrobatchChoice>> all;
  for (double f : freqs) {
    auto np = spec.non_partition_costs.find(f);
    if (np == spec.non_partition_costs.end())
      throw ConfigError("microbatch '" + spec.name + "': non-partition costs missing at " + std::to_string(f) + " MHz");

    std::vector<FrontierPoint<MicrobatchChoice>> partial = {{0.0, 0.0, MicrobatchChoice{f, false, {}, 0.0}}};
    for (const auto& [type, count] : mult) {
      const auto& options = table.at(type).at(f);
      std::vector<FrontierPoint<MicrobatchChoice>> next;
      next.reserve(partial.size() * options.size());
      for (const auto& p : partial) {
        for (const auto& o : options) {
          FrontierPoint<MicrobatchChoice> q = p;
          q.time_ms = p.time_ms + count * o.time_ms;
          q.energy_j = p.energy_j + count * o.energy_j;
          q.payload.per_type.emplace_back(type, o.payload);
          next.push_back(std::move(q));
        }
      }
      partial = get_frontier(std::move(next)).points();
    }
    for (auto& p : partial) {
      double t = p.time_ms + np->second.time_ms;
      double dyn = p.energy_j + np->second.dyn_energy_j;
      p.payload.dyn_energy_j = dyn;
      all.push_back({t, total_energy(t, dyn, p_static_w), std::move(p.payload)});
    }
  }
  return get_frontier(std::move(all));
}

// Sequential-model candidates: every partition at ScheduleConfig::sequential.
inline std::vector<FrontierPoint<MicrobatchChoice>> sequential_microbatch_points(
    const MicrobatchSpec& spec, const std::map<std::string, PartitionSpec>& partitions, const GpuModel& gpu,
    const std::vector<double>& freqs) {
  std::vector<FrontierPoint<MicrobatchChoice>> out;
  const auto mult = spec.multiplicities();
  for (double f : freqs) {
    auto np = spec.non_partition_costs.find(f);
    if (np == spec.non_partition_costs.end())
      throw ConfigError("microbatch '" + spec.name + "': non-partition costs missing at " + std::to_string(f) + " MHz");
    MicrobatchChoice c{f, true, {}, 0.0};
    double t = 0.0, dyn = 0.0;
    for (const auto& [type, count] : mult) {
      auto it = partitions.find(type);
      if (it == partitions.end()) throw ConfigError("unknown partition '" + type + "'");
      Measurement m = simulate_schedule(it->second, ScheduleConfig::sequential(f), gpu);
      t += count * m.time_ms;
      dyn += count * m.dyn_energy_j;
      c.per_type.emplace_back(type, ScheduleConfig::sequential(f));
    }
    t += np->second.time_ms;
    dyn += np->second.dyn_energy_j;
    c.dyn_energy_j = dyn;
    out.push_back({t, total_energy(t, dyn, gpu.p_static_w), std::move(c)});
  }
  return out;
}

// Frontier of the union: the better execution model wins per region.
inline MicrobatchFrontier execution_model_switch(const MicrobatchFrontier& overlap,
                                                 const std::vector<FrontierPoint<MicrobatchChoice>>& sequential) {
  std::vector<FrontierPoint<MicrobatchChoice>> all(overlap.begin(), overlap.end());
  all.insert(all.end(), sequential.begin(), sequential.end());
  return get_frontier(std::move(all));
}

// ---------------------------------------------------------------------------
// 1F1B pipeline
// ---------------------------------------------------------------------------

enum class Direction { kForward = 0, kBackward = 1 };

struct PipelineSpec {
  int num_stages = 1;
  int num_microbatches = 1;
  bool backward = true;  // false: forward-only, one op per stage and microbatch

  void validate() const {
    if (num_stages < 1) throw ConfigError("pipeline.num_stages must be >= 1");
    if (num_microbatches < 1) throw ConfigError("pipeline.num_microbatches must be >= 1");
  }
  int ops_per_microbatch() const { return backward ? 2 : 1; }
  int num_ops() const { return ops_per_microbatch() * num_stages * num_microbatches; }
  int op_id(int stage, int mb, Direction d) const {
    return (stage * num_microbatches + mb) * ops_per_microbatch() + static_cast<int>(d);
  }
  Direction direction_of(int op) const { return static_cast<Direction>(op % ops_per_microbatch()); }
  int stage_of(int op) const { return op / ops_per_microbatch() / num_microbatches; }
};

// One microbatch-frontier point as a pipeline operation option.
struct OpOption {
  double time_ms = 0.0;
  double dyn_energy_j = 0.0;
  double frequency_mhz = 0.0;
};

// Options per stage and direction, sorted by time ascending with dynamic
// energy descending (a frontier). Shared by all microbatches of the stage.
struct StageOptions {
  std::vector<OpOption> forward;
  std::vector<OpOption> backward;
  const std::vector<OpOption>& of(Direction d) const { return d == Direction::kForward ? forward : backward; }
};

inline std::vector<OpOption> op_options(const MicrobatchFrontier& f) {
  std::vector<OpOption> out;
  for (const auto& p : f) out.push_back({p.time_ms, p.payload.dyn_energy_j, p.payload.frequency_mhz});
  return out;
}

struct PipelineCosts {
  PipelineSpec spec;
  std::vector<StageOptions> stages;  // one per stage
  double p_static_w = 0.0;
  double freq_switch_ms = 0.0;

  // Every stage runs the same forward and backward microbatch.
  static PipelineCosts uniform(const PipelineSpec& spec, const MicrobatchFrontier& fwd, const MicrobatchFrontier& bwd,
                               const GpuModel& gpu) {
    PipelineCosts c{spec, {}, gpu.p_static_w, gpu.freq_switch_ms};
    c.stages.assign(spec.num_stages, StageOptions{op_options(fwd), op_options(bwd)});
    return c;
  }

  void validate() const {
    spec.validate();
    if (static_cast<int>(stages.size()) != spec.num_stages) throw ConfigError("pipeline: one option set per stage");
    for (const auto& s : stages)
      if (s.forward.empty() || (spec.backward && s.backward.empty()))
        throw ConfigError("pipeline: empty microbatch frontier");
  }
  const std::vector<OpOption>& options(int op) const {
    return stages[spec.stage_of(op)].of(spec.direction_of(op));
  }
  int stage_of(int op) const { return spec.stage_of(op); }
};

// 1F1B order on one stage: min(S - s - 1, M) warm-up forwards, alternating
// forward/backward, then the cool-down backwards. Forward-only pipelines run
// their microbatches in order.
inline std::vector<std::pair<int, Direction>> one_f_one_b_order(int num_stages, int num_microbatches, int stage,
                                                                bool backward = true) {
  if (!backward) {
    std::vector<std::pair<int, Direction>> seq;
    for (int m = 0; m < num_microbatches; ++m) seq.emplace_back(m, Direction::kForward);
    return seq;
  }
  const int warmup = std::min(num_stages - stage - 1, num_microbatches);
  std::vector<std::pair<int, Direction>> seq;
  for (int m = 0; m < warmup; ++m) seq.emplace_back(m, Direction::kForward);
  for (int i = 0; i + warmup < num_microbatches; ++i) {
    seq.emplace_back(warmup + i, Direction::kForward);
    seq.emplace_back(i, Direction::kBackward);
  }
  for (int m = num_microbatches - warmup; m < num_microbatches; ++m) seq.emplace_back(m, Direction::kBackward);
  return seq;
}

// Dependency DAG of a 1F1B iteration. Every op has at most one same-stage
// predecessor (stage order) and one cross-stage predecessor.
class PipelineGraph {
 public:
  explicit PipelineGraph(const PipelineSpec& spec) : spec_(spec) {
    spec.validate();
    const int n = spec.num_ops();
    stage_pred_.assign(n, -1);
    stage_succ_.assign(n, -1);
    cross_pred_.assign(n, -1);
    cross_succ_.assign(n, -1);
    const int S = spec.num_stages, M = spec.num_microbatches;
    std::vector<std::vector<int>> per_stage(S);
    for (int s = 0; s < S; ++s) {
      for (auto [m, d] : one_f_one_b_order(S, M, s, spec.backward)) per_stage[s].push_back(spec.op_id(s, m, d));
      for (std::size_t i = 1; i < per_stage[s].size(); ++i) {
        stage_pred_[per_stage[s][i]] = per_stage[s][i - 1];
        stage_succ_[per_stage[s][i - 1]] = per_stage[s][i];
      }
    }
    for (int s = 0; s < S; ++s) {
      for (int m = 0; m < M; ++m) {
        if (s > 0) link(spec.op_id(s - 1, m, Direction::kForward), spec.op_id(s, m, Direction::kForward));
        if (spec.backward && s + 1 < S) link(spec.op_id(s + 1, m, Direction::kBackward), spec.op_id(s, m, Direction::kBackward));
      }
    }
    // Topological order by round-robin over stages.
    std::vector<std::size_t> next(S, 0);
    std::vector<char> done(n, 0);
    while (static_cast<int>(order_.size()) < n) {
      bool progress = false;
      for (int s = 0; s < S; ++s) {
        while (next[s] < per_stage[s].size()) {
          int op = per_stage[s][next[s]];
          if (cross_pred_[op] >= 0 && !done[cross_pred_[op]]) break;
          order_.push_back(op);
          done[op] = 1;
          ++next[s];
          progress = true;
        }
      }
      if (!progress) throw std::logic_error("pipeline schedule deadlocked");
    }
  }

  const PipelineSpec& spec() const { return spec_; }
  const std::vector<int>& topological_order() const { return order_; }
  int stage_pred(int op) const { return stage_pred_[op]; }
  int stage_succ(int op) const { return stage_succ_[op]; }
  int cross_pred(int op) const { return cross_pred_[op]; }
  int cross_succ(int op) const { return cross_succ_[op]; }

 private:
  void link(int from, int to) {
    cross_pred_[to] = from;
    cross_succ_[from] = to;
  }

  PipelineSpec spec_;
  std::vector<int> stage_pred_, stage_succ_, cross_pred_, cross_succ_;
  std::vector<int> order_;
};

// Index into PipelineCosts::options(op) for every op id.
using Assignment = std::vector<int>;

struct PipelineResult {
  double time_ms = 0.0;
  double energy_j = 0.0;      // dynamic + static (busy, idle and switching)
  double dyn_energy_j = 0.0;
  double idle_ms = 0.0;       // summed over stages, switching included
  int frequency_switches = 0;
  std::vector<double> start_ms, finish_ms;
};

// ASAP event simulation. A stage changing frequency between consecutive ops
// waits freq_switch_ms; that gap burns static power only.
inline PipelineResult simulate_pipeline(const PipelineGraph& graph, const PipelineCosts& costs, const Assignment& a) {
  const PipelineSpec& spec = graph.spec();
  const int n = spec.num_ops();
  if (static_cast<int>(a.size()) != n) throw std::invalid_argument("simulate_pipeline: assignment size mismatch");
  PipelineResult r;
  r.start_ms.assign(n, 0.0);
  r.finish_ms.assign(n, 0.0);
  std::vector<double> busy(spec.num_stages, 0.0);
  for (int op : graph.topological_order()) {
    const auto& opts = costs.options(op);
    if (a[op] < 0 || a[op] >= static_cast<int>(opts.size()))
      throw std::invalid_argument("simulate_pipeline: option index out of range");
    const OpOption& o = opts[a[op]];
    double ready = 0.0;
    if (int p = graph.cross_pred(op); p >= 0) ready = r.finish_ms[p];
    if (int p = graph.stage_pred(op); p >= 0) {
      double avail = r.finish_ms[p];
      if (costs.options(p)[a[p]].frequency_mhz != o.frequency_mhz) {
        avail += costs.freq_switch_ms;
        ++r.frequency_switches;
      }
      ready = std::max(ready, avail);
    }
    r.start_ms[op] = ready;
    r.finish_ms[op] = ready + o.time_ms;
    r.time_ms = std::max(r.time_ms, r.finish_ms[op]);
    busy[costs.stage_of(op)] += o.time_ms;
    r.dyn_energy_j += o.dyn_energy_j;
    r.energy_j += total_energy(o.time_ms, o.dyn_energy_j, costs.p_static_w);
  }
  for (double b : busy) r.idle_ms += r.time_ms - b;
  r.energy_j += costs.p_static_w * r.idle_ms / 1000.0;
  return r;
}

inline PipelineResult simulate_pipeline(const PipelineCosts& costs, const Assignment& a) {
  return simulate_pipeline(PipelineGraph(costs.spec), costs, a);
}

struct IterationAssignment {
  Assignment choice;
  friend auto operator<=>(const IterationAssignment&, const IterationAssignment&) = default;
  friend bool operator==(const IterationAssignment&, const IterationAssignment&) = default;
};

using IterationFrontier = ParetoFrontier<IterationAssignment>;

struct IterationOptions {
  // Enumerate every assignment when there are at most this many.
  double exact_limit = 2e5;
};

inline double assignment_count(const PipelineCosts& costs) {
  double c = 1.0;
  for (int op = 0; op < costs.spec.num_ops(); ++op) c *= static_cast<double>(costs.options(op).size());
  return c;
}

namespace detail {

// Keeps the running (time, energy) frontier of recorded assignments.
class FrontierRecorder {
 public:
  FrontierRecorder(const PipelineGraph& g, const PipelineCosts& c) : graph_(g), costs_(c) {}

  void record(const Assignment& a) {
    PipelineResult r = simulate_pipeline(graph_, costs_, a);
    points_.push_back({r.time_ms, r.energy_j, IterationAssignment{a}});
    if (points_.size() >= 4 * std::max<std::size_t>(kept_, 64)) compact();
  }

  IterationFrontier finish() {
    compact();
    return IterationFrontier::from_points(std::move(points_));
  }

 private:
  void compact() {
    points_ = get_frontier(std::move(points_)).points();
    kept_ = points_.size();
  }

  const PipelineGraph& graph_;
  const PipelineCosts& costs_;
  std::vector<FrontierPoint<IterationAssignment>> points_;
  std::size_t kept_ = 0;
};

inline void enumerate_assignments(const PipelineCosts& costs, Assignment& a, int op, FrontierRecorder& rec) {
  if (op == static_cast<int>(a.size())) {
    rec.record(a);
    return;
  }
  const int k = static_cast<int>(costs.options(op).size());
  for (int i = 0; i < k; ++i) {
    a[op] = i;
    enumerate_assignments(costs, a, op + 1, rec);
  }
}

inline double switch_gap(const PipelineCosts& costs, double f_a, double f_b) {
  return f_a != f_b ? costs.freq_switch_ms : 0.0;
}

// Latest finish of `op` given its successors' latest starts and its own
// candidate frequency.
inline double latest_finish(const PipelineGraph& g, const PipelineCosts& costs, const Assignment& a,
                            const std::vector<double>& latest_start, int op, double freq, double deadline) {
  double lf = deadline;
  if (int s = g.cross_succ(op); s >= 0) lf = std::min(lf, latest_start[s]);
  if (int s = g.stage_succ(op); s >= 0)
    lf = std::min(lf, latest_start[s] - switch_gap(costs, freq, costs.options(s)[a[s]].frequency_mhz));
  return lf;
}

// One reverse-topological pass: every op takes its lowest-dynamic-energy
// option that still fits between its earliest start and its successors'
// latest starts, so the makespan never grows. Options are a frontier, so the
// slowest fitting option is the cheapest.
inline void reclaim_slack(const PipelineGraph& g, const PipelineCosts& costs, Assignment& a) {
  const PipelineResult asap = simulate_pipeline(g, costs, a);
  const double deadline = asap.time_ms;
  const double tol = 1e-9 * std::max(1.0, deadline);
  const int n = g.spec().num_ops();
  std::vector<double> latest_start(n, 0.0);
  const auto& order = g.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int op = *it;
    const auto& opts = costs.options(op);
    double ready = 0.0;
    if (int p = g.cross_pred(op); p >= 0) ready = asap.finish_ms[p];
    const int sp = g.stage_pred(op);
    auto earliest = [&](double freq) {
      double r = ready;
      if (sp >= 0) r = std::max(r, asap.finish_ms[sp] + switch_gap(costs, costs.options(sp)[a[sp]].frequency_mhz, freq));
      return r;
    };
    // Upper bound on the window ignores switching, which only shrinks it.
    double loose = latest_finish(g, costs, a, latest_start, op, opts[a[op]].frequency_mhz, deadline) + costs.freq_switch_ms;
    double loose_window = loose - (sp >= 0 ? std::max(ready, asap.finish_ms[sp]) : ready);
    int hi = static_cast<int>(std::upper_bound(opts.begin(), opts.end(), loose_window + tol,
                                               [](double w, const OpOption& o) { return w < o.time_ms; }) -
                              opts.begin()) - 1;
    int pick = a[op];
    for (int i = hi; i > a[op]; --i) {
      double es = earliest(opts[i].frequency_mhz);
      double lf = latest_finish(g, costs, a, latest_start, op, opts[i].frequency_mhz, deadline);
      if (es + opts[i].time_ms <= lf + tol) {
        pick = i;
        break;
      }
    }
    a[op] = pick;
    latest_start[op] = latest_finish(g, costs, a, latest_start, op, opts[pick].frequency_mhz, deadline) -
                       opts[pick].time_ms;
  }
}

// Ops whose earliest and latest starts coincide under the current makespan.
inline std::vector<int> critical_ops(const PipelineGraph& g, const PipelineCosts& costs, const Assignment& a) {
  const PipelineResult asap = simulate_pipeline(g, costs, a);
  const double tol = 1e-9 * std::max(1.0, asap.time_ms);
  const int n = g.spec().num_ops();
  std::vector<double> latest_start(n, 0.0);
  const auto& order = g.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int op = *it;
    const auto& o = costs.options(op)[a[op]];
    latest_start[op] = latest_finish(g, costs, a, latest_start, op, o.frequency_mhz, asap.time_ms) - o.time_ms;
  }
  std::vector<int> out;
  for (int op = 0; op < n; ++op)
    if (latest_start[op] - asap.start_ms[op] <= tol) out.push_back(op);
  return out;
}

}  // namespace detail

// Iteration-level (time, energy) frontier. Small instances are enumerated
// exactly. Larger ones use a deadline-relaxation sweep: start from minimum
// time, reclaim slack, then repeatedly slow the critical op with the best
// dynamic-energy-saved per time-added ratio by one frontier step and reclaim
// again. Uniform-index assignments seed the sweep so its result dominates the
// shared-point baseline. Every point is re-simulated before it is kept.
inline IterationFrontier iteration_frontier(const PipelineCosts& costs, const IterationOptions& opts = {}) {
  costs.validate();
  const PipelineGraph graph(costs.spec);
  const int n = costs.spec.num_ops();
  detail::FrontierRecorder rec(graph, costs);

  if (assignment_count(costs) <= opts.exact_limit) {
    Assignment a(n, 0);
    detail::enumerate_assignments(costs, a, 0, rec);
    return rec.finish();
  }

  std::size_t widest = 0;
  for (int op = 0; op < n; ++op) widest = std::max(widest, costs.options(op).size());
  for (std::size_t i = 0; i < widest; ++i) {
    Assignment a(n);
    for (int op = 0; op < n; ++op) a[op] = static_cast<int>(std::min(i, costs.options(op).size() - 1));
    rec.record(a);
    detail::reclaim_slack(graph, costs, a);
    rec.record(a);
  }

  Assignment a(n, 0);
  detail::reclaim_slack(graph, costs, a);
  rec.record(a);
  while (true) {
    auto candidates = detail::critical_ops(graph, costs, a);
    auto movable = [&](int op) { return a[op] + 1 < static_cast<int>(costs.options(op).size()); };
    std::erase_if(candidates, [&](int op) { return !movable(op); });
    if (candidates.empty())
      for (int op = 0; op < n; ++op)
        if (movable(op)) candidates.push_back(op);
    if (candidates.empty()) break;
    int best = -1;
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (int op : candidates) {
      const auto& o = costs.options(op);
      double dt = o[a[op] + 1].time_ms - o[a[op]].time_ms;
      double saved = o[a[op]].dyn_energy_j - o[a[op] + 1].dyn_energy_j;
      double ratio = dt > 0.0 ? saved / dt : std::numeric_limits<double>::infinity();
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = op;
      }
    }
    ++a[best];
    detail::reclaim_slack(graph, costs, a);
    rec.record(a);
  }
  return rec.finish();
}

}  // namespace ecosched
