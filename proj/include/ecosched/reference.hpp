// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Reference workloads for the default GPU model, shared by the acceptance
// suite and the verify command, plus the schedule probes run against them.

#pragma once

#include <limits>
#include <vector>

#include "ecosched/domain.hpp"
#include "ecosched/mbo.hpp"
#include "ecosched/simgpu.hpp"

namespace ecosched::reference {

// Attention-like layer: memory-bound norm and rope, compute-bound linear and
// attention. With the default GPU model the energy-optimal launch kernel
// moves between f_max and 0.78 f_max.
inline PartitionSpec attention() {
  PartitionSpec p;
  p.name = "attention";
  p.comp_kernels = {KernelSpec::compute("norm", 1.7e10, 3.4e8), KernelSpec::compute("linear", 5.4e10, 3.6e8),
                    KernelSpec::compute("rope", 1.2e9, 4.6e8), KernelSpec::compute("attn", 3.1e10, 1.1e8)};
  p.comm_kernel = KernelSpec::communication("allreduce", 5.5e7);
  p.comm_group_size = 2;
  return p;
}

inline SmGrid attention_sms(const GpuModel& gpu) { return SmGrid::range(1, 20, 1, gpu.num_sms); }

// MBO reference partitions, one per size class. Their spaces are 45, 333 and
// 585 configs under mbo_space().
inline PartitionSpec small() {
  PartitionSpec p;
  p.name = "small";
  p.comp_kernels = {KernelSpec::compute("mlp", 6.0e10, 4.0e8)};
  p.comm_kernel = KernelSpec::communication("allreduce", 3.0e7);
  p.comm_group_size = 4;
  return p;
}

inline PartitionSpec medium() {
  PartitionSpec p;
  p.name = "medium";
  p.comp_kernels = {KernelSpec::compute("norm", 2.0e9, 3.0e8), KernelSpec::compute("up_proj", 8.0e10, 5.0e8),
                    KernelSpec::compute("act", 1.0e9, 4.0e8)};
  p.comm_kernel = KernelSpec::communication("allreduce", 4.0e7);
  p.comm_group_size = 4;
  return p;
}

inline PartitionSpec large() {
  PartitionSpec p;
  p.name = "large";
  p.comp_kernels = {KernelSpec::compute("norm", 1.7e10, 3.4e8), KernelSpec::compute("qkv", 5.4e10, 3.6e8),
                    KernelSpec::compute("rope", 1.2e9, 4.6e8), KernelSpec::compute("attn", 3.1e10, 1.1e8)};
  p.comm_kernel = KernelSpec::communication("allreduce", 6.0e7);
  p.comm_group_size = 4;
  return p;
}

inline SearchSpace mbo_space(const GpuModel& gpu) {
  SearchSpace s;
  s.freqs = FrequencyGrid::range(930.0, 1410.0, 60.0);
  s.sms = SmGrid({4, 8, 12, 16}, gpu.num_sms);
  s.options.exclude_always_exposed = false;
  return s;
}

// Lowest-energy overlap schedule at a fixed frequency; ties go to the
// lexicographically smaller config.
inline ScheduleConfig energy_argmin(const PartitionSpec& p, double freq_mhz, const SmGrid& sms,
                                    const GpuModel& gpu) {
  ScheduleConfig best{};
  double best_e = std::numeric_limits<double>::infinity();
  for (int s : sms.values())
    for (int start = 0; start < p.num_comp(); ++start)
      for (int span = 1; span <= p.num_comp(); ++span) {
        ScheduleConfig c{freq_mhz, s, LaunchTiming::overlap(start, span)};
        double e = simulate_schedule(p, c, gpu).total_energy_j;
        if (e < best_e) best_e = e, best = c;
      }
  return best;
}

// Lowest total energy over every schedule that launches the communication
// with computation kernel `start`.
inline double best_energy_for_start(const PartitionSpec& p, double freq_mhz, int start, const SmGrid& sms,
                                    const GpuModel& gpu) {
  double best = std::numeric_limits<double>::infinity();
  for (int s : sms.values())
    for (int span = 1; span <= p.num_comp(); ++span)
      best = std::min(best, simulate_schedule(p, {freq_mhz, s, LaunchTiming::overlap(start, span)}, gpu).total_energy_j);
  return best;
}

}  // namespace ecosched::reference
