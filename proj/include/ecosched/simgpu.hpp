// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic GPU: roofline kernel costs, an event-driven overlap timeline with
// SM partitioning and memory-bandwidth contention, a DVFS-aware dynamic energy
// model, and a first-order thermal model driven by a profiling protocol.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecosched/domain.hpp"
#include "ecosched/error.hpp"
#include "ecosched/rng.hpp"

namespace ecosched {

struct GpuModel {
  int num_sms = 108;
  double peak_flops_per_sm_mhz = 2.048e9;  // FLOP/s per SM per MHz (2048 FLOP/cycle)
  double mem_bw_gbps = 2039.0;
  double net_bw_gbps = 240.0;               // at >= sm_bw_saturation SMs
  int sm_bw_saturation = 16;
  double p_static_w = 90.0;
  double kappa_w_per_ghz3 = 89.0;           // P_dyn = kappa * f^3, f in GHz
  double f_max_mhz = 1410.0;
  double freq_switch_ms = 5.0;
  // Dynamic energy per unit of work. Compute energy is quoted at f_max and
  // scales with (f / f_max)^2; memory and network energy do not scale.
  double energy_per_flop_j = 0.8e-12;
  double energy_per_byte_j = 30e-12;
  double energy_per_comm_byte_j = 150e-12;
  // HBM bytes a communication kernel moves per communicated byte; this is its
  // memory-bandwidth demand when co-resident with memory-bound kernels.
  double comm_mem_traffic = 2.0;
  // Fixed cost of starting a partitioned overlap: cross-stream
  // synchronization and SM-partitioned launches. It is what makes the
  // sequential execution model win on tiny workloads.
  double overlap_setup_ms = 0.01;

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0)) throw ConfigError(std::string("gpu.") + what + " must be positive");
    };
    if (num_sms < 2) throw ConfigError("gpu.num_sms must be >= 2");
    positive(peak_flops_per_sm_mhz, "peak_flops_per_sm_mhz");
    positive(mem_bw_gbps, "mem_bw_gbps");
    positive(net_bw_gbps, "net_bw_gbps");
    if (sm_bw_saturation < 1 || sm_bw_saturation > num_sms)
      throw ConfigError("gpu.sm_bw_saturation must be in [1, num_sms]");
    positive(p_static_w, "p_static_w");
    positive(kappa_w_per_ghz3, "kappa_w_per_ghz3");
    positive(f_max_mhz, "f_max_mhz");
    if (freq_switch_ms < 0.0) throw ConfigError("gpu.freq_switch_ms must be >= 0");
    if (energy_per_flop_j < 0.0 || energy_per_byte_j < 0.0 || energy_per_comm_byte_j < 0.0)
      throw ConfigError("gpu energy coefficients must be >= 0");
    if (comm_mem_traffic < 0.0) throw ConfigError("gpu.comm_mem_traffic must be >= 0");
    if (overlap_setup_ms < 0.0) throw ConfigError("gpu.overlap_setup_ms must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Kernel costs
// ---------------------------------------------------------------------------

namespace detail {
inline double compute_term_ms(const KernelSpec& k, double f_mhz, double sms, const GpuModel& gpu) {
  if (k.flops <= 0.0) return 0.0;
  return k.flops / (sms * gpu.peak_flops_per_sm_mhz * f_mhz) * 1e3;
}
inline double memory_term_ms(const KernelSpec& k, double bw_frac, const GpuModel& gpu) {
  if (k.bytes <= 0.0) return 0.0;
  return k.bytes / (gpu.mem_bw_gbps * 1e9 * bw_frac) * 1e3;
}
inline double comm_rate_gbps(int sm_count, const GpuModel& gpu) {
  return gpu.net_bw_gbps * std::min(1.0, static_cast<double>(sm_count) / gpu.sm_bw_saturation);
}
}  // namespace detail

// Roofline duration. Frequency lowers only the compute ceiling; communication
// time depends on the SMs driving it, never on the core clock.
inline double kernel_duration(const KernelSpec& kernel, double freq_mhz, int sm_count, double bw_frac,
                              const GpuModel& gpu) {
  if (sm_count < 1) throw InvalidScheduleError("kernel_duration: sm_count must be >= 1");
  if (!(bw_frac > 0.0) || bw_frac > 1.0) throw InvalidScheduleError("kernel_duration: bw_frac must be in (0, 1]");
  if (kernel.is_communication()) return kernel.comm_bytes / (detail::comm_rate_gbps(sm_count, gpu) * 1e9) * 1e3;
  return std::max(detail::compute_term_ms(kernel, freq_mhz, sm_count, gpu),
                  detail::memory_term_ms(kernel, bw_frac, gpu));
}

// Classification at f_max on the whole GPU.
inline KernelKind kernel_kind(const KernelSpec& kernel, const GpuModel& gpu) {
  if (kernel.is_communication()) return KernelKind::kCommunication;
  double c = detail::compute_term_ms(kernel, gpu.f_max_mhz, gpu.num_sms, gpu);
  double m = detail::memory_term_ms(kernel, 1.0, gpu);
  return m > c ? KernelKind::kMemoryBound : KernelKind::kComputeBound;
}

inline double kernel_dynamic_energy(const KernelSpec& kernel, double freq_mhz, const GpuModel& gpu) {
  double r = freq_mhz / gpu.f_max_mhz;
  return gpu.energy_per_flop_j * kernel.flops * r * r + gpu.energy_per_byte_j * kernel.bytes +
         gpu.energy_per_comm_byte_j * kernel.comm_bytes;
}

// ---------------------------------------------------------------------------
// Schedule simulation
// ---------------------------------------------------------------------------

struct Timeline {
  double makespan_ms = 0.0;
  // Time during which the communication kernel ran with no computation left
  // to overlap (compute SMs idle, static power still burning).
  double exposed_comm_ms = 0.0;
  double window_comp_ms = 0.0;  // end of the last window computation kernel
  double comm_finish_ms = 0.0;  // end of the communication kernel
};

inline void validate_schedule(const PartitionSpec& partition, const ScheduleConfig& config, const GpuModel& gpu) {
  if (!(config.frequency_mhz > 0.0)) throw InvalidScheduleError("frequency must be positive");
  if (!config.timing.valid_for(partition.num_comp()))
    throw InvalidScheduleError("launch timing " + config.timing.to_string() + " invalid for partition '" +
                               partition.name + "'");
  if (!config.timing.is_sequential() && (config.sm_alloc < 1 || config.sm_alloc >= gpu.num_sms))
    throw InvalidScheduleError("SM allocation " + std::to_string(config.sm_alloc) + " must be in [1, " +
                               std::to_string(gpu.num_sms - 1) + "]");
}

namespace detail {

// Runs `window` computation kernels back to back while the communication
// kernel, launched with the first of them, runs on `comm_sms` SMs. While the
// communication is active the computation kernels get the remaining SMs, and
// both share HBM bandwidth in proportion to demand whenever their combined
// demand exceeds capacity. Everything starts after the overlap setup cost.
inline Timeline overlap_window(std::span<const KernelSpec* const> window, const KernelSpec& comm, double f_mhz,
                               int comm_sms, const GpuModel& gpu) {
  Timeline tl;
  std::size_t k = 0;
  double comp_left = 1.0;  // fraction of the current kernel still to run
  double comm_left = comm.comm_bytes > 0.0 ? 1.0 : 0.0;
  double t = gpu.overlap_setup_ms;  // both streams start after the setup
  while (true) {
    while (k < window.size() && window[k]->flops + window[k]->bytes <= 0.0) ++k;
    const bool comp_active = k < window.size();
    const bool comm_active = comm_left > 0.0;
    if (!comp_active && !comm_active) break;

    const int comp_sms = comm_active ? gpu.num_sms - comm_sms : gpu.num_sms;
    double comm_rate = comm_rate_gbps(comm_sms, gpu);
    double comp_bw_frac = 1.0;
    if (comp_active && comm_active) {
      const KernelSpec& kern = *window[k];
      double solo_ms = std::max(compute_term_ms(kern, f_mhz, comp_sms, gpu), memory_term_ms(kern, 1.0, gpu));
      double comp_demand = kern.bytes / (solo_ms * 1e-3) / 1e9;  // GB/s
      double comm_demand = comm_rate * gpu.comm_mem_traffic;
      double total = comp_demand + comm_demand;
      if (total > gpu.mem_bw_gbps) {
        double factor = gpu.mem_bw_gbps / total;
        comp_bw_frac = comp_demand * factor / gpu.mem_bw_gbps;
        comm_rate *= factor;
      }
    } else if (comm_active) {
      double demand = comm_rate * gpu.comm_mem_traffic;
      if (demand > gpu.mem_bw_gbps) comm_rate *= gpu.mem_bw_gbps / demand;
    }

    double comp_ms = comp_active ? kernel_duration(*window[k], f_mhz, comp_sms, comp_bw_frac, gpu) : 0.0;
    double comm_ms = comm_active ? comm.comm_bytes / (comm_rate * 1e9) * 1e3 : 0.0;
    double comp_eta = comp_active ? comp_left * comp_ms : std::numeric_limits<double>::infinity();
    double comm_eta = comm_active ? comm_left * comm_ms : std::numeric_limits<double>::infinity();
    double dt = std::min(comp_eta, comm_eta);

    if (!comp_active) tl.exposed_comm_ms += dt;
    t += dt;
    if (comp_active) {
      if (comp_eta <= dt) {
        comp_left = 1.0;
        ++k;
        tl.window_comp_ms = t;
      } else {
        comp_left -= dt / comp_ms;
      }
    }
    if (comm_active) {
      if (comm_eta <= dt) {
        comm_left = 0.0;
        tl.comm_finish_ms = t;
      } else {
        comm_left -= dt / comm_ms;
      }
    }
  }
  tl.makespan_ms = t;
  return tl;
}

}  // namespace detail

// Event-driven timeline of one partition under one schedule.
inline Timeline simulate_timeline(const PartitionSpec& partition, const ScheduleConfig& config,
                                  const GpuModel& gpu) {
  validate_schedule(partition, config, gpu);
  const double f = config.frequency_mhz;
  const int n = partition.num_comp();

  if (config.timing.is_sequential()) {
    Timeline tl;
    for (const auto& k : partition.comp_kernels) tl.makespan_ms += kernel_duration(k, f, gpu.num_sms, 1.0, gpu);
    tl.window_comp_ms = tl.makespan_ms;
    double comm_ms = kernel_duration(partition.comm_kernel, f, gpu.sm_bw_saturation, 1.0, gpu);
    tl.makespan_ms += comm_ms;
    tl.comm_finish_ms = tl.makespan_ms;
    tl.exposed_comm_ms = comm_ms;
    return tl;
  }

  // The window is rotated to the front: the partition's total time does not
  // depend on where in the cycle the window sits.
  const int start = config.timing.start();
  const int span = config.timing.span();
  std::vector<const KernelSpec*> window;
  for (int i = 0; i < span; ++i) window.push_back(&partition.comp_kernels[(start + i) % n]);
  Timeline tl = detail::overlap_window(window, partition.comm_kernel, f, config.sm_alloc, gpu);
  for (int i = span; i < n; ++i)
    tl.makespan_ms += kernel_duration(partition.comp_kernels[(start + i) % n], f, gpu.num_sms, 1.0, gpu);
  return tl;
}

// Dynamic energy depends only on the work and the frequency, never on the
// schedule; static energy is P_static x makespan.
inline double partition_dynamic_energy(const PartitionSpec& partition, double freq_mhz, const GpuModel& gpu) {
  double e = kernel_dynamic_energy(partition.comm_kernel, freq_mhz, gpu);
  for (const auto& k : partition.comp_kernels) e += kernel_dynamic_energy(k, freq_mhz, gpu);
  return e;
}

inline Measurement simulate_schedule(const PartitionSpec& partition, const ScheduleConfig& config,
                                     const GpuModel& gpu) {
  Timeline tl = simulate_timeline(partition, config, gpu);
  return Measurement::from(tl.makespan_ms, partition_dynamic_energy(partition, config.frequency_mhz, gpu),
                           gpu.p_static_w);
}

// Kernels executed one after another on the whole GPU (components outside
// partitions, or a whole microbatch in the sequential execution model).
inline Measurement sequential_cost(std::span<const KernelSpec> kernels, double freq_mhz, const GpuModel& gpu) {
  double t = 0.0, e = 0.0;
  for (const auto& k : kernels) {
    int sms = k.is_communication() ? gpu.sm_bw_saturation : gpu.num_sms;
    t += kernel_duration(k, freq_mhz, sms, 1.0, gpu);
    e += kernel_dynamic_energy(k, freq_mhz, gpu);
  }
  return Measurement::from(t, e, gpu.p_static_w);
}

// ---------------------------------------------------------------------------
// Thermal model and profiling protocol
// ---------------------------------------------------------------------------

// dT/dt = heat_coeff * P - (T - ambient) / cool_tau. Measured power is scaled
// by (1 + power_temp_coeff * (T - ambient)).
struct ThermalModel {
  double ambient_c = 30.0;
  double heat_coeff_c_per_j = 0.0;
  double cool_tau_s = 0.0;
  double power_temp_coeff = 0.0;

  static ThermalModel inert() { return {}; }
  static ThermalModel typical() { return {30.0, 0.05, 2.0, 0.003}; }

  void validate() const {
    if (ambient_c < 0.0 || heat_coeff_c_per_j < 0.0 || cool_tau_s < 0.0 || power_temp_coeff < 0.0)
      throw ConfigError("thermal coefficients must be >= 0");
  }

  // Temperature after `seconds` at constant power.
  double advance(double temp_c, double power_w, double seconds) const {
    if (cool_tau_s <= 0.0) return ambient_c;
    double eq = ambient_c + heat_coeff_c_per_j * power_w * cool_tau_s;
    return eq + (temp_c - eq) * std::exp(-seconds / cool_tau_s);
  }

  // Time-average of (T - ambient) over `seconds` at constant power.
  double mean_excess(double temp_c, double power_w, double seconds) const {
    if (cool_tau_s <= 0.0) return 0.0;
    if (seconds <= 0.0) return temp_c - ambient_c;
    double eq_excess = heat_coeff_c_per_j * power_w * cool_tau_s;
    double start_excess = temp_c - ambient_c;
    double decay = cool_tau_s / seconds * (1.0 - std::exp(-seconds / cool_tau_s));
    return eq_excess + (start_excess - eq_excess) * decay;
  }
};

struct ProfilingProtocol {
  double warmup_s = 1.0;
  double window_s = 5.0;
  double cooldown_s = 5.0;
  // Relative std-dev of time and dynamic energy for a 1-second window. Energy
  // counters sample at a fixed interval, so the error shrinks as 1 / window.
  double noise_std_frac = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(window_s > 0.0)) throw ConfigError("protocol.window_s must be positive");
    if (warmup_s < 0.0 || cooldown_s < 0.0) throw ConfigError("protocol durations must be >= 0");
    if (noise_std_frac < 0.0) throw ConfigError("protocol.noise_std_frac must be >= 0");
  }

  double effective_noise() const { return noise_std_frac / window_s; }
  long repetitions(double time_ms) const {
    return std::max(1L, static_cast<long>(std::floor(window_s * 1000.0 / time_ms)));
  }
  double seconds_per_candidate() const { return warmup_s + window_s + cooldown_s; }
};

// Per simulated GPU. Not shareable across concurrent measurements.
struct ProfilerState {
  double temp_c = 30.0;
  Rng rng;

  static ProfilerState fresh(const ThermalModel& thermal, std::uint64_t seed) {
    return {thermal.ambient_c, Rng(seed)};
  }
};

// One thermally-aware profiling run: warm-up, measurement window, cooldown.
inline Measurement measure(const PartitionSpec& partition, const ScheduleConfig& config, const GpuModel& gpu,
                           const ThermalModel& thermal, const ProfilingProtocol& protocol, ProfilerState& state) {
  Measurement base = simulate_schedule(partition, config, gpu);
  double power_w = base.time_ms > 0.0 ? base.total_energy_j / (base.time_ms * 1e-3) : 0.0;

  state.temp_c = thermal.advance(state.temp_c, power_w, protocol.warmup_s);
  double excess = thermal.mean_excess(state.temp_c, power_w, protocol.window_s);
  state.temp_c = thermal.advance(state.temp_c, power_w, protocol.window_s);
  double scale = 1.0 + thermal.power_temp_coeff * excess;
  state.temp_c = thermal.advance(state.temp_c, 0.0, protocol.cooldown_s);

  std::normal_distribution<double> normal(0.0, 1.0);
  double sigma = protocol.effective_noise();
  double z_time = normal(state.rng);
  double z_energy = normal(state.rng);
  double time_mult = std::max(0.05, 1.0 + sigma * z_time);
  double energy_mult = std::max(0.05, 1.0 + sigma * z_energy);

  double dyn = (base.dyn_energy_j + (scale - 1.0) * base.total_energy_j) * energy_mult;
  return Measurement::from(base.time_ms * time_mult, dyn, gpu.p_static_w);
}

}  // namespace ecosched
