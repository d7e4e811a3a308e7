// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ecosched/reference.hpp"
#include "ecosched/simgpu.hpp"
#include "support/generators.hpp"

namespace ecosched {
namespace {

const GpuModel kGpu{};

PartitionSpec single(const KernelSpec& comp, const KernelSpec& comm) {
  PartitionSpec p;
  p.name = "p";
  p.comp_kernels = {comp};
  p.comm_kernel = comm;
  return p;
}

TEST(KernelDuration, ComputeBoundScalesInverselyWithFrequency) {
  auto k = KernelSpec::compute("gemm", 8e10, 1e7);
  double fast = kernel_duration(k, kGpu.f_max_mhz, 100, 1.0, kGpu);
  double slow = kernel_duration(k, kGpu.f_max_mhz / 2, 100, 1.0, kGpu);
  EXPECT_DOUBLE_EQ(slow, 2.0 * fast);
}

TEST(KernelDuration, MemoryBoundIgnoresFrequency) {
  auto k = KernelSpec::compute("norm", 1e8, 1e9);
  EXPECT_EQ(kernel_duration(k, 1410.0, 100, 1.0, kGpu), kernel_duration(k, 900.0, 100, 1.0, kGpu));
  EXPECT_EQ(kernel_kind(k, kGpu), KernelKind::kMemoryBound);
  EXPECT_EQ(kernel_kind(KernelSpec::compute("gemm", 8e10, 1e7), kGpu), KernelKind::kComputeBound);
  EXPECT_EQ(kernel_kind(KernelSpec::communication("ar", 1.0), kGpu), KernelKind::kCommunication);
}

TEST(KernelDuration, CommSaturatesAndIgnoresFrequency) {
  auto c = KernelSpec::communication("ar", 5e7);
  const int sat = kGpu.sm_bw_saturation;
  EXPECT_EQ(kernel_duration(c, 1410.0, 2 * sat, 1.0, kGpu), kernel_duration(c, 1410.0, sat, 1.0, kGpu));
  EXPECT_EQ(kernel_duration(c, 900.0, sat, 1.0, kGpu), kernel_duration(c, 1410.0, sat, 1.0, kGpu));
  EXPECT_DOUBLE_EQ(kernel_duration(c, 1410.0, sat / 2, 1.0, kGpu), 2.0 * kernel_duration(c, 1410.0, sat, 1.0, kGpu));
  for (int s = 1; s < 40; ++s)
    EXPECT_LE(kernel_duration(c, 1410.0, s + 1, 1.0, kGpu), kernel_duration(c, 1410.0, s, 1.0, kGpu));
}

TEST(KernelDuration, ZeroWorkAndInvalidArguments) {
  KernelSpec empty{"empty", 0.0, 0.0, 0.0};
  EXPECT_EQ(kernel_duration(empty, 1410.0, 10, 1.0, kGpu), 0.0);
  auto k = KernelSpec::compute("k", 1e9, 1e8);
  EXPECT_THROW(kernel_duration(k, 1410.0, 0, 1.0, kGpu), InvalidScheduleError);
  EXPECT_THROW(kernel_duration(k, 1410.0, 10, 0.0, kGpu), InvalidScheduleError);
  EXPECT_THROW(kernel_duration(k, 1410.0, 10, 1.5, kGpu), InvalidScheduleError);
}

// Timelines below are hand-computed without the overlap setup cost.
GpuModel no_setup() {
  GpuModel g;
  g.overlap_setup_ms = 0.0;
  return g;
}

TEST(SimulateSchedule, ExposedTailTimeline) {
  // 10 ms of pure compute on the SMs left to computation, 15 ms of
  // communication: the last 5 ms are exposed.
  const GpuModel kGpu = no_setup();
  const int s = 16;
  const double f = 1410.0;
  const double flops = 10e-3 * (kGpu.num_sms - s) * kGpu.peak_flops_per_sm_mhz * f;
  const double comm_bytes = 15e-3 * kGpu.net_bw_gbps * 1e9;
  auto p = single(KernelSpec::compute("gemm", flops, 0.0), KernelSpec::communication("ar", comm_bytes));
  auto tl = simulate_timeline(p, {f, s, LaunchTiming::overlap(0, 1)}, kGpu);
  EXPECT_NEAR(tl.makespan_ms, 15.0, 1e-9);
  EXPECT_NEAR(tl.exposed_comm_ms, 5.0, 1e-9);
  EXPECT_NEAR(tl.window_comp_ms, 10.0, 1e-9);
}

TEST(SimulateSchedule, BandwidthSharedInProportionToDemand) {
  // A pure-memory kernel that needs the whole HBM bandwidth for 1 ms, next to
  // communication demanding 2 x 240 GB/s: the kernel keeps 2039/2519 of its
  // bandwidth while both run.
  const GpuModel kGpu = no_setup();
  const double bytes = 1e-3 * kGpu.mem_bw_gbps * 1e9;
  auto p = single(KernelSpec::compute("copy", 0.0, bytes), KernelSpec::communication("ar", 1e9));
  auto tl = simulate_timeline(p, {1410.0, kGpu.sm_bw_saturation, LaunchTiming::overlap(0, 1)}, kGpu);
  const double demand = kGpu.mem_bw_gbps + kGpu.comm_mem_traffic * kGpu.net_bw_gbps;
  EXPECT_NEAR(tl.window_comp_ms, demand / kGpu.mem_bw_gbps, 1e-9);
  // Communication ran at the throttled rate alongside the copy, then alone.
  const double sent = kGpu.net_bw_gbps * kGpu.mem_bw_gbps / demand * 1e9 * tl.window_comp_ms * 1e-3;
  const double rest_ms = (1e9 - sent) / (kGpu.net_bw_gbps * 1e9) * 1e3;
  EXPECT_NEAR(tl.makespan_ms, tl.window_comp_ms + rest_ms, 1e-9);
}

TEST(SimulateSchedule, OverlapSetupShiftsTheWholeTimeline) {
  auto p = reference::attention();
  const ScheduleConfig c{1260.0, 8, LaunchTiming::overlap(1, 2)};
  auto base = simulate_timeline(p, c, no_setup());
  auto shifted = simulate_timeline(p, c, kGpu);
  const double d = kGpu.overlap_setup_ms;
  EXPECT_NEAR(shifted.makespan_ms, base.makespan_ms + d, 1e-12);
  EXPECT_NEAR(shifted.window_comp_ms, base.window_comp_ms + d, 1e-12);
  EXPECT_NEAR(shifted.comm_finish_ms, base.comm_finish_ms + d, 1e-12);
  EXPECT_NEAR(shifted.exposed_comm_ms, base.exposed_comm_ms, 1e-12);
  EXPECT_EQ(simulate_schedule(p, ScheduleConfig::sequential(1260.0), kGpu).time_ms,
            simulate_schedule(p, ScheduleConfig::sequential(1260.0), no_setup()).time_ms);
}

TEST(SimulateSchedule, SequentialIsSumOfParts) {
  auto p = reference::attention();
  const double f = 1200.0;
  auto m = simulate_schedule(p, ScheduleConfig::sequential(f), kGpu);
  double expect = kernel_duration(p.comm_kernel, f, kGpu.sm_bw_saturation, 1.0, kGpu);
  for (const auto& k : p.comp_kernels) expect += kernel_duration(k, f, kGpu.num_sms, 1.0, kGpu);
  EXPECT_DOUBLE_EQ(m.time_ms, expect);
}

TEST(SimulateSchedule, DynamicEnergyIsScheduleInvariant) {
  auto p = reference::attention();
  for (double f : {900.0, 1200.0, 1410.0}) {
    const double ref = simulate_schedule(p, ScheduleConfig::sequential(f), kGpu).dyn_energy_j;
    for (int s : {1, 8, 20, 60})
      for (int st = 0; st < p.num_comp(); ++st)
        for (int sp = 1; sp <= p.num_comp(); ++sp) {
          auto m = simulate_schedule(p, {f, s, LaunchTiming::overlap(st, sp)}, kGpu);
          EXPECT_EQ(m.dyn_energy_j, ref);
          EXPECT_EQ(m.total_energy_j, m.dyn_energy_j + m.static_energy_j);
          EXPECT_DOUBLE_EQ(m.static_energy_j, kGpu.p_static_w * m.time_ms / 1000.0);
        }
  }
}

TEST(SimulateSchedule, DynamicEnergyFollowsFrequencySquaredForCompute) {
  auto k = KernelSpec::compute("gemm", 1e10, 0.0);
  double hi = kernel_dynamic_energy(k, 1410.0, kGpu), lo = kernel_dynamic_energy(k, 705.0, kGpu);
  EXPECT_DOUBLE_EQ(lo, hi / 4.0);
  auto m = KernelSpec::compute("copy", 0.0, 1e9);
  EXPECT_EQ(kernel_dynamic_energy(m, 1410.0, kGpu), kernel_dynamic_energy(m, 705.0, kGpu));
}

TEST(SimulateSchedule, RejectsInvalidConfigs) {
  auto p = reference::attention();
  EXPECT_THROW(simulate_schedule(p, {1410.0, kGpu.num_sms, LaunchTiming::overlap(0, 1)}, kGpu), InvalidScheduleError);
  EXPECT_THROW(simulate_schedule(p, {1410.0, 0, LaunchTiming::overlap(0, 1)}, kGpu), InvalidScheduleError);
  EXPECT_THROW(simulate_schedule(p, {1410.0, 8, LaunchTiming::overlap(4, 1)}, kGpu), InvalidScheduleError);
  EXPECT_THROW(simulate_schedule(p, {0.0, 8, LaunchTiming::overlap(0, 1)}, kGpu), InvalidScheduleError);
}

TEST(SimulateSchedule, InteriorEnergyOptimalSmCount) {
  auto p = reference::attention();
  auto sms = reference::attention_sms(kGpu);
  auto best = reference::energy_argmin(p, kGpu.f_max_mhz, sms, kGpu);
  EXPECT_GT(best.sm_alloc, sms.min());
  EXPECT_LT(best.sm_alloc, sms.max());
}

TEST(SimulateSchedule, LaunchTimingOptimumMovesWithFrequency) {
  auto p = reference::attention();
  auto sms = reference::attention_sms(kGpu);
  auto hi = reference::energy_argmin(p, kGpu.f_max_mhz, sms, kGpu);
  auto lo = reference::energy_argmin(p, 0.78 * kGpu.f_max_mhz, sms, kGpu);
  EXPECT_NE(hi.timing.start(), lo.timing.start());
}

// Forward-Euler integration of dT/dt = h P - (T - T_a) / tau.
double euler(const ThermalModel& m, double t0, double p, double secs, double* mean_excess) {
  const int steps = 200000;
  const double dt = secs / steps;
  double t = t0, acc = 0.0;
  for (int i = 0; i < steps; ++i) {
    acc += (t - m.ambient_c) * dt;
    t += dt * (m.heat_coeff_c_per_j * p - (t - m.ambient_c) / m.cool_tau_s);
  }
  *mean_excess = acc / secs;
  return t;
}

TEST(Thermal, ClosedFormMatchesNumericalIntegration) {
  auto m = ThermalModel::typical();
  for (auto [t0, p, secs] : std::vector<std::tuple<double, double, double>>{{30, 300, 5}, {60, 0, 3}, {45, 150, 10}}) {
    double mean = 0.0;
    double t = euler(m, t0, p, secs, &mean);
    EXPECT_NEAR(m.advance(t0, p, secs), t, 1e-3);
    EXPECT_NEAR(m.mean_excess(t0, p, secs), mean, 1e-3);
  }
}

TEST(Measure, InertAndNoiseFreeEqualsSimulation) {
  auto p = reference::attention();
  ScheduleConfig c{1230.0, 12, LaunchTiming::overlap(1, 2)};
  auto state = ProfilerState::fresh(ThermalModel::inert(), 5);
  ProfilingProtocol proto{1.0, 5.0, 5.0, 0.0, 0};
  for (int i = 0; i < 3; ++i)
    EXPECT_EQ(measure(p, c, kGpu, ThermalModel::inert(), proto, state), simulate_schedule(p, c, kGpu));
}

TEST(Measure, CooldownLowersTheNextMeasurement) {
  auto p = reference::attention();
  ScheduleConfig c{1410.0, 8, LaunchTiming::overlap(0, 4)};
  auto thermal = ThermalModel::typical();
  auto second = [&](double cooldown) {
    ProfilingProtocol proto{1.0, 5.0, cooldown, 0.0, 0};
    auto state = ProfilerState::fresh(thermal, 1);
    measure(p, c, kGpu, thermal, proto, state);
    return measure(p, c, kGpu, thermal, proto, state).total_energy_j;
  };
  EXPECT_GT(second(0.0), second(5.0 * thermal.cool_tau_s));
}

TEST(Measure, CooldownReturnsToAmbient) {
  auto p = reference::attention();
  ScheduleConfig c{1410.0, 8, LaunchTiming::overlap(0, 4)};
  auto thermal = ThermalModel::typical();
  ProfilingProtocol proto{1.0, 5.0, 5.0 * thermal.cool_tau_s, 0.0, 0};
  auto state = ProfilerState::fresh(thermal, 1);
  auto base = simulate_schedule(p, c, kGpu);
  const double power = base.total_energy_j / (base.time_ms * 1e-3);
  // Closed form: heat for warm-up plus window, then decay for five time constants.
  const double eq = thermal.heat_coeff_c_per_j * power * thermal.cool_tau_s;
  const double hot = eq * (1.0 - std::exp(-(proto.warmup_s + proto.window_s) / thermal.cool_tau_s));
  measure(p, c, kGpu, thermal, proto, state);
  EXPECT_NEAR(state.temp_c - thermal.ambient_c, hot * std::exp(-5.0), 1e-9);
  EXPECT_LE(std::abs(state.temp_c - thermal.ambient_c), 0.01 * thermal.ambient_c);
}

TEST(Measure, NoiseShrinksWithWindow) {
  ProfilingProtocol a{1.0, 1.0, 0.0, 0.05, 0}, b{1.0, 10.0, 0.0, 0.05, 0};
  EXPECT_DOUBLE_EQ(a.effective_noise(), 0.05);
  EXPECT_DOUBLE_EQ(b.effective_noise(), 0.005);
}

TEST(Measure, SeededNoiseIsReproducible) {
  auto p = reference::attention();
  ScheduleConfig c{1410.0, 8, LaunchTiming::overlap(0, 4)};
  ProfilingProtocol proto{1.0, 5.0, 5.0, 0.05, 0};
  auto s1 = ProfilerState::fresh(ThermalModel::typical(), 9), s2 = ProfilerState::fresh(ThermalModel::typical(), 9);
  for (int i = 0; i < 5; ++i)
    EXPECT_EQ(measure(p, c, kGpu, ThermalModel::typical(), proto, s1),
              measure(p, c, kGpu, ThermalModel::typical(), proto, s2));
}

TEST(GpuModel, ValidationRejectsNonsense) {
  GpuModel g;
  g.sm_bw_saturation = g.num_sms + 1;
  EXPECT_THROW(g.validate(), ConfigError);
  g = GpuModel{};
  g.p_static_w = 0.0;
  EXPECT_THROW(g.validate(), ConfigError);
  EXPECT_NO_THROW(GpuModel{}.validate());
}

}  // namespace
}  // namespace ecosched
