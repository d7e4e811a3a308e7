// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "ecosched/mbo.hpp"
#include "ecosched/reference.hpp"
#include "ecosched/surrogate.hpp"

namespace ecosched {
namespace {

const GpuModel kGpu{};

struct Data {
  std::vector<ScheduleConfig> x;
  std::vector<double> time, energy;
};

// Simulator samples over the medium reference partition's space.
Data simulated(const std::vector<ScheduleConfig>& configs) {
  Data d;
  auto p = reference::medium();
  for (const auto& c : configs) {
    auto m = simulate_schedule(p, c, kGpu);
    d.x.push_back(c);
    d.time.push_back(m.time_ms);
    d.energy.push_back(m.dyn_energy_j);
  }
  return d;
}

FeatureEncoder encoder_for(const SearchSpace& s, int span) { return FeatureEncoder(s.freqs, s.sms, span); }

double rmse(const TreeEnsembleModel& m, const std::vector<ScheduleConfig>& x, const std::vector<double>& y) {
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(m.predict(x[i]) - y[i], 2);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

TEST(FeatureEncoder, DeterministicAndScaled) {
  FeatureEncoder e(FrequencyGrid::range(900, 1410, 30), SmGrid({4, 8, 12, 16}, 108), 3);
  auto v = e.encode({1410.0, 16, LaunchTiming::overlap(2, 3)});
  EXPECT_DOUBLE_EQ(v.freq_norm, 1.0);
  EXPECT_DOUBLE_EQ(v.sm_norm, 1.0);
  EXPECT_EQ(v.timing_idx, 1 + 2 * 3 + 2);
  auto s = e.encode(ScheduleConfig::sequential(900.0));
  EXPECT_DOUBLE_EQ(s.freq_norm, 0.0);
  EXPECT_EQ(s.timing_idx, 0);
  EXPECT_EQ(e.encode({1200.0, 8, LaunchTiming::overlap(0, 1)}).as_array(),
            e.encode({1200.0, 8, LaunchTiming::overlap(0, 1)}).as_array());
}

TEST(Normalization, RoundTrip) {
  std::vector<double> y = {3.5, -2.0, 7.25, 0.0};
  auto n = Normalization::of(y);
  for (double v : y) EXPECT_NEAR(n.denormalize(n.normalize(v)), v, 1e-12);
  EXPECT_DOUBLE_EQ(n.normalize(-2.0), 0.0);
  EXPECT_DOUBLE_EQ(n.normalize(7.25), 1.0);
  std::vector<double> flat = {4.0, 4.0};
  auto c = Normalization::of(flat);
  EXPECT_DOUBLE_EQ(c.denormalize(c.normalize(4.0)), 4.0);
}

TEST(TreeEnsembleModel, ConstantTargetPredictsConstant) {
  auto space = reference::mbo_space(kGpu);
  auto configs = enumerate_space(reference::medium(), space, &kGpu);
  std::vector<ScheduleConfig> x(configs.begin(), configs.begin() + 30);
  std::vector<double> y(x.size(), 4.2);
  auto m = TreeEnsembleModel::fit(encoder_for(space, 3), x, y);
  for (const auto& c : configs) EXPECT_DOUBLE_EQ(m.predict(c), 4.2);
}

TEST(TreeEnsembleModel, IdenticalFeaturesPredictTheirMean) {
  FeatureEncoder e(FrequencyGrid::defaults(), SmGrid::defaults(2, 108), 3);
  std::vector<ScheduleConfig> x(4, ScheduleConfig{1200.0, 8, LaunchTiming::overlap(0, 1)});
  std::vector<double> y = {1.0, 2.0, 3.0, 6.0};
  auto m = TreeEnsembleModel::fit(e, x, y);
  EXPECT_NEAR(m.predict(x[0]), 3.0, 1e-12);
}

TEST(TreeEnsembleModel, NeverWorseThanTheMeanOnTrainingData) {
  auto space = reference::mbo_space(kGpu);
  auto configs = enumerate_space(reference::medium(), space, &kGpu);
  std::mt19937_64 rng(3);
  std::shuffle(configs.begin(), configs.end(), rng);
  configs.resize(40);
  auto d = simulated(configs);
  auto m = TreeEnsembleModel::fit(encoder_for(space, 3), d.x, d.time);
  double mean = std::accumulate(d.time.begin(), d.time.end(), 0.0) / d.time.size();
  double ss = 0.0;
  for (double v : d.time) ss += (v - mean) * (v - mean);
  EXPECT_LE(rmse(m, d.x, d.time), std::sqrt(ss / d.time.size()));
}

TEST(TreeEnsembleModel, FitsTrainingRowsClosely) {
  auto space = reference::mbo_space(kGpu);
  auto configs = enumerate_space(reference::medium(), space, &kGpu);
  std::mt19937_64 rng(4);
  std::shuffle(configs.begin(), configs.end(), rng);
  configs.resize(30);
  auto d = simulated(configs);
  for (const auto* y : {&d.time, &d.energy}) {
    auto m = TreeEnsembleModel::fit(encoder_for(space, 3), d.x, *y);
    for (std::size_t i = 0; i < d.x.size(); ++i)
      EXPECT_NEAR(m.normalization().normalize(m.predict(d.x[i])), m.normalization().normalize((*y)[i]), 0.05);
  }
}

// Training grid: every other frequency times all ten timings at 8 SMs (50
// configs). Held out: the interleaved frequencies at the same SMs and timings.
TEST(TreeEnsembleModel, GeneralizesOnSimulatorGrid) {
  auto space = reference::mbo_space(kGpu);
  std::vector<ScheduleConfig> train, test;
  for (const auto& c : enumerate_space(reference::medium(), space, &kGpu)) {
    if (!c.timing.is_sequential() && c.sm_alloc != 8) continue;
    const auto k = std::lround((c.frequency_mhz - space.freqs.min()) / 60.0);
    (k % 2 == 0 ? train : test).push_back(c);
  }
  ASSERT_EQ(train.size(), 50u);
  auto tr = simulated(train), te = simulated(test);
  auto check = [&](const std::vector<double>& ytr, const std::vector<double>& yte, const char* what) {
    auto m = TreeEnsembleModel::fit(encoder_for(space, 3), tr.x, ytr);
    auto [lo, hi] = std::minmax_element(yte.begin(), yte.end());
    EXPECT_LT(rmse(m, te.x, yte), 0.10 * (*hi - *lo)) << what;
  };
  check(tr.time, te.time, "time");
  check(tr.energy, te.energy, "dynamic energy");
}

TEST(TreeEnsembleModel, DeterministicAndQueryOrderInvariant) {
  auto space = reference::mbo_space(kGpu);
  auto configs = enumerate_space(reference::medium(), space, &kGpu);
  auto d = simulated(std::vector<ScheduleConfig>(configs.begin(), configs.begin() + 60));
  auto a = TreeEnsembleModel::fit(encoder_for(space, 3), d.x, d.time);
  auto b = TreeEnsembleModel::fit(encoder_for(space, 3), d.x, d.time);
  std::vector<double> forward, backward;
  for (const auto& c : configs) forward.push_back(a.predict(c));
  for (auto it = configs.rbegin(); it != configs.rend(); ++it) backward.push_back(b.predict(*it));
  std::reverse(backward.begin(), backward.end());
  EXPECT_EQ(forward, backward);
}

TEST(TreeEnsembleModel, RejectsTinyDatasets) {
  FeatureEncoder e(FrequencyGrid::defaults(), SmGrid::defaults(2, 108), 3);
  std::vector<ScheduleConfig> x = {ScheduleConfig::sequential(900.0)};
  std::vector<double> y = {1.0};
  EXPECT_THROW(TreeEnsembleModel::fit(e, x, y), std::invalid_argument);
}

TEST(BootstrapEnsemble, IdentityResamplingGivesZeroUncertainty) {
  auto space = reference::mbo_space(kGpu);
  auto configs = enumerate_space(reference::medium(), space, &kGpu);
  auto d = simulated(std::vector<ScheduleConfig>(configs.begin(), configs.begin() + 40));
  auto enc = encoder_for(space, 3);
  auto t = fit_ensemble(enc, d.x, d.time, 5, 1.0, 7, {}, Resampling::kIdentity);
  auto e = fit_ensemble(enc, d.x, d.energy, 5, 1.0, 7, {}, Resampling::kIdentity);
  for (const auto& c : configs) EXPECT_EQ(uncertainty(t, e, c), 0.0);
}

TEST(BootstrapEnsemble, DefaultMembersHaveDistinctSeeds) {
  auto space = reference::mbo_space(kGpu);
  auto configs = enumerate_space(reference::medium(), space, &kGpu);
  auto d = simulated(std::vector<ScheduleConfig>(configs.begin(), configs.begin() + 40));
  MboHyperparams h;
  auto ens = fit_ensemble(encoder_for(space, 3), d.x, d.time, h.ensemble_m, h.bootstrap_fraction, 11);
  EXPECT_EQ(ens.members.size(), 5u);
  EXPECT_EQ(std::set<std::uint64_t>(ens.member_seeds.begin(), ens.member_seeds.end()).size(), 5u);
}

TEST(BootstrapEnsemble, DisagreesMoreAwayFromData) {
  // One-dimensional slice over frequency: training rows cover the lower half
  // of the grid, the far query sits at the top.
  FeatureEncoder enc(900.0, 1410.0, 8, 8, 1);
  std::vector<ScheduleConfig> x;
  std::vector<double> y;
  for (double f = 900.0; f <= 1140.0; f += 10.0) {
    x.push_back({f, 8, LaunchTiming::overlap(0, 1)});
    y.push_back(std::pow((f - 900.0) / 100.0, 3));
  }
  auto ens = fit_ensemble(enc, x, y, 5, 0.8, 3);
  auto far = ens.predict_normalized({1410.0, 8, LaunchTiming::overlap(0, 1)});
  auto near = ens.predict_normalized(x.front());
  EXPECT_GE(population_stddev(far), population_stddev(near));
}

TEST(Uncertainty, SumOfStandardDeviations) {
  FeatureEncoder enc(900.0, 1410.0, 8, 8, 1);
  std::vector<ScheduleConfig> x(5, ScheduleConfig{1000.0, 8, LaunchTiming::overlap(0, 1)});
  Normalization unit{0.0, 1.0};
  auto constant = [&](double v) { return TreeEnsembleModel::fit(enc, x, std::vector<double>(5, v), {}, unit); };
  BootstrapEnsemble t{{constant(0.1), constant(0.3)}, {1, 2}};
  BootstrapEnsemble e{{constant(0.2), constant(0.2)}, {1, 2}};
  EXPECT_NEAR(uncertainty(t, e, x[0]), 0.1, 1e-12);
}

TEST(Uncertainty, NonNegativeOnRandomEnsembles) {
  auto space = reference::mbo_space(kGpu);
  auto configs = enumerate_space(reference::medium(), space, &kGpu);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> pick(0, configs.size() - 1);
  std::uniform_real_distribution<double> noise(0.0, 1.0);
  auto enc = encoder_for(space, 3);
  int checked = 0;
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<ScheduleConfig> x;
    std::vector<double> t, e;
    for (int i = 0; i < 20; ++i) {
      x.push_back(configs[pick(rng)]);
      t.push_back(noise(rng));
      e.push_back(noise(rng));
    }
    auto te = fit_ensemble(enc, x, t, 3, 0.8, trial, {3, 0.3, 10});
    auto ee = fit_ensemble(enc, x, e, 3, 0.8, trial + 100, {3, 0.3, 10});
    for (int q = 0; q < 250; ++q, ++checked) EXPECT_GE(uncertainty(te, ee, configs[pick(rng)]), 0.0);
  }
  EXPECT_EQ(checked, 1000);
}

TEST(PopulationStddev, TwoPoints) {
  std::vector<double> v = {0.1, 0.3};
  EXPECT_NEAR(population_stddev(v), 0.1, 1e-15);
}

}  // namespace
}  // namespace ecosched
