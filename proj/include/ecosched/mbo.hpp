// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Multi-pass multi-objective Bayesian optimization of one partition's
// schedule space. Each batch mixes three hypervolume-improvement passes
// (total, dynamic and static energy against predicted time) with an
// exploration pass ranked by bootstrap-ensemble disagreement.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ecosched/domain.hpp"
#include "ecosched/pareto.hpp"
#include "ecosched/rng.hpp"
#include "ecosched/simgpu.hpp"
#include "ecosched/surrogate.hpp"

namespace ecosched {

enum class PassLabel { kInit, kTotal, kDynamic, kStatic, kUncertainty };
inline constexpr std::array<PassLabel, 5> kAllPasses = {PassLabel::kInit, PassLabel::kTotal, PassLabel::kDynamic,
                                                        PassLabel::kStatic, PassLabel::kUncertainty};

inline const char* to_string(PassLabel p) {
  switch (p) {
    case PassLabel::kInit: return "init";
    case PassLabel::kTotal: return "total";
    case PassLabel::kDynamic: return "dynamic";
    case PassLabel::kStatic: return "static";
    case PassLabel::kUncertainty: return "uncertainty";
  }
  return "?";
}

inline PassLabel parse_pass_label(const std::string& s) {
  for (PassLabel p : kAllPasses)
    if (s == to_string(p)) return p;
  throw ConfigError("unknown pass label '" + s + "'");
}

struct MboHyperparams {
  int n_init = 36;
  int b_max = 3;
  int batch_k = 16;
  // Shares of each batch for the total, dynamic, static and uncertainty passes.
  std::array<double, 4> pass_fractions = {0.4, 0.2, 0.2, 0.2};
  int ensemble_m = 5;
  double bootstrap_fraction = 0.8;
  int stop_window_r = 2;
  double stop_eps = 1e-3;
  std::uint64_t seed = 0;
  BoostingParams boosting{};

  static MboHyperparams defaults_for(PartitionClass c) {
    MboHyperparams h;
    switch (c) {
      case PartitionClass::kSmall: h.n_init = 36, h.b_max = 3, h.batch_k = 16; break;
      case PartitionClass::kMedium: h.n_init = 48, h.b_max = 4, h.batch_k = 16; break;
      case PartitionClass::kLarge: h.n_init = 96, h.b_max = 4, h.batch_k = 32; break;
    }
    return h;
  }

  void validate() const {
    if (n_init < 1) throw ConfigError("mbo.n_init must be >= 1");
    if (b_max < 0) throw ConfigError("mbo.b_max must be >= 0");
    if (batch_k < 1) throw ConfigError("mbo.batch_k must be >= 1");
    double sum = 0.0;
    for (double f : pass_fractions) {
      if (f < 0.0) throw ConfigError("mbo.pass_fractions must be >= 0");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("mbo.pass_fractions must sum to 1");
    if (ensemble_m < 2) throw ConfigError("mbo.ensemble_m must be >= 2");
    if (!(bootstrap_fraction > 0.0) || bootstrap_fraction > 1.0)
      throw ConfigError("mbo.bootstrap_fraction must be in (0, 1]");
    if (stop_window_r < 1) throw ConfigError("mbo.stop_window_r must be >= 1");
    if (stop_eps < 0.0) throw ConfigError("mbo.stop_eps must be >= 0");
    if (b_max > 0 && n_init < 5) throw ConfigError("mbo.n_init must be >= 5 when batches are enabled");
  }

  std::size_t max_evaluations() const {
    return static_cast<std::size_t>(n_init) + static_cast<std::size_t>(b_max) * static_cast<std::size_t>(batch_k);
  }
};

// ---------------------------------------------------------------------------
// Search space
// ---------------------------------------------------------------------------

struct SpaceOptions {
  int max_overlap_len = 9;
  // Drop windows whose computation can never outlast the communication, even
  // at the lowest frequency on the fewest SMs.
  bool exclude_always_exposed = true;
};

struct SearchSpace {
  FrequencyGrid freqs = FrequencyGrid::defaults();
  SmGrid sms;
  SpaceOptions options{};
};

inline int max_span(const PartitionSpec& partition, const SpaceOptions& opts) {
  return std::max(0, std::min(opts.max_overlap_len, partition.num_comp()));
}

// Overlap windows (start, span) with span <= max_overlap_len over the cyclic
// computation sequence: n * min(cap, n) before exclusions.
inline std::vector<LaunchTiming> overlap_timings(const PartitionSpec& partition, const SearchSpace& space,
                                                 const GpuModel* gpu) {
  const int n = partition.num_comp();
  const int cap = max_span(partition, space.options);
  std::vector<LaunchTiming> out;
  double comm_min = 0.0;
  if (gpu && space.options.exclude_always_exposed)
    comm_min = kernel_duration(partition.comm_kernel, gpu->f_max_mhz, space.sms.max(), 1.0, *gpu);
  for (int start = 0; start < n; ++start) {
    for (int span = 1; span <= cap; ++span) {
      if (gpu && space.options.exclude_always_exposed) {
        const int comp_sms = gpu->num_sms - space.sms.max();
        double slowest = 0.0;
        for (int i = 0; i < span; ++i)
          slowest += kernel_duration(partition.comp_kernels[(start + i) % n], space.freqs.min(),
                                     std::max(1, comp_sms), 1.0, *gpu);
        if (slowest < comm_min) continue;
      }
      out.push_back(LaunchTiming::overlap(start, span));
    }
  }
  return out;
}

// Frequencies x SM allocations x overlap windows, plus one sequential config
// per frequency; sorted lexicographically. Pass gpu = nullptr to skip the
// always-exposed exclusion.
inline std::vector<ScheduleConfig> enumerate_space(const PartitionSpec& partition, const SearchSpace& space,
                                                   const GpuModel* gpu) {
  partition.validate();
  auto timings = overlap_timings(partition, space, gpu);
  std::vector<ScheduleConfig> out;
  out.reserve(space.freqs.size() * (1 + space.sms.size() * timings.size()));
  for (double f : space.freqs.values()) {
    out.push_back(ScheduleConfig::sequential(f));
    for (int s : space.sms.values())
      for (const auto& t : timings) out.push_back({f, s, t});
  }
  return out;
}

// Largest-remainder apportionment of k over the four pass fractions; the
// returned uncertainty share is what remains after the three HVI passes.
inline std::array<int, 4> pass_quotas(int k, const std::array<double, 4>& fractions) {
  std::array<int, 4> q{};
  std::array<double, 4> rem{};
  int used = 0;
  for (int i = 0; i < 4; ++i) {
    double exact = fractions[i] * k;
    q[i] = static_cast<int>(std::floor(exact + 1e-9));
    rem[i] = exact - q[i];
    used += q[i];
  }
  std::array<int, 4> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b] + 1e-12; });
  for (int i = 0; used < k && i < 4; ++i, ++used) ++q[order[i]];
  return q;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct EvaluatedRow {
  ScheduleConfig config;
  Measurement measurement;
  int batch = 0;
  PassLabel pass = PassLabel::kInit;

  friend bool operator<(const EvaluatedRow& a, const EvaluatedRow& b) { return a.config < b.config; }
};

class EvaluatedDataset {
 public:
  explicit EvaluatedDataset(std::vector<ScheduleConfig> space) : space_(std::move(space)), evaluated_(space_.size(), 0) {
    if (!std::is_sorted(space_.begin(), space_.end()))
      throw std::invalid_argument("candidate space must be sorted");
  }

  const std::vector<ScheduleConfig>& candidate_space() const { return space_; }
  const std::vector<EvaluatedRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  std::optional<std::size_t> index_of(const ScheduleConfig& c) const {
    auto it = std::lower_bound(space_.begin(), space_.end(), c);
    if (it == space_.end() || !(*it == c)) return std::nullopt;
    return static_cast<std::size_t>(it - space_.begin());
  }
  bool is_evaluated(std::size_t idx) const { return evaluated_[idx] != 0; }

  void add(EvaluatedRow row) {
    auto idx = index_of(row.config);
    if (!idx) throw std::invalid_argument("config outside the candidate space");
    if (evaluated_[*idx]) throw std::logic_error("config evaluated twice");
    evaluated_[*idx] = 1;
    rows_.push_back(std::move(row));
  }

  std::vector<TimeEnergy> objectives(double (*energy)(const Measurement&), std::size_t limit) const {
    std::vector<TimeEnergy> out;
    for (std::size_t i = 0; i < std::min(limit, rows_.size()); ++i)
      out.push_back({rows_[i].measurement.time_ms, energy(rows_[i].measurement)});
    return out;
  }

 private:
  std::vector<ScheduleConfig> space_;
  std::vector<char> evaluated_;
  std::vector<EvaluatedRow> rows_;
};

inline double dyn_energy_of(const Measurement& m) { return m.dyn_energy_j; }
inline double total_energy_of(const Measurement& m) { return m.total_energy_j; }

// Frontier of evaluated rows keyed on (time, dynamic) or (time, total) energy.
inline ParetoFrontier<EvaluatedRow> rows_frontier(std::span<const EvaluatedRow> rows, bool total_energy = false) {
  std::vector<FrontierPoint<EvaluatedRow>> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows)
    pts.push_back({r.measurement.time_ms, total_energy ? r.measurement.total_energy_j : r.measurement.dyn_energy_j, r});
  return get_frontier(std::move(pts));
}

// Per-frequency frontiers over (time, dynamic energy): the options a
// microbatch composition may pick from at each frequency.
inline std::map<double, ParetoFrontier<EvaluatedRow>> per_frequency_frontiers(std::span<const EvaluatedRow> rows) {
  std::map<double, std::vector<EvaluatedRow>> by_freq;
  for (const auto& r : rows) by_freq[r.config.frequency_mhz].push_back(r);
  std::map<double, ParetoFrontier<EvaluatedRow>> out;
  for (auto& [f, rs] : by_freq) out.emplace(f, rows_frontier(rs));
  return out;
}

// ---------------------------------------------------------------------------
// Candidate selection
// ---------------------------------------------------------------------------

struct SurrogateSet {
  TreeEnsembleModel time;
  TreeEnsembleModel energy;  // dynamic energy
  BootstrapEnsemble time_ens;
  BootstrapEnsemble energy_ens;
};

inline SurrogateSet fit_surrogates(const EvaluatedDataset& data, const FeatureEncoder& encoder,
                                   const MboHyperparams& hyper, int batch) {
  std::vector<ScheduleConfig> xs;
  std::vector<double> ts, es;
  for (const auto& r : data.rows()) {
    xs.push_back(r.config);
    ts.push_back(r.measurement.time_ms);
    es.push_back(r.measurement.dyn_energy_j);
  }
  SurrogateSet s{TreeEnsembleModel::fit(encoder, xs, ts, hyper.boosting),
                 TreeEnsembleModel::fit(encoder, xs, es, hyper.boosting),
                 {},
                 {}};
  s.time_ens = fit_ensemble(encoder, xs, ts, hyper.ensemble_m, hyper.bootstrap_fraction,
                            derive_seed(hyper.seed, "ensemble-time", batch), hyper.boosting);
  s.energy_ens = fit_ensemble(encoder, xs, es, hyper.ensemble_m, hyper.bootstrap_fraction,
                              derive_seed(hyper.seed, "ensemble-energy", batch), hyper.boosting);
  return s;
}

struct SelectedConfig {
  ScheduleConfig config;
  PassLabel pass;
};

// Predicted (time, energy-variant) pair used by one HVI pass.
inline TimeEnergy predicted_objectives(PassLabel pass, double t_ms, double dyn_j, double p_static_w) {
  double stat = p_static_w * t_ms / 1000.0;
  switch (pass) {
    case PassLabel::kTotal: return {t_ms, dyn_j + stat};
    case PassLabel::kDynamic: return {t_ms, dyn_j};
    case PassLabel::kStatic: return {t_ms, stat};
    default: throw std::invalid_argument("not an HVI pass");
  }
}

// Up to batch_k unevaluated configs: TopK by HVI for total, dynamic and static
// energy (positive improvement only), then TopK uncertainty for the rest. Ties
// go to the lexicographically smaller config.
inline std::vector<SelectedConfig> select_batch(const SurrogateSet& models, const EvaluatedDataset& data,
                                                double p_static_w, const MboHyperparams& hyper) {
  const auto& space = data.candidate_space();
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (!data.is_evaluated(i)) open.push_back(i);
  std::vector<SelectedConfig> chosen;
  if (open.empty() || data.size() == 0) return chosen;

  std::vector<double> t_hat(space.size()), e_hat(space.size());
  for (std::size_t i : open) {
    t_hat[i] = models.time.predict(space[i]);
    e_hat[i] = models.energy.predict(space[i]);
  }

  std::vector<char> taken(space.size(), 0);
  auto take_top = [&](std::vector<std::pair<double, std::size_t>>& scored, int quota, PassLabel label) {
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return space[a.second] < space[b.second];
    });
    for (const auto& [score, i] : scored) {
      if (quota <= 0) break;
      if (taken[i]) continue;
      taken[i] = 1;
      chosen.push_back({space[i], label});
      --quota;
    }
  };

  const auto quotas = pass_quotas(hyper.batch_k, hyper.pass_fractions);
  const std::array<PassLabel, 3> hvi_passes = {PassLabel::kTotal, PassLabel::kDynamic, PassLabel::kStatic};
  for (int p = 0; p < 3; ++p) {
    const PassLabel label = hvi_passes[p];
    std::vector<TimeEnergy> observed;
    std::vector<FrontierPoint<NoPayload>> obs_pts;
    for (const auto& r : data.rows()) {
      auto te = predicted_objectives(label, r.measurement.time_ms, r.measurement.dyn_energy_j, p_static_w);
      observed.push_back(te);
      obs_pts.push_back({te.time_ms, te.energy_j, {}});
    }
    const RefPoint ref = compute_ref_point(observed);
    const auto frontier = get_frontier(std::move(obs_pts));
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i : open) {
      if (taken[i]) continue;
      double gain = hvi(frontier, predicted_objectives(label, t_hat[i], e_hat[i], p_static_w), ref);
      if (gain > 0.0) scored.emplace_back(gain, i);
    }
    take_top(scored, quotas[p], label);
  }

  const int remaining = hyper.batch_k - static_cast<int>(chosen.size());
  if (remaining > 0) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i : open)
      if (!taken[i]) scored.emplace_back(uncertainty(models.time_ens, models.energy_ens, space[i]), i);
    take_top(scored, remaining, PassLabel::kUncertainty);
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Stopping rule
// ---------------------------------------------------------------------------

// Stop once the mean of the last `window` relative HV gains falls below eps.
inline bool should_stop(std::span<const double> rel_gains, int window, double eps) {
  if (window < 1 || rel_gains.size() < static_cast<std::size_t>(window)) return false;
  double sum = 0.0;
  for (std::size_t i = rel_gains.size() - window; i < rel_gains.size(); ++i) sum += rel_gains[i];
  return sum / window < eps;
}

// Hypervolume of the first `prefix` rows' (time, dynamic energy) frontier,
// with both objectives min-max normalized over `norm_rows` and the reference
// point at 1.1 in each normalized coordinate.
inline double normalized_hv(std::span<const EvaluatedRow> norm_rows, std::size_t prefix) {
  if (norm_rows.empty() || prefix == 0) return 0.0;
  std::vector<double> ts, es;
  for (const auto& r : norm_rows) {
    ts.push_back(r.measurement.time_ms);
    es.push_back(r.measurement.dyn_energy_j);
  }
  Normalization nt = Normalization::of(ts), ne = Normalization::of(es);
  std::vector<TimeEnergy> pts;
  for (std::size_t i = 0; i < std::min(prefix, norm_rows.size()); ++i)
    pts.push_back({nt.normalize(ts[i]), ne.normalize(es[i])});
  RefPoint ref{1.1, 1.1};
  return hypervolume(get_frontier(pts), ref);
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct MboResult {
  std::vector<EvaluatedRow> rows;                  // in evaluation order
  ParetoFrontier<EvaluatedRow> frontier;           // (time, dynamic energy)
  ParetoFrontier<EvaluatedRow> frontier_total;     // (time, total energy)
  std::vector<double> hv_per_batch;                // normalized HV after init and each batch
  std::vector<double> rel_gains;                   // relative HV gain of each batch
  std::size_t space_size = 0;
  int batches_run = 0;
  bool stopped_early = false;
  bool exhaustive = false;                         // n_init covered the whole space
};

// Evaluates configs one at a time on a single simulated GPU.
class Profiler {
 public:
  Profiler(GpuModel gpu, ThermalModel thermal, ProfilingProtocol protocol, std::uint64_t seed)
      : gpu_(std::move(gpu)),
        thermal_(thermal),
        protocol_(protocol),
        state_(ProfilerState::fresh(thermal_, seed)) {}

  Measurement operator()(const PartitionSpec& p, const ScheduleConfig& c) {
    ++count_;
    return measure(p, c, gpu_, thermal_, protocol_, state_);
  }

  std::size_t evaluations() const { return count_; }
  const GpuModel& gpu() const { return gpu_; }

 private:
  GpuModel gpu_;
  ThermalModel thermal_;
  ProfilingProtocol protocol_;
  ProfilerState state_;
  std::size_t count_ = 0;
};

inline MboResult run_mbo(const PartitionSpec& partition, const GpuModel& gpu, const ThermalModel& thermal,
                         const ProfilingProtocol& protocol, const MboHyperparams& hyper, const SearchSpace& space) {
  hyper.validate();
  gpu.validate();
  auto candidates = enumerate_space(partition, space, &gpu);
  if (candidates.empty()) throw std::invalid_argument("run_mbo: empty candidate space");

  MboResult result;
  result.space_size = candidates.size();
  EvaluatedDataset data(candidates);
  Profiler profile(gpu, thermal, protocol, derive_seed(protocol.seed, "profiler", hyper.seed));
  const FeatureEncoder encoder(space.freqs, space.sms, max_span(partition, space.options));

  auto evaluate = [&](const ScheduleConfig& c, int batch, PassLabel pass) {
    data.add({c, profile(partition, c), batch, pass});
  };

  // Uniform sample without replacement (partial Fisher-Yates).
  const std::size_t n = candidates.size();
  if (static_cast<std::size_t>(hyper.n_init) >= n) {
    for (const auto& c : candidates) evaluate(c, 0, PassLabel::kInit);
    result.exhaustive = true;
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(hyper.seed, "init");
    for (std::size_t i = 0; i < static_cast<std::size_t>(hyper.n_init); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
      evaluate(candidates[idx[i]], 0, PassLabel::kInit);
    }
  }

  std::vector<std::size_t> batch_ends = {data.size()};
  if (!result.exhaustive) {
    for (int b = 1; b <= hyper.b_max; ++b) {
      SurrogateSet models = fit_surrogates(data, encoder, hyper, b);
      auto batch = select_batch(models, data, gpu.p_static_w, hyper);
      if (batch.empty()) break;
      const std::size_t before = data.size();
      for (const auto& s : batch) evaluate(s.config, b, s.pass);
      batch_ends.push_back(data.size());
      result.batches_run = b;

      double hv_prev = normalized_hv(data.rows(), before);
      double hv_now = normalized_hv(data.rows(), data.size());
      double gain = hv_prev > 0.0 ? (hv_now - hv_prev) / hv_prev : (hv_now > 0.0 ? 1.0 : 0.0);
      result.rel_gains.push_back(gain);
      if (should_stop(result.rel_gains, hyper.stop_window_r, hyper.stop_eps)) {
        result.stopped_early = b < hyper.b_max;
        break;
      }
    }
  }

  result.rows = data.rows();
  for (std::size_t end : batch_ends) result.hv_per_batch.push_back(normalized_hv(result.rows, end));
  result.frontier = rows_frontier(result.rows);
  result.frontier_total = rows_frontier(result.rows, true);
  return result;
}

// Number of frontier points each pass discovered.
inline std::map<PassLabel, int> frontier_pass_attribution(const ParetoFrontier<EvaluatedRow>& frontier) {
  std::map<PassLabel, int> counts;
  for (PassLabel p : kAllPasses) counts[p] = 0;
  for (const auto& pt : frontier) counts[pt.payload.pass] += 1;
  return counts;
}

inline std::map<PassLabel, int> frontier_pass_attribution(const MboResult& result) {
  return frontier_pass_attribution(result.frontier);
}

}  // namespace ecosched
