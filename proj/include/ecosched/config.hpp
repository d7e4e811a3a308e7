// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Workload configuration: one JSON document with unit-suffixed field names.
// Unknown keys are rejected so a misspelled unit cannot be silently ignored.

#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecosched/compose.hpp"
#include "ecosched/domain.hpp"
#include "ecosched/error.hpp"
#include "ecosched/mbo.hpp"
#include "ecosched/simgpu.hpp"

namespace ecosched {

using Json = nlohmann::json;

struct PartitionConfig {
  PartitionSpec spec;     // after fusion and memory-bound grouping
  SmGrid sms;
  std::size_t raw_comp_kernels = 0;
};

struct MicrobatchConfig {
  std::string name;
  std::vector<std::string> partitions;  // expanded by `repeat`
  std::vector<KernelSpec> non_partition_kernels;
};

struct PipelineConfig {
  PipelineSpec spec;
  std::string forward;
  std::string backward;  // empty when spec.backward is false
};

struct EmulationConfig {
  std::vector<int> microbatch_counts;
  int num_stages = 4;
  std::string baseline = "sequential";  // "sequential" or "max_frequency"
};

struct MboOverrides {
  std::optional<int> n_init, b_max, batch_k, ensemble_m, stop_window_r, rounds, max_depth;
  std::optional<double> bootstrap_fraction, stop_eps, learning_rate;
  std::optional<std::array<double, 4>> pass_fractions;

  MboHyperparams apply(MboHyperparams h) const {
    if (n_init) h.n_init = *n_init;
    if (b_max) h.b_max = *b_max;
    if (batch_k) h.batch_k = *batch_k;
    if (ensemble_m) h.ensemble_m = *ensemble_m;
    if (stop_window_r) h.stop_window_r = *stop_window_r;
    if (bootstrap_fraction) h.bootstrap_fraction = *bootstrap_fraction;
    if (stop_eps) h.stop_eps = *stop_eps;
    if (pass_fractions) h.pass_fractions = *pass_fractions;
    if (rounds) h.boosting.rounds = *rounds;
    if (max_depth) h.boosting.max_depth = *max_depth;
    if (learning_rate) h.boosting.learning_rate = *learning_rate;
    return h;
  }
};

struct CompareConfig {
  std::string baseline_csv;
  std::string candidate_csv;
  bool total_energy = true;
};

struct WorkloadConfig {
  std::uint64_t seed = 0;
  GpuModel gpu;
  ThermalModel thermal;
  ProfilingProtocol protocol;
  FrequencyGrid freqs = FrequencyGrid::defaults();
  SpaceOptions space_options;
  std::optional<std::vector<int>> sm_values;  // overrides per-partition defaults
  std::size_t exhaustive_limit = 1'000'000;
  std::vector<PartitionConfig> partitions;
  std::vector<MicrobatchConfig> microbatches;
  std::optional<PipelineConfig> pipeline;
  std::optional<EmulationConfig> emulation;
  MboOverrides mbo;
  std::optional<CompareConfig> compare;

  const PartitionConfig& partition(const std::string& name) const {
    for (const auto& p : partitions)
      if (p.spec.name == name) return p;
    throw ConfigError("unknown partition '" + name + "'");
  }
  const MicrobatchConfig& microbatch(const std::string& name) const {
    for (const auto& m : microbatches)
      if (m.name == name) return m;
    throw ConfigError("unknown microbatch '" + name + "'");
  }
  SearchSpace search_space(const PartitionConfig& p) const { return {freqs, p.sms, space_options}; }
  MboHyperparams hyperparams(const PartitionConfig& p, std::size_t index) const {
    MboHyperparams h = mbo.apply(MboHyperparams::defaults_for(p.spec.partition_class()));
    h.seed = derive_seed(seed, "mbo:" + p.spec.name, index);
    return h;
  }
};

namespace config_detail {

// Reads fields of one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    try {
      return it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }
  template <class T>
  T get(const std::string& key, T fallback) {
    auto v = opt<T>(key);
    return v ? *v : fallback;
  }
  template <class T>
  T req(const std::string& key) {
    auto v = opt<T>(key);
    if (!v) throw ConfigError(path_ + ": missing required field '" + key + "'");
    return *v;
  }
  const Json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown field '" + it.key() + "'");
  }
  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline KernelSpec read_kernel(const Json& j, const std::string& path) {
  Reader r(j, path);
  KernelSpec k;
  k.name = r.req<std::string>("name");
  k.flops = r.get<double>("flops", 0.0);
  k.bytes = r.get<double>("bytes", 0.0);
  k.comm_bytes = r.get<double>("comm_bytes", 0.0);
  r.finish();
  try {
    k.validate();
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return k;
}

inline std::vector<KernelSpec> read_kernels(const Json* j, const std::string& path) {
  std::vector<KernelSpec> out;
  if (!j) return out;
  if (!j->is_array()) throw ConfigError(path + ": expected an array");
  for (std::size_t i = 0; i < j->size(); ++i) out.push_back(read_kernel((*j)[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace config_detail

inline WorkloadConfig parse_workload_config(const Json& root) {
  using config_detail::Reader;
  WorkloadConfig c;
  Reader top(root, "config");
  c.seed = top.get<std::uint64_t>("seed", 0);

  if (const Json* g = top.child("gpu")) {
    Reader r(*g, "gpu");
    GpuModel& m = c.gpu;
    m.num_sms = r.get("num_sms", m.num_sms);
    m.peak_flops_per_sm_mhz = r.get("peak_flops_per_sm_mhz", m.peak_flops_per_sm_mhz);
    m.mem_bw_gbps = r.get("mem_bw_gbps", m.mem_bw_gbps);
    m.net_bw_gbps = r.get("net_bw_gbps", m.net_bw_gbps);
    m.sm_bw_saturation = r.get("sm_bw_saturation", m.sm_bw_saturation);
    m.p_static_w = r.get("p_static_w", m.p_static_w);
    m.kappa_w_per_ghz3 = r.get("kappa_w_per_ghz3", m.kappa_w_per_ghz3);
    m.f_max_mhz = r.get("f_max_mhz", m.f_max_mhz);
    m.freq_switch_ms = r.get("freq_switch_ms", m.freq_switch_ms);
    m.energy_per_flop_j = r.get("energy_per_flop_j", m.energy_per_flop_j);
    m.energy_per_byte_j = r.get("energy_per_byte_j", m.energy_per_byte_j);
    m.energy_per_comm_byte_j = r.get("energy_per_comm_byte_j", m.energy_per_comm_byte_j);
    m.comm_mem_traffic = r.get("comm_mem_traffic", m.comm_mem_traffic);
    m.overlap_setup_ms = r.get("overlap_setup_ms", m.overlap_setup_ms);
    r.finish();
  }
  c.gpu.validate();

  if (const Json* t = top.child("thermal")) {
    Reader r(*t, "thermal");
    ThermalModel& m = c.thermal;
    m.ambient_c = r.get("ambient_c", m.ambient_c);
    m.heat_coeff_c_per_j = r.get("heat_coeff_c_per_j", m.heat_coeff_c_per_j);
    m.cool_tau_s = r.get("cool_tau_s", m.cool_tau_s);
    m.power_temp_coeff = r.get("power_temp_coeff", m.power_temp_coeff);
    r.finish();
  }
  c.thermal.validate();

  if (const Json* p = top.child("protocol")) {
    Reader r(*p, "protocol");
    ProfilingProtocol& m = c.protocol;
    m.warmup_s = r.get("warmup_s", m.warmup_s);
    m.window_s = r.get("window_s", m.window_s);
    m.cooldown_s = r.get("cooldown_s", m.cooldown_s);
    m.noise_std_frac = r.get("noise_std_frac", m.noise_std_frac);
    r.finish();
  }
  c.protocol.validate();

  if (const Json* s = top.child("search")) {
    Reader r(*s, "search");
    if (auto fs = r.opt<std::vector<double>>("frequencies_mhz")) {
      c.freqs = FrequencyGrid(*fs);
    } else {
      double lo = r.get("freq_min_mhz", 900.0), hi = r.get("freq_max_mhz", 1410.0);
      c.freqs = FrequencyGrid::range(lo, hi, r.get("freq_stride_mhz", 30.0));
    }
    c.sm_values = r.opt<std::vector<int>>("sm_values");
    c.space_options.max_overlap_len = r.get("max_overlap_len", c.space_options.max_overlap_len);
    c.space_options.exclude_always_exposed = r.get("exclude_always_exposed", c.space_options.exclude_always_exposed);
    c.exhaustive_limit = r.get<std::size_t>("exhaustive_limit", c.exhaustive_limit);
    r.finish();
    if (c.space_options.max_overlap_len < 1) throw ConfigError("search.max_overlap_len must be >= 1");
  }
  for (double f : c.freqs.values())
    if (f > c.gpu.f_max_mhz) throw ConfigError("search frequency " + std::to_string(f) + " exceeds gpu.f_max_mhz");

  // A compare-only config may omit partitions.
  const Json* parts = top.child("partitions");
  const bool compare_only = !parts && root.contains("compare_frontiers");
  if (!compare_only && (!parts || !parts->is_array() || parts->empty()))
    throw ConfigError("config: 'partitions' must be a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; parts && i < parts->size(); ++i) {
    const std::string path = "partitions[" + std::to_string(i) + "]";
    Reader r((*parts)[i], path);
    PartitionConfig pc;
    pc.spec.name = r.req<std::string>("name");
    if (!names.insert(pc.spec.name).second) throw ConfigError(path + ": duplicate partition name '" + pc.spec.name + "'");
    auto comp = config_detail::read_kernels(r.child("comp_kernels"), path + ".comp_kernels");
    auto comm = config_detail::read_kernels(r.child("comm_kernels"), path + ".comm_kernels");
    pc.spec.comm_group_size = r.get("comm_group_size", 2);
    bool group = r.get("group_memory_bound", true);
    auto sm_values = r.opt<std::vector<int>>("sm_values");
    r.finish();
    if (comp.empty()) throw ConfigError(path + ": comp_kernels must be non-empty");
    if (comm.empty()) throw ConfigError(path + ": comm_kernels must be non-empty");
    for (const auto& k : comp)
      if (k.is_communication()) throw ConfigError(path + ": '" + k.name + "' in comp_kernels moves comm_bytes");
    for (const auto& k : comm)
      if (!k.is_communication()) throw ConfigError(path + ": '" + k.name + "' in comm_kernels has no comm_bytes");
    pc.raw_comp_kernels = comp.size();
    pc.spec.comp_kernels = group ? group_memory_bound(comp, c.gpu) : comp;
    pc.spec.comm_kernel = fuse_comm_kernels(comm);
    try {
      pc.spec.validate();
      if (sm_values) pc.sms = SmGrid(*sm_values, c.gpu.num_sms - 1);
      else if (c.sm_values) pc.sms = SmGrid(*c.sm_values, c.gpu.num_sms - 1);
      else pc.sms = SmGrid::defaults(pc.spec.comm_group_size, c.gpu.num_sms - 1);
    } catch (const std::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
    c.partitions.push_back(std::move(pc));
  }

  if (const Json* mbs = top.child("microbatches")) {
    if (!mbs->is_array()) throw ConfigError("config: 'microbatches' must be an array");
    for (std::size_t i = 0; i < mbs->size(); ++i) {
      const std::string path = "microbatches[" + std::to_string(i) + "]";
      Reader r((*mbs)[i], path);
      MicrobatchConfig mc;
      mc.name = r.req<std::string>("name");
      auto seq = r.req<std::vector<std::string>>("partitions");
      int repeat = r.get("repeat", 1);
      mc.non_partition_kernels = config_detail::read_kernels(r.child("non_partition_kernels"), path + ".non_partition_kernels");
      r.finish();
      if (repeat < 1) throw ConfigError(path + ".repeat must be >= 1");
      if (seq.empty()) throw ConfigError(path + ".partitions must be non-empty");
      for (const auto& s : seq)
        if (!names.count(s)) throw ConfigError(path + ": unknown partition '" + s + "'");
      for (int k = 0; k < repeat; ++k) mc.partitions.insert(mc.partitions.end(), seq.begin(), seq.end());
      for (const auto& m : c.microbatches)
        if (m.name == mc.name) throw ConfigError(path + ": duplicate microbatch name '" + mc.name + "'");
      c.microbatches.push_back(std::move(mc));
    }
  }

  auto check_mb = [&](const std::string& name, const std::string& path) {
    for (const auto& m : c.microbatches)
      if (m.name == name) return;
    throw ConfigError(path + ": unknown microbatch '" + name + "'");
  };

  if (const Json* p = top.child("pipeline")) {
    Reader r(*p, "pipeline");
    PipelineConfig pc;
    pc.spec.num_stages = r.get("num_stages", 1);
    pc.spec.num_microbatches = r.get("num_microbatches", 1);
    pc.forward = r.req<std::string>("forward");
    // Absent: the forward microbatch again. Null: a forward-only pipeline.
    const Json* bwd = r.child("backward");
    if (bwd && bwd->is_null()) {
      pc.spec.backward = false;
    } else if (bwd) {
      if (!bwd->is_string()) throw ConfigError("pipeline.backward: expected a string or null");
      pc.backward = bwd->get<std::string>();
    } else {
      pc.backward = pc.forward;
    }
    r.finish();
    pc.spec.validate();
    check_mb(pc.forward, "pipeline.forward");
    if (pc.spec.backward) check_mb(pc.backward, "pipeline.backward");
    c.pipeline = pc;
  }

  if (const Json* e = top.child("emulation")) {
    Reader r(*e, "emulation");
    EmulationConfig ec;
    ec.microbatch_counts = r.req<std::vector<int>>("microbatch_counts");
    ec.num_stages = r.get("num_stages", c.pipeline ? c.pipeline->spec.num_stages : 4);
    ec.baseline = r.get<std::string>("baseline", ec.baseline);
    r.finish();
    if (ec.microbatch_counts.empty()) throw ConfigError("emulation.microbatch_counts must be non-empty");
    for (int m : ec.microbatch_counts)
      if (m < 1) throw ConfigError("emulation.microbatch_counts entries must be >= 1");
    if (ec.num_stages < 1) throw ConfigError("emulation.num_stages must be >= 1");
    if (ec.baseline != "sequential" && ec.baseline != "max_frequency")
      throw ConfigError("emulation.baseline must be 'sequential' or 'max_frequency'");
    if (!c.pipeline) throw ConfigError("emulation requires a 'pipeline' section naming the microbatches");
    c.emulation = ec;
  }

  if (const Json* m = top.child("mbo")) {
    Reader r(*m, "mbo");
    MboOverrides& o = c.mbo;
    o.n_init = r.opt<int>("n_init");
    o.b_max = r.opt<int>("b_max");
    o.batch_k = r.opt<int>("batch_k");
    o.ensemble_m = r.opt<int>("ensemble_m");
    o.stop_window_r = r.opt<int>("stop_window_r");
    o.bootstrap_fraction = r.opt<double>("bootstrap_fraction");
    o.stop_eps = r.opt<double>("stop_eps");
    o.rounds = r.opt<int>("boost_rounds");
    o.max_depth = r.opt<int>("max_depth");
    o.learning_rate = r.opt<double>("learning_rate");
    if (auto pf = r.opt<std::vector<double>>("pass_fractions")) {
      if (pf->size() != 4) throw ConfigError("mbo.pass_fractions must have four entries");
      o.pass_fractions = std::array<double, 4>{(*pf)[0], (*pf)[1], (*pf)[2], (*pf)[3]};
    }
    r.finish();
    o.apply(MboHyperparams{}).validate();
  }

  if (const Json* cmp = top.child("compare_frontiers")) {
    Reader r(*cmp, "compare_frontiers");
    CompareConfig cc;
    cc.baseline_csv = r.req<std::string>("baseline");
    cc.candidate_csv = r.req<std::string>("candidate");
    std::string energy = r.get<std::string>("energy", "total");
    r.finish();
    if (energy != "total" && energy != "dynamic") throw ConfigError("compare_frontiers.energy must be 'total' or 'dynamic'");
    cc.total_energy = energy == "total";
    c.compare = cc;
  }

  top.finish();
  return c;
}

inline WorkloadConfig load_workload_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_workload_config(j);
}

}  // namespace ecosched
