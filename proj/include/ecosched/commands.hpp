// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// The four command verbs. Each command computes everything in memory, then a
// single writer stages the files next to the output directory and moves them
// in; a failed command leaves no partial output behind.

#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ecosched/compose.hpp"
#include "ecosched/config.hpp"
#include "ecosched/error.hpp"
#include "ecosched/frontier_csv.hpp"
#include "ecosched/mbo.hpp"
#include "ecosched/metrics.hpp"
#include "ecosched/oracle.hpp"
#include "ecosched/pareto.hpp"
#include "ecosched/verify.hpp"

namespace ecosched {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfigError = 2,
  kExitSpaceTooLarge = 3,
  kExitPropertyViolation = 4,
};

struct CommandOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

// ---------------------------------------------------------------------------
// Output staging
// ---------------------------------------------------------------------------

class OutputSet {
 public:
  void add(const std::string& relpath, std::string content) { files_[relpath] = std::move(content); }
  const std::map<std::string, std::string>& files() const { return files_; }

  // Writes every file under a sibling staging directory, then moves each
  // top-level entry into `out_dir`, replacing same-named entries only.
  void commit(const std::filesystem::path& out_dir) const {
    namespace fs = std::filesystem;
    const fs::path out = fs::absolute(out_dir).lexically_normal();
    const fs::path base = out.has_filename() ? out : out.parent_path();
    const fs::path staging = base.parent_path() / ("." + base.filename().string() + ".staging");
    fs::remove_all(staging);
    try {
      for (const auto& [rel, content] : files_) {
        fs::path p = staging / rel;
        fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        f << content;
        if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
      }
      fs::create_directories(base);
      for (const auto& entry : fs::directory_iterator(staging)) {
        fs::path target = base / entry.path().filename();
        fs::remove_all(target);
        fs::rename(entry.path(), target);
      }
      fs::remove_all(staging);
    } catch (...) {
      std::error_code ec;
      fs::remove_all(staging, ec);
      throw;
    }
  }

 private:
  std::map<std::string, std::string> files_;
};

inline std::string file_stem(const std::string& name) {
  std::string s;
  for (char c : name)
    s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return s.empty() ? "_" : s;
}

inline std::string csv_text(const std::vector<FrontierCsvRow>& rows) {
  std::ostringstream os;
  write_frontier_csv(os, rows);
  return os.str();
}

inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

// ---------------------------------------------------------------------------
// Shared stages
// ---------------------------------------------------------------------------

// Runs `task(i)` for i in [0, n) on up to `jobs` threads; rethrows the first
// failure by index so the reported error does not depend on scheduling.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline WorkloadConfig load_for_command(const CommandOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("--config is required");
  WorkloadConfig cfg = load_workload_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.protocol.seed = cfg.seed;
  if (opts.jobs < 1) throw ConfigError("--jobs must be >= 1");
  return cfg;
}

inline std::vector<MboResult> run_all_mbo(const WorkloadConfig& cfg, int jobs) {
  std::vector<MboResult> results(cfg.partitions.size());
  parallel_for(cfg.partitions.size(), jobs, [&](std::size_t i) {
    const auto& p = cfg.partitions[i];
    results[i] = run_mbo(p.spec, cfg.gpu, cfg.thermal, cfg.protocol, cfg.hyperparams(p, i), cfg.search_space(p));
  });
  return results;
}

inline PartitionFrontierTable build_frontier_table(const WorkloadConfig& cfg, const std::vector<MboResult>& runs) {
  PartitionFrontierTable table;
  for (std::size_t i = 0; i < cfg.partitions.size(); ++i) {
    auto& per_f = table[cfg.partitions[i].spec.name];
    for (const auto& [f, fr] : per_frequency_frontiers(runs[i].rows)) {
      std::vector<FrontierPoint<ScheduleConfig>> pts;
      for (const auto& p : fr) pts.push_back({p.time_ms, p.energy_j, p.payload.config});
      per_f.emplace(f, PartitionFrontier::from_points(std::move(pts)));
    }
  }
  return table;
}

struct MicrobatchResult {
  MicrobatchSpec spec;
  MicrobatchFrontier overlap;
  std::vector<FrontierPoint<MicrobatchChoice>> sequential;
  MicrobatchFrontier frontier;  // after the execution-model switch
};

inline MicrobatchSpec microbatch_spec(const WorkloadConfig& cfg, const MicrobatchConfig& mc) {
  MicrobatchSpec spec{mc.name, mc.partitions, {}};
  for (double f : cfg.freqs.values()) {
    Measurement m = sequential_cost(mc.non_partition_kernels, f, cfg.gpu);
    spec.non_partition_costs[f] = {m.time_ms, m.dyn_energy_j};
  }
  return spec;
}

inline std::vector<MicrobatchResult> compose_microbatches(const WorkloadConfig& cfg,
                                                          const PartitionFrontierTable& table) {
  std::map<std::string, PartitionSpec> parts;
  for (const auto& p : cfg.partitions) parts.emplace(p.spec.name, p.spec);
  std::vector<MicrobatchResult> out;
  for (const auto& mc : cfg.microbatches) {
    MicrobatchResult r;
    r.spec = microbatch_spec(cfg, mc);
    r.overlap = microbatch_frontier(r.spec, table, cfg.gpu.p_static_w);
    r.sequential = sequential_microbatch_points(r.spec, parts, cfg.gpu, cfg.freqs.values());
    r.frontier = execution_model_switch(r.overlap, r.sequential);
    out.push_back(std::move(r));
  }
  return out;
}

inline const MicrobatchResult& find_microbatch(const std::vector<MicrobatchResult>& mbs, const std::string& name) {
  for (const auto& m : mbs)
    if (m.spec.name == name) return m;
  throw ConfigError("unknown microbatch '" + name + "'");
}

inline PipelineCosts pipeline_costs(const WorkloadConfig& cfg, const std::vector<MicrobatchResult>& mbs,
                                    const PipelineSpec& spec) {
  const auto& pc = *cfg.pipeline;
  const auto& fwd = find_microbatch(mbs, pc.forward).frontier;
  const MicrobatchFrontier bwd = spec.backward ? find_microbatch(mbs, pc.backward).frontier : MicrobatchFrontier{};
  return PipelineCosts::uniform(spec, fwd, bwd, cfg.gpu);
}

inline const char* iteration_mode(const PipelineCosts& costs, const IterationOptions& opts = {}) {
  return assignment_count(costs) <= opts.exact_limit ? "exact" : "sweep";
}

inline nlohmann::json frontier_point_json(double time_ms, double energy_j) {
  return {{"time_ms", time_ms}, {"energy_j", energy_j}};
}

inline void print_iso(std::ostream& os, const std::string& label, const IsoMetrics& m) {
  auto fmt = [](double v) { return std::isfinite(v) ? format_double(v) + "%" : std::string("n/a"); };
  os << label << "iso-time energy reduction: " << fmt(m.iso_time_energy_reduction_pct)
     << ", iso-energy time reduction: " << fmt(m.iso_energy_time_reduction_pct) << '\n';
}

inline nlohmann::json iso_json(const IsoMetrics& m) {
  return {{"iso_time_energy_reduction_pct", json_number(m.iso_time_energy_reduction_pct)},
          {"iso_energy_time_reduction_pct", json_number(m.iso_energy_time_reduction_pct)}};
}

// Runs `body`, mapping failures to exit codes with a diagnostic on `err`.
inline int guarded(const CommandOptions& opts, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    *opts.err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const SpaceTooLargeError& e) {
    *opts.err << "error: " << e.what() << '\n';
    return kExitSpaceTooLarge;
  } catch (const std::exception& e) {
    *opts.err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

inline std::string out_dir_or_throw(const CommandOptions& opts) {
  if (opts.out_dir.empty()) throw ConfigError("--out is required");
  return opts.out_dir;
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

inline nlohmann::json partition_summary(const PartitionConfig& p, const MboResult& r) {
  nlohmann::json attribution = nlohmann::json::object();
  for (const auto& [pass, n] : frontier_pass_attribution(r)) attribution[to_string(pass)] = n;
  nlohmann::json kernels = nlohmann::json::array();
  for (const auto& k : p.spec.comp_kernels) kernels.push_back(k.name);
  return {{"name", p.spec.name},
          {"class", to_string(p.spec.partition_class())},
          {"comp_kernels", kernels},
          {"raw_comp_kernels", p.raw_comp_kernels},
          {"comm_kernel", p.spec.comm_kernel.name},
          {"space_size", r.space_size},
          {"evaluations", r.rows.size()},
          {"batches_run", r.batches_run},
          {"stopped_early", r.stopped_early},
          {"exhaustive", r.exhaustive},
          {"hv_per_batch", r.hv_per_batch},
          {"rel_gains", r.rel_gains},
          {"frontier_size", r.frontier.size()},
          {"pass_attribution", attribution}};
}

inline std::string evaluation_log(const WorkloadConfig& cfg, const std::vector<MboResult>& runs) {
  std::string out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t k = 0; k < runs[i].rows.size(); ++k) {
      const auto& r = runs[i].rows[k];
      nlohmann::json j = {{"partition", cfg.partitions[i].spec.name},
                          {"index", k},
                          {"batch", r.batch},
                          {"pass", to_string(r.pass)},
                          {"frequency_mhz", r.config.frequency_mhz},
                          {"sm_alloc", r.config.sm_alloc},
                          {"timing", r.config.timing.to_string()},
                          {"time_ms", r.measurement.time_ms},
                          {"dyn_energy_j", r.measurement.dyn_energy_j},
                          {"total_energy_j", r.measurement.total_energy_j}};
      out += j.dump() + '\n';
    }
  }
  return out;
}

inline std::vector<FrontierCsvRow> option_csv_rows(const MboResult& r) {
  std::vector<FrontierCsvRow> out;
  for (const auto& [f, fr] : per_frequency_frontiers(r.rows)) {
    auto rows = partition_csv_rows(fr);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

inline nlohmann::json microbatch_summary(const MicrobatchResult& m) {
  int seq_on_frontier = 0;
  for (const auto& p : m.frontier) seq_on_frontier += p.payload.sequential ? 1 : 0;
  return {{"name", m.spec.name},
          {"partitions", m.spec.partition_sequence.size()},
          {"frontier_size", m.frontier.size()},
          {"overlap_frontier_size", m.overlap.size()},
          {"sequential_points_on_frontier", seq_on_frontier},
          {"min_time", frontier_point_json(m.frontier.min_time().time_ms, m.frontier.min_time().energy_j)},
          {"min_energy", frontier_point_json(m.frontier.min_energy().time_ms, m.frontier.min_energy().energy_j)}};
}

inline int cmd_optimize(const CommandOptions& opts) {
  return guarded(opts, [&] {
    const auto start = std::chrono::steady_clock::now();
    const std::string out_dir = out_dir_or_throw(opts);
    const WorkloadConfig cfg = load_for_command(opts);
    if (cfg.partitions.empty()) throw ConfigError("optimize needs at least one partition");

    const auto runs = run_all_mbo(cfg, opts.jobs);
    const auto table = build_frontier_table(cfg, runs);
    const auto mbs = compose_microbatches(cfg, table);

    OutputSet files;
    nlohmann::json summary = {{"seed", cfg.seed}};
    summary["partitions"] = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.partitions.size(); ++i) {
      const std::string stem = "partitions/" + file_stem(cfg.partitions[i].spec.name);
      files.add(stem + ".csv", csv_text(partition_csv_rows(runs[i].frontier)));
      files.add(stem + ".options.csv", csv_text(option_csv_rows(runs[i])));
      summary["partitions"].push_back(partition_summary(cfg.partitions[i], runs[i]));
    }
    summary["microbatches"] = nlohmann::json::array();
    for (const auto& m : mbs) {
      files.add("microbatches/" + file_stem(m.spec.name) + ".csv", csv_text(microbatch_csv_rows(m.frontier)));
      summary["microbatches"].push_back(microbatch_summary(m));
    }
    if (cfg.pipeline) {
      const PipelineCosts costs = pipeline_costs(cfg, mbs, cfg.pipeline->spec);
      const IterationFrontier it = iteration_frontier(costs);
      files.add("iteration.csv", csv_text(iteration_csv_rows(it, costs)));
      summary["iteration"] = {{"num_stages", costs.spec.num_stages},
                              {"num_microbatches", costs.spec.num_microbatches},
                              {"backward", costs.spec.backward},
                              {"mode", iteration_mode(costs)},
                              {"frontier_size", it.size()},
                              {"min_time", frontier_point_json(it.min_time().time_ms, it.min_time().energy_j)},
                              {"min_energy", frontier_point_json(it.min_energy().time_ms, it.min_energy().energy_j)}};
    }
    files.add("evaluations.jsonl", evaluation_log(cfg, runs));
    files.add("summary.json", summary.dump(2) + '\n');
    files.commit(out_dir);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::size_t evals = 0;
    for (const auto& r : runs) evals += r.rows.size();
    *opts.out << "optimized " << cfg.partitions.size() << " partitions with " << evals << " evaluations, "
              << mbs.size() << " microbatches" << (cfg.pipeline ? ", 1 iteration frontier" : "") << " in "
              << std::fixed << std::setprecision(3) << wall << std::defaultfloat << " s -> " << out_dir << '\n';
    return int{kExitOk};
  });
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct PartitionComparison {
  std::string name;
  std::size_t space_size = 0;
  std::size_t exhaustive_evaluations = 0;
  std::size_t mbo_evaluations = 0;
  double hv_ratio = 0.0;        // (time, dynamic energy)
  double hv_ratio_total = 0.0;  // (time, total energy)
  ExhaustiveResult exhaustive;
  ParetoFrontier<EvaluatedRow> mbo_frontier;
};

// MBO quality against the oracle. MBO's evaluated configs are re-simulated
// without noise so both frontiers are scored on the true objectives, in the
// reference box of the whole space.
inline PartitionComparison compare_partition(const PartitionSpec& partition, const GpuModel& gpu, const MboResult& mbo, ExhaustiveResult ex) {
  PartitionComparison c;
  c.name = partition.name;
  c.space_size = ex.rows.size();
  c.exhaustive_evaluations = ex.evaluations;
  c.mbo_evaluations = mbo.rows.size();
  std::vector<EvaluatedRow> truth;
  for (const auto& r : mbo.rows) truth.push_back({r.config, simulate_schedule(partition, r.config, gpu), r.batch, r.pass});
  c.mbo_frontier = rows_frontier(truth);
  auto ratio = [&](bool total) {
    std::vector<TimeEnergy> obs;
    for (const auto& r : ex.rows)
      obs.push_back({r.measurement.time_ms, total ? r.measurement.total_energy_j : r.measurement.dyn_energy_j});
    RefPoint ref = compute_ref_point(obs);
    double hx = hypervolume(total ? ex.frontier_total : ex.frontier, ref);
    return hypervolume(rows_frontier(truth, total), ref) / hx;
  };
  c.hv_ratio = ratio(false);
  c.hv_ratio_total = ratio(true);
  c.exhaustive = std::move(ex);
  return c;
}

inline std::vector<FrontierCsvRow> read_frontier_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read frontier CSV '" + p.string() + "'");
  return read_frontier_csv(in);
}

inline int cmd_compare(const CommandOptions& opts) {
  return guarded(opts, [&] {
    const std::string out_dir = out_dir_or_throw(opts);
    const WorkloadConfig cfg = load_for_command(opts);
    if (!cfg.compare && cfg.partitions.empty()) throw ConfigError("compare needs partitions or compare_frontiers");

    // Refuse oversized spaces before doing any work.
    for (const auto& p : cfg.partitions) {
      std::size_t n = enumerate_space(p.spec, cfg.search_space(p), &cfg.gpu).size();
      if (n > cfg.exhaustive_limit) {
        *opts.err << "error: partition '" << p.spec.name << "': ";
        throw SpaceTooLargeError(n, cfg.exhaustive_limit);
      }
    }

    OutputSet files;
    nlohmann::json report = nlohmann::json::object();
    if (cfg.compare) {
      const auto base = std::filesystem::path(opts.config_path).parent_path();
      auto resolve = [&](const std::string& s) {
        std::filesystem::path p(s);
        return p.is_absolute() ? p : base / p;
      };
      auto a = csv_objectives(read_frontier_file(resolve(cfg.compare->baseline_csv)), cfg.compare->total_energy);
      auto b = csv_objectives(read_frontier_file(resolve(cfg.compare->candidate_csv)), cfg.compare->total_energy);
      if (a.empty() || b.empty()) throw ConfigError("compare_frontiers: frontier CSVs must be non-empty");
      IsoMetrics m = iso_metrics(a, b);
      report["iso"] = iso_json(m);
      report["iso"]["baseline"] = cfg.compare->baseline_csv;
      report["iso"]["candidate"] = cfg.compare->candidate_csv;
      report["iso"]["energy"] = cfg.compare->total_energy ? "total" : "dynamic";
      print_iso(*opts.out, "", m);
    }

    if (!cfg.partitions.empty()) {
      const auto runs = run_all_mbo(cfg, opts.jobs);
      std::vector<PartitionComparison> cmp(cfg.partitions.size());
      parallel_for(cfg.partitions.size(), opts.jobs, [&](std::size_t i) {
        const auto& p = cfg.partitions[i];
        cmp[i] = compare_partition(p.spec, cfg.gpu, runs[i],
                                   exhaustive_frontier(p.spec, cfg.gpu, cfg.search_space(p), cfg.exhaustive_limit));
      });
      report["partitions"] = nlohmann::json::array();
      for (const auto& c : cmp) {
        report["partitions"].push_back(
            {{"name", c.name},
             {"space_size", c.space_size},
             {"exhaustive_evaluations", c.exhaustive_evaluations},
             {"mbo_evaluations", c.mbo_evaluations},
             {"evaluation_fraction", static_cast<double>(c.mbo_evaluations) / static_cast<double>(c.space_size)},
             {"hv_ratio", c.hv_ratio},
             {"hv_ratio_total", c.hv_ratio_total},
             {"mbo_frontier_size", c.mbo_frontier.size()},
             {"exhaustive_frontier_size", c.exhaustive.frontier.size()}});
        auto ex_rows = partition_csv_rows(c.exhaustive.frontier);
        for (auto& r : ex_rows) r.provenance = "exhaustive";
        const std::string stem = "partitions/" + file_stem(c.name);
        files.add(stem + ".exhaustive.csv", csv_text(ex_rows));
        files.add(stem + ".mbo.csv", csv_text(partition_csv_rows(c.mbo_frontier)));
        *opts.out << c.name << ": HV ratio " << format_double(c.hv_ratio) << " with " << c.mbo_evaluations << " of "
                  << c.space_size << " evaluations\n";
      }
    }
    files.add("compare.json", report.dump(2) + '\n');
    files.commit(out_dir);
    return int{kExitOk};
  });
}

// ---------------------------------------------------------------------------
// emulate
// ---------------------------------------------------------------------------

// Baseline iteration frontier. "sequential": every op runs the sequential
// execution model at one uniform frequency, one point per frequency.
// "max_frequency": every op runs its fastest schedule at the highest
// frequency on its frontier.
inline std::vector<std::pair<double, PipelineResult>> baseline_points(const WorkloadConfig& cfg,
                                                                      const std::vector<MicrobatchResult>& mbs,
                                                                      const PipelineSpec& spec) {
  const auto& pc = *cfg.pipeline;
  const auto& fwd = find_microbatch(mbs, pc.forward);
  const MicrobatchResult* bwd = spec.backward ? &find_microbatch(mbs, pc.backward) : nullptr;
  const PipelineGraph graph(spec);
  auto single = [&](const OpOption& f, const OpOption* b) {
    PipelineCosts c{spec, {}, cfg.gpu.p_static_w, cfg.gpu.freq_switch_ms};
    c.stages.assign(spec.num_stages, StageOptions{{f}, b ? std::vector<OpOption>{*b} : std::vector<OpOption>{}});
    return simulate_pipeline(graph, c, Assignment(spec.num_ops(), 0));
  };
  auto as_option = [](const FrontierPoint<MicrobatchChoice>& p) {
    return OpOption{p.time_ms, p.payload.dyn_energy_j, p.payload.frequency_mhz};
  };
  std::vector<std::pair<double, PipelineResult>> out;
  if (cfg.emulation->baseline == "sequential") {
    for (std::size_t i = 0; i < fwd.sequential.size(); ++i) {
      OpOption f = as_option(fwd.sequential[i]);
      std::optional<OpOption> b;
      if (bwd) b = as_option(bwd->sequential[i]);
      out.emplace_back(f.frequency_mhz, single(f, b ? &*b : nullptr));
    }
  } else {
    auto fastest_at_top = [](const MicrobatchFrontier& fr) {
      const FrontierPoint<MicrobatchChoice>* best = nullptr;
      for (const auto& p : fr)
        if (!best || p.payload.frequency_mhz > best->payload.frequency_mhz ||
            (p.payload.frequency_mhz == best->payload.frequency_mhz && p.time_ms < best->time_ms))
          best = &p;
      return best;
    };
    const auto* fp = fastest_at_top(fwd.frontier);
    OpOption f = as_option(*fp);
    std::optional<OpOption> b;
    if (bwd) b = as_option(*fastest_at_top(bwd->frontier));
    out.emplace_back(f.frequency_mhz, single(f, b ? &*b : nullptr));
  }
  return out;
}

inline int cmd_emulate(const CommandOptions& opts) {
  return guarded(opts, [&] {
    const std::string out_dir = out_dir_or_throw(opts);
    const WorkloadConfig cfg = load_for_command(opts);
    if (!cfg.emulation) throw ConfigError("emulate needs an 'emulation' section");
    if (cfg.partitions.empty()) throw ConfigError("emulate needs at least one partition");

    const auto runs = run_all_mbo(cfg, opts.jobs);
    const auto table = build_frontier_table(cfg, runs);
    const auto mbs = compose_microbatches(cfg, table);

    OutputSet files;
    nlohmann::json summary = {{"seed", cfg.seed},
                              {"num_stages", cfg.emulation->num_stages},
                              {"baseline", cfg.emulation->baseline}};
    summary["scales"] = nlohmann::json::array();
    for (int m : cfg.emulation->microbatch_counts) {
      PipelineSpec spec{cfg.emulation->num_stages, m, cfg.pipeline->spec.backward};
      const PipelineCosts costs = pipeline_costs(cfg, mbs, spec);
      const IterationFrontier it = iteration_frontier(costs);

      const auto baseline = baseline_points(cfg, mbs, spec);
      std::vector<FrontierPoint<std::size_t>> base_pts;
      for (std::size_t i = 0; i < baseline.size(); ++i)
        base_pts.push_back({baseline[i].second.time_ms, baseline[i].second.energy_j, i});
      auto base = get_frontier(std::move(base_pts));
      std::vector<FrontierCsvRow> base_rows;
      for (const auto& p : base) {
        const auto& [f, r] = baseline[p.payload];
        base_rows.push_back({p.time_ms, r.dyn_energy_j, p.energy_j, f, 0, "pipeline", "baseline=" + cfg.emulation->baseline});
      }

      const std::string suffix = "_m" + std::to_string(m) + ".csv";
      files.add("iteration" + suffix, csv_text(iteration_csv_rows(it, costs)));
      files.add("baseline" + suffix, csv_text(base_rows));

      const auto& fast = it.min_time();
      IsoMetrics iso = iso_metrics(base, it);
      summary["scales"].push_back(
          {{"num_microbatches", m},
           {"mode", iteration_mode(costs)},
           {"frontier_size", it.size()},
           {"max_throughput",
            {{"time_ms", fast.time_ms},
             {"energy_j", fast.energy_j},
             {"microbatches_per_s", m / (fast.time_ms / 1000.0)}}},
           {"min_energy", frontier_point_json(it.min_energy().time_ms, it.min_energy().energy_j)},
           {"baseline_min_time", frontier_point_json(base.min_time().time_ms, base.min_time().energy_j)},
           {"vs_baseline", iso_json(iso)}});
      print_iso(*opts.out, std::to_string(m) + " microbatches: ", iso);
    }
    files.add("summary.json", summary.dump(2) + '\n');
    files.commit(out_dir);
    return int{kExitOk};
  });
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyReport {
  JensenFuzzReport jensen;
  std::vector<SweepPoint> window;
  std::vector<SweepPoint> cooldown;
  bool window_ok = false;
  bool cooldown_monotone = false;
  bool cooldown_plateau = false;
  bool passed() const { return jensen.passed() && window_ok && cooldown_monotone && cooldown_plateau; }
};

inline VerifyReport run_verify(std::uint64_t seed, const GpuModel& gpu = {}) {
  VerifyReport r;
  r.jensen = jensen_fuzz(10000, seed, gpu);
  ProtocolStudy study;
  study.gpu = gpu;
  study.seed = seed;
  r.window = window_sweep(study, {1.0, 2.0, 5.0, 10.0});
  r.cooldown = cooldown_sweep(study, {0.0, 1.0, 2.0, 5.0, 10.0});
  r.window_ok = std_nonincreasing(r.window);
  r.cooldown_monotone = mean_nonincreasing(r.cooldown);
  r.cooldown_plateau = mean_plateaus(r.cooldown);
  return r;
}

inline nlohmann::json sweep_json(const std::vector<SweepPoint>& pts) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : pts)
    a.push_back({{"setting_s", p.setting_s}, {"mean_energy_j", p.mean_energy_j}, {"std_energy_j", p.std_energy_j}});
  return a;
}

inline int cmd_verify(const CommandOptions& opts) {
  return guarded(opts, [&] {
    const std::string out_dir = out_dir_or_throw(opts);
    GpuModel gpu;
    std::uint64_t seed = 0;
    if (!opts.config_path.empty()) {
      WorkloadConfig cfg = load_for_command(opts);
      gpu = cfg.gpu;
      seed = cfg.seed;
    }
    if (opts.seed) seed = *opts.seed;
    const VerifyReport r = run_verify(seed, gpu);

    auto line = [&](const char* name, bool ok) { *opts.out << (ok ? "PASS " : "FAIL ") << name << '\n'; };
    line("constant-frequency energy inequality", r.jensen.passed());
    line("window sweep: energy spread nonincreasing", r.window_ok);
    line("cooldown sweep: mean energy nonincreasing", r.cooldown_monotone);
    line("cooldown sweep: mean energy plateaus", r.cooldown_plateau);

    nlohmann::json report = {
        {"seed", seed},
        {"passed", r.passed()},
        {"properties",
         {{{"name", "constant_frequency_inequality"},
           {"passed", r.jensen.passed()},
           {"traces", r.jensen.traces},
           {"constant_traces", r.jensen.constant_traces},
           {"violations", r.jensen.violations},
           {"equality_mismatches", r.jensen.equality_mismatches},
           {"min_relative_gap", json_number(r.jensen.min_rel_gap)}},
          {{"name", "window_sweep_std_nonincreasing"}, {"passed", r.window_ok}, {"points", sweep_json(r.window)}},
          {{"name", "cooldown_sweep_mean_nonincreasing"},
           {"passed", r.cooldown_monotone},
           {"points", sweep_json(r.cooldown)}},
          {{"name", "cooldown_sweep_mean_plateaus"}, {"passed", r.cooldown_plateau}}}}};
    OutputSet files;
    files.add("verify.json", report.dump(2) + '\n');
    files.commit(out_dir);
    return int{r.passed() ? kExitOk : kExitPropertyViolation};
  });
}

}  // namespace ecosched
