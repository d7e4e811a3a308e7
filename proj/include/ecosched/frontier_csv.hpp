// Copyright 2026 The ecosched Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Frontier interchange format. Doubles are written with 17 significant digits
// so a parsed file reproduces the in-memory values exactly.

#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ecosched/compose.hpp"
#include "ecosched/domain.hpp"
#include "ecosched/error.hpp"
#include "ecosched/mbo.hpp"

namespace ecosched {

inline constexpr const char* kFrontierCsvHeader =
    "time_ms,dyn_energy_j,total_energy_j,frequency_mhz,sm_alloc,timing,provenance";

struct FrontierCsvRow {
  double time_ms = 0.0;
  double dyn_energy_j = 0.0;
  double total_energy_j = 0.0;
  double frequency_mhz = 0.0;
  int sm_alloc = 0;
  std::string timing;      // "sequential", "overlap:S:L", or a composite label
  std::string provenance;  // pass label, per-type choices, or method

  friend bool operator==(const FrontierCsvRow&, const FrontierCsvRow&) = default;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_frontier_csv(std::ostream& os, const std::vector<FrontierCsvRow>& rows) {
  os << kFrontierCsvHeader << '\n';
  for (const auto& r : rows) {
    if (r.timing.find_first_of(",\n") != std::string::npos || r.provenance.find_first_of(",\n") != std::string::npos)
      throw std::invalid_argument("frontier CSV fields must not contain commas or newlines");
    os << format_double(r.time_ms) << ',' << format_double(r.dyn_energy_j) << ','
       << format_double(r.total_energy_j) << ',' << format_double(r.frequency_mhz) << ',' << r.sm_alloc << ','
       << r.timing << ',' << r.provenance << '\n';
  }
}

inline std::vector<FrontierCsvRow> read_frontier_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kFrontierCsvHeader) throw ConfigError("frontier CSV: bad or missing header");
  std::vector<FrontierCsvRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw ConfigError("frontier CSV line " + std::to_string(lineno) + ": expected 7 fields");
    try {
      rows.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stoi(f[4]), f[5], f[6]});
    } catch (const std::logic_error&) {
      throw ConfigError("frontier CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

// Partition frontier rows; energy on the frontier is dynamic.
inline std::vector<FrontierCsvRow> partition_csv_rows(const ParetoFrontier<EvaluatedRow>& f) {
  std::vector<FrontierCsvRow> out;
  for (const auto& p : f) {
    const auto& r = p.payload;
    out.push_back({r.measurement.time_ms, r.measurement.dyn_energy_j, r.measurement.total_energy_j,
                   r.config.frequency_mhz, r.config.sm_alloc, r.config.timing.to_string(), to_string(r.pass)});
  }
  return out;
}

// Rebuilds a partition frontier (time, dynamic energy) from its CSV rows.
inline ParetoFrontier<EvaluatedRow> partition_frontier_from_csv(const std::vector<FrontierCsvRow>& rows,
                                                                double p_static_w) {
  std::vector<FrontierPoint<EvaluatedRow>> pts;
  for (const auto& r : rows) {
    EvaluatedRow e;
    e.config = {r.frequency_mhz, r.sm_alloc, LaunchTiming::parse(r.timing)};
    e.measurement = Measurement::from(r.time_ms, r.dyn_energy_j, p_static_w);
    e.pass = parse_pass_label(r.provenance);
    pts.push_back({r.time_ms, r.dyn_energy_j, e});
  }
  return ParetoFrontier<EvaluatedRow>::from_points(std::move(pts));
}

inline std::string describe_choice(const MicrobatchChoice& c) {
  std::string s;
  for (const auto& [type, cfg] : c.per_type) {
    if (!s.empty()) s += ';';
    s += type + '=';
    s += cfg.timing.is_sequential() ? "sequential" : std::to_string(cfg.sm_alloc) + '/' + cfg.timing.to_string();
  }
  return s;
}

// Microbatch frontier rows; energy on the frontier is total.
inline std::vector<FrontierCsvRow> microbatch_csv_rows(const MicrobatchFrontier& f) {
  std::vector<FrontierCsvRow> out;
  for (const auto& p : f)
    out.push_back({p.time_ms, p.payload.dyn_energy_j, p.energy_j, p.payload.frequency_mhz, 0,
                   p.payload.sequential ? "sequential" : "composite", describe_choice(p.payload)});
  return out;
}

// Iteration frontier rows. Frequency is the mean over the assignment.
inline std::vector<FrontierCsvRow> iteration_csv_rows(const IterationFrontier& f, const PipelineCosts& costs) {
  std::vector<FrontierCsvRow> out;
  const PipelineGraph graph(costs.spec);
  for (const auto& p : f) {
    PipelineResult r = simulate_pipeline(graph, costs, p.payload.choice);
    double fsum = 0.0;
    for (int op = 0; op < costs.spec.num_ops(); ++op) fsum += costs.options(op)[p.payload.choice[op]].frequency_mhz;
    out.push_back({p.time_ms, r.dyn_energy_j, p.energy_j, fsum / costs.spec.num_ops(), 0, "pipeline",
                   "switches=" + std::to_string(r.frequency_switches)});
  }
  return out;
}

// Generic (time, energy) view for comparison; `total` picks the energy column.
inline ParetoFrontier<NoPayload> csv_objectives(const std::vector<FrontierCsvRow>& rows, bool total) {
  std::vector<TimeEnergy> pts;
  for (const auto& r : rows) pts.push_back({r.time_ms, total ? r.total_energy_j : r.dyn_energy_j});
  return get_frontier(pts);
}

}  // namespace ecosched
