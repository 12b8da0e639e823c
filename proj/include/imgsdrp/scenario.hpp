#pragma once

// Single runs and parameter sweeps, with the results and plot-data CSV
// writers used by the command-line tool.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

#include "imgsdrp/config.hpp"
#include "imgsdrp/measure.hpp"
#include "imgsdrp/mobility.hpp"
#include "imgsdrp/protocol.hpp"

namespace imgsdrp {

enum class SweepAxis { Vgc, Range };

inline const char* to_string(SweepAxis a) { return a == SweepAxis::Vgc ? "vgc" : "range"; }

inline std::vector<double> axis_values(SweepAxis a) {
  if (a == SweepAxis::Vgc) return {5, 10, 20, 30, 40};
  return {250, 300, 350, 400, 450};
}

inline void apply_axis(ScenarioConfig& c, SweepAxis a, double v) {
  if (a == SweepAxis::Vgc) c.vgc_count = static_cast<int>(v);
  else c.range = v;
}

// The trace for a configuration. Imported traces get their dual-interface
// vehicles by seeded draw.
inline Trace make_trace(const ScenarioConfig& c) {
  if (c.trace_path.empty()) return generate_highway(c, c.seed);
  Trace t = load_trace(c.trace_path);
  if (static_cast<std::size_t>(c.vgc_count) > t.vehicle_count())
    throw ConfigError("mobility.vgc_count: exceeds the " + std::to_string(t.vehicle_count()) +
                      " vehicles in the trace");
  assign_dual_interface(t, c.vgc_count, c.seed);
  return t;
}

struct RunRecord {
  std::string scenario_id;
  std::string axis = "none";
  double axis_value = 0.0;
  Variant variant = Variant::ETR;
  std::uint64_t seed = 0;
  RunStats stats;
  DerivedMetrics metrics;
};

inline RunRecord run_scenario(const ScenarioConfig& c, std::string scenario_id = "run") {
  validate(c);
  Network net(c, make_trace(c));
  RunRecord r;
  r.scenario_id = std::move(scenario_id);
  r.variant = c.variant;
  r.seed = c.seed;
  r.stats = net.run();
  if (!r.stats.conserved())
    throw ContractViolation("packet accounting does not balance for seed " + std::to_string(c.seed));
  r.metrics = compute_stats(r.stats);
  return r;
}

inline const char* csv_header() {
  return "scenario_id,axis,axis_value,variant,seed,pdr,mean_delay_s,overhead,generated,delivered,"
         "drop_buffer,drop_channel,drop_expiry,drop_abandoned,in_flight,ctrl_adv,ctrl_sol,"
         "ctrl_unicast_adv,ctrl_notify,ctrl_thanks,handovers,vgw_elections";
}

namespace detail {
inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}
inline std::string opt(const std::optional<double>& v) { return v ? num(*v) : "NA"; }
}  // namespace detail

inline void write_row(std::ostream& os, const RunRecord& r) {
  const RunStats& s = r.stats;
  os << r.scenario_id << ',' << r.axis << ',' << detail::num(r.axis_value) << ',' << to_string(r.variant) << ','
     << r.seed << ',' << detail::opt(r.metrics.pdr) << ',' << detail::opt(r.metrics.mean_delay) << ','
     << detail::opt(r.metrics.overhead) << ',' << s.data_generated << ',' << s.data_delivered << ','
     << s.drops.buffer << ',' << s.drops.channel << ',' << s.drops.expiry << ',' << s.drops.abandoned << ','
     << s.in_flight_at_end << ',' << s.control.adv << ',' << s.control.sol << ',' << s.control.unicast_adv
     << ',' << s.control.notify << ',' << s.control.thanks << ',' << s.handovers << ',' << s.vgw_elections
     << '\n';
}

struct Summary {
  std::optional<double> mean, min, max;
};

// Mean/min/max over the runs where the metric is present.
inline Summary summarize(const std::vector<std::optional<double>>& xs) {
  Summary s;
  double sum = 0.0;
  int n = 0;
  for (const auto& x : xs) {
    if (!x) continue;
    sum += *x;
    ++n;
    s.min = s.min ? std::min(*s.min, *x) : *x;
    s.max = s.max ? std::max(*s.max, *x) : *x;
  }
  if (n > 0) s.mean = sum / n;
  return s;
}

struct SweepCell {
  double axis_value = 0.0;
  Variant variant = Variant::ETR;
  std::vector<RunRecord> runs;
  Summary pdr, delay, overhead;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Vgc;
  std::vector<SweepCell> cells;  // axis-major, then variant
};

// Every (axis value, variant, seed) run. Cells run concurrently; results are
// stored in deterministic order.
inline SweepResult sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<Variant>& variants,
                         const std::vector<std::uint64_t>& seeds, bool parallel = true) {
  if (seeds.empty()) throw ConfigError("sweep: seed list is empty");
  if (variants.empty()) throw ConfigError("sweep: variant list is empty");
  SweepResult out;
  out.axis = axis;
  struct Job {
    std::size_t cell;
    ScenarioConfig cfg;
  };
  std::vector<Job> jobs;
  for (double v : axis_values(axis))
    for (Variant var : variants) {
      SweepCell cell;
      cell.axis_value = v;
      cell.variant = var;
      out.cells.push_back(cell);
      for (std::uint64_t s : seeds) {
        ScenarioConfig c = base;
        apply_axis(c, axis, v);
        c.variant = var;
        c.seed = s;
        validate(c);
        jobs.push_back({out.cells.size() - 1, c});
      }
    }

  auto one = [axis](const ScenarioConfig& c) {
    RunRecord r = run_scenario(c, std::string(to_string(axis)) + "-" + detail::num(axis == SweepAxis::Vgc
                                                                                        ? c.vgc_count
                                                                                        : c.range));
    r.axis = to_string(axis);
    r.axis_value = axis == SweepAxis::Vgc ? c.vgc_count : c.range;
    return r;
  };
  std::vector<RunRecord> records(jobs.size());
  if (parallel) {
    const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < jobs.size(); start += width) {
      std::vector<std::future<RunRecord>> fs;
      for (std::size_t i = start; i < std::min(jobs.size(), start + width); ++i)
        fs.push_back(std::async(std::launch::async, one, jobs[i].cfg));
      for (std::size_t i = 0; i < fs.size(); ++i) records[start + i] = fs[i].get();
    }
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i) records[i] = one(jobs[i].cfg);
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) out.cells[jobs[i].cell].runs.push_back(std::move(records[i]));

  for (auto& cell : out.cells) {
    std::vector<std::optional<double>> p, d, o;
    for (const auto& r : cell.runs) {
      p.push_back(r.metrics.pdr);
      d.push_back(r.metrics.mean_delay);
      o.push_back(r.metrics.overhead);
    }
    cell.pdr = summarize(p);
    cell.delay = summarize(d);
    cell.overhead = summarize(o);
  }
  return out;
}

// Per-run rows, then one mean row per cell with seed column "mean".
inline void write_results(std::ostream& os, const SweepResult& r) {
  os << csv_header() << '\n';
  for (const auto& cell : r.cells)
    for (const auto& run : cell.runs) write_row(os, run);
  for (const auto& cell : r.cells) {
    const auto n = static_cast<double>(cell.runs.size());
    auto mean_of = [&](auto get) {
      double s = 0.0;
      for (const auto& run : cell.runs) s += static_cast<double>(get(run.stats));
      return detail::num(s / n);
    };
    os << to_string(r.axis) << '-' << detail::num(cell.axis_value) << ',' << to_string(r.axis) << ','
       << detail::num(cell.axis_value) << ',' << to_string(cell.variant) << ",mean," << detail::opt(cell.pdr.mean)
       << ',' << detail::opt(cell.delay.mean) << ',' << detail::opt(cell.overhead.mean) << ','
       << mean_of([](const RunStats& s) { return s.data_generated; }) << ','
       << mean_of([](const RunStats& s) { return s.data_delivered; }) << ','
       << mean_of([](const RunStats& s) { return s.drops.buffer; }) << ','
       << mean_of([](const RunStats& s) { return s.drops.channel; }) << ','
       << mean_of([](const RunStats& s) { return s.drops.expiry; }) << ','
       << mean_of([](const RunStats& s) { return s.drops.abandoned; }) << ','
       << mean_of([](const RunStats& s) { return s.in_flight_at_end; }) << ','
       << mean_of([](const RunStats& s) { return s.control.adv; }) << ','
       << mean_of([](const RunStats& s) { return s.control.sol; }) << ','
       << mean_of([](const RunStats& s) { return s.control.unicast_adv; }) << ','
       << mean_of([](const RunStats& s) { return s.control.notify; }) << ','
       << mean_of([](const RunStats& s) { return s.control.thanks; }) << ','
       << mean_of([](const RunStats& s) { return s.handovers; }) << ','
       << mean_of([](const RunStats& s) { return s.vgw_elections; }) << '\n';
  }
}

enum class PlotMetric { Pdr, Delay, Overhead };

inline void write_plot(std::ostream& os, const SweepResult& r, PlotMetric m) {
  os << "x,variant,mean,min,max\n";
  for (const auto& cell : r.cells) {
    const Summary& s = m == PlotMetric::Pdr ? cell.pdr : m == PlotMetric::Delay ? cell.delay : cell.overhead;
    os << detail::num(cell.axis_value) << ',' << to_string(cell.variant) << ',' << detail::opt(s.mean) << ','
       << detail::opt(s.min) << ',' << detail::opt(s.max) << '\n';
  }
}

inline void write_sweep_files(const std::filesystem::path& dir, const SweepResult& r) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    return f;
  };
  {
    auto f = open("results.csv");
    write_results(f, r);
  }
  {
    auto f = open("plot_pdr.csv");
    write_plot(f, r, PlotMetric::Pdr);
  }
  {
    auto f = open("plot_delay.csv");
    write_plot(f, r, PlotMetric::Delay);
  }
  {
    auto f = open("plot_overhead.csv");
    write_plot(f, r, PlotMetric::Overhead);
  }
}

}  // namespace imgsdrp
