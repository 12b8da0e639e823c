#pragma once

// Vehicle kinematics over time: a synthetic bidirectional highway generator
// and a CSV trace importer, both producing an immutable Trace.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "imgsdrp/config.hpp"
#include "imgsdrp/engine.hpp"
#include "imgsdrp/errors.hpp"
#include "imgsdrp/metrics.hpp"

namespace imgsdrp {

class VehicleAbsent : public std::out_of_range {
 public:
  VehicleAbsent(int id, double t)
      : std::out_of_range("vehicle " + std::to_string(id) + " absent at t=" + std::to_string(t)) {}
};

struct VehicleSpec {
  int id = 0;
  bool dual_interface = false;
  int lane = 0;
  double entry_time = 0.0;
  double desired_speed = 0.0;
};

struct VehicleTrack {
  VehicleSpec spec;
  std::vector<double> times;
  std::vector<Kinematics> samples;
  double end_time = 0.0;  // last instant the vehicle is present
};

class Trace {
 public:
  Trace() = default;
  Trace(double duration, double tick, std::vector<VehicleTrack> tracks)
      : duration_(duration), tick_(tick), tracks_(std::move(tracks)) {
    for (std::size_t i = 0; i < tracks_.size(); ++i) index_[tracks_[i].spec.id] = i;
  }

  double duration() const { return duration_; }
  double tick() const { return tick_; }
  const std::vector<VehicleTrack>& tracks() const { return tracks_; }
  std::size_t vehicle_count() const { return tracks_.size(); }

  const VehicleTrack& track(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw VehicleAbsent(id, 0.0);
    return tracks_[it->second];
  }

  bool present(int id, double t) const {
    auto it = index_.find(id);
    if (it == index_.end()) return false;
    const auto& tr = tracks_[it->second];
    return !tr.times.empty() && t >= tr.times.front() && t <= tr.end_time;
  }

  void set_dual_interface(int id, bool dual) { tracks_[index_.at(id)].spec.dual_interface = dual; }

 private:
  double duration_ = 0.0;
  double tick_ = 0.0;
  std::vector<VehicleTrack> tracks_;
  std::map<int, std::size_t> index_;
};

// Linear interpolation between bracketing samples, exact at sample instants.
// A jump larger than the sampled speeds allow (a wrap-around re-entry) is not
// interpolated across; the nearer sample is returned instead.
inline Kinematics kinematics_at(const Trace& trace, int id, double t) {
  if (!trace.present(id, t)) throw VehicleAbsent(id, t);
  const auto& tr = trace.track(id);
  const auto& ts = tr.times;
  auto hi = std::upper_bound(ts.begin(), ts.end(), t);
  if (hi == ts.end()) {
    // Past the last sample but inside the presence interval: dead reckoning.
    const Kinematics& k = tr.samples.back();
    const double dt = t - ts.back();
    return {k.x + k.vx() * dt, k.y + k.vy() * dt, k.speed, k.heading};
  }
  const std::size_t i1 = static_cast<std::size_t>(hi - ts.begin());
  const std::size_t i0 = i1 - 1;
  const Kinematics& a = tr.samples[i0];
  const Kinematics& b = tr.samples[i1];
  const double span = ts[i1] - ts[i0];
  const double f = (t - ts[i0]) / span;
  if (f <= 0.0) return a;
  const double jump = std::hypot(b.x - a.x, b.y - a.y);
  const double allowed = 1.5 * std::max(a.speed, b.speed) * span + 1e-6;
  if (jump > allowed) return f < 0.5 ? a : b;
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), a.speed + f * (b.speed - a.speed), a.heading};
}

inline double lane_center(int lane, double width) { return (lane + 0.5) * width / 4.0; }

// Bidirectional two-lane-per-direction highway. Lanes 0-1 head east
// (heading 0), lanes 2-3 head west (heading pi). Vehicles wrap around at the
// ends so density stays constant.
inline Trace generate_highway(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.vehicles <= 0) throw EmptyScenario();
  StreamFactory streams(seed);
  RngStream rng = streams.stream("mobility");

  const int n = cfg.vehicles;
  const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / cfg.tick));

  // Dual-interface vehicles: the first vgc_count entries of a shuffled id list.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  std::vector<bool> dual(static_cast<std::size_t>(n), false);
  for (int i = 0; i < std::min(cfg.vgc_count, n); ++i) dual[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  std::vector<VehicleTrack> tracks;
  tracks.reserve(static_cast<std::size_t>(n));
  for (int id = 0; id < n; ++id) {
    VehicleTrack tr;
    tr.spec.id = id;
    tr.spec.dual_interface = dual[static_cast<std::size_t>(id)];
    tr.spec.lane = static_cast<int>(rng.index(4));
    tr.spec.entry_time = 0.0;
    tr.spec.desired_speed = rng.uniform(cfg.min_speed, cfg.max_speed);

    const bool eastbound = tr.spec.lane < 2;
    const double heading = eastbound ? 0.0 : std::numbers::pi;
    const double dir = eastbound ? 1.0 : -1.0;
    const double y = lane_center(tr.spec.lane, cfg.area_width);
    double x = rng.uniform(0.0, cfg.area_length);
    double speed = tr.spec.desired_speed;
    double next_change = rng.exponential(cfg.speed_change_interval);

    tr.times.reserve(steps);
    tr.samples.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * cfg.tick;
      while (t >= next_change) {
        const double f = rng.uniform(-cfg.speed_change_fraction, cfg.speed_change_fraction);
        speed = std::clamp(tr.spec.desired_speed * (1.0 + f), cfg.min_speed, cfg.max_speed);
        next_change += rng.exponential(cfg.speed_change_interval);
      }
      tr.times.push_back(t);
      tr.samples.push_back({x, y, speed, heading});
      x += dir * speed * cfg.tick;
      x = std::fmod(x, cfg.area_length);
      if (x < 0.0) x += cfg.area_length;
    }
    tr.end_time = cfg.duration;
    tracks.push_back(std::move(tr));
  }
  return Trace(cfg.duration, cfg.tick, std::move(tracks));
}

// Marks `count` vehicles as dual-interface by seeded draw (used for imported
// traces, which carry no interface information).
inline void assign_dual_interface(Trace& trace, int count, std::uint64_t seed) {
  RngStream rng = StreamFactory(seed).stream("dual-interface");
  std::vector<int> ids;
  for (const auto& tr : trace.tracks()) ids.push_back(tr.spec.id);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
  for (std::size_t i = 0; i < ids.size(); ++i)
    trace.set_dual_interface(ids[i], static_cast<int>(i) < count);
}

// CSV trace: optional header line, then rows of
// `time_s,vehicle_id,x_m,y_m,speed_mps,heading_rad`.
// Every vehicle must be sampled at every tick between its first and last
// sample; a vehicle that disappears and later returns is rejected.
inline Trace parse_trace(std::istream& in, const std::string& origin = "<trace>") {
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::map<int, VehicleTrack> tracks;
  std::map<int, std::size_t> last_line;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line.find("time") != std::string::npos) continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(detail::trim(cell));
    if (cols.size() != 6) throw TraceParseError(origin, lineno, "expected 6 comma-separated fields");
    double t = 0, x = 0, y = 0, v = 0, h = 0;
    long long id = 0;
    try {
      t = detail::parse_double("time_s", cols[0]);
      id = detail::parse_int("vehicle_id", cols[1]);
      x = detail::parse_double("x_m", cols[2]);
      y = detail::parse_double("y_m", cols[3]);
      v = detail::parse_double("speed_mps", cols[4]);
      h = detail::parse_double("heading_rad", cols[5]);
    } catch (const ConfigError& e) {
      throw TraceParseError(origin, lineno, e.what());
    }
    if (t < 0) throw TraceParseError(origin, lineno, "negative time");
    if (id < 0 || id > std::numeric_limits<int>::max()) throw TraceParseError(origin, lineno, "invalid vehicle id");
    if (v < 0) throw TraceParseError(origin, lineno, "negative speed");
    auto& tr = tracks[static_cast<int>(id)];
    tr.spec.id = static_cast<int>(id);
    if (!tr.times.empty() && t <= tr.times.back())
      throw TraceParseError(origin, lineno,
                            "non-monotone timestamp for vehicle " + std::to_string(id));
    tr.times.push_back(t);
    tr.samples.push_back(Kinematics::make(x, y, v, h));
    last_line[static_cast<int>(id)] = lineno;
  }
  if (tracks.empty()) throw EmptyScenario();

  double tick = 0.0;
  for (const auto& [id, tr] : tracks)
    for (std::size_t i = 1; i < tr.times.size(); ++i) {
      const double dt = tr.times[i] - tr.times[i - 1];
      if (tick == 0.0 || dt < tick) tick = dt;
    }

  double duration = 0.0;
  std::vector<VehicleTrack> out;
  for (auto& [id, tr] : tracks) {
    for (std::size_t i = 1; i < tr.times.size(); ++i) {
      const double dt = tr.times[i] - tr.times[i - 1];
      if (dt > tick * 1.5 + 1e-9)
        throw TraceParseError(origin, last_line[id],
                              "unknown vehicle id " + std::to_string(id) +
                                  " mid-stream (vehicle reappears after leaving at t=" +
                                  detail::fmt_double(tr.times[i - 1]) + ")");
    }
    tr.spec.entry_time = tr.times.front();
    tr.spec.desired_speed = tr.samples.front().speed;
    tr.end_time = tr.times.back();
    duration = std::max(duration, tr.end_time);
    out.push_back(std::move(tr));
  }
  return Trace(duration, tick, std::move(out));
}

inline Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  return parse_trace(in, path);
}

inline void write_trace(std::ostream& os, const Trace& trace) {
  os << "time_s,vehicle_id,x_m,y_m,speed_mps,heading_rad\n";
  os.precision(10);
  for (const auto& tr : trace.tracks())
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const auto& k = tr.samples[i];
      os << tr.times[i] << ',' << tr.spec.id << ',' << k.x << ',' << k.y << ',' << k.speed << ','
         << k.heading << '\n';
    }
}

}  // namespace imgsdrp
