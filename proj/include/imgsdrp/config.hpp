#pragma once

// Scenario configuration: every tunable of a run, its defaults, and a
// key=value text format with dotted sections. Each parameter records whether
// its default comes from the published evaluation setup or is an engineering
// choice, so `explain` can show which values are assumptions.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "imgsdrp/errors.hpp"
#include "imgsdrp/metrics.hpp"

namespace imgsdrp {

enum class Variant { ETR, MTR };
enum class ChannelModel { Nakagami, Disk };

inline const char* to_string(Variant v) { return v == Variant::ETR ? "ETR" : "MTR"; }
inline const char* to_string(ChannelModel c) { return c == ChannelModel::Nakagami ? "nakagami" : "disk"; }

struct ScenarioConfig {
  // scenario
  std::uint64_t seed = 1;
  double duration = 300.0;
  Variant variant = Variant::ETR;

  // mobility
  double area_length = 8000.0;
  double area_width = 100.0;
  int vehicles = 50;
  int vgc_count = 20;
  double max_speed = 30.0;
  double min_speed = 5.0;  // also the LLT_max normalizer: r4g / min_speed
  double tick = 0.1;
  double speed_change_interval = 30.0;  // mean seconds between speed changes
  double speed_change_fraction = 0.2;   // max relative change per event
  std::string trace_path;               // empty: synthetic highway

  // radio
  double range = 250.0;
  double data_rate = 6e6;
  double bs_x = 4000.0;
  double bs_y = 100.0;
  double r4g = 7000.0;
  double rss_distance = 6300.0;
  double lte_latency = 0.010;
  double jitter = 0.001;
  ChannelModel channel = ChannelModel::Nakagami;
  int control_bytes = 64;

  // protocol
  double llt_threshold = 30.0;
  double rsd_threshold = 0.25;
  ContentionWeights weights{};
  double adv_interval = 1.0;
  int zone_hops = 3;   // H_max
  int sol_hops = 5;    // k
  double delta_fallback = 0.5;
  double delta_ewma = 0.25;
  double sol_retry = 1.0;
  double sol_retry_max = 8.0;
  int retry_limit = 3;
  int speed_window = 10;
  double speed_sample_interval = 1.0;
  int ttl = 32;

  // traffic
  int sources = 5;
  double cbr_interval = 0.1;
  int payload_bytes = 1000;
  int queue_capacity = 20;

  double llt_max() const { return r4g / min_speed; }
};

enum class ParamSource { Default, File, Override };

struct ParamInfo {
  std::string key;
  std::vector<std::string> aliases;
  bool from_evaluation_setup = false;
  std::string help;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline double parse_double(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  if (pos != text.size() || !std::isfinite(v))
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

inline long long parse_int(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  if (pos != text.size()) throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

template <typename T>
ParamInfo real(std::string key, std::vector<std::string> aliases, bool eval, std::string help,
               T ScenarioConfig::*field) {
  return {key, std::move(aliases), eval, std::move(help),
          [field, key](ScenarioConfig& c, const std::string& v) { c.*field = parse_double(key, v); },
          [field](const ScenarioConfig& c) { return fmt_double(c.*field); }};
}

inline ParamInfo weight(std::string key, std::vector<std::string> aliases, std::string help,
                        double ContentionWeights::*field) {
  return {key, std::move(aliases), false, std::move(help),
          [field, key](ScenarioConfig& c, const std::string& v) { c.weights.*field = parse_double(key, v); },
          [field](const ScenarioConfig& c) { return fmt_double(c.weights.*field); }};
}

inline ParamInfo integer(std::string key, std::vector<std::string> aliases, bool eval, std::string help,
                         int ScenarioConfig::*field) {
  return {key, std::move(aliases), eval, std::move(help),
          [field, key](ScenarioConfig& c, const std::string& v) {
            const long long n = parse_int(key, v);
            if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max())
              throw ConfigError(key + ": integer out of range");
            c.*field = static_cast<int>(n);
          },
          [field](const ScenarioConfig& c) { return std::to_string(c.*field); }};
}

}  // namespace detail

inline const std::vector<ParamInfo>& parameter_table() {
  using namespace detail;
  using C = ScenarioConfig;
  using W = ContentionWeights;
  static const std::vector<ParamInfo> table = [] {
    std::vector<ParamInfo> t;
    t.push_back({"scenario.seed", {"seed"}, false, "master random seed",
                 [](C& c, const std::string& v) {
                   const long long n = parse_int("scenario.seed", v);
                   if (n < 0) throw ConfigError("scenario.seed: must be non-negative");
                   c.seed = static_cast<std::uint64_t>(n);
                 },
                 [](const C& c) { return std::to_string(c.seed); }});
    t.push_back(real("scenario.duration", {"duration"}, true, "simulated time, s", &C::duration));
    t.push_back({"scenario.variant", {"variant"}, true, "ETR (expected range) or MTR (maximum range)",
                 [](C& c, const std::string& v) {
                   if (v == "ETR" || v == "etr") c.variant = Variant::ETR;
                   else if (v == "MTR" || v == "mtr") c.variant = Variant::MTR;
                   else throw ConfigError("scenario.variant: expected ETR or MTR, got '" + v + "'");
                 },
                 [](const C& c) { return std::string(to_string(c.variant)); }});

    t.push_back(real("mobility.area_length", {}, true, "highway length, m", &C::area_length));
    t.push_back(real("mobility.area_width", {}, true, "highway width, m", &C::area_width));
    t.push_back(integer("mobility.vehicles", {"vehicles"}, true, "number of vehicles", &C::vehicles));
    t.push_back(integer("mobility.vgc_count", {"vgc_count"}, true, "dual-interface vehicles", &C::vgc_count));
    t.push_back(real("mobility.max_speed", {}, true, "maximum speed, m/s", &C::max_speed));
    t.push_back(real("mobility.min_speed", {"v_min"}, false,
                     "minimum generated speed, m/s; LLT_max = r4g / min_speed", &C::min_speed));
    t.push_back(real("mobility.tick", {}, false, "trace sampling step, s", &C::tick));
    t.push_back(real("mobility.speed_change_interval", {}, false,
                     "mean time between speed changes, s", &C::speed_change_interval));
    t.push_back(real("mobility.speed_change_fraction", {}, false,
                     "largest relative speed change", &C::speed_change_fraction));
    t.push_back({"mobility.trace", {"trace"}, false, "trace file (empty: synthetic highway)",
                 [](C& c, const std::string& v) { c.trace_path = v; },
                 [](const C& c) { return c.trace_path; }});

    t.push_back(real("radio.range", {"R"}, true, "802.11p maximum range R, m", &C::range));
    t.push_back(real("radio.data_rate", {}, true, "802.11p data rate, bit/s", &C::data_rate));
    t.push_back(real("radio.bs_x", {}, false, "base station x, m", &C::bs_x));
    t.push_back(real("radio.bs_y", {}, false, "base station y, m", &C::bs_y));
    t.push_back(real("radio.r4g", {}, true, "eNodeB coverage radius, m", &C::r4g));
    t.push_back(real("radio.rss_distance", {}, false,
                     "distance equivalent of the LTE RSS threshold, m", &C::rss_distance));
    t.push_back(real("radio.lte_latency", {}, false, "LTE uplink latency, s", &C::lte_latency));
    t.push_back(real("radio.jitter", {}, false, "max channel access jitter, s", &C::jitter));
    t.push_back({"radio.channel", {"channel"}, false, "nakagami or disk (lossless within R)",
                 [](C& c, const std::string& v) {
                   if (v == "nakagami") c.channel = ChannelModel::Nakagami;
                   else if (v == "disk") c.channel = ChannelModel::Disk;
                   else throw ConfigError("radio.channel: expected nakagami or disk, got '" + v + "'");
                 },
                 [](const C& c) { return std::string(to_string(c.channel)); }});
    t.push_back(integer("radio.control_bytes", {}, false, "control frame size, bytes", &C::control_bytes));

    t.push_back(real("protocol.llt_threshold", {"LLT_th"}, false, "LLT_Th, s", &C::llt_threshold));
    t.push_back(real("protocol.rsd_threshold", {"RSD_th"}, false, "RSD_Th", &C::rsd_threshold));
    t.push_back(weight("protocol.mu", {"mu"}, "gateway weight share of LLT", &W::mu));
    t.push_back(weight("protocol.alpha", {"alpha"}, "relay weight of stability", &W::alpha));
    t.push_back(weight("protocol.beta", {"beta"}, "relay weight of distance progress", &W::beta));
    t.push_back(weight("protocol.gamma", {"gamma"}, "relay weight of buffer", &W::gamma));
    t.push_back(weight("protocol.stability_scale", {"A"}, "growth constant A of S_e, s", &W::stability_scale));
    t.push_back(weight("protocol.gateway_window", {"T_max"}, "gateway contention window, s", &W::gateway_window));
    t.push_back(weight("protocol.relay_window", {"T"}, "relay contention window, s", &W::relay_window));
    t.push_back(real("protocol.adv_interval", {}, false, "advertisement period, s", &C::adv_interval));
    t.push_back(integer("protocol.zone_hops", {"H_max"}, false, "proactive zone radius, hops", &C::zone_hops));
    t.push_back(integer("protocol.sol_hops", {"k"}, false, "reactive zone radius, hops", &C::sol_hops));
    t.push_back(real("protocol.delta_fallback", {"delta"}, false,
                     "handover back-off before any discovery sample, s", &C::delta_fallback));
    t.push_back(real("protocol.delta_ewma", {}, false, "EWMA gain of the back-off estimator", &C::delta_ewma));
    t.push_back(real("protocol.sol_retry", {}, false, "first solicitation retry wait, s", &C::sol_retry));
    t.push_back(real("protocol.sol_retry_max", {}, false, "solicitation retry wait cap, s", &C::sol_retry_max));
    t.push_back(integer("protocol.retry_limit", {}, false, "unicast attempts per hop", &C::retry_limit));
    t.push_back(integer("protocol.speed_window", {}, false, "speed samples kept for RSD", &C::speed_window));
    t.push_back(real("protocol.speed_sample_interval", {"tau"}, false, "speed sampling period, s",
                     &C::speed_sample_interval));
    t.push_back(integer("protocol.ttl", {}, false, "data hop limit", &C::ttl));

    t.push_back(integer("traffic.sources", {"sources"}, true, "CBR sources", &C::sources));
    t.push_back(real("traffic.interval", {}, true, "CBR packet interval, s", &C::cbr_interval));
    t.push_back(integer("traffic.payload", {}, true, "CBR packet size, bytes", &C::payload_bytes));
    t.push_back(integer("traffic.queue", {"L_max"}, true, "interface queue size, packets", &C::queue_capacity));
    return t;
  }();
  return table;
}

inline const ParamInfo* find_param(std::string_view key) {
  for (const auto& p : parameter_table()) {
    if (p.key == key) return &p;
    for (const auto& a : p.aliases)
      if (a == key) return &p;
  }
  return nullptr;
}

// Field-level checks; every problem is reported, not just the first.
inline void validate(const ScenarioConfig& c) {
  std::vector<std::string> errs;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  need(c.duration > 0, "scenario.duration: must be positive");
  need(c.area_length > 0, "mobility.area_length: must be positive");
  need(c.area_width > 0, "mobility.area_width: must be positive");
  need(c.vehicles >= 0, "mobility.vehicles: must be non-negative");
  need(c.vgc_count >= 0 && c.vgc_count <= c.vehicles, "mobility.vgc_count: must be in [0, vehicles]");
  need(c.max_speed > 0, "mobility.max_speed: must be positive");
  need(c.min_speed > 0 && c.min_speed <= c.max_speed, "mobility.min_speed: must be in (0, max_speed]");
  need(c.tick > 0, "mobility.tick: must be positive");
  need(c.speed_change_interval > 0, "mobility.speed_change_interval: must be positive");
  need(c.speed_change_fraction >= 0 && c.speed_change_fraction < 1,
       "mobility.speed_change_fraction: must be in [0, 1)");
  need(c.range > 0, "radio.range: must be positive");
  need(c.data_rate > 0, "radio.data_rate: must be positive");
  need(c.r4g > 0, "radio.r4g: must be positive");
  need(c.rss_distance > 0 && c.rss_distance <= c.r4g, "radio.rss_distance: must be in (0, r4g]");
  need(c.lte_latency >= 0, "radio.lte_latency: must be non-negative");
  need(c.jitter >= 0, "radio.jitter: must be non-negative");
  need(c.control_bytes > 0, "radio.control_bytes: must be positive");
  need(c.llt_threshold >= 0, "protocol.llt_threshold: must be non-negative");
  need(c.rsd_threshold >= 0 && c.rsd_threshold <= 1, "protocol.rsd_threshold: must be in [0, 1]");
  try {
    c.weights.validate();
  } catch (const ContractViolation& e) {
    errs.push_back(std::string("protocol weights: ") + e.what());
  }
  need(c.adv_interval > 0, "protocol.adv_interval: must be positive");
  need(c.zone_hops >= 0, "protocol.zone_hops: must be non-negative");
  need(c.sol_hops >= 1, "protocol.sol_hops: must be at least 1");
  need(c.delta_fallback >= 0, "protocol.delta_fallback: must be non-negative");
  need(c.delta_ewma > 0 && c.delta_ewma <= 1, "protocol.delta_ewma: must be in (0, 1]");
  need(c.sol_retry > 0, "protocol.sol_retry: must be positive");
  need(c.sol_retry_max >= c.sol_retry, "protocol.sol_retry_max: must be >= sol_retry");
  need(c.retry_limit >= 1, "protocol.retry_limit: must be at least 1");
  need(c.speed_window >= 2, "protocol.speed_window: must be at least 2");
  need(c.speed_sample_interval > 0, "protocol.speed_sample_interval: must be positive");
  need(c.ttl >= 1, "protocol.ttl: must be at least 1");
  need(c.sources >= 0, "traffic.sources: must be non-negative");
  need(c.cbr_interval > 0, "traffic.interval: must be positive");
  need(c.payload_bytes > 0, "traffic.payload: must be positive");
  need(c.queue_capacity >= 1, "traffic.queue: must be at least 1");
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

// A config plus where each value came from.
struct ResolvedConfig {
  ScenarioConfig config;
  std::map<std::string, ParamSource> sources;  // canonical key -> source

  ParamSource source_of(const std::string& key) const {
    auto it = sources.find(key);
    return it == sources.end() ? ParamSource::Default : it->second;
  }
};

inline void apply_setting(ResolvedConfig& rc, const std::string& key, const std::string& value,
                          ParamSource src) {
  const ParamInfo* p = find_param(key);
  if (!p) throw ConfigError("unknown configuration key '" + key + "'");
  p->set(rc.config, value);
  rc.sources[p->key] = src;
}

// Parses `key = value` lines. `[section]` headers prefix following keys
// with `section.`; `#` starts a comment.
inline void apply_config_text(ResolvedConfig& rc, std::istream& in, const std::string& origin) {
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    try {
      apply_setting(rc, key, value, ParamSource::File);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline ResolvedConfig load_config(const std::string& path) {
  ResolvedConfig rc;
  if (path.empty()) return rc;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  apply_config_text(rc, in, path);
  return rc;
}

// Applies `key=value` overrides.
inline void apply_overrides(ResolvedConfig& rc, const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "': expected key=value");
    apply_setting(rc, detail::trim(std::string_view(kv).substr(0, eq)),
                  detail::trim(std::string_view(kv).substr(eq + 1)), ParamSource::Override);
  }
}

inline std::string source_label(const ParamInfo& p, ParamSource s) {
  switch (s) {
    case ParamSource::File: return "file";
    case ParamSource::Override: return "override";
    case ParamSource::Default: break;
  }
  return p.from_evaluation_setup ? "default" : "default (paper-unspecified)";
}

// One line per parameter: `key = value  [source]  # help`.
inline std::string explain(const ResolvedConfig& rc) {
  std::ostringstream os;
  for (const auto& p : parameter_table()) {
    os << p.key << " = " << p.get(rc.config) << "  [" << source_label(p, rc.source_of(p.key)) << "]  # "
       << p.help << "\n";
  }
  os << "derived.llt_max = " << detail::fmt_double(rc.config.llt_max()) << "  [derived]  # r4g / min_speed\n";
  return os.str();
}

}  // namespace imgsdrp
