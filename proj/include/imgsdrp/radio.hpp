#pragma once

// Per-frame 802.11p delivery under Nakagami fading, and the LTE side reduced
// to a coverage disk around the base station. Randomness is always supplied
// by the caller.

#include <cmath>

#include "imgsdrp/config.hpp"
#include "imgsdrp/metrics.hpp"

namespace imgsdrp {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct RadioConfig {
  double max_range = 250.0;
  double data_rate = 6e6;
  Position base_station{4000.0, 100.0};
  double r4g = 7000.0;
  // Friis received power is monotone in distance, so the RSS threshold is
  // carried as the distance at which it is crossed.
  double rss_threshold_distance = 6300.0;
  double lte_uplink_latency = 0.010;
  double jitter = 0.001;
  ChannelModel channel = ChannelModel::Nakagami;

  static RadioConfig from(const ScenarioConfig& c) {
    return {c.range, c.data_rate, {c.bs_x, c.bs_y}, c.r4g, c.rss_distance, c.lte_latency, c.jitter, c.channel};
  }

  double airtime(int bytes) const { return static_cast<double>(bytes) * 8.0 / data_rate; }
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline Position position_of(const Kinematics& k) { return {k.x, k.y}; }

inline double delivery_probability(double d, double max_range, ChannelModel model) {
  if (model == ChannelModel::Disk) return d <= max_range ? 1.0 : 0.0;
  return reception_probability(d, max_range);
}

// True iff the draw falls under the reception probability at the current
// sender-receiver distance.
inline bool try_deliver(const Kinematics& sender, const Kinematics& receiver, double max_range,
                        double random_draw, ChannelModel model = ChannelModel::Nakagami) {
  return random_draw < delivery_probability(distance(sender, receiver), max_range, model);
}

inline double lte_distance(Position pos, const RadioConfig& cfg) { return distance(pos, cfg.base_station); }

inline bool in_lte_coverage(Position pos, const RadioConfig& cfg) { return lte_distance(pos, cfg) <= cfg.r4g; }

inline bool lte_rss_ok(Position pos, const RadioConfig& cfg) {
  return lte_distance(pos, cfg) <= cfg.rss_threshold_distance;
}

}  // namespace imgsdrp
