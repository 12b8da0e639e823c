#pragma once

// Packet accounting for a run and the three evaluation metrics: delivery
// ratio, mean end-to-end delay, and normalized routing overhead.

#include <cstdint>
#include <optional>
#include <vector>

#include "imgsdrp/engine.hpp"
#include "imgsdrp/errors.hpp"

namespace imgsdrp {

struct DropCounts {
  std::uint64_t buffer = 0;     // drop-tail at a full interface queue
  std::uint64_t channel = 0;    // retries exhausted with no alternative route
  std::uint64_t expiry = 0;     // hop limit reached or no route at a relay
  std::uint64_t abandoned = 0;  // holder left the road with the packet queued

  std::uint64_t total() const { return buffer + channel + expiry + abandoned; }
};

// Control transmissions, one count per frame sent on air (every hop and
// every retry), not per originated message.
struct ControlCounts {
  std::uint64_t adv = 0;
  std::uint64_t sol = 0;
  std::uint64_t unicast_adv = 0;
  std::uint64_t notify = 0;
  std::uint64_t thanks = 0;

  std::uint64_t total() const { return adv + sol + unicast_adv + notify + thanks; }
};

struct RunStats {
  std::uint64_t data_generated = 0;
  std::uint64_t data_delivered = 0;
  DropCounts drops{};
  std::uint64_t in_flight_at_end = 0;
  ControlCounts control{};
  std::vector<double> delays;  // seconds, one per delivered packet
  std::uint64_t handovers = 0;
  std::uint64_t vgw_elections = 0;
  std::uint64_t replies_dropped = 0;

  bool conserved() const {
    return data_generated == data_delivered + drops.total() + in_flight_at_end;
  }
};

struct DerivedMetrics {
  std::optional<double> pdr;
  std::optional<double> mean_delay;
  std::optional<double> overhead;
};

// Zero generated packets leaves the delivery ratio absent; zero delivered
// packets leaves delay and overhead absent.
inline DerivedMetrics compute_stats(const RunStats& s) {
  DerivedMetrics m;
  if (s.data_generated > 0)
    m.pdr = static_cast<double>(s.data_delivered) / static_cast<double>(s.data_generated);
  if (s.data_delivered > 0) {
    double sum = 0.0;
    for (double d : s.delays) sum += d;
    m.mean_delay = s.delays.empty() ? 0.0 : sum / static_cast<double>(s.delays.size());
    m.overhead = static_cast<double>(s.control.total()) / static_cast<double>(s.data_delivered);
  }
  return m;
}

// Picks `count` distinct sources out of `vehicles` by seeded draw.
inline std::vector<int> choose_sources(std::vector<int> vehicles, int count, RngStream& rng) {
  if (count < 0) throw ConfigError("traffic.sources: must be non-negative");
  if (static_cast<std::size_t>(count) > vehicles.size())
    throw ConfigError("traffic.sources: " + std::to_string(count) + " sources but only " +
                      std::to_string(vehicles.size()) + " vehicles");
  for (std::size_t i = vehicles.size(); i > 1; --i) std::swap(vehicles[i - 1], vehicles[rng.index(i)]);
  vehicles.resize(static_cast<std::size_t>(count));
  return vehicles;
}

// Number of packets a CBR source starting at `offset` emits strictly before
// `duration`.
inline std::uint64_t cbr_packet_count(double offset, double interval, double duration) {
  if (!(interval > 0.0)) throw ContractViolation("cbr: interval must be positive");
  std::uint64_t n = 0;
  while (offset + static_cast<double>(n) * interval < duration) ++n;
  return n;
}

}  // namespace imgsdrp
