#pragma once

// Discrete-event kernel: a (fire_time, sequence)-ordered queue with
// cancellable handles, and named random streams derived from one master seed.

#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "imgsdrp/errors.hpp"

namespace imgsdrp {

enum class EventKind {
  AdvInterval,
  TimerExpiry,
  PacketArrival,
  CbrTick,
  HandoverCritical,
  MobilityTick,
  StatsFlush,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::AdvInterval: return "AdvInterval";
    case EventKind::TimerExpiry: return "TimerExpiry";
    case EventKind::PacketArrival: return "PacketArrival";
    case EventKind::CbrTick: return "CbrTick";
    case EventKind::HandoverCritical: return "HandoverCritical";
    case EventKind::MobilityTick: return "MobilityTick";
    case EventKind::StatsFlush: return "StatsFlush";
  }
  return "?";
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

// xoshiro256** seeded through splitmix64. Same (name, seed) gives the same
// sequence on every platform.
class RngStream {
 public:
  RngStream(std::string name, std::uint64_t master_seed) : name_(std::move(name)) {
    std::uint64_t sm = master_seed ^ fnv1a(name_);
    seed_ = sm;
    for (auto& s : state_) s = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    ++draws_;
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw ContractViolation("rng: index over empty range");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::string name_;
  std::uint64_t seed_ = 0;
  std::uint64_t draws_ = 0;
  std::uint64_t state_[4]{};
};

class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t master_seed) : master_seed_(master_seed) {}
  RngStream stream(std::string_view name) const { return RngStream(std::string(name), master_seed_); }
  std::uint64_t master_seed() const { return master_seed_; }

 private:
  std::uint64_t master_seed_;
};

using EventHandle = std::uint64_t;

// Events dispatch in strict (fire_time, sequence) order; sequence is assigned
// at insertion so ties replay identically.
template <typename Payload>
class EventQueue {
 public:
  struct Event {
    double fire_time = 0.0;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::TimerExpiry;
    Payload payload{};
  };

  double now() const { return now_; }
  std::size_t pending() const { return live_.size(); }

  EventHandle schedule(double fire_time, EventKind kind, Payload payload) {
    if (!(fire_time >= now_)) {
      std::ostringstream os;
      os << "scheduling " << to_string(kind) << " at t=" << fire_time
         << " before current time t=" << now_;
      throw ContractViolation(os.str());
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push(Event{fire_time, seq, kind, std::move(payload)});
    live_.insert(seq);
    return seq;
  }

  EventHandle schedule_in(double delay, EventKind kind, Payload payload) {
    return schedule(now_ + delay, kind, std::move(payload));
  }

  // True iff the event was still pending.
  bool cancel(EventHandle h) { return live_.erase(h) > 0; }
  bool is_pending(EventHandle h) const { return live_.count(h) > 0; }

  // Dispatches every live event with fire_time <= t_end. The clock ends at
  // the last dispatched fire time.
  template <typename Handler>
  std::size_t run_until(double t_end, Handler&& handler) {
    std::size_t dispatched = 0;
    while (!heap_.empty() && heap_.top().fire_time <= t_end) {
      Event ev = heap_.top();
      heap_.pop();
      if (live_.erase(ev.sequence) == 0) continue;
      now_ = ev.fire_time;
      ++dispatched;
      handler(ev);
    }
    return dispatched;
  }

  void advance_to(double t) {
    if (t < now_) throw ContractViolation("event clock cannot move backwards");
    now_ = t;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::unordered_set<std::uint64_t> live_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
};

}  // namespace imgsdrp
