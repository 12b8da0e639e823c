#pragma once

// Per-vehicle protocol logic and the network that drives it: gateway
// election among dual-interface vehicles, contention-based relaying of
// advertisements and solicitations, routing-table maintenance, unicast
// replies along recorded reverse paths, handover, and hop-by-hop data
// forwarding to the LTE uplink.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "imgsdrp/config.hpp"
#include "imgsdrp/engine.hpp"
#include "imgsdrp/measure.hpp"
#include "imgsdrp/metrics.hpp"
#include "imgsdrp/mobility.hpp"
#include "imgsdrp/radio.hpp"
#include "imgsdrp/routing.hpp"

namespace imgsdrp {

enum class NodeRole { OV, VGC, VGW };

inline const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::OV: return "OV";
    case NodeRole::VGC: return "VGC";
    case NodeRole::VGW: return "VGW";
  }
  return "?";
}

// Dual-interface vehicles above the RSS threshold are at least candidates;
// an elected gateway keeps its role while it stays eligible.
inline NodeRole classify_role(NodeRole current, bool dual_interface, bool rss_ok) {
  if (!dual_interface || !rss_ok) return NodeRole::OV;
  return current == NodeRole::VGW ? NodeRole::VGW : NodeRole::VGC;
}

inline double heading_difference(double a, double b) {
  double d = std::fabs(normalize_heading(a) - normalize_heading(b));
  return d > std::numbers::pi ? 2.0 * std::numbers::pi - d : d;
}

inline bool same_direction(const Kinematics& a, const Kinematics& b) {
  return heading_difference(a.heading, b.heading) < std::numbers::pi / 2.0;
}

// Receiver is behind the broadcaster when the displacement from broadcaster
// to receiver points against the broadcaster's heading.
inline bool is_behind(const Kinematics& receiver, const Kinematics& broadcaster) {
  const double dx = receiver.x - broadcaster.x;
  const double dy = receiver.y - broadcaster.y;
  return dx * std::cos(broadcaster.heading) + dy * std::sin(broadcaster.heading) < 0.0;
}

inline bool adv_relay_eligible(bool first_copy, const Kinematics& receiver, const AdvMessage& msg,
                               int zone_hops) {
  return first_copy && same_direction(receiver, msg.broadcaster) && is_behind(receiver, msg.broadcaster) &&
         msg.hop_count < zone_hops;
}

// Range used for stability and progress metrics: fading-adjusted expected
// range (ETR) or the nominal maximum (MTR).
inline double metric_range(Variant v, double max_range, double d) {
  return v == Variant::ETR ? expected_range(max_range, nakagami_shape(d)) : max_range;
}

struct DataPacket {
  std::uint64_t uid = 0;
  Address source = -1;
  Address gateway = -1;
  double created = 0.0;
  int hops = 0;
  bool failed_hop = false;
};

enum class ControlKind { Adv, Sol, UnicastAdv, Notify, Thanks };

struct TxRecord {
  double time = 0.0;
  Address node = -1;
  ControlKind kind = ControlKind::Adv;
  Address key = -1;  // gateway for Adv/UnicastAdv, source for Sol
  int seq = 0;
  int hop_count = 0;
  Kinematics position{};
};

namespace ev {
struct AdvInterval {};
struct MobilityTick {};
struct StatsFlush {};
struct Cbr {
  Address source;
  double offset;
  std::uint64_t k;
};
struct GatewayTimer {
  Address node;
};
struct RelayAdvTimer {
  Address node;
  Address gateway;
  int seq;
};
struct RelaySolTimer {
  Address node;
  SolicitationId id;
};
struct ReplyTimer {
  Address node;
  SolicitationId id;
};
struct SolRetry {
  Address node;
  int sol_seq;
};
struct Handover {
  Address node;
};
struct TxDone {
  Address node;
  Address next_hop;
  bool success;
};
struct AdvArrival {
  Address receiver;
  AdvMessage msg;
};
struct SolArrival {
  Address receiver;
  SolMessage msg;
};
struct UnicastAdvArrival {
  Address receiver;
  Address sender;
  AdvMessage msg;
};
struct NotifyArrival {
  Address receiver;
  NotifyMessage msg;
};
struct ThanksArrival {
  Address receiver;
  ThanksMessage msg;
};
struct ServerArrival {
  DataPacket pkt;
};
}  // namespace ev

using Payload = std::variant<ev::AdvInterval, ev::MobilityTick, ev::StatsFlush, ev::Cbr, ev::GatewayTimer,
                             ev::RelayAdvTimer, ev::RelaySolTimer, ev::ReplyTimer, ev::SolRetry, ev::Handover,
                             ev::TxDone, ev::AdvArrival, ev::SolArrival, ev::UnicastAdvArrival,
                             ev::NotifyArrival, ev::ThanksArrival, ev::ServerArrival>;

using AdvKey = std::pair<Address, int>;  // (gateway, seq)

template <typename Msg>
struct Pending {
  EventHandle handle = 0;
  double armed = 0.0;
  Msg msg{};
};

// Start times of frames a node decoded, used as carrier sense: a contention
// timer is suppressed by any frame for the same key that went on air after
// the timer was armed.
using SenseLog = std::vector<double>;

inline bool heard_between(const SenseLog& starts, double after, double upto) {
  return std::any_of(starts.begin(), starts.end(), [&](double s) { return s > after && s <= upto; });
}

struct NodeState {
  Address id = -1;
  bool dual_interface = false;
  bool present = false;
  NodeRole role = NodeRole::OV;
  SpeedWindow speeds;
  double next_speed_sample = 0.0;

  Kinematics kin{};
  double kin_time = -1.0;

  std::deque<DataPacket> queue;
  bool tx_busy = false;
  RoutingTable table;

  // Contention state.
  std::set<AdvKey> seen_adv;
  std::set<SolicitationId> seen_sol;
  std::map<AdvKey, Pending<AdvMessage>> pending_adv;
  std::map<SolicitationId, Pending<SolMessage>> pending_sol;
  std::map<SolicitationId, Pending<std::monostate>> pending_reply;
  std::map<SolicitationId, Address> sol_reverse_hop;
  std::map<AdvKey, SenseLog> adv_sensed;
  std::map<SolicitationId, SenseLog> sol_sensed;
  std::map<SolicitationId, SenseLog> reply_sensed;

  // Gateway role.
  std::optional<EventHandle> gateway_timer;
  double gateway_timer_armed = 0.0;
  double last_vgw_adv = -std::numeric_limits<double>::infinity();
  SenseLog vgw_adv_sensed;
  int adv_seq = 0;
  std::set<Address> served_sources;
  std::map<Address, Address> reverse_hop;  // data source -> previous hop

  // Source role.
  bool is_source = false;
  std::optional<Address> active_gateway;
  std::optional<EventHandle> handover_timer;
  bool handover_pending = false;
  std::optional<Address> handover_from;
  int sol_seq = 0;
  bool sol_outstanding = false;
  double sol_sent_at = 0.0;
  double sol_backoff = 1.0;
  std::optional<EventHandle> sol_retry_timer;
  double delta = 0.5;
  bool delta_observed = false;
  std::uint64_t sol_originated = 0;
};

struct NetworkOptions {
  std::optional<std::vector<Address>> sources;  // default: seeded draw
  bool log_transmissions = false;
  bool start_traffic = true;
  double traffic_start = 0.0;
};

class Network {
 public:
  Network(ScenarioConfig cfg, Trace trace, NetworkOptions opts = {})
      : cfg_(std::move(cfg)),
        radio_(RadioConfig::from(cfg_)),
        trace_(std::move(trace)),
        opts_(std::move(opts)),
        streams_(cfg_.seed),
        channel_rng_(streams_.stream("channel")),
        jitter_rng_(streams_.stream("jitter")),
        contention_rng_(streams_.stream("contention")) {
    validate(cfg_);
    if (trace_.vehicle_count() == 0) throw EmptyScenario();
    std::vector<Address> ids;
    for (const auto& tr : trace_.tracks()) {
      const Address id = tr.spec.id;
      if (id < 0) throw ConfigError("vehicle ids must be non-negative");
      ids.push_back(id);
      if (static_cast<std::size_t>(id) >= nodes_.size()) nodes_.resize(static_cast<std::size_t>(id) + 1);
      NodeState& n = nodes_[static_cast<std::size_t>(id)];
      n.id = id;
      n.dual_interface = tr.spec.dual_interface;
      n.speeds = SpeedWindow(static_cast<std::size_t>(cfg_.speed_window), cfg_.speed_sample_interval);
      n.sol_backoff = cfg_.sol_retry;
      n.delta = cfg_.delta_fallback;
    }
    for (const auto& n : nodes_)
      if (n.id >= 0) active_ids_.push_back(n.id);

    RngStream traffic = streams_.stream("traffic");
    sources_ = opts_.sources ? *opts_.sources : choose_sources(ids, cfg_.sources, traffic);
    for (Address s : sources_) node(s).is_source = true;

    queue_.schedule(0.0, EventKind::MobilityTick, ev::MobilityTick{});
    queue_.schedule(cfg_.adv_interval, EventKind::AdvInterval, ev::AdvInterval{});
    if (opts_.start_traffic) {
      RngStream offsets = streams_.stream("traffic-offsets");
      for (Address s : sources_) {
        const double offset = opts_.traffic_start + offsets.uniform(0.0, cfg_.cbr_interval);
        if (offset < cfg_.duration) queue_.schedule(offset, EventKind::CbrTick, ev::Cbr{s, offset, 0});
      }
    }
    queue_.schedule(cfg_.duration, EventKind::StatsFlush, ev::StatsFlush{});
  }

  // Runs to the configured duration and returns the final accounting.
  RunStats run() {
    run_until(cfg_.duration);
    return stats_;
  }

  std::size_t run_until(double t_end) {
    const std::size_t n = queue_.run_until(t_end, [this](auto& e) { dispatch(e.payload); });
    stats_.in_flight_at_end = in_flight();
    return n;
  }

  double now() const { return queue_.now(); }
  const ScenarioConfig& config() const { return cfg_; }
  const RadioConfig& radio() const { return radio_; }
  const Trace& trace() const { return trace_; }
  const RunStats& stats() const { return stats_; }
  const std::vector<TxRecord>& transmissions() const { return tx_log_; }
  const std::vector<Address>& sources() const { return sources_; }
  EventQueue<Payload>& events() { return queue_; }

  NodeState& node(Address id) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size() || nodes_[static_cast<std::size_t>(id)].id != id)
      throw ContractViolation("unknown node " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
  }

  const Kinematics& kinematics(Address id) {
    NodeState& n = node(id);
    if (n.kin_time != now()) {
      n.kin = kinematics_at(trace_, id, now());
      n.kin_time = now();
    }
    return n.kin;
  }

  double abq(const NodeState& n) const {
    return available_buffer(std::min(n.queue.size(), static_cast<std::size_t>(cfg_.queue_capacity)),
                            static_cast<std::size_t>(cfg_.queue_capacity));
  }

  double link_range(double d) const { return metric_range(cfg_.variant, cfg_.range, d); }

  // ----- message reception (public so scripted tests can inject frames) -----

  void receive_adv(Address rid, const AdvMessage& msg) {
    NodeState& r = node(rid);
    if (!alive(r) || r.role == NodeRole::VGW) return;
    const double t = now();
    if (msg.hop_count == 0) {
      r.last_vgw_adv = t;
      if (r.gateway_timer && queue_.cancel(*r.gateway_timer)) r.gateway_timer.reset();
    }
    const Kinematics& me = kinematics(rid);
    const double d = distance(me, msg.broadcaster);
    const double range = link_range(d);
    const double els = link_expiration(me, msg.broadcaster, range);

    RouteEntry cand;
    cand.gateway = msg.gateway;
    cand.next_hop = msg.relay;
    cand.seq = msg.seq;
    cand.ers = std::min(msg.ers, els);
    cand.hop_count = msg.hop_count + 1;
    cand.abq_route = msg.abq_route + abq(r);
    cand.installed_at = t;
    install(r, cand);

    const AdvKey key{msg.gateway, msg.seq};
    const bool first = !r.seen_adv.count(key);
    if (!first) {
      if (auto it = r.pending_adv.find(key); it != r.pending_adv.end()) {
        queue_.cancel(it->second.handle);
        r.pending_adv.erase(it);
      }
      return;
    }
    r.seen_adv.insert(key);
    if (!adv_relay_eligible(true, me, msg, cfg_.zone_hops)) return;

    const double edr = effective_distance_rate(d, range);
    const RelayContention rc = relay_contention(els, edr, abq(r), cfg_.weights, contention_rng_.uniform());
    AdvMessage out = msg;
    out.ers = cand.ers;
    out.abq_route = cand.abq_route;
    out.hop_count = cand.hop_count;
    const EventHandle h = queue_.schedule(t + rc.defer + access_delay(), EventKind::TimerExpiry,
                                          ev::RelayAdvTimer{rid, msg.gateway, msg.seq});
    r.pending_adv[key] = {h, t, out};
  }

  void receive_sol(Address rid, const SolMessage& msg) {
    NodeState& r = node(rid);
    if (!alive(r) || rid == msg.id.source) return;
    const double t = now();
    if (r.seen_sol.count(msg.id)) {
      if (auto it = r.pending_sol.find(msg.id); it != r.pending_sol.end()) {
        queue_.cancel(it->second.handle);
        r.pending_sol.erase(it);
      }
      return;
    }
    r.seen_sol.insert(msg.id);
    r.sol_reverse_hop[msg.id] = msg.sender;

    const Kinematics& me = kinematics(rid);
    const double d = distance(me, msg.broadcaster);
    const double range = link_range(d);
    const double edr = effective_distance_rate(d, range);

    std::optional<double> reply_stability;
    if (r.role == NodeRole::VGW) reply_stability = kLifetimeCap;
    else if (auto best = select_route(r.table, t)) reply_stability = best->remaining(t);

    if (reply_stability) {
      const RelayContention rc =
          relay_contention(*reply_stability, edr, abq(r), cfg_.weights, contention_rng_.uniform());
      const EventHandle h =
          queue_.schedule(t + rc.defer + access_delay(), EventKind::TimerExpiry, ev::ReplyTimer{rid, msg.id});
      r.pending_reply[msg.id] = {h, t, {}};
      return;
    }
    if (msg.hop_count + 1 >= msg.max_hops) return;
    const double els = link_expiration(me, msg.broadcaster, range);
    const RelayContention rc = relay_contention(els, edr, abq(r), cfg_.weights, contention_rng_.uniform());
    SolMessage out = msg;
    out.hop_count = msg.hop_count + 1;
    const EventHandle h =
        queue_.schedule(t + rc.defer + access_delay(), EventKind::TimerExpiry, ev::RelaySolTimer{rid, msg.id});
    r.pending_sol[msg.id] = {h, t, out};
  }

  void receive_unicast_adv(Address rid, Address sender, const AdvMessage& msg) {
    NodeState& r = node(rid);
    if (!alive(r) || !msg.reply_to) return;
    const double t = now();
    const Kinematics& me = kinematics(rid);
    const double d = distance(me, msg.broadcaster);
    const double els = link_expiration(me, msg.broadcaster, link_range(d));

    AdvMessage fwd = msg;
    fwd.ers = std::min(msg.ers, els);
    fwd.abq_route = msg.abq_route + abq(r);
    fwd.hop_count = msg.hop_count + 1;

    if (r.role != NodeRole::VGW) {
      RouteEntry cand;
      cand.gateway = msg.gateway;
      cand.next_hop = sender;
      cand.seq = msg.seq;
      cand.ers = fwd.ers;
      cand.hop_count = fwd.hop_count;
      cand.abq_route = fwd.abq_route;
      cand.installed_at = t;
      install(r, cand);
    }

    const SolicitationId id = *msg.reply_to;
    if (rid == id.source) {
      on_reply_at_source(r, id);
      return;
    }
    auto prev = r.sol_reverse_hop.find(id);
    if (prev == r.sol_reverse_hop.end()) {
      ++stats_.replies_dropped;
      return;
    }
    fwd.relay = rid;
    fwd.broadcaster = me;
    send_reply(rid, prev->second, fwd);
  }

  void receive_notify(Address rid, const NotifyMessage& msg) {
    NodeState& r = node(rid);
    if (!alive(r)) return;
    if (rid == msg.source) {
      on_notify(r, msg.gateway);
      return;
    }
    auto it = r.reverse_hop.find(msg.source);
    if (it == r.reverse_hop.end() || msg.hop_count + 1 >= cfg_.ttl) return;
    NotifyMessage fwd = msg;
    ++fwd.hop_count;
    send_notify(rid, it->second, fwd);
  }

  void receive_thanks(Address rid, const ThanksMessage& msg) {
    NodeState& r = node(rid);
    if (!alive(r)) return;
    if (rid == msg.gateway) {
      r.served_sources.erase(msg.source);
      return;
    }
    if (msg.hop_count + 1 >= cfg_.ttl) return;
    ThanksMessage fwd = msg;
    ++fwd.hop_count;
    if (const RouteEntry* e = r.table.find(msg.gateway, now())) send_thanks(rid, e->next_hop, fwd);
  }

  // Broadcasts an IMGW_SOL from `sid` unless one is already outstanding.
  void start_solicitation(Address sid) {
    NodeState& s = node(sid);
    if (s.sol_outstanding || !alive(s)) return;
    ++s.sol_seq;
    ++s.sol_originated;
    s.sol_outstanding = true;
    s.sol_sent_at = now();
    SolMessage msg;
    msg.id = {sid, s.sol_seq};
    msg.sender = sid;
    msg.broadcaster = kinematics(sid);
    msg.hop_count = 0;
    msg.max_hops = cfg_.sol_hops;
    s.seen_sol.insert(msg.id);
    broadcast_sol(sid, msg, now() + access_delay());
    s.sol_retry_timer = queue_.schedule(now() + s.sol_backoff, EventKind::TimerExpiry, ev::SolRetry{sid, s.sol_seq});
  }

  // Hands a freshly generated data packet to its source.
  void originate(Address sid) {
    NodeState& s = node(sid);
    ++stats_.data_generated;
    DataPacket pkt;
    pkt.uid = next_uid_++;
    pkt.source = sid;
    pkt.created = now();
    if (!alive(s)) {
      ++stats_.drops.abandoned;
      return;
    }
    if (s.role == NodeRole::VGW) {
      pkt.gateway = sid;
      uplink(pkt);
      return;
    }
    enqueue(s, pkt);
  }

  // Packets in queues or on the LTE uplink.
  std::uint64_t in_flight() const {
    std::uint64_t n = uplink_pending_;
    for (const auto& s : nodes_) n += s.queue.size();
    return n;
  }

  void promote_to_gateway(Address id) { become_gateway(node(id)); }

  bool alive(const NodeState& n) const { return n.present && trace_.present(n.id, now()); }

 private:
  // ----- dispatch -----

  void dispatch(Payload& p) {
    std::visit([this](auto& e) { handle(e); }, p);
  }

  void handle(ev::MobilityTick&) {
    const double t = now();
    for (Address id : active_ids_) {
      NodeState& n = node(id);
      const bool present = trace_.present(id, t);
      if (!present) {
        if (n.present) leave(n);
        continue;
      }
      n.present = true;
      const Kinematics& k = kinematics(id);
      while (t + 1e-9 >= n.next_speed_sample) {
        n.speeds.push(k.speed);
        n.next_speed_sample += cfg_.speed_sample_interval;
      }
      const bool rss = lte_rss_ok(position_of(k), radio_);
      const NodeRole next = classify_role(n.role, n.dual_interface, rss);
      if (n.role == NodeRole::VGW && next != NodeRole::VGW) demote(n, next);
      else n.role = next;
      if (n.role == NodeRole::OV && n.gateway_timer) {
        queue_.cancel(*n.gateway_timer);
        n.gateway_timer.reset();
      }
    }
    const double step = trace_.tick() > 0.0 ? trace_.tick() : cfg_.tick;
    if (t + step <= cfg_.duration) queue_.schedule(t + step, EventKind::MobilityTick, ev::MobilityTick{});
  }

  void handle(ev::AdvInterval&) {
    const double t = now();
    for (Address id : active_ids_) {
      NodeState& n = node(id);
      if (!alive(n)) continue;
      if (n.role == NodeRole::VGW) {
        if (!gateway_still_optimal(n)) {
          demote(n, NodeRole::VGC);
          continue;
        }
        advertise(n);
      } else if (n.role == NodeRole::VGC) {
        if (n.gateway_timer) {
          queue_.cancel(*n.gateway_timer);
          n.gateway_timer.reset();
        }
        if (t - n.last_vgw_adv < cfg_.adv_interval) continue;  // a neighbouring gateway is active
        const auto rsd = speed_rsd(n.speeds);
        if (!rsd) continue;
        const Kinematics& k = kinematics(id);
        const double dist = lte_distance(position_of(k), radio_);
        if (dist > radio_.r4g) continue;
        const double llt = lte_link_lifetime(radio_.r4g, dist, k.speed);
        if (llt < cfg_.llt_threshold || *rsd > cfg_.rsd_threshold) continue;
        const ContentionResult c = gateway_contention(llt, cfg_.llt_max(), *rsd, cfg_.weights);
        const double jitter = contention_rng_.uniform() * cfg_.weights.gateway_window / 100.0;
        n.gateway_timer =
            queue_.schedule(t + c.defer + jitter + access_delay(), EventKind::TimerExpiry, ev::GatewayTimer{id});
        n.gateway_timer_armed = t;
      }
    }
    if (t + cfg_.adv_interval <= cfg_.duration)
      queue_.schedule(t + cfg_.adv_interval, EventKind::AdvInterval, ev::AdvInterval{});
  }

  void handle(ev::GatewayTimer& e) {
    NodeState& n = node(e.node);
    n.gateway_timer.reset();
    if (!alive(n) || n.role != NodeRole::VGC) return;
    if (heard_between(n.vgw_adv_sensed, n.gateway_timer_armed, now())) return;
    become_gateway(n);
  }

  void handle(ev::RelayAdvTimer& e) {
    NodeState& n = node(e.node);
    const AdvKey key{e.gateway, e.seq};
    auto it = n.pending_adv.find(key);
    if (it == n.pending_adv.end()) return;
    AdvMessage out = it->second.msg;
    const double armed = it->second.armed;
    n.pending_adv.erase(it);
    if (!alive(n) || n.role == NodeRole::VGW) return;
    if (heard_between(n.adv_sensed[key], armed, now())) return;
    out.relay = e.node;
    out.broadcaster = kinematics(e.node);
    broadcast_adv(e.node, out, now());
  }

  void handle(ev::RelaySolTimer& e) {
    NodeState& n = node(e.node);
    auto it = n.pending_sol.find(e.id);
    if (it == n.pending_sol.end()) return;
    SolMessage out = it->second.msg;
    const double armed = it->second.armed;
    n.pending_sol.erase(it);
    if (!alive(n)) return;
    if (heard_between(n.sol_sensed[e.id], armed, now())) return;
    out.sender = e.node;
    out.broadcaster = kinematics(e.node);
    broadcast_sol(e.node, out, now());
  }

  void handle(ev::ReplyTimer& e) {
    NodeState& n = node(e.node);
    auto it = n.pending_reply.find(e.id);
    if (it == n.pending_reply.end()) return;
    const double armed = it->second.armed;
    n.pending_reply.erase(it);
    if (!alive(n)) return;
    if (heard_between(n.reply_sensed[e.id], armed, now())) return;
    const double t = now();
    AdvMessage reply;
    if (n.role == NodeRole::VGW) {
      reply.gateway = e.node;
      reply.seq = n.adv_seq;
      reply.ers = kLifetimeCap;
      reply.hop_count = 0;
      reply.abq_route = abq(n);
    } else if (auto best = select_route(n.table, t)) {
      reply.gateway = best->gateway;
      reply.seq = best->seq;
      reply.ers = best->remaining(t);
      reply.hop_count = best->hop_count;
      reply.abq_route = best->abq_route;
    } else {
      ++stats_.replies_dropped;
      return;
    }
    reply.relay = e.node;
    reply.broadcaster = kinematics(e.node);
    reply.reply_to = e.id;
    auto prev = n.sol_reverse_hop.find(e.id);
    if (prev == n.sol_reverse_hop.end()) {
      ++stats_.replies_dropped;
      return;
    }
    send_reply(e.node, prev->second, reply);
  }

  void handle(ev::SolRetry& e) {
    NodeState& s = node(e.node);
    if (!s.sol_outstanding || s.sol_seq != e.sol_seq) return;
    s.sol_retry_timer.reset();
    s.sol_outstanding = false;
    s.sol_backoff = std::min(2.0 * s.sol_backoff, cfg_.sol_retry_max);
    if (needs_route(s)) start_solicitation(e.node);
  }

  void handle(ev::Handover& e) {
    NodeState& s = node(e.node);
    s.handover_timer.reset();
    if (!alive(s) || !s.active_gateway) return;
    handover(s, *s.active_gateway);
  }

  void handle(ev::Cbr& e) {
    originate(e.source);
    const double next = e.offset + static_cast<double>(e.k + 1) * cfg_.cbr_interval;
    if (next < cfg_.duration) queue_.schedule(next, EventKind::CbrTick, ev::Cbr{e.source, e.offset, e.k + 1});
  }

  void handle(ev::TxDone& e) {
    NodeState& n = node(e.node);
    n.tx_busy = false;
    if (n.queue.empty()) return;
    DataPacket pkt = n.queue.front();
    if (e.success) {
      n.queue.pop_front();
      pkt.hops += 1;
      pkt.failed_hop = false;
      data_arrival(e.next_hop, e.node, pkt);
    } else {
      n.queue.front().failed_hop = true;
      n.table.erase(pkt.gateway);
      if (n.active_gateway && *n.active_gateway == pkt.gateway) drop_active(n);
    }
    service(n);
  }

  void handle(ev::AdvArrival& e) { receive_adv(e.receiver, e.msg); }
  void handle(ev::SolArrival& e) { receive_sol(e.receiver, e.msg); }
  void handle(ev::UnicastAdvArrival& e) { receive_unicast_adv(e.receiver, e.sender, e.msg); }
  void handle(ev::NotifyArrival& e) { receive_notify(e.receiver, e.msg); }
  void handle(ev::ThanksArrival& e) { receive_thanks(e.receiver, e.msg); }

  void handle(ev::ServerArrival& e) {
    --uplink_pending_;
    ++stats_.data_delivered;
    stats_.delays.push_back(now() - e.pkt.created);
  }

  void handle(ev::StatsFlush&) { stats_.in_flight_at_end = in_flight(); }

  // ----- gateway role -----

  bool gateway_still_optimal(NodeState& n) {
    const Kinematics& k = kinematics(n.id);
    const double dist = lte_distance(position_of(k), radio_);
    if (dist > radio_.rss_threshold_distance) return false;
    const double llt = lte_link_lifetime(radio_.r4g, dist, k.speed);
    if (llt < cfg_.llt_threshold) return false;
    const auto rsd = speed_rsd(n.speeds);
    return !rsd || *rsd <= cfg_.rsd_threshold;
  }

  void become_gateway(NodeState& n) {
    n.role = NodeRole::VGW;
    ++stats_.vgw_elections;
    for (auto& [key, p] : n.pending_adv) queue_.cancel(p.handle);
    n.pending_adv.clear();
    for (auto& [id, p] : n.pending_sol) queue_.cancel(p.handle);
    n.pending_sol.clear();
    advertise(n, true);
    service(n);
  }

  void advertise(NodeState& n, bool immediate = false) {
    AdvMessage msg;
    msg.gateway = n.id;
    msg.relay = n.id;
    msg.seq = ++n.adv_seq;
    msg.broadcaster = kinematics(n.id);
    msg.ers = kLifetimeCap;
    msg.abq_route = abq(n);
    msg.hop_count = 0;
    n.seen_adv.insert({n.id, msg.seq});
    broadcast_adv(n.id, msg, immediate ? now() : now() + access_delay());
  }

  void demote(NodeState& n, NodeRole to) {
    n.role = to;
    for (Address s : n.served_sources) {
      NotifyMessage msg{n.id, s};
      if (s == n.id) continue;
      auto it = n.reverse_hop.find(s);
      if (it != n.reverse_hop.end()) send_notify(n.id, it->second, msg);
    }
    n.served_sources.clear();
    service(n);
  }

  void leave(NodeState& n) {
    n.present = false;
    stats_.drops.abandoned += n.queue.size();
    n.queue.clear();
    n.tx_busy = false;
    n.served_sources.clear();
    n.role = NodeRole::OV;
    if (n.gateway_timer) queue_.cancel(*n.gateway_timer);
    n.gateway_timer.reset();
    for (auto& [k, p] : n.pending_adv) queue_.cancel(p.handle);
    n.pending_adv.clear();
    for (auto& [k, p] : n.pending_sol) queue_.cancel(p.handle);
    n.pending_sol.clear();
    for (auto& [k, p] : n.pending_reply) queue_.cancel(p.handle);
    n.pending_reply.clear();
  }

  // ----- routing and handover at sources -----

  void install(NodeState& n, const RouteEntry& cand) {
    const UpdateResult r = n.table.update(cand, now());
    if (!r.accepted) return;
    if (n.is_source && n.active_gateway && *n.active_gateway == cand.gateway) arm_handover(n);
    if (!n.tx_busy && !n.queue.empty()) service(n);
  }

  void arm_handover(NodeState& n) {
    if (n.handover_timer) queue_.cancel(*n.handover_timer);
    n.handover_timer.reset();
    if (!n.active_gateway) return;
    const RouteEntry* e = n.table.find(*n.active_gateway, now());
    if (!e) return;
    const auto tc = critical_time(e->remaining(now()), n.delta);
    if (!tc) return;
    n.handover_timer = queue_.schedule(now() + *tc, EventKind::HandoverCritical, ev::Handover{n.id});
  }

  void drop_active(NodeState& n) {
    n.active_gateway.reset();
    if (n.handover_timer) queue_.cancel(*n.handover_timer);
    n.handover_timer.reset();
  }

  // Best route whose critical time lies at least one advertisement interval
  // ahead, so switching to it does not immediately trigger another handover.
  std::optional<RouteEntry> handover_target(const NodeState& s, std::optional<Address> exclude) {
    RoutingTable usable;
    for (const auto& [gw, e] : s.table.entries())
      if (e.remaining(now()) - s.delta >= cfg_.adv_interval) usable.update(e, now());
    return select_route(usable, now(), exclude);
  }

  // Switches away from `old` if another gateway is reachable, otherwise
  // starts a solicitation and completes the switch when a reply arrives.
  void handover(NodeState& s, Address old) {
    if (auto alt = handover_target(s, old)) {
      s.active_gateway = alt->gateway;
      ++stats_.handovers;
      s.handover_pending = false;
      s.handover_from.reset();
      thank(s, old);
      arm_handover(s);
      service(s);
      return;
    }
    s.handover_pending = true;
    s.handover_from = old;
    start_solicitation(s.id);
  }

  void on_notify(NodeState& s, Address gateway) {
    if (!s.active_gateway || *s.active_gateway != gateway) {
      s.table.erase(gateway);
      return;
    }
    if (s.handover_timer) queue_.cancel(*s.handover_timer);
    s.handover_timer.reset();
    s.table.erase(gateway);
    handover(s, gateway);
  }

  void on_reply_at_source(NodeState& s, const SolicitationId& id) {
    if (id.sol_seq == s.sol_seq && s.sol_outstanding) {
      const double rtt = now() - s.sol_sent_at;
      s.delta = s.delta_observed ? (1.0 - cfg_.delta_ewma) * s.delta + cfg_.delta_ewma * rtt : rtt;
      s.delta_observed = true;
      // A route about to expire leaves the solicitation to its retry timer.
      if (handover_target(s, std::nullopt)) {
        s.sol_outstanding = false;
        if (s.sol_retry_timer) queue_.cancel(*s.sol_retry_timer);
        s.sol_retry_timer.reset();
        s.sol_backoff = cfg_.sol_retry;
      }
    }
    if (s.handover_pending) {
      auto best = handover_target(s, s.handover_from);
      if (!best) best = handover_target(s, std::nullopt);
      if (best) {
        const Address old = s.handover_from.value_or(-1);
        s.active_gateway = best->gateway;
        s.handover_pending = false;
        s.handover_from.reset();
        if (old >= 0 && best->gateway != old) {
          ++stats_.handovers;
          thank(s, old);
        }
        arm_handover(s);
      }
    } else if (!s.active_gateway || !s.table.find(*s.active_gateway, now())) {
      if (auto best = select_route(s.table, now())) {
        s.active_gateway = best->gateway;
        arm_handover(s);
      }
    }
    service(s);
  }

  void thank(NodeState& s, Address old) {
    if (const RouteEntry* e = s.table.find(old, now())) send_thanks(s.id, e->next_hop, ThanksMessage{s.id, old});
  }

  bool needs_route(const NodeState& s) {
    if (!alive(s) || s.role == NodeRole::VGW) return false;
    if (s.handover_pending) return true;
    return !s.queue.empty() && !select_route(s.table, now());
  }

  // ----- data plane -----

  void enqueue(NodeState& n, const DataPacket& pkt) {
    if (n.queue.size() >= static_cast<std::size_t>(cfg_.queue_capacity)) {
      ++stats_.drops.buffer;
      return;
    }
    n.queue.push_back(pkt);
    service(n);
  }

  void uplink(const DataPacket& pkt) {
    ++uplink_pending_;
    queue_.schedule(now() + radio_.lte_uplink_latency, EventKind::PacketArrival, ev::ServerArrival{pkt});
  }

  void data_arrival(Address rid, Address sender, DataPacket pkt) {
    NodeState& r = node(rid);
    if (!alive(r)) {
      ++stats_.drops.abandoned;
      return;
    }
    r.reverse_hop[pkt.source] = sender;
    if (r.role == NodeRole::VGW) {
      r.served_sources.insert(pkt.source);
      uplink(pkt);
      return;
    }
    enqueue(r, pkt);
  }

  // Next hop for the head-of-line packet, or nullopt when none is known.
  std::optional<Address> next_hop_for(NodeState& n, DataPacket& pkt) {
    const double t = now();
    if (pkt.source == n.id) {
      if (n.active_gateway && !n.table.find(*n.active_gateway, t)) drop_active(n);
      if (!n.active_gateway) {
        auto best = select_route(n.table, t);
        if (!best) return std::nullopt;
        n.active_gateway = best->gateway;
        arm_handover(n);
      }
      pkt.gateway = *n.active_gateway;
      return n.table.find(pkt.gateway, t)->next_hop;
    }
    if (const RouteEntry* e = n.table.find(pkt.gateway, t)) return e->next_hop;
    if (auto best = select_route(n.table, t)) {
      pkt.gateway = best->gateway;
      return best->next_hop;
    }
    return std::nullopt;
  }

  void service(NodeState& n) {
    while (!n.tx_busy && !n.queue.empty() && alive(n)) {
      DataPacket& pkt = n.queue.front();
      if (n.role == NodeRole::VGW) {
        if (pkt.source != n.id) n.served_sources.insert(pkt.source);
        pkt.gateway = n.id;
        uplink(pkt);
        n.queue.pop_front();
        continue;
      }
      if (pkt.hops >= cfg_.ttl) {
        ++stats_.drops.expiry;
        n.queue.pop_front();
        continue;
      }
      const auto hop = next_hop_for(n, pkt);
      if (!hop) {
        if (pkt.source == n.id) {
          start_solicitation(n.id);
          return;
        }
        if (pkt.failed_hop) ++stats_.drops.channel;
        else ++stats_.drops.expiry;
        n.queue.pop_front();
        continue;
      }
      const UnicastResult u = unicast(n.id, *hop, cfg_.payload_bytes);
      n.tx_busy = true;
      queue_.schedule(u.done, EventKind::PacketArrival, ev::TxDone{n.id, *hop, u.delivered});
    }
  }

  // ----- channel -----

  // Random channel-access delay before a frame goes on air.
  double access_delay() { return jitter_rng_.uniform() * radio_.jitter; }

  struct UnicastResult {
    bool delivered = false;
    int attempts = 0;
    double done = 0.0;
  };

  bool delivers(const Kinematics& from, Address to) {
    const double draw = channel_rng_.uniform();
    return try_deliver(from, kinematics(to), radio_.max_range, draw, radio_.channel);
  }

  UnicastResult unicast(Address from, Address to, int bytes) {
    UnicastResult u;
    u.done = now();
    const Kinematics& src = kinematics(from);
    const bool reachable = alive(node(to));
    for (int a = 1; a <= cfg_.retry_limit; ++a) {
      u.done += access_delay() + radio_.airtime(bytes);
      u.attempts = a;
      if (reachable && delivers(src, to)) {
        u.delivered = true;
        return u;
      }
    }
    return u;
  }

  void log_tx(Address node_id, ControlKind kind, Address key, int seq, int hops) {
    if (!opts_.log_transmissions) return;
    tx_log_.push_back({now(), node_id, kind, key, seq, hops, kinematics(node_id)});
  }

  // Delivers a broadcast frame to every present node that the channel lets
  // through; each receiver also records when it started hearing the frame.
  template <typename Arrival, typename Sense>
  void broadcast(Address from, double start, Arrival make_arrival, Sense sense) {
    const double arrive = start + radio_.airtime(cfg_.control_bytes);
    const Kinematics src = kinematics(from);
    for (Address id : active_ids_) {
      if (id == from) continue;
      NodeState& r = node(id);
      if (!alive(r)) continue;
      if (!delivers(src, id)) continue;
      sense(r, start);
      queue_.schedule(arrive, EventKind::PacketArrival, make_arrival(id));
    }
  }

  void broadcast_adv(Address from, const AdvMessage& msg, double start) {
    ++stats_.control.adv;
    log_tx(from, ControlKind::Adv, msg.gateway, msg.seq, msg.hop_count);
    const AdvKey key{msg.gateway, msg.seq};
    broadcast(
        from, start, [&](Address id) { return ev::AdvArrival{id, msg}; },
        [&](NodeState& r, double start) {
          r.adv_sensed[key].push_back(start);
          if (msg.hop_count == 0) {
            std::erase_if(r.vgw_adv_sensed, [&](double s) { return s < now() - 2.0 * cfg_.adv_interval; });
            r.vgw_adv_sensed.push_back(start);
          }
        });
  }

  void broadcast_sol(Address from, const SolMessage& msg, double start) {
    ++stats_.control.sol;
    log_tx(from, ControlKind::Sol, msg.id.source, msg.id.sol_seq, msg.hop_count);
    broadcast(
        from, start, [&](Address id) { return ev::SolArrival{id, msg}; },
        [&](NodeState& r, double start) { r.sol_sensed[msg.id].push_back(start); });
  }

  void send_reply(Address from, Address to, const AdvMessage& msg) {
    const UnicastResult u = unicast(from, to, cfg_.control_bytes);
    stats_.control.unicast_adv += static_cast<std::uint64_t>(u.attempts);
    for (int i = 0; i < u.attempts; ++i) log_tx(from, ControlKind::UnicastAdv, msg.gateway, msg.seq, msg.hop_count);
    // Pending repliers for the same solicitation overhear the frame.
    const SolicitationId id = *msg.reply_to;
    const Kinematics src = kinematics(from);
    for (Address other : active_ids_) {
      if (other == from) continue;
      NodeState& o = node(other);
      if (!alive(o) || !o.pending_reply.count(id)) continue;
      if (!delivers(src, other)) continue;
      o.reply_sensed[id].push_back(now());
    }
    if (!u.delivered) {
      ++stats_.replies_dropped;
      return;
    }
    queue_.schedule(u.done, EventKind::PacketArrival, ev::UnicastAdvArrival{to, from, msg});
  }

  void send_notify(Address from, Address to, const NotifyMessage& msg) {
    const UnicastResult u = unicast(from, to, cfg_.control_bytes);
    stats_.control.notify += static_cast<std::uint64_t>(u.attempts);
    for (int i = 0; i < u.attempts; ++i) log_tx(from, ControlKind::Notify, msg.gateway, 0, 0);
    if (u.delivered) queue_.schedule(u.done, EventKind::PacketArrival, ev::NotifyArrival{to, msg});
  }

  void send_thanks(Address from, Address to, const ThanksMessage& msg) {
    const UnicastResult u = unicast(from, to, cfg_.control_bytes);
    stats_.control.thanks += static_cast<std::uint64_t>(u.attempts);
    for (int i = 0; i < u.attempts; ++i) log_tx(from, ControlKind::Thanks, msg.gateway, 0, 0);
    if (u.delivered) queue_.schedule(u.done, EventKind::PacketArrival, ev::ThanksArrival{to, msg});
  }

  ScenarioConfig cfg_;
  RadioConfig radio_;
  Trace trace_;
  NetworkOptions opts_;
  StreamFactory streams_;
  RngStream channel_rng_;
  RngStream jitter_rng_;
  RngStream contention_rng_;
  EventQueue<Payload> queue_;
  std::vector<NodeState> nodes_;
  std::vector<Address> active_ids_;
  std::vector<Address> sources_;
  RunStats stats_;
  std::vector<TxRecord> tx_log_;
  std::uint64_t next_uid_ = 0;
  std::uint64_t uplink_pending_ = 0;
};

}  // namespace imgsdrp
