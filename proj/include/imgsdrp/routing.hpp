#pragma once

// Control messages and the per-vehicle gateway routing table.

#include <cmath>
#include <map>
#include <optional>

#include "imgsdrp/metrics.hpp"

namespace imgsdrp {

using Address = int;

struct SolicitationId {
  Address source = -1;
  int sol_seq = 0;
  auto operator<=>(const SolicitationId&) const = default;
};

// IMGW_ADV. Broadcast proactively; sent unicast as a solicitation reply, in
// which case `reply_to` names the solicitation being answered.
struct AdvMessage {
  Address gateway = -1;
  Address relay = -1;
  int seq = 0;
  Kinematics broadcaster{};
  double ers = kLifetimeCap;
  double abq_route = 0.0;
  int hop_count = 0;
  std::optional<SolicitationId> reply_to;
};

// IMGW_SOL.
struct SolMessage {
  SolicitationId id{};
  Address sender = -1;
  Kinematics broadcaster{};
  int hop_count = 0;
  int max_hops = 5;
};

struct NotifyMessage {
  Address gateway = -1;
  Address source = -1;
  int hop_count = 0;
};

struct ThanksMessage {
  Address source = -1;
  Address gateway = -1;
  int hop_count = 0;
};

struct RouteEntry {
  Address gateway = -1;
  Address next_hop = -1;
  int seq = 0;
  double ers = 0.0;
  int hop_count = 0;
  double abq_route = 0.0;
  double installed_at = 0.0;

  double remaining(double now) const {
    if (ers >= kLifetimeCap) return kLifetimeCap;
    return installed_at + ers - now;
  }
  bool expired(double now) const { return remaining(now) <= 0.0; }
};

enum class UpdateReason {
  Inserted,
  HigherSeq,
  LongerLifetime,
  FewerHops,
  HigherAbq,
  LowerNextHop,
  StaleSeq,
  ShorterLifetime,
  MoreHops,
  LowerAbq,
  NotBetter,
  ExpiredCandidate,
};

inline const char* to_string(UpdateReason r) {
  switch (r) {
    case UpdateReason::Inserted: return "inserted";
    case UpdateReason::HigherSeq: return "higher-seq";
    case UpdateReason::LongerLifetime: return "longer-lifetime";
    case UpdateReason::FewerHops: return "fewer-hops";
    case UpdateReason::HigherAbq: return "higher-abq";
    case UpdateReason::LowerNextHop: return "lower-next-hop";
    case UpdateReason::StaleSeq: return "stale-seq";
    case UpdateReason::ShorterLifetime: return "shorter-lifetime";
    case UpdateReason::MoreHops: return "more-hops";
    case UpdateReason::LowerAbq: return "lower-abq";
    case UpdateReason::NotBetter: return "not-better";
    case UpdateReason::ExpiredCandidate: return "expired-candidate";
  }
  return "?";
}

struct UpdateResult {
  bool accepted = false;
  UpdateReason reason = UpdateReason::NotBetter;
};

inline constexpr double kLifetimeTolerance = 1e-6;
inline constexpr double kAbqTolerance = 1e-9;

// Gateway routes keyed by gateway address, one entry per gateway.
class RoutingTable {
 public:
  void purge(double now) {
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (it->second.expired(now)) it = entries_.erase(it);
      else ++it;
    }
  }

  // Precedence: no entry, then higher sequence, then (equal sequence) longer
  // lifetime than the entry has left, then fewer hops, then larger route
  // buffer, then lower next-hop address as the final strict tie-break.
  UpdateResult update(const RouteEntry& candidate, double now) {
    purge(now);
    if (candidate.ers <= 0.0) return {false, UpdateReason::ExpiredCandidate};
    auto it = entries_.find(candidate.gateway);
    if (it == entries_.end()) {
      entries_.emplace(candidate.gateway, candidate);
      return {true, UpdateReason::Inserted};
    }
    RouteEntry& cur = it->second;
    const UpdateResult r = compare(cur, candidate, now);
    if (r.accepted) cur = candidate;
    return r;
  }

  static UpdateResult compare(const RouteEntry& cur, const RouteEntry& cand, double now) {
    if (cand.seq > cur.seq) return {true, UpdateReason::HigherSeq};
    if (cand.seq < cur.seq) return {false, UpdateReason::StaleSeq};
    const double left = cur.remaining(now);
    const double offered = std::min(cand.ers, kLifetimeCap);
    if (offered > left + kLifetimeTolerance) return {true, UpdateReason::LongerLifetime};
    if (offered < left - kLifetimeTolerance) return {false, UpdateReason::ShorterLifetime};
    if (cand.hop_count < cur.hop_count) return {true, UpdateReason::FewerHops};
    if (cand.hop_count > cur.hop_count) return {false, UpdateReason::MoreHops};
    if (cand.abq_route > cur.abq_route + kAbqTolerance) return {true, UpdateReason::HigherAbq};
    if (cand.abq_route < cur.abq_route - kAbqTolerance) return {false, UpdateReason::LowerAbq};
    if (cand.next_hop < cur.next_hop) return {true, UpdateReason::LowerNextHop};
    return {false, UpdateReason::NotBetter};
  }

  bool erase(Address gateway) { return entries_.erase(gateway) > 0; }

  const RouteEntry* find(Address gateway, double now) const {
    auto it = entries_.find(gateway);
    if (it == entries_.end() || it->second.expired(now)) return nullptr;
    return &it->second;
  }

  const std::map<Address, RouteEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Address, RouteEntry> entries_;
};

// Best unexpired route: longest remaining lifetime, then fewer hops, then
// larger route buffer, then lower gateway address.
inline std::optional<RouteEntry> select_route(const RoutingTable& table, double now,
                                              std::optional<Address> exclude = std::nullopt) {
  const RouteEntry* best = nullptr;
  double best_left = 0.0;
  for (const auto& [gw, e] : table.entries()) {
    if (exclude && gw == *exclude) continue;
    const double left = e.remaining(now);
    if (left <= 0.0) continue;
    bool better = false;
    if (!best) better = true;
    else if (left > best_left + kLifetimeTolerance) better = true;
    else if (left >= best_left - kLifetimeTolerance) {
      if (e.hop_count != best->hop_count) better = e.hop_count < best->hop_count;
      else if (std::abs(e.abq_route - best->abq_route) > kAbqTolerance) better = e.abq_route > best->abq_route;
      else better = e.gateway < best->gateway;
    }
    if (better) {
      best = &e;
      best_left = left;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace imgsdrp
