#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "imgsdrp/routing.hpp"

using namespace imgsdrp;

namespace {

RouteEntry entry(int seq, double ers, int hops, double abq, Address next = 1, double at = 0.0, Address gw = 100) {
  RouteEntry e;
  e.gateway = gw;
  e.next_hop = next;
  e.seq = seq;
  e.ers = ers;
  e.hop_count = hops;
  e.abq_route = abq;
  e.installed_at = at;
  return e;
}

}  // namespace

TEST(RoutingTable, InsertWhenEmpty) {
  RoutingTable t;
  const auto r = t.update(entry(1, 10, 2, 1), 0);
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(r.reason, UpdateReason::Inserted);
}

TEST(RoutingTable, HigherSeqReplaces) {
  RoutingTable t;
  t.update(entry(4, 50, 1, 1), 0);
  const auto r = t.update(entry(5, 5, 6, 0), 0);
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(r.reason, UpdateReason::HigherSeq);
  EXPECT_EQ(t.find(100, 0)->seq, 5);
  EXPECT_EQ(t.update(entry(3, 500, 1, 9), 0).reason, UpdateReason::StaleSeq);
}

TEST(RoutingTable, LongerLifetimeThanRemaining) {
  RoutingTable t;
  t.update(entry(4, 20, 1, 1, 1, 0.0), 0);
  // 12 s left at t = 8, candidate offers 12.5 s.
  EXPECT_EQ(t.update(entry(4, 12.5, 3, 0, 2, 8.0), 8.0).reason, UpdateReason::LongerLifetime);
  RoutingTable u;
  u.update(entry(4, 20, 1, 1, 1, 0.0), 0);
  EXPECT_EQ(u.update(entry(4, 7, 1, 1, 2, 12.0), 12.0).reason, UpdateReason::ShorterLifetime);
  RoutingTable v;
  v.update(entry(4, 20, 1, 1, 1, 0.0), 0);
  EXPECT_TRUE(v.update(entry(4, 12, 1, 1, 2, 12.0), 12.0).accepted);  // 8 s left vs 12 s offered
}

TEST(RoutingTable, HopAndAbqTieBreaks) {
  RoutingTable t;
  t.update(entry(4, 10, 3, 1), 0);
  EXPECT_EQ(t.update(entry(4, 10, 2, 0.5, 2), 0).reason, UpdateReason::FewerHops);
  RoutingTable u;
  u.update(entry(4, 10, 3, 1), 0);
  EXPECT_EQ(u.update(entry(4, 10, 3, 1.5, 2), 0).reason, UpdateReason::HigherAbq);
  EXPECT_EQ(u.update(entry(4, 10, 4, 9, 0), 0).reason, UpdateReason::MoreHops);
  EXPECT_EQ(u.update(entry(4, 10, 3, 1.2, 0), 0).reason, UpdateReason::LowerAbq);
}

TEST(RoutingTable, LifetimeTolerance) {
  RoutingTable t;
  t.update(entry(4, 10, 3, 1), 0);
  EXPECT_EQ(t.update(entry(4, 10 + 5e-7, 2, 1, 2), 0).reason, UpdateReason::FewerHops);
}

TEST(RoutingTable, ExpiredPurgedAndRejected) {
  RoutingTable t;
  t.update(entry(4, 10, 3, 1), 0);
  EXPECT_EQ(t.find(100, 9.9)->seq, 4);
  EXPECT_EQ(t.find(100, 10.0), nullptr);
  EXPECT_EQ(t.update(entry(1, 1, 9, 0, 5, 11), 11).reason, UpdateReason::Inserted);
  EXPECT_EQ(t.update(entry(9, 0, 1, 1, 5, 11), 11).reason, UpdateReason::ExpiredCandidate);
}

TEST(RoutingTable, CapNeverExpires) {
  RoutingTable t;
  t.update(entry(1, kLifetimeCap, 0, 1), 0);
  EXPECT_NE(t.find(100, 1e6), nullptr);
  EXPECT_DOUBLE_EQ(t.find(100, 1e6)->remaining(1e6), kLifetimeCap);
}

TEST(SelectRoute, StabilityFirst) {
  RoutingTable t;
  t.update(entry(1, 10, 2, 1, 1, 0, 1), 0);
  t.update(entry(1, 25, 4, 1, 1, 0, 2), 0);
  EXPECT_EQ(select_route(t, 0)->gateway, 2);
}

TEST(SelectRoute, HopsThenAbqThenAddress) {
  RoutingTable t;
  t.update(entry(1, 10, 3, 1, 1, 0, 1), 0);
  t.update(entry(1, 10, 2, 1, 1, 0, 2), 0);
  EXPECT_EQ(select_route(t, 0)->gateway, 2);
  t.update(entry(1, 10, 2, 2, 1, 0, 3), 0);
  EXPECT_EQ(select_route(t, 0)->gateway, 3);
  t.update(entry(1, 10, 2, 2, 1, 0, 0), 0);
  EXPECT_EQ(select_route(t, 0)->gateway, 0);
  EXPECT_EQ(select_route(t, 0, 0)->gateway, 3);
}

TEST(SelectRoute, EmptyAndExpired) {
  RoutingTable t;
  EXPECT_FALSE(select_route(t, 0));
  t.update(entry(1, 5, 1, 1), 0);
  EXPECT_FALSE(select_route(t, 6));
}

// Every pair over a small grid of sequence numbers, lifetimes, hop counts,
// buffers and next hops: the decision follows the precedence chain, and
// replaying any ordering of a candidate set installs the same entry.
TEST(RoutingTable, ExhaustivePrecedenceAndPermutationInvariance) {
  std::vector<RouteEntry> grid;
  for (int seq : {1, 2})
    for (double ers : {5.0, 10.0})
      for (int hops : {1, 2})
        for (double abq : {0.5, 1.0})
          for (Address nh : {1, 2}) grid.push_back(entry(seq, ers, hops, abq, nh));
  for (const auto& a : grid)
    for (const auto& b : grid) {
      RoutingTable t;
      t.update(a, 0);
      const auto r = t.update(b, 0);
      bool expect = false;
      if (b.seq != a.seq) expect = b.seq > a.seq;
      else if (b.ers != a.ers) expect = b.ers > a.ers;
      else if (b.hop_count != a.hop_count) expect = b.hop_count < a.hop_count;
      else if (b.abq_route != a.abq_route) expect = b.abq_route > a.abq_route;
      else expect = b.next_hop < a.next_hop;
      EXPECT_EQ(r.accepted, expect);
    }
  std::vector<std::size_t> idx{0, 5, 9, 14, 19, 22, 27, 31};
  RouteEntry reference{};
  bool first = true;
  std::sort(idx.begin(), idx.end());
  do {
    RoutingTable t;
    for (auto i : idx) t.update(grid[i], 0);
    const RouteEntry& w = *t.find(100, 0);
    if (first) {
      reference = w;
      first = false;
    }
    EXPECT_EQ(w.seq, reference.seq);
    EXPECT_EQ(w.next_hop, reference.next_hop);
    EXPECT_EQ(w.hop_count, reference.hop_count);
    EXPECT_EQ(w.abq_route, reference.abq_route);
    EXPECT_EQ(w.ers, reference.ers);
  } while (std::next_permutation(idx.begin(), idx.end()));
}
