#include <gtest/gtest.h>

#include "imgsdrp/measure.hpp"

using namespace imgsdrp;

TEST(CbrCount, Arithmetic) {
  EXPECT_EQ(5 * cbr_packet_count(0.0, 0.1, 300.0), 15000u);
  EXPECT_EQ(cbr_packet_count(0.0, 1.0, 10.0), 10u);
  EXPECT_EQ(cbr_packet_count(0.05, 0.1, 300.0), 3000u);
  EXPECT_THROW(cbr_packet_count(0.0, 0.0, 1.0), ContractViolation);
}

TEST(ComputeStats, LosslessNoControl) {
  RunStats s;
  s.data_generated = s.data_delivered = 100;
  s.delays.assign(100, 0.02);
  const auto m = compute_stats(s);
  EXPECT_DOUBLE_EQ(*m.pdr, 1.0);
  EXPECT_DOUBLE_EQ(*m.overhead, 0.0);
  EXPECT_NEAR(*m.mean_delay, 0.02, 1e-15);
}

TEST(ComputeStats, Ratios) {
  RunStats s;
  s.data_generated = 15000;
  s.data_delivered = 12000;
  s.control.adv = 20000;
  s.control.sol = 4000;
  s.delays.assign(12000, 0.1);
  const auto m = compute_stats(s);
  EXPECT_DOUBLE_EQ(*m.pdr, 0.8);
  EXPECT_DOUBLE_EQ(*m.overhead, 2.0);
}

TEST(ComputeStats, AbsentWhenNothingDelivered) {
  RunStats s;
  auto m = compute_stats(s);
  EXPECT_FALSE(m.pdr);
  EXPECT_FALSE(m.mean_delay);
  EXPECT_FALSE(m.overhead);
  s.data_generated = 10;
  s.drops.buffer = 10;
  s.control.sol = 4;
  m = compute_stats(s);
  EXPECT_DOUBLE_EQ(*m.pdr, 0.0);
  EXPECT_FALSE(m.overhead);
  EXPECT_TRUE(s.conserved());
}

TEST(Conservation, Identity) {
  RunStats s;
  s.data_generated = 10;
  s.data_delivered = 4;
  s.drops = {1, 2, 1, 0};
  s.in_flight_at_end = 2;
  EXPECT_TRUE(s.conserved());
  s.in_flight_at_end = 1;
  EXPECT_FALSE(s.conserved());
}

TEST(ChooseSources, DistinctAndSeeded) {
  std::vector<int> ids{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  RngStream a("traffic", 3), b("traffic", 3);
  const auto x = choose_sources(ids, 5, a);
  EXPECT_EQ(x, choose_sources(ids, 5, b));
  std::set<int> uniq(x.begin(), x.end());
  EXPECT_EQ(uniq.size(), 5u);
  RngStream c("traffic", 3);
  EXPECT_THROW(choose_sources(ids, 11, c), ConfigError);
  EXPECT_TRUE(choose_sources(ids, 0, c).empty());
}
