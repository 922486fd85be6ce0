#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "cps/errors.hpp"
#include "cps/network.hpp"

using namespace cps;

TEST(Units, DbmRoundTrip) {
  EXPECT_NEAR(dbm_to_watt(23.0), 0.19953, 1e-5);
  EXPECT_NEAR(dbm_to_watt(30.0), 1.0, 1e-15);
  for (double dbm : {23.0, 43.0, 0.1, 20.0, -62.24}) {
    EXPECT_NEAR(watt_to_dbm(dbm_to_watt(dbm)), dbm, 1e-12 * std::max(1.0, std::abs(dbm)));
    const double w = dbm_to_watt(dbm);
    EXPECT_NEAR(dbm_to_watt(watt_to_dbm(w)), w, 1e-12 * w);
  }
  EXPECT_NEAR(dbm_to_watt(-62.24), 5.97e-10, 0.01e-10);
}

TEST(Gain, Examples) {
  EXPECT_DOUBLE_EQ(channel_gain(1.0, 0.09), 0.09);
  EXPECT_NEAR(channel_gain(10.0, 0.09), 9.0e-5, 1e-18);
  EXPECT_THROW(channel_gain(0.0, 0.09), NonPositiveDistance);
  EXPECT_THROW(channel_gain(-3.0, 0.09), NonPositiveDistance);
}

TEST(Rate, Examples) {
  const double n0 = 1e-9;
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> g{1.0, 1.0};
  const std::vector<int> both{1, 1};
  EXPECT_EQ(link_rate(zero, g, both, 180e3, n0), 0.0);
  EXPECT_DOUBLE_EQ(subcarrier_rate(n0, 1.0, 180e3, n0), 180000.0);
  const std::vector<double> p{n0, n0};
  EXPECT_DOUBLE_EQ(link_rate(p, g, both, 180e3, n0), 360000.0);
  const std::vector<int> one{1, 0};
  EXPECT_DOUBLE_EQ(link_rate(p, g, one, 180e3, n0), 180000.0);
  EXPECT_THROW(link_rate(p, g, std::vector<int>{1}, 180e3, n0), DimensionMismatch);
}

TEST(Rate, Monotone) {
  const double n0 = 5.97e-10;
  double prev = 0.0;
  for (double pw = 0.0; pw <= 1.0; pw += 0.01) {
    const double r = subcarrier_rate(pw, 1e-5, 180e3, n0);
    EXPECT_GE(r, prev);
    prev = r;
  }
  prev = 0.0;
  for (double g = 1e-7; g <= 1e-3; g *= 1.5) {
    const double r = subcarrier_rate(0.1, g, 180e3, n0);
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(Delay, Examples) {
  EXPECT_NEAR(transmission_delay(70.0, 140000.0), 1e-3, 1e-18);
  EXPECT_EQ(transmission_delay(0.0, 1000.0), 0.0);
  EXPECT_THROW(transmission_delay(70.0, 0.0), ZeroRate);
  for (double r : {1.0, 333.3, 7.1e5}) {
    EXPECT_NEAR(transmission_delay(70.0, r) * (r / 2.0), 70.0, 1e-12);
  }
}

TEST(Power, Totals) {
  IntMat a = IntMat::Zero(2, 3);
  Mat p = Mat::Zero(2, 3);
  EXPECT_EQ(total_uplink_power(a, p, {false, false}, 0.001), 0.0);
  EXPECT_DOUBLE_EQ(total_uplink_power(a, p, {true, true}, 0.001), 0.002);
  a(0, 1) = 1;
  p(0, 1) = 0.1;
  p(1, 2) = 5.0;  // not assigned, must not count
  EXPECT_DOUBLE_EQ(total_uplink_power(a, p, {true, false}, 0.001), 0.101);

  EXPECT_DOUBLE_EQ(total_bs_power(IntMat::Zero(2, 2), Mat::Zero(2, 2), 0.1), 0.1);
  IntMat b = IntMat::Zero(2, 2);
  Mat q = Mat::Zero(2, 2);
  b(1, 0) = 1;
  q(1, 0) = 1.0;
  EXPECT_DOUBLE_EQ(total_bs_power(b, q, 0.1), 1.1);
  EXPECT_DOUBLE_EQ(total_bs_power(IntMat::Ones(3, 4), Mat::Constant(3, 4, 0.25), 0.1), 0.1 + 3 * 4 * 0.25);
}

TEST(Channel, BuildAndDump) {
  ChannelState params;
  params.w = 180e3;
  params.n0 = dbm_to_watt(-62.24);
  params.p_max_user = dbm_to_watt(23);
  params.p_max_bs = dbm_to_watt(43);
  params.p_cst_user = dbm_to_watt(0.1);
  params.p_cst_bs = dbm_to_watt(20);
  const std::vector<double> ul{10.0, 20.0}, dl{50.0};
  const auto ch = build_channel(ul, dl, 4, 0.09, params);
  EXPECT_EQ(ch.gains_ul.rows(), 2);
  EXPECT_EQ(ch.gains_dl.rows(), 1);
  EXPECT_EQ(ch.subcarriers(), 4);
  EXPECT_NEAR(ch.gains_ul(0, 3), 9e-5, 1e-18);
  EXPECT_NEAR(ch.gains_dl(0, 0), 0.09 / 125000.0, 1e-18);
  EXPECT_NO_THROW(ch.validate());
  std::ostringstream os;
  write_channel_csv(os, ch);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 2 * 4 + 1 * 4);

  ChannelState bad = ch;
  bad.gains_ul(0, 0) = 0.0;
  EXPECT_THROW(bad.validate(), SchemaError);
  EXPECT_THROW(build_channel(std::vector<double>{0.0}, dl, 4, 0.09, params), NonPositiveDistance);
}
