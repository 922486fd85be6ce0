#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cps/config.hpp"
#include "cps/engine.hpp"
#include "cps/errors.hpp"
#include "cps/report.hpp"

using namespace cps;

namespace {

ScenarioConfig short_config(double duration = 5.0) {
  auto c = parse_config(std::string(CPS_SOURCE_DIR) + "/scenarios/paper_section5.cfg");
  c.sim.duration_s = duration;
  return c;
}

int total_tx(const MetricsReport& r) { return std::accumulate(r.tx_count.begin(), r.tx_count.end(), 0); }

}  // namespace

TEST(Events, Ordering) {
  const SimEvent solve{10, EventKind::kEpochSolve, -1, -1, 9};
  const SimEvent due{10, EventKind::kSampleDue, 0, -1, 1};
  const SimEvent applied{10, EventKind::kControlApplied, 0, 0, 0};
  const SimEvent earlier{9, EventKind::kControlApplied, 2, 0, 50};
  EXPECT_TRUE(solve.before(due));
  EXPECT_TRUE(due.before(applied));
  EXPECT_TRUE(earlier.before(solve));
  const SimEvent due2{10, EventKind::kSampleDue, 1, -1, 0};
  EXPECT_TRUE(due.before(due2));
  EXPECT_FALSE(due2.before(due));
}

TEST(Engine, NoPlantsNoTransmissions) {
  auto c = short_config(1.0);
  c.plants.clear();
  const auto r = run_scenario(c);
  EXPECT_TRUE(r.tx_count.empty());
  EXPECT_TRUE(r.samples.empty());
  EXPECT_TRUE(std::all_of(r.epochs.begin(), r.epochs.end(), [](const EpochLog& e) { return e.background; }));
  EXPECT_GT(r.energy_total(), 0.0);  // background traffic still costs energy
}

TEST(Engine, PeriodLongerThanRunGivesOneSample) {
  const auto c = short_config(1.0);
  const auto r = run_periodic_baseline(c, 5.0);
  for (int n : r.tx_count) EXPECT_EQ(n, 1);
}

TEST(Engine, PeriodicCountMatchesGrid) {
  const auto c = short_config(5.0);
  const auto r = run_periodic_baseline(c, 0.1);
  for (int n : r.tx_count) EXPECT_EQ(n, 50);
  for (const auto& s : r.samples) {
    EXPECT_NEAR(s.t, 0.1 * s.k, 1e-9);
  }
}

TEST(Engine, NoDisturbanceSamplesLess) {
  auto c = short_config(10.0);
  const auto noisy = run_scenario(c);
  for (auto& p : c.plants) p.d_bound = 0.0;
  const auto quiet = run_scenario(c);
  EXPECT_LT(total_tx(quiet), total_tx(noisy));
  for (std::size_t i = 0; i < quiet.tx_count.size(); ++i) EXPECT_LE(quiet.tx_count[i], noisy.tx_count[i]);
}

TEST(Engine, Deterministic) {
  const auto c = short_config(3.0);
  const auto a = report_summary(c, run_scenario(c)).dump();
  const auto b = report_summary(c, run_scenario(c)).dump();
  EXPECT_EQ(a, b);
  auto other = c;
  other.sim.seed = 99;
  EXPECT_NE(report_summary(other, run_scenario(other)).dump(), a);
}

TEST(Engine, Causality) {
  const auto c = short_config(5.0);
  const auto r = run_scenario(c);
  std::vector<double> last(c.plants.size(), -1.0);
  for (const auto& s : r.samples) {
    EXPECT_GT(s.t, last[static_cast<std::size_t>(s.plant)]);
    last[static_cast<std::size_t>(s.plant)] = s.t;
    EXPECT_GT(s.t_next, s.t);
    EXPECT_LE(s.t_next - s.t, c.sim.h_max_s + 1e-9);
    EXPECT_GE(s.t_next - s.t, c.sim.h_min_s - 1e-9);
    EXPECT_LE(s.delta_total, 1.0);
    EXPECT_GE(s.delta_total, c.network.comp_delay_max_s);
  }
  // Intervals of one plant tile the run without overlap.
  for (std::size_t i = 0; i < c.plants.size(); ++i) {
    double prev_end = 0.0;
    for (const auto& iv : r.intervals) {
      if (iv.plant != static_cast<int>(i)) continue;
      EXPECT_NEAR(iv.t_start, prev_end, 1e-9);
      EXPECT_GE(iv.t_end, iv.t_start);
      prev_end = iv.t_end;
    }
    EXPECT_NEAR(prev_end, c.sim.duration_s, 1e-9);
  }
  // An input never arrives before its sample was taken.
  for (const auto& iv : r.intervals) {
    if (iv.sample < 0) continue;
    const auto it = std::find_if(r.samples.begin(), r.samples.end(), [&](const SampleLog& s) {
      return s.plant == iv.plant && s.k == iv.sample;
    });
    ASSERT_NE(it, r.samples.end());
    EXPECT_NEAR(iv.t_start, it->t + it->delta_total, 1e-6);
  }
}

TEST(Engine, EnergyEqualsTraceIntegral) {
  const auto c = short_config(5.0);
  const auto r = run_scenario(c);
  double integral = 0.0;
  double prev = 0.0;
  for (const auto& s : r.power_trace) {
    EXPECT_NEAR(s.t0, prev, 1e-12);
    EXPECT_GT(s.t1, s.t0);
    EXPECT_GT(s.p_ul, 0.0);
    EXPECT_GT(s.p_bs, 0.0);
    integral += (s.p_ul + s.p_bs) * (s.t1 - s.t0);
    prev = s.t1;
  }
  EXPECT_NEAR(prev, 5.0, 1e-12);
  EXPECT_NEAR(r.energy_total(), integral, 1e-9 * integral);
}

TEST(Engine, EpochsSatisfyAllocatorInvariants) {
  const auto c = short_config(3.0);
  const auto r = run_scenario(c);
  int tc = 0;
  for (const auto& e : r.epochs) {
    EXPECT_LT(e.max_kkt_residual, 1e-8);
    EXPECT_LE(e.p_ul_total, r.channel.p_max_user * r.users.ul_users() + 1e-9);
    if (!e.background) {
      ++tc;
      EXPECT_FALSE(e.plants.empty());
      for (double th : e.theta) {
        EXPECT_GT(th, 0.0);
        EXPECT_LT(th, 1.0);
      }
    }
  }
  EXPECT_GT(tc, 0);
}

TEST(Engine, SweepSingleton) {
  const auto c = short_config(1.0);
  const auto r = sweep_weight(c, {0.5});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].weight_a, 0.5);
  const auto direct = run_scenario(c);
  EXPECT_EQ(report_summary(c, r[0]).dump(), report_summary(c, direct).dump());
}

TEST(Engine, WeightDirectionOnEpochs) {
  const auto c = short_config(2.0);
  const auto r = run_scenario(c);
  const auto w = weight_direction_check(c, r);
  EXPECT_GT(w.epochs, 0);
  EXPECT_EQ(w.failures, 0);
}

TEST(Engine, AlwaysOnCostsMore) {
  // Short deadlines keep epochs brief so duty-cycled RTUs actually sleep.
  auto c = short_config(10.0);
  for (auto& p : c.plants) p.delay_max_s = 0.2;
  const auto duty = run_scenario(c);
  c.sim.circuit_power_mode = CircuitPowerMode::kAlwaysOn;
  const auto on = run_scenario(c);
  EXPECT_GT(on.energy_ul, duty.energy_ul);
  EXPECT_EQ(on.energy_bs, duty.energy_bs);
  // Always-on is never cheaper than three RTUs plus the RC users, awake throughout.
  const double floor = c.sim.duration_s * on.users.ul_users() * on.channel.p_cst_user;
  EXPECT_GE(on.energy_ul, floor * (1 - 1e-12));
}

TEST(Engine, InvalidInputs) {
  auto c = short_config(1.0);
  EXPECT_THROW(run_periodic_baseline(c, 0.0), SchemaError);
  c.plants[0].x0 = Vec::Zero(3);
  EXPECT_THROW(run_scenario(c), DimensionMismatch);
}
