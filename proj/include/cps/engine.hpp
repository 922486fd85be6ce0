#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cps/allocator.hpp"
#include "cps/config.hpp"
#include "cps/network.hpp"
#include "cps/sampler.hpp"

namespace cps {

enum class EventKind { kEpochSolve = 0, kSampleDue = 1, kControlApplied = 2, kRunEnd = 3 };

struct SimEvent {
  std::int64_t time_us = 0;
  EventKind kind = EventKind::kRunEnd;
  int plant = -1;
  int sample = -1;  // ControlApplied: index of the sample whose input arrives
  std::uint64_t seq = 0;

  // Strict weak order used by the event queue (earliest first).
  bool before(const SimEvent& o) const;
};

enum class RunMode { kSelfTriggered, kPeriodic };

struct SampleLog {
  int plant = 0;
  int k = 0;
  double t = 0.0;
  Vec x;
  Vec d_hat;
  double delta = 0.0;        // performance bound in force
  double delta_total = 0.0;  // realized end-to-end delay
  double t_next = 0.0;       // NaN in periodic mode
  double gamma = 0.0;
  double phi = 0.0;
  double upsilon = 0.0;
  bool capped = false;
  bool bootstrap = false;
};

struct EpochLog {
  double t = 0.0;
  bool background = false;
  std::vector<int> plants;
  std::vector<double> delay_budget;  // per plant id, as solved
  std::vector<double> delta_total;   // parallel to `plants`
  std::vector<double> theta;         // parallel to `plants`
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double p_ul_total = 0.0;
  double p_bs_total = 0.0;
  double charge_ul = 0.0;  // power charged to the energy account while active
  double charge_bs = 0.0;
  double duration = 0.0;
  double max_kkt_residual = 0.0;
};

struct IntervalLog {
  int plant = 0;
  int sample = -1;  // -1: the initial input computed from x0
  double t_start = 0.0;
  double t_end = 0.0;
  double max_error = 0.0;
  double delta = 0.0;
};

struct Violation {
  std::string kind;  // "error_bound" or "deadline"
  int plant = 0;
  double t = 0.0;
  double value = 0.0;
  double limit = 0.0;
};

struct PowerSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  double p_ul = 0.0;
  double p_bs = 0.0;
};

struct Trajectory {
  int states = 0;
  int inputs = 0;
  std::vector<double> t;
  std::vector<double> x;  // row-major, `states` per point
  std::vector<double> u;  // `inputs` per point
  std::vector<double> e;  // error norm against the sample in force
};

struct MetricsReport {
  RunMode mode = RunMode::kSelfTriggered;
  double weight_a = 0.5;
  double period_s = 0.0;  // periodic mode only
  std::vector<std::string> plant_names;
  std::vector<int> tx_count;
  std::vector<double> final_delta;
  int escalations = 0;
  double energy_ul = 0.0;
  double energy_bs = 0.0;
  std::vector<double> x0_norm;
  std::vector<double> final_norm;
  std::vector<double> max_error_ratio;  // max over hold intervals of ||e|| / delta
  std::vector<double> max_delta_total;
  std::vector<PowerSegment> power_trace;
  std::vector<Trajectory> trajectories;
  std::vector<SampleLog> samples;
  std::vector<EpochLog> epochs;
  std::vector<IntervalLog> intervals;
  std::vector<Violation> violations;
  ChannelState channel;
  UserPopulation users;
  std::vector<std::uint64_t> disturbance_seeds;

  double energy_total() const { return energy_ul + energy_bs; }
};

/// Gains from the configured or seeded user positions.
ChannelState scenario_channel(const ScenarioConfig& config);
UserPopulation scenario_users(const ScenarioConfig& config);
std::uint64_t disturbance_seed(std::uint64_t master, int plant);

MetricsReport run_scenario(const ScenarioConfig& config);
MetricsReport run_periodic_baseline(const ScenarioConfig& config, double period_s);
std::vector<MetricsReport> sweep_weight(const ScenarioConfig& config, const std::vector<double>& a_values);

struct WeightCheck {
  int epochs = 0;
  int failures = 0;
  std::vector<double> p_ul_at_0;
  std::vector<double> p_ul_at_1;
};

/// Re-solves every epoch of `report` with a = 0 and a = 1 and checks that
/// uplink power does not grow when the uplink weight goes to 1.
WeightCheck weight_direction_check(const ScenarioConfig& config, const MetricsReport& report);

}  // namespace cps
