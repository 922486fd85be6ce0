#include "cps/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <random>

#include "cps/errors.hpp"

namespace cps {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kErrorSlack = 1.05;
constexpr double kDeadlineSlack = 1e-9;
constexpr double kEscalation = 1.1;

std::int64_t to_us(double s) { return std::llround(s * 1e6); }
double to_s(std::int64_t us) { return static_cast<double>(us) * 1e-6; }

struct Later {
  bool operator()(const SimEvent& a, const SimEvent& b) const { return b.before(a); }
};

struct PendingInput {
  Vec u;
  Vec x_ref;
  double delta = 0.0;
};

struct PlantRun {
  std::string name;
  PlantModel model;
  double delta_max_delay = 1.0;
  DisturbancePath disturbance;
  std::int64_t t_us = 0;
  Vec x;
  Vec u;
  Vec x_prev;  // state one integration step back, for the disturbance estimate
  Vec u_last_step;
  double last_step = 0.0;

  // Hold interval currently in force.
  Vec x_ref;
  int ref_sample = -1;
  std::int64_t interval_start = 0;
  double interval_max = 0.0;
  double interval_delta = 0.0;

  std::map<int, PendingInput> pending;
  SamplerHistory history;
  int accepted = 0;
  int periodic_index = 0;
  double max_delta_total = 0.0;
  Trajectory traj;

  PlantRun(const PlantConfig& cfg, std::uint64_t seed, double hold)
      : name(cfg.name),
        model(cfg.model()),
        delta_max_delay(cfg.delay_max_s),
        disturbance(static_cast<int>(cfg.A.rows()), cfg.d_bound, hold, seed) {
    x = model.x0;
    u = model.K * x;
    x_prev = x;
    u_last_step = u;
    x_ref = x;
    interval_delta = model.delta;
    traj.states = model.states();
    traj.inputs = model.inputs();
  }

  void record(double t) {
    traj.t.push_back(t);
    traj.x.insert(traj.x.end(), x.data(), x.data() + x.size());
    traj.u.insert(traj.u.end(), u.data(), u.data() + u.size());
    traj.e.push_back(error_norm(x, x_ref));
  }
};

class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, RunMode mode, double period_s)
      : cfg_(cfg), mode_(mode), period_s_(period_s) {
    cfg.validate();
    if (mode == RunMode::kPeriodic && !(period_s > 0.0)) throw SchemaError("baseline period must be > 0");
    dt_us_ = to_us(cfg.sim.dt_s);
    hold_us_ = to_us(cfg.sim.disturbance_hold_s);
    end_us_ = to_us(cfg.sim.duration_s);
    if (dt_us_ < 1 || hold_us_ < 1) throw SchemaError("sim: dt_s and disturbance_hold_s must be >= 1 us");
    report_.mode = mode;
    report_.weight_a = cfg.sim.weight_a;
    report_.period_s = mode == RunMode::kPeriodic ? period_s : 0.0;
    report_.channel = scenario_channel(cfg);
    report_.users = scenario_users(cfg);
    for (std::size_t i = 0; i < cfg.plants.size(); ++i) {
      const auto seed = disturbance_seed(cfg.sim.seed, static_cast<int>(i));
      report_.disturbance_seeds.push_back(seed);
      plants_.emplace_back(cfg.plants[i], seed, cfg.sim.disturbance_hold_s);
      report_.plant_names.push_back(cfg.plants[i].name);
    }
    const double p_cst = report_.channel.p_cst_user;
    continuous_ul_ = cfg.sim.circuit_power_mode == CircuitPowerMode::kAlwaysOn
                         ? report_.users.ul_users() * p_cst
                         : static_cast<double>(report_.users.rc_floor_ul.size()) * p_cst;
  }

  MetricsReport run() {
    for (auto& p : plants_) p.record(0.0);
    const auto bg_us = to_us(cfg_.sim.background_period_s);
    for (std::int64_t t = 0; t < end_us_; t += std::max<std::int64_t>(bg_us, 1)) {
      push({t, EventKind::kEpochSolve, -1, -1});
    }
    for (int i = 0; i < static_cast<int>(plants_.size()); ++i) push({0, EventKind::kSampleDue, i, -1});

    while (!queue_.empty()) {
      const SimEvent ev = queue_.top();
      if (ev.time_us >= end_us_) break;
      queue_.pop();
      advance_all(ev.time_us);
      switch (ev.kind) {
        case EventKind::kEpochSolve:
          background_epoch(ev.time_us);
          break;
        case EventKind::kSampleDue: {
          std::vector<int> batch{ev.plant};
          while (!queue_.empty() && queue_.top().time_us == ev.time_us &&
                 queue_.top().kind == EventKind::kSampleDue) {
            batch.push_back(queue_.top().plant);
            queue_.pop();
          }
          std::sort(batch.begin(), batch.end());
          batch.erase(std::unique(batch.begin(), batch.end()), batch.end());
          sample_epoch(ev.time_us, batch);
          break;
        }
        case EventKind::kControlApplied:
          apply_control(ev.time_us, ev.plant, ev.sample);
          break;
        case EventKind::kRunEnd:
          break;
      }
    }
    advance_all(end_us_);
    finish();
    return std::move(report_);
  }

 private:
  void push(SimEvent ev) {
    ev.seq = seq_++;
    queue_.push(ev);
  }

  void advance_all(std::int64_t target) {
    for (std::size_t i = 0; i < plants_.size(); ++i) advance(plants_[i], static_cast<int>(i), target);
  }

  void advance(PlantRun& p, int id, std::int64_t target) {
    const int stride = cfg_.sim.trajectory_stride;
    while (p.t_us < target) {
      const std::int64_t next_grid = (p.t_us / dt_us_ + 1) * dt_us_;
      const std::int64_t next_slot = (p.t_us / hold_us_ + 1) * hold_us_;
      const std::int64_t stop = std::min({target, next_grid, next_slot});
      const double h = to_s(stop - p.t_us);
      const Vec& d = p.disturbance.slot(static_cast<std::size_t>(p.t_us / hold_us_));
      p.x_prev = p.x;
      p.u_last_step = p.u;
      p.last_step = h;
      try {
        p.x = integrate_step(p.model, p.x, p.u, d, h);
      } catch (const NonFiniteState& e) {
        throw StabilityViolation("plant " + std::to_string(id) + " diverged at t=" +
                                 std::to_string(to_s(stop)) + " s: " + e.what());
      }
      p.t_us = stop;
      p.interval_max = std::max(p.interval_max, error_norm(p.x, p.x_ref));
      if (stop % dt_us_ == 0 && (stop / dt_us_) % stride == 0) p.record(to_s(stop));
    }
  }

  AllocationProblem problem(const std::vector<int>& active) const {
    AllocationProblem pr;
    pr.channel = report_.channel;
    pr.users = report_.users;
    pr.active_plants = active;
    pr.delay_budget.assign(plants_.size(), 0.0);
    for (std::size_t i = 0; i < plants_.size(); ++i) {
      pr.delay_budget[i] = plants_[i].delta_max_delay - cfg_.network.comp_delay_max_s;
    }
    pr.payload_bits = cfg_.network.payload_tc_bits;
    pr.weight_a = cfg_.sim.weight_a;
    pr.circuit_mode = cfg_.sim.circuit_power_mode;
    return pr;
  }

  SolverOptions solver_options() const {
    SolverOptions o;
    o.max_iters = cfg_.sim.solver_max_iters;
    o.tol = cfg_.sim.solver_tol;
    return o;
  }

  EpochLog log_epoch(std::int64_t t, const AllocationProblem& pr, const AllocationSolution& sol) const {
    EpochLog e;
    e.t = to_s(t);
    e.plants = pr.active_plants;
    e.delay_budget = pr.delay_budget;
    e.iterations = sol.iterations;
    e.converged = sol.converged;
    e.objective = sol.objective;
    e.p_ul_total = sol.p_ul_total;
    e.p_bs_total = sol.p_bs_total;
    e.charge_ul = sol.p_ul_total - uplink_circuit_power(pr);  // transmit only
    e.charge_bs = sol.p_bs_total;
    e.max_kkt_residual = sol.max_kkt_residual;
    return e;
  }

  void background_epoch(std::int64_t t) {
    const auto pr = problem({});
    const auto sol = solve_allocation(pr, solver_options());
    EpochLog e = log_epoch(t, pr, sol);
    e.background = true;
    e.duration = cfg_.sim.background_period_s;
    report_.epochs.push_back(std::move(e));
  }

  void sample_epoch(std::int64_t t, std::vector<int> batch) {
    // Plants dropped by escalation retry one minimum interval later.
    std::vector<int> dropped;
    AllocationSolution sol;
    AllocationProblem pr;
    bool escalated = false;
    for (;;) {
      pr = problem(batch);
      try {
        sol = solve_allocation(pr, solver_options());
        break;
      } catch (const Infeasible& e) {
        if (batch.empty()) throw;
        if (!escalated) {
          bool grew = false;
          for (int i : batch) {
            auto& m = plants_[static_cast<std::size_t>(i)].model;
            if (m.delta < m.delta_max) {
              m.delta = std::min(m.delta * kEscalation, m.delta_max);
              grew = true;
              ++report_.escalations;
            }
          }
          if (!grew) {
            throw DeadlineViolation("t=" + std::to_string(to_s(t)) +
                                    " s: no allocation meets the delay budget and every delta is at its ceiling (" +
                                    e.what() + ")");
          }
          escalated = true;
        }
        dropped.push_back(batch.back());
        batch.pop_back();
      }
    }
    for (int i : dropped) {
      const auto next = t + std::max<std::int64_t>(1, to_us(cfg_.sim.h_min_s));
      if (next < end_us_) push({next, EventKind::kSampleDue, i, -1});
    }
    if (batch.empty()) return;

    EpochLog e = log_epoch(t, pr, sol);
    const double payload = cfg_.network.payload_tc_bits;
    for (int i : batch) {
      auto& p = plants_[static_cast<std::size_t>(i)];
      const double du = transmission_delay(payload, sol.rates_ul(i));
      const double dd = transmission_delay(payload, sol.rates_dl(i));
      const double total = du + dd + cfg_.network.comp_delay_max_s;
      e.duration = std::max(e.duration, du + dd);
      e.delta_total.push_back(total);
      e.theta.push_back(sol.theta[static_cast<std::size_t>(i)]);
      p.max_delta_total = std::max(p.max_delta_total, total);
      if (total > p.delta_max_delay * (1.0 + kDeadlineSlack)) {
        report_.violations.push_back({"deadline", i, to_s(t), total, p.delta_max_delay});
      }

      DisturbanceEstimate est{Vec::Zero(p.x.size()), false};
      if (p.last_step > 0.0) est = estimate_disturbance(p.model, p.x_prev, p.x, p.u_last_step, p.last_step);

      SampleLog log;
      log.plant = i;
      log.k = p.accepted;
      log.t = to_s(t);
      log.x = p.x;
      log.d_hat = est.d_hat;
      log.delta = p.model.delta;
      log.delta_total = total;

      p.history.push({to_s(t), p.x, est.d_hat});
      p.pending[p.accepted] = {p.model.K * p.x, p.x, p.model.delta};
      push({t + to_us(total), EventKind::kControlApplied, i, p.accepted});

      std::int64_t next = 0;
      if (mode_ == RunMode::kSelfTriggered) {
        SamplerParams sp;
        sp.h_max = cfg_.sim.h_max_s;
        sp.h_min = cfg_.sim.h_min_s;
        sp.delta_max = p.delta_max_delay;
        sp.form = cfg_.sim.upsilon_form;
        const auto dec = next_sampling_instant(p.model, i, p.history, total, sp);
        next = std::max(t + 1, to_us(dec.t_next));
        log.t_next = dec.t_next;
        log.gamma = dec.gamma_value;
        log.phi = dec.phi_value;
        log.upsilon = dec.upsilon_value;
        log.capped = dec.capped_by_hmax;
        log.bootstrap = dec.bootstrap;
      } else {
        ++p.periodic_index;
        next = to_us(static_cast<double>(p.periodic_index) * period_s_);
        log.t_next = to_s(next);
        log.gamma = log.phi = log.upsilon = kNaN;
      }
      ++p.accepted;
      if (next < end_us_) push({next, EventKind::kSampleDue, i, -1});
      report_.samples.push_back(std::move(log));
    }
    report_.epochs.push_back(std::move(e));
  }

  void close_interval(PlantRun& p, int id) {
    IntervalLog iv{id, p.ref_sample, to_s(p.interval_start), to_s(p.t_us), p.interval_max, p.interval_delta};
    if (iv.max_error > kErrorSlack * iv.delta) {
      report_.violations.push_back({"error_bound", id, iv.t_end, iv.max_error, iv.delta});
    }
    report_.intervals.push_back(iv);
  }

  void apply_control(std::int64_t t, int id, int sample) {
    auto& p = plants_[static_cast<std::size_t>(id)];
    auto it = p.pending.find(sample);
    if (it == p.pending.end() || sample <= p.ref_sample) return;  // stale
    close_interval(p, id);
    p.u = it->second.u;
    p.x_ref = it->second.x_ref;
    p.interval_delta = it->second.delta;
    p.ref_sample = sample;
    p.interval_start = t;
    p.interval_max = error_norm(p.x, p.x_ref);
    p.pending.erase(p.pending.begin(), std::next(it));
  }

  void finish() {
    for (std::size_t i = 0; i < plants_.size(); ++i) {
      auto& p = plants_[i];
      close_interval(p, static_cast<int>(i));
      if (p.traj.t.empty() || p.traj.t.back() != to_s(end_us_)) p.record(to_s(end_us_));
      report_.tx_count.push_back(p.accepted);
      report_.final_delta.push_back(p.model.delta);
      report_.x0_norm.push_back(p.model.x0.norm());
      report_.final_norm.push_back(p.x.norm());
      report_.max_delta_total.push_back(p.max_delta_total);
      report_.trajectories.push_back(std::move(p.traj));
    }
    report_.max_error_ratio.assign(plants_.size(), 0.0);
    for (const auto& iv : report_.intervals) {
      auto& r = report_.max_error_ratio[static_cast<std::size_t>(iv.plant)];
      r = std::max(r, iv.max_error / iv.delta);
    }
    build_power_trace();
  }

  // Piecewise-constant power: overlapping TC epochs add; time no TC epoch
  // covers falls back to the latest background allocation.
  void build_power_trace() {
    const double end = to_s(end_us_);
    std::vector<const EpochLog*> tc, bg;
    std::vector<double> cuts{0.0, end};
    for (const auto& e : report_.epochs) {
      (e.background ? bg : tc).push_back(&e);
      cuts.push_back(std::min(e.t, end));
      cuts.push_back(std::min(e.t + e.duration, end));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::size_t bg_at = 0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double a = cuts[s], b = cuts[s + 1];
      double ul = 0.0, bs = 0.0;
      bool covered = false;
      for (const auto* e : tc) {
        if (e->t <= a && e->t + e->duration >= b) {
          ul += e->charge_ul;
          bs += e->charge_bs;
          covered = true;
        }
      }
      // Duty-cycled RTUs draw circuit power once while any of their epochs is in flight.
      if (cfg_.sim.circuit_power_mode == CircuitPowerMode::kDutyCycled) {
        std::vector<bool> awake(plants_.size(), false);
        for (const auto* e : tc) {
          if (e->t <= a && e->t + e->duration >= b) {
            for (int i : e->plants) awake[static_cast<std::size_t>(i)] = true;
          }
        }
        ul += static_cast<double>(std::count(awake.begin(), awake.end(), true)) * report_.channel.p_cst_user;
      }
      if (!covered) {
        while (bg_at + 1 < bg.size() && bg[bg_at + 1]->t <= a) ++bg_at;
        if (!bg.empty() && bg[bg_at]->t <= a) {
          ul = bg[bg_at]->charge_ul;
          bs = bg[bg_at]->charge_bs;
        }
      }
      ul += continuous_ul_;
      auto& trace = report_.power_trace;
      if (!trace.empty() && trace.back().p_ul == ul && trace.back().p_bs == bs && trace.back().t1 == a) {
        trace.back().t1 = b;
      } else {
        trace.push_back({a, b, ul, bs});
      }
    }
    for (const auto& seg : report_.power_trace) {
      report_.energy_ul += seg.p_ul * (seg.t1 - seg.t0);
      report_.energy_bs += seg.p_bs * (seg.t1 - seg.t0);
    }
  }

  const ScenarioConfig& cfg_;
  RunMode mode_;
  double period_s_;
  std::int64_t dt_us_ = 1000;
  std::int64_t hold_us_ = 10000;
  std::int64_t end_us_ = 0;
  double continuous_ul_ = 0.0;
  std::vector<PlantRun> plants_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
  std::uint64_t seq_ = 0;
  MetricsReport report_;
};

}  // namespace

bool SimEvent::before(const SimEvent& o) const {
  if (time_us != o.time_us) return time_us < o.time_us;
  if (kind != o.kind) return static_cast<int>(kind) < static_cast<int>(o.kind);
  if (plant != o.plant) return plant < o.plant;
  return seq < o.seq;
}

std::uint64_t disturbance_seed(std::uint64_t master, int plant) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(plant), 0xd157u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

UserPopulation scenario_users(const ScenarioConfig& cfg) {
  UserPopulation u;
  u.plants = static_cast<int>(cfg.plants.size());
  u.rc_floor_ul.assign(static_cast<std::size_t>(cfg.users.rc_users), cfg.users.rate_floor_ul_bps);
  u.rc_floor_dl.assign(static_cast<std::size_t>(cfg.users.rc_users), cfg.users.rate_floor_dl_bps);
  return u;
}

ChannelState scenario_channel(const ScenarioConfig& cfg) {
  const auto plants = cfg.plants.size();
  const auto rc = static_cast<std::size_t>(cfg.users.rc_users);
  std::mt19937_64 rng(cfg.users.position_seed);
  std::uniform_real_distribution<double> dist(cfg.network.distance_min_m, cfg.network.distance_max_m);
  // Draw every group so an explicit list does not shift the others.
  std::vector<double> sensors(plants), actuators(plants), rc_d(rc);
  for (auto& d : sensors) d = dist(rng);
  for (auto& d : actuators) d = dist(rng);
  for (auto& d : rc_d) d = dist(rng);
  if (cfg.users.sensor_distances_m) sensors = *cfg.users.sensor_distances_m;
  if (cfg.users.actuator_distances_m) actuators = *cfg.users.actuator_distances_m;
  if (cfg.users.rc_distances_m) rc_d = *cfg.users.rc_distances_m;

  std::vector<double> ul = sensors, dl = actuators;
  ul.insert(ul.end(), rc_d.begin(), rc_d.end());
  dl.insert(dl.end(), rc_d.begin(), rc_d.end());
  return build_channel(ul, dl, cfg.network.subcarriers, cfg.network.h_bar, cfg.network.parameters());
}

MetricsReport run_scenario(const ScenarioConfig& config) {
  return Simulation(config, RunMode::kSelfTriggered, 0.0).run();
}

MetricsReport run_periodic_baseline(const ScenarioConfig& config, double period_s) {
  return Simulation(config, RunMode::kPeriodic, period_s).run();
}

std::vector<MetricsReport> sweep_weight(const ScenarioConfig& config, const std::vector<double>& a_values) {
  std::vector<MetricsReport> out;
  for (double a : a_values) {
    if (!(a >= 0.0 && a <= 1.0)) throw SchemaError("sweep: weight values must lie in [0, 1]");
    ScenarioConfig c = config;
    c.sim.weight_a = a;
    out.push_back(run_scenario(c));
  }
  return out;
}

WeightCheck weight_direction_check(const ScenarioConfig& config, const MetricsReport& report) {
  WeightCheck wc;
  SolverOptions opts;
  opts.max_iters = config.sim.solver_max_iters;
  opts.tol = config.sim.solver_tol;
  for (const auto& e : report.epochs) {
    AllocationProblem pr;
    pr.channel = report.channel;
    pr.users = report.users;
    pr.active_plants = e.plants;
    pr.delay_budget = e.delay_budget;
    pr.payload_bits = config.network.payload_tc_bits;
    pr.circuit_mode = config.sim.circuit_power_mode;
    pr.weight_a = 0.0;
    const double p0 = solve_allocation(pr, opts).p_ul_total;
    pr.weight_a = 1.0;
    const double p1 = solve_allocation(pr, opts).p_ul_total;
    ++wc.epochs;
    wc.p_ul_at_0.push_back(p0);
    wc.p_ul_at_1.push_back(p1);
    if (p1 > p0 * (1.0 + 1e-9)) ++wc.failures;
  }
  return wc;
}

}  // namespace cps
