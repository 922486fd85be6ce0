// Acceptance run on the bundled three-plant scenario. Prints one PASS/FAIL
// line per criterion and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "cps/allocator.hpp"
#include "cps/config.hpp"
#include "cps/engine.hpp"
#include "cps/errors.hpp"
#include "cps/plant.hpp"
#include "oracles.hpp"

using namespace cps;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::printf("%s C%d %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : std::string(CPS_SOURCE_DIR) + "/scenarios/paper_section5.cfg";
  ScenarioConfig cfg;
  MetricsReport st, per;
  double st_runtime = 0.0;
  try {
    cfg = parse_config(path);
    auto t0 = std::chrono::steady_clock::now();
    st = run_scenario(cfg);
    st_runtime = seconds_since(t0);
    per = run_periodic_baseline(cfg, cfg.sim.baseline_period_s);
  } catch (const std::exception& e) {
    std::printf("FAIL C1 scenario did not run: %s\n", e.what());
    for (int c = 2; c <= 4; ++c) std::printf("FAIL C%d scenario did not run\n", c);
    return 1;
  }

  // 1: sample counts against 15% of the periodic count.
  {
    bool ok = st_runtime <= 120.0;
    std::string d = "counts";
    for (std::size_t i = 0; i < st.tx_count.size(); ++i) {
      const double limit = 0.15 * per.tx_count[i];
      ok = ok && per.tx_count[i] == 555 && st.tx_count[i] <= limit;
      d += " " + std::to_string(st.tx_count[i]) + "/" + std::to_string(per.tx_count[i]);
    }
    d += fmt(" runtime %.1fs", st_runtime);
    verdict(1, ok, d);
  }

  // 2: error bound per hold interval and end-to-end delay.
  {
    double worst_ratio = 0.0, worst_delay = 0.0;
    for (const auto& iv : st.intervals) worst_ratio = std::max(worst_ratio, iv.max_error / iv.delta);
    for (const auto& s : st.samples) worst_delay = std::max(worst_delay, s.delta_total);
    bool delay_ok = true;
    for (const auto& s : st.samples) {
      delay_ok = delay_ok && s.delta_total <= cfg.plants[static_cast<std::size_t>(s.plant)].delay_max_s;
    }
    const bool ok = st.violations.empty() && worst_ratio <= 1.05 && delay_ok;
    verdict(2, ok,
            fmt("max |e|/delta %.3f", worst_ratio) + fmt(" max delay %.6fs", worst_delay) +
                " violations " + std::to_string(st.violations.size()));
  }

  // 3: final state norms in both modes.
  {
    bool ok = true;
    std::string d = "final/initial";
    for (const auto* r : {&st, &per}) {
      for (std::size_t i = 0; i < r->final_norm.size(); ++i) {
        const double ratio = r->final_norm[i] / r->x0_norm[i];
        ok = ok && ratio < 0.1;
        d += fmt(" %.4f", ratio);
      }
    }
    verdict(3, ok, d);
  }

  // 4: energy ratio, duty-cycled circuit power.
  {
    const double ratio = st.energy_total() / per.energy_total();
    const bool ok = cfg.sim.circuit_power_mode == CircuitPowerMode::kDutyCycled && ratio < 0.5;
    verdict(4, ok,
            fmt("self-triggered %.3fJ", st.energy_total()) + fmt(" periodic %.3fJ", per.energy_total()) +
                fmt(" ratio %.3f", ratio));
  }

  // 5: allocator against brute force.
  try {
    std::vector<double> gaps;
    bool monotone = true, kkt = true, valid = true;
    for (std::uint64_t seed = 0; gaps.size() < 50 && seed < 1000; ++seed) {
      const auto p = random_allocation_instance(seed);
      AllocationSolution b;
      try {
        b = brute_force_allocation(p);
      } catch (const Infeasible&) {
        continue;
      }
      const auto s = solve_allocation(p);
      valid = valid && validate_solution(p, s).ok;
      for (std::size_t i = 1; i < s.objective_history.size(); ++i) {
        monotone = monotone && s.objective_history[i] <= s.objective_history[i - 1];
      }
      kkt = kkt && s.max_kkt_residual < 1e-8 && b.max_kkt_residual < 1e-8;
      gaps.push_back((s.objective - b.objective) / b.objective);
    }
    std::sort(gaps.begin(), gaps.end());
    const double median = gaps.empty() ? 1.0 : 0.5 * (gaps[(gaps.size() - 1) / 2] + gaps[gaps.size() / 2]);
    const double worst = gaps.empty() ? 1.0 : gaps.back();
    const bool ok = gaps.size() == 50 && median <= 0.01 && worst <= 0.05 && monotone && kkt && valid;
    verdict(5, ok,
            "instances " + std::to_string(gaps.size()) + fmt(" median gap %.5f", median) +
                fmt(" max gap %.5f", worst) + (monotone ? " monotone" : " NOT monotone") +
                (kkt ? " kkt<1e-8" : " kkt too large"));
  } catch (const std::exception& e) {
    verdict(5, false, std::string("error: ") + e.what());
  }

  // 6: weight sweep completes; uplink power direction on every epoch.
  try {
    std::vector<double> a;
    for (int i = 1; i <= 9; ++i) a.push_back(i / 10.0);
    const auto runs = sweep_weight(cfg, a);
    std::string d = "sweep energies";
    for (const auto& r : runs) d += fmt(" %.2f", r.energy_total());
    const auto w = weight_direction_check(cfg, st);
    const bool ok = runs.size() == 9 && w.epochs == static_cast<int>(st.epochs.size()) && w.failures == 0;
    verdict(6, ok, d + " epochs checked " + std::to_string(w.epochs) + " failures " + std::to_string(w.failures));
  } catch (const std::exception& e) {
    verdict(6, false, std::string("error: ") + e.what());
  }

  // 7: numerical kernels.
  try {
    double eig_err = 0.0;
    for (const auto& p : cfg.plants) {
      const Mat K = pole_place(p.A, p.B, p.eigenvalues);
      const auto got = oracle::sorted_eigs(p.A + p.B * K);
      auto want = p.eigenvalues;
      std::sort(want.begin(), want.end(), [](auto x, auto y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
      });
      for (std::size_t i = 0; i < want.size(); ++i) eig_err = std::max(eig_err, std::abs(got[i] - want[i]));
    }

    double rk_err = 0.0;
    for (double a : {-2.0, -1.0, -0.1, 0.5}) {
      PlantModel m;
      m.A = Mat::Constant(1, 1, a);
      m.B = Mat::Zero(1, 1);
      m.C = Mat::Identity(1, 1);
      m.K = Mat::Zero(1, 1);
      Vec x = Vec::Ones(1);
      for (int i = 0; i < 1000; ++i) x = integrate_step(m, x, Vec::Zero(1), Vec::Zero(1), 1e-3);
      rk_err = std::max(rk_err, std::abs(x(0) - std::exp(a)));
    }

    double wf_err = 0.0;
    const double w = cfg.network.bandwidth_hz, n0 = dbm_to_watt(cfg.network.noise_dbm);
    for (double g : {1e-7, 1e-6, 9e-5}) {
      for (double r : {50.0, 1e4, 1.4e5, 1e6}) {
        const std::vector<double> gains{g};
        const double want = oracle::single_link_power(r, g, w, n0);
        const double got = waterfill_min_power(gains, r, w, n0, 1e9).powers(0);
        wf_err = std::max(wf_err, std::abs(got - want) / want);
      }
    }
    const bool ok = eig_err <= 1e-8 && rk_err < 1e-7 && wf_err <= 1e-9;
    char buf[200];
    std::snprintf(buf, sizeof buf, "eig err %.2e rk4 err %.2e single-link rel err %.2e", eig_err, rk_err, wf_err);
    verdict(7, ok, buf);
  } catch (const std::exception& e) {
    verdict(7, false, std::string("error: ") + e.what());
  }

  return failures == 0 ? 0 : 1;
}
