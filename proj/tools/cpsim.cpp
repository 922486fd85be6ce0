// cpsim: run, baseline, sweep, validate and oracle-check entry points.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cps/allocator.hpp"
#include "cps/config.hpp"
#include "cps/engine.hpp"
#include "cps/errors.hpp"
#include "cps/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int fail(const char* name, int code, const std::string& message) {
  json err{{"error", name}, {"code", code}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return code;
}

int fail(const cps::Error& e) { return fail(e.name(), e.exit_code(), e.what()); }

// "lo:hi:step" or a comma list.
std::vector<double> parse_weights(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(spec);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || hi < lo) {
      throw cps::SchemaError("--a: expected lo:hi:step with step > 0");
    }
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (long k = 0; k < n; ++k) {
      // Snap to 12 decimals so 0.1 * 3 prints as 0.3.
      out.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
    }
  } else {
    std::istringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw cps::SchemaError("--a: cannot parse \"" + tok + "\"");
      }
    }
  }
  if (out.empty()) throw cps::SchemaError("--a: no weight values");
  return out;
}

std::string weight_label(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "a_%g", a);
  return buf;
}

int finish_run(const cps::ScenarioConfig& cfg, const cps::MetricsReport& r, const fs::path& out) {
  cps::write_report(out, cfg, r);
  std::cout << "tx_count";
  for (int c : r.tx_count) std::cout << ' ' << c;
  std::cout << std::setprecision(6) << "\nenergy_ul_j " << r.energy_ul << "\nenergy_bs_j " << r.energy_bs
            << "\nreport " << (out / "report.json").string() << "\n";
  if (!r.violations.empty()) {
    const auto& v = r.violations.front();
    return fail("PerformanceViolation", static_cast<int>(cps::ErrorCode::kPerformanceViolation),
                std::to_string(r.violations.size()) + " violation(s); first: " + v.kind + " plant " +
                    std::to_string(v.plant) + " at t=" + std::to_string(v.t));
  }
  return 0;
}

struct OracleRow {
  std::uint64_t seed;
  double heuristic;
  double exact;
  double gap;
  bool monotone;
  double kkt;
  bool valid;
};

int oracle_check(int instances, std::uint64_t seed0, const std::optional<fs::path>& out) {
  std::vector<OracleRow> rows;
  int infeasible = 0;
  for (std::uint64_t s = seed0; static_cast<int>(rows.size()) < instances && s < seed0 + 100000; ++s) {
    const auto p = cps::random_allocation_instance(s);
    cps::AllocationSolution exact;
    try {
      exact = cps::brute_force_allocation(p);
    } catch (const cps::Infeasible&) {
      ++infeasible;
      continue;
    }
    const auto h = cps::solve_allocation(p);
    bool mono = true;
    for (std::size_t i = 1; i < h.objective_history.size(); ++i) {
      if (h.objective_history[i] > h.objective_history[i - 1] * (1.0 + 1e-12)) mono = false;
    }
    rows.push_back({s, h.objective, exact.objective, (h.objective - exact.objective) / exact.objective, mono,
                    h.max_kkt_residual, cps::validate_solution(p, h).ok});
  }
  std::vector<double> gaps;
  bool ok = static_cast<int>(rows.size()) == instances;
  for (const auto& r : rows) {
    gaps.push_back(r.gap);
    ok = ok && r.monotone && r.valid && r.kkt < 1e-8;
  }
  std::sort(gaps.begin(), gaps.end());
  const double median = gaps.empty() ? 0.0 : gaps[gaps.size() / 2];
  const double worst = gaps.empty() ? 0.0 : gaps.back();
  ok = ok && median <= 0.01 && worst <= 0.05;

  if (out) {
    fs::create_directories(*out);
    std::ofstream csv(*out / "oracle.csv");
    csv << std::setprecision(17) << "seed,heuristic_w,exact_w,gap,monotone,max_kkt_residual,valid\n";
    for (const auto& r : rows) {
      csv << r.seed << ',' << r.heuristic << ',' << r.exact << ',' << r.gap << ',' << r.monotone << ','
          << r.kkt << ',' << r.valid << '\n';
    }
  }
  std::cout << "instances " << rows.size() << " (skipped infeasible " << infeasible << ")\n"
            << "median_gap " << median << "\nmax_gap " << worst << "\n";
  if (!ok) {
    return fail("OracleMismatch", static_cast<int>(cps::ErrorCode::kOracleMismatch),
                "allocator missed the oracle bounds (median <= 1%, max <= 5%, monotone, KKT < 1e-8)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-triggered control over an OFDMA network: co-simulation driver"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir = "out", weights;
  std::optional<std::uint64_t> seed;
  std::optional<double> weight, period;
  int instances = 50;
  std::uint64_t oracle_seed = 0;
  std::string oracle_out;

  auto* run = app.add_subcommand("run", "self-triggered run");
  run->add_option("config", cfg_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override sim.seed");
  run->add_option("--a", weight, "override sim.weight_a");

  auto* base = app.add_subcommand("baseline", "periodic-sampling run");
  base->add_option("config", cfg_path, "scenario file")->required();
  base->add_option("--out", out_dir, "output directory");
  base->add_option("--seed", seed, "override sim.seed");
  base->add_option("--period", period, "override sim.baseline_period_s");

  auto* sweep = app.add_subcommand("sweep", "weight sweep, one directory per value");
  sweep->add_option("config", cfg_path, "scenario file")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--a", weights, "lo:hi:step or comma list (default: sim.sweep_a)");

  auto* validate = app.add_subcommand("validate", "parse and check a scenario file");
  validate->add_option("config", cfg_path, "scenario file")->required();

  auto* oracle = app.add_subcommand("oracle-check", "compare the allocator against brute force");
  oracle->add_option("--instances", instances, "number of feasible instances")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_seed, "first instance seed");
  oracle->add_option("--out", oracle_out, "write oracle.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fail("UsageError", static_cast<int>(cps::ErrorCode::kUsage), e.what());
  }

  try {
    if (*oracle) {
      return oracle_check(instances, oracle_seed,
                          oracle_out.empty() ? std::nullopt : std::optional<fs::path>(oracle_out));
    }
    cps::ScenarioConfig cfg = cps::parse_config(cfg_path);
    if (seed) cfg.sim.seed = *seed;
    if (weight) cfg.sim.weight_a = *weight;
    if (period) cfg.sim.baseline_period_s = *period;
    cfg.validate();

    if (*validate) {
      std::cout << "ok: " << cfg.plants.size() << " plants, " << cfg.users.rc_users << " RC users, L="
                << cfg.network.subcarriers << ", " << cfg.sim.duration_s << " s\n";
      return 0;
    }
    if (*run) return finish_run(cfg, cps::run_scenario(cfg), out_dir);
    if (*base) return finish_run(cfg, cps::run_periodic_baseline(cfg, cfg.sim.baseline_period_s), out_dir);
    if (*sweep) {
      const auto values = weights.empty() ? cfg.sim.sweep_a : parse_weights(weights);
      if (values.empty()) throw cps::SchemaError("sweep: no weights given (--a or sim.sweep_a)");
      fs::create_directories(out_dir);
      std::ofstream curve(fs::path(out_dir) / "sweep.csv");
      curve << std::setprecision(17) << "a,energy_ul_j,energy_bs_j,energy_total_j,mean_power_w,violations\n";
      int status = 0;
      const auto reports = cps::sweep_weight(cfg, values);
      for (std::size_t i = 0; i < values.size(); ++i) {
        cps::ScenarioConfig c = cfg;
        c.sim.weight_a = values[i];
        const auto& r = reports[i];
        cps::write_report(fs::path(out_dir) / weight_label(values[i]), c, r);
        curve << values[i] << ',' << r.energy_ul << ',' << r.energy_bs << ',' << r.energy_total() << ','
              << r.energy_total() / cfg.sim.duration_s << ',' << r.violations.size() << '\n';
        if (!r.violations.empty()) status = static_cast<int>(cps::ErrorCode::kPerformanceViolation);
      }
      std::cout << "sweep " << values.size() << " runs -> " << out_dir << "\n";
      if (status) return fail("PerformanceViolation", status, "at least one sweep run reported violations");
      return 0;
    }
  } catch (const cps::Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail("Error", static_cast<int>(cps::ErrorCode::kGeneric), e.what());
  }
  return 0;
}
