#include "cps/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cps/errors.hpp"

namespace cps {

using nlohmann::json;

namespace {

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

std::string joined(const Vec& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v(i);
  return os.str();
}

}  // namespace

json report_summary(const ScenarioConfig& config, const MetricsReport& r) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["mode"] = r.mode == RunMode::kPeriodic ? "periodic" : "self_triggered";
  j["weight_a"] = r.weight_a;
  if (r.mode == RunMode::kPeriodic) j["period_s"] = r.period_s;
  j["config"] = emit_config(config);
  j["seeds"] = {{"sim", config.sim.seed},
                {"positions", config.users.position_seed},
                {"disturbance", r.disturbance_seeds}};
  json plants = json::array();
  for (std::size_t i = 0; i < r.tx_count.size(); ++i) {
    plants.push_back({{"name", r.plant_names[i]},
                      {"tx_count", r.tx_count[i]},
                      {"final_delta", r.final_delta[i]},
                      {"x0_norm", r.x0_norm[i]},
                      {"final_norm", r.final_norm[i]},
                      {"max_error_ratio", r.max_error_ratio[i]},
                      {"max_delta_total_s", r.max_delta_total[i]}});
  }
  j["plants"] = plants;
  j["energy_ul_j"] = r.energy_ul;
  j["energy_bs_j"] = r.energy_bs;
  j["energy_total_j"] = r.energy_total();
  j["escalations"] = r.escalations;

  int tc = 0, converged = 0, iters = 0;
  double kkt = 0.0;
  for (const auto& e : r.epochs) {
    if (!e.background) ++tc;
    converged += e.converged ? 1 : 0;
    iters = std::max(iters, e.iterations);
    kkt = std::max(kkt, e.max_kkt_residual);
  }
  j["solver"] = {{"epochs", r.epochs.size()},
                 {"tc_epochs", tc},
                 {"converged", converged},
                 {"max_iterations", iters},
                 {"max_kkt_residual", kkt}};
  json viol = json::array();
  for (const auto& v : r.violations) {
    viol.push_back({{"kind", v.kind}, {"plant", v.plant}, {"t", v.t}, {"value", v.value}, {"limit", v.limit}});
  }
  j["violations"] = viol;
  j["files"] = {"report.json", "power_trace.csv", "solver_log.csv", "samples.csv", "intervals.csv", "channel.csv"};
  for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
    j["files"].push_back("trajectory_" + std::to_string(i) + ".csv");
  }
  return j;
}

void write_report(const std::filesystem::path& dir, const ScenarioConfig& config, const MetricsReport& r) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  {
    auto out = open(dir / "report.json");
    out << report_summary(config, r).dump(2) << "\n";
  }
  {
    auto out = open(dir / "power_trace.csv");
    out << "t0_s,t1_s,p_ul_w,p_bs_w,p_ul_dbm,p_bs_dbm\n";
    for (const auto& s : r.power_trace) {
      out << s.t0 << ',' << s.t1 << ',' << s.p_ul << ',' << s.p_bs << ','
          << (s.p_ul > 0 ? watt_to_dbm(s.p_ul) : -INFINITY) << ',' << watt_to_dbm(s.p_bs) << '\n';
    }
  }
  {
    auto out = open(dir / "solver_log.csv");
    out << "t_s,kind,plants,iterations,converged,objective_w,p_ul_total_w,p_bs_total_w,duration_s,max_kkt_residual\n";
    for (const auto& e : r.epochs) {
      out << e.t << ',' << (e.background ? "background" : "tc") << ',';
      for (std::size_t k = 0; k < e.plants.size(); ++k) out << (k ? ";" : "") << e.plants[k];
      out << ',' << e.iterations << ',' << (e.converged ? 1 : 0) << ',' << e.objective << ','
          << e.p_ul_total << ',' << e.p_bs_total << ',' << e.duration << ',' << e.max_kkt_residual << '\n';
    }
  }
  {
    auto out = open(dir / "samples.csv");
    out << "plant,k,t_s,delta,delta_total_s,t_next_s,gamma_s,phi,upsilon,capped,bootstrap,x,d_hat\n";
    for (const auto& s : r.samples) {
      out << s.plant << ',' << s.k << ',' << s.t << ',' << s.delta << ',' << s.delta_total << ',' << s.t_next
          << ',' << s.gamma << ',' << s.phi << ',' << s.upsilon << ',' << (s.capped ? 1 : 0) << ','
          << (s.bootstrap ? 1 : 0) << ',' << joined(s.x) << ',' << joined(s.d_hat) << '\n';
    }
  }
  {
    auto out = open(dir / "intervals.csv");
    out << "plant,sample,t_start_s,t_end_s,max_error,delta\n";
    for (const auto& iv : r.intervals) {
      out << iv.plant << ',' << iv.sample << ',' << iv.t_start << ',' << iv.t_end << ',' << iv.max_error << ','
          << iv.delta << '\n';
    }
  }
  {
    auto out = open(dir / "channel.csv");
    write_channel_csv(out, r.channel);
  }
  for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
    const auto& tr = r.trajectories[i];
    auto out = open(dir / ("trajectory_" + std::to_string(i) + ".csv"));
    out << "t_s";
    for (int k = 0; k < tr.states; ++k) out << ",x" << k + 1;
    for (int k = 0; k < tr.inputs; ++k) out << ",u" << k + 1;
    out << ",e_norm\n";
    for (std::size_t p = 0; p < tr.t.size(); ++p) {
      out << tr.t[p];
      for (int k = 0; k < tr.states; ++k) out << ',' << tr.x[p * static_cast<std::size_t>(tr.states) + static_cast<std::size_t>(k)];
      for (int k = 0; k < tr.inputs; ++k) out << ',' << tr.u[p * static_cast<std::size_t>(tr.inputs) + static_cast<std::size_t>(k)];
      out << ',' << tr.e[p] << '\n';
    }
  }
}

}  // namespace cps
