#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cps/allocator.hpp"
#include "cps/network.hpp"
#include "cps/plant.hpp"
#include "cps/sampler.hpp"

namespace cps {

struct PlantConfig {
  std::string name;
  Mat A;
  Mat B;
  std::optional<Mat> C;  // identity when absent
  std::vector<std::complex<double>> eigenvalues;
  std::optional<Mat> K;  // explicit gain wins over eigenvalues
  double d_bound = 0.0;
  double delta = 1.0;
  double delta_max = 1.0;
  Vec x0;
  double delay_max_s = 1.0;  // end-to-end deadline for this plant

  // Resolves K (pole placement when needed) and checks dimensions.
  PlantModel model() const;
  bool operator==(const PlantConfig&) const;
};

// Power fields are stored in dBm exactly as written; watts are derived.
struct NetworkConfig {
  int subcarriers = 16;
  double bandwidth_hz = 180e3;
  double p_max_user_dbm = 23.0;
  double p_max_bs_dbm = 43.0;
  double p_cst_user_dbm = 0.1;
  double p_cst_bs_dbm = 20.0;
  double noise_dbm = -62.24;
  double h_bar = 0.09;
  double distance_min_m = 10.0;
  double distance_max_m = 50.0;
  double payload_tc_bits = 70.0;
  std::optional<double> payload_rc_bits;  // carried, not used by any constraint
  double comp_delay_max_s = 0.01;

  ChannelState parameters() const;  // powers in watts, no gains
  bool operator==(const NetworkConfig&) const = default;
};

struct UsersConfig {
  int rc_users = 5;  // each has an uplink and a downlink flow
  double rate_floor_ul_bps = 50.0;
  double rate_floor_dl_bps = 100.0;
  std::uint64_t position_seed = 7;
  // Explicit distances override the seeded draw when present.
  std::optional<std::vector<double>> sensor_distances_m;
  std::optional<std::vector<double>> actuator_distances_m;
  std::optional<std::vector<double>> rc_distances_m;
  bool operator==(const UsersConfig&) const = default;
};

struct SimConfig {
  double duration_s = 50.0;
  double dt_s = 1e-3;
  std::uint64_t seed = 1;
  double disturbance_hold_s = 0.01;
  double baseline_period_s = 50.0 / 555.0;
  double background_period_s = 0.1;
  double weight_a = 0.5;
  std::vector<double> sweep_a;
  CircuitPowerMode circuit_power_mode = CircuitPowerMode::kDutyCycled;
  UpsilonForm upsilon_form = UpsilonForm::kGrouped;
  double h_max_s = 1.0;
  double h_min_s = 1e-3;
  int solver_max_iters = 50;
  double solver_tol = 1e-4;
  int trajectory_stride = 10;
  bool operator==(const SimConfig&) const = default;
};

struct ScenarioConfig {
  std::vector<PlantConfig> plants;
  NetworkConfig network;
  UsersConfig users;
  SimConfig sim;

  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// Strict parse: unknown keys, wrong types and bad units raise SchemaError /
/// UnitError naming the offending field path.
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config(const std::filesystem::path& path);

nlohmann::json emit_config(const ScenarioConfig& config);
std::string emit_config_text(const ScenarioConfig& config);

/// Converts "<number> <unit>" strings. `family` is one of
/// "power", "time", "frequency", "distance", "rate".
double parse_quantity(const std::string& text, const std::string& family, const std::string& field);

}  // namespace cps
