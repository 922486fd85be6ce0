#include "cps/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cps/errors.hpp"

namespace cps {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw SchemaError(where("") + ": expected an object");
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  // Number, or "<value> <unit>" when the field has a unit family.
  double number(const std::string& key, double fallback, const char* family = nullptr) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && family) return parse_quantity(v.get<std::string>(), family, where(key));
    throw SchemaError(where(key) + ": expected a number");
  }

  std::optional<double> opt_number(const std::string& key, const char* family = nullptr) {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0, family);
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw SchemaError(where(key) + ": expected an integer");
    return v.get<int>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw SchemaError(where(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw SchemaError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const char* family = nullptr) {
    const json& v = raw(key);
    if (!v.is_array()) throw SchemaError(where(key) + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string at = where(key) + "[" + std::to_string(i) + "]";
      if (v[i].is_number()) {
        out.push_back(v[i].get<double>());
      } else if (v[i].is_string() && family) {
        out.push_back(parse_quantity(v[i].get<std::string>(), family, at));
      } else {
        throw SchemaError(at + ": expected a number");
      }
    }
    return out;
  }

  Mat matrix(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) throw SchemaError(where(key) + ": expected a non-empty array of rows");
    const auto rows = v.size();
    if (!v[0].is_array() || v[0].empty()) throw SchemaError(where(key) + "[0]: expected a non-empty row");
    const auto cols = v[0].size();
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string at = where(key) + "[" + std::to_string(r) + "]";
      if (!v[r].is_array() || v[r].size() != cols) throw SchemaError(at + ": rows must have equal length");
      for (std::size_t c = 0; c < cols; ++c) {
        if (!v[r][c].is_number()) throw SchemaError(at + "[" + std::to_string(c) + "]: expected a number");
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
      }
    }
    return m;
  }

  Reader child(const std::string& key) { return Reader(raw(key), where(key)); }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw SchemaError(where(item.key()) + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

bool same(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool same(const std::optional<Mat>& a, const std::optional<Mat>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same(*a, *b);
}

PlantConfig parse_plant(Reader r) {
  PlantConfig p;
  p.name = r.string("name", "");
  if (!r.has("A")) throw SchemaError(r.where("A") + ": required");
  if (!r.has("B")) throw SchemaError(r.where("B") + ": required");
  p.A = r.matrix("A");
  p.B = r.matrix("B");
  if (r.has("C")) p.C = r.matrix("C");
  if (r.has("K")) p.K = r.matrix("K");
  if (r.has("eigenvalues")) {
    const json& v = r.raw("eigenvalues");
    if (!v.is_array()) throw SchemaError(r.where("eigenvalues") + ": expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string at = r.where("eigenvalues") + "[" + std::to_string(i) + "]";
      if (v[i].is_number()) {
        p.eigenvalues.emplace_back(v[i].get<double>(), 0.0);
      } else if (v[i].is_array() && v[i].size() == 2 && v[i][0].is_number() && v[i][1].is_number()) {
        p.eigenvalues.emplace_back(v[i][0].get<double>(), v[i][1].get<double>());
      } else {
        throw SchemaError(at + ": expected a number or [re, im]");
      }
    }
  }
  if (!p.K && p.eigenvalues.empty()) throw SchemaError(r.where("eigenvalues") + ": required when K is absent");
  p.d_bound = r.number("d_bound", 0.0);
  p.delta = r.number("delta", 1.0);
  p.delta_max = r.number("delta_max", p.delta);
  if (!r.has("x0")) throw SchemaError(r.where("x0") + ": required");
  const auto x0 = r.numbers("x0");
  p.x0 = Eigen::Map<const Vec>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  p.delay_max_s = r.number("delay_max_s", 1.0, "time");
  r.finish();
  return p;
}

json plant_json(const PlantConfig& p) {
  json j;
  j["name"] = p.name;
  j["A"] = matrix_json(p.A);
  j["B"] = matrix_json(p.B);
  if (p.C) j["C"] = matrix_json(*p.C);
  if (p.K) j["K"] = matrix_json(*p.K);
  if (!p.eigenvalues.empty()) {
    json e = json::array();
    for (const auto& z : p.eigenvalues) {
      if (z.imag() == 0.0) {
        e.push_back(z.real());
      } else {
        e.push_back(json::array({z.real(), z.imag()}));
      }
    }
    j["eigenvalues"] = e;
  }
  j["d_bound"] = p.d_bound;
  j["delta"] = p.delta;
  j["delta_max"] = p.delta_max;
  j["x0"] = std::vector<double>(p.x0.data(), p.x0.data() + p.x0.size());
  j["delay_max_s"] = p.delay_max_s;
  return j;
}

const char* mode_name(CircuitPowerMode m) {
  return m == CircuitPowerMode::kAlwaysOn ? "always_on" : "duty_cycled";
}
const char* form_name(UpsilonForm f) { return f == UpsilonForm::kLiteral ? "literal" : "grouped"; }

}  // namespace

double parse_quantity(const std::string& text, const std::string& family, const std::string& field) {
  std::istringstream in(text);
  double value = 0.0;
  std::string unit, extra;
  if (!(in >> value)) throw UnitError(field + ": cannot read a number from \"" + text + "\"");
  in >> unit;
  if (in >> extra) throw UnitError(field + ": trailing text in \"" + text + "\"");
  if (!std::isfinite(value)) throw UnitError(field + ": non-finite value");

  static const std::map<std::string, std::map<std::string, double>> scales = {
      {"time", {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}}},
      {"frequency", {{"Hz", 1.0}, {"kHz", 1e3}, {"KHz", 1e3}, {"MHz", 1e6}}},
      {"distance", {{"m", 1.0}, {"km", 1e3}}},
      {"rate", {{"bit/s", 1.0}, {"bps", 1.0}, {"kbit/s", 1e3}, {"Mbit/s", 1e6}}},
  };
  if (family == "power") {
    // Canonical power unit in the config is dBm.
    if (unit == "dBm") return value;
    if (unit == "dBW") return value + 30.0;
    double watts = 0.0;
    if (unit == "W") {
      watts = value;
    } else if (unit == "mW") {
      watts = value * 1e-3;
    } else {
      throw UnitError(field + ": unit \"" + unit + "\" is not a power unit (dBm, dBW, W, mW)");
    }
    if (!(watts > 0.0)) throw UnitError(field + ": power must be > 0 W to convert to dBm");
    return watt_to_dbm(watts);
  }
  auto fam = scales.find(family);
  if (fam == scales.end()) throw UnitError(field + ": unknown unit family " + family);
  auto it = fam->second.find(unit);
  if (it == fam->second.end()) {
    throw UnitError(field + ": unit \"" + unit + "\" is not a " + family + " unit");
  }
  return value * it->second;
}

bool PlantConfig::operator==(const PlantConfig& o) const {
  return name == o.name && same(A, o.A) && same(B, o.B) && same(C, o.C) && same(K, o.K) &&
         eigenvalues == o.eigenvalues && d_bound == o.d_bound && delta == o.delta &&
         delta_max == o.delta_max && same(Mat(x0), Mat(o.x0)) && delay_max_s == o.delay_max_s;
}

PlantModel PlantConfig::model() const {
  PlantModel m;
  m.A = A;
  m.B = B;
  m.C = C ? *C : Mat::Identity(A.rows(), A.cols());
  if (K) {
    m.K = *K;
  } else {
    if (static_cast<Eigen::Index>(eigenvalues.size()) != A.rows()) {
      throw DimensionMismatch("plant " + name + ": need one eigenvalue per state");
    }
    m.K = pole_place(A, B, eigenvalues);
  }
  m.d_bound = d_bound;
  m.delta = delta;
  m.delta_max = delta_max;
  m.x0 = x0;
  m.validate();
  return m;
}

ChannelState NetworkConfig::parameters() const {
  ChannelState c;
  c.w = bandwidth_hz;
  c.n0 = dbm_to_watt(noise_dbm);
  c.p_max_user = dbm_to_watt(p_max_user_dbm);
  c.p_max_bs = dbm_to_watt(p_max_bs_dbm);
  c.p_cst_user = dbm_to_watt(p_cst_user_dbm);
  c.p_cst_bs = dbm_to_watt(p_cst_bs_dbm);
  return c;
}

void ScenarioConfig::validate() const {
  for (std::size_t i = 0; i < plants.size(); ++i) {
    const auto& p = plants[i];
    const std::string at = "plants[" + std::to_string(i) + "]";
    (void)p.model();
    if (!(p.delay_max_s > network.comp_delay_max_s)) {
      throw SchemaError(at + ".delay_max_s: must exceed network.comp_delay_max_s");
    }
  }
  const auto& n = network;
  if (n.subcarriers < 1 || n.subcarriers > 32) throw SchemaError("network.subcarriers: must be in [1, 32]");
  if (!(n.bandwidth_hz > 0.0)) throw SchemaError("network.bandwidth_hz: must be > 0");
  if (!(n.h_bar > 0.0)) throw SchemaError("network.h_bar: must be > 0");
  if (!(n.distance_min_m > 0.0)) throw NonPositiveDistance("network.distance_min_m: must be > 0");
  if (!(n.distance_max_m >= n.distance_min_m)) throw SchemaError("network.distance_max_m: must be >= distance_min_m");
  if (!(n.payload_tc_bits >= 0.0)) throw SchemaError("network.payload_tc_bits: must be >= 0");
  if (!(n.comp_delay_max_s >= 0.0)) throw SchemaError("network.comp_delay_max_s: must be >= 0");
  for (double v : {n.p_max_user_dbm, n.p_max_bs_dbm, n.p_cst_user_dbm, n.p_cst_bs_dbm, n.noise_dbm}) {
    if (!std::isfinite(v)) throw SchemaError("network: power fields must be finite");
  }

  const auto& u = users;
  if (u.rc_users < 0) throw SchemaError("users.rc_users: must be >= 0");
  if (!(u.rate_floor_ul_bps >= 0.0) || !(u.rate_floor_dl_bps >= 0.0)) {
    throw SchemaError("users: rate floors must be >= 0");
  }
  auto check_list = [&](const std::optional<std::vector<double>>& v, std::size_t want, const char* key) {
    if (!v) return;
    if (v->size() != want) throw DimensionMismatch(std::string("users.") + key + ": wrong length");
    for (double d : *v) {
      if (!(d > 0.0)) throw NonPositiveDistance(std::string("users.") + key + ": distances must be > 0");
    }
  };
  check_list(u.sensor_distances_m, plants.size(), "sensor_distances_m");
  check_list(u.actuator_distances_m, plants.size(), "actuator_distances_m");
  check_list(u.rc_distances_m, static_cast<std::size_t>(u.rc_users), "rc_distances_m");

  const auto& s = sim;
  if (!(s.duration_s > 0.0)) throw SchemaError("sim.duration_s: must be > 0");
  if (!(s.dt_s > 0.0)) throw SchemaError("sim.dt_s: must be > 0");
  if (!(s.dt_s >= 1e-6)) throw SchemaError("sim.dt_s: must be >= 1 us");
  if (!(s.disturbance_hold_s > 0.0)) throw SchemaError("sim.disturbance_hold_s: must be > 0");
  if (!(s.baseline_period_s > 0.0)) throw SchemaError("sim.baseline_period_s: must be > 0");
  if (!(s.background_period_s > 0.0)) throw SchemaError("sim.background_period_s: must be > 0");
  if (!(s.weight_a >= 0.0 && s.weight_a <= 1.0)) throw SchemaError("sim.weight_a: must lie in [0, 1]");
  for (double a : s.sweep_a) {
    if (!(a >= 0.0 && a <= 1.0)) throw SchemaError("sim.sweep_a: values must lie in [0, 1]");
  }
  if (!(s.h_min_s > 0.0) || !(s.h_max_s >= s.h_min_s)) throw SchemaError("sim: need 0 < h_min_s <= h_max_s");
  if (s.solver_max_iters < 1) throw SchemaError("sim.solver_max_iters: must be >= 1");
  if (!(s.solver_tol > 0.0)) throw SchemaError("sim.solver_tol: must be > 0");
  if (s.trajectory_stride < 1) throw SchemaError("sim.trajectory_stride: must be >= 1");
}

ScenarioConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("<root>: not valid config text: ") + e.what());
  }
  if (root.is_null()) throw SchemaError("<root>: empty config");
  Reader r(root, "");
  ScenarioConfig cfg;
  r.string("schema", "cpsim-config/1");

  if (r.has("plants")) {
    const json& arr = r.raw("plants");
    if (!arr.is_array()) throw SchemaError("plants: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      cfg.plants.push_back(parse_plant(Reader(arr[i], "plants[" + std::to_string(i) + "]")));
    }
  }

  if (r.has("network")) {
    Reader n = r.child("network");
    auto& c = cfg.network;
    c.subcarriers = n.integer("subcarriers", c.subcarriers);
    c.bandwidth_hz = n.number("bandwidth_hz", c.bandwidth_hz, "frequency");
    c.p_max_user_dbm = n.number("p_max_user_dbm", c.p_max_user_dbm, "power");
    c.p_max_bs_dbm = n.number("p_max_bs_dbm", c.p_max_bs_dbm, "power");
    c.p_cst_user_dbm = n.number("p_cst_user_dbm", c.p_cst_user_dbm, "power");
    c.p_cst_bs_dbm = n.number("p_cst_bs_dbm", c.p_cst_bs_dbm, "power");
    c.noise_dbm = n.number("noise_dbm", c.noise_dbm, "power");
    c.h_bar = n.number("h_bar", c.h_bar);
    c.distance_min_m = n.number("distance_min_m", c.distance_min_m, "distance");
    c.distance_max_m = n.number("distance_max_m", c.distance_max_m, "distance");
    c.payload_tc_bits = n.number("payload_tc_bits", c.payload_tc_bits);
    c.payload_rc_bits = n.opt_number("payload_rc_bits");
    c.comp_delay_max_s = n.number("comp_delay_max_s", c.comp_delay_max_s, "time");
    n.finish();
  }

  if (r.has("users")) {
    Reader u = r.child("users");
    auto& c = cfg.users;
    c.rc_users = u.integer("rc_users", c.rc_users);
    c.rate_floor_ul_bps = u.number("rate_floor_ul_bps", c.rate_floor_ul_bps, "rate");
    c.rate_floor_dl_bps = u.number("rate_floor_dl_bps", c.rate_floor_dl_bps, "rate");
    c.position_seed = u.seed("position_seed", c.position_seed);
    if (u.has("sensor_distances_m")) c.sensor_distances_m = u.numbers("sensor_distances_m", "distance");
    if (u.has("actuator_distances_m")) c.actuator_distances_m = u.numbers("actuator_distances_m", "distance");
    if (u.has("rc_distances_m")) c.rc_distances_m = u.numbers("rc_distances_m", "distance");
    u.finish();
  }

  if (r.has("sim")) {
    Reader s = r.child("sim");
    auto& c = cfg.sim;
    c.duration_s = s.number("duration_s", c.duration_s, "time");
    c.dt_s = s.number("dt_s", c.dt_s, "time");
    c.seed = s.seed("seed", c.seed);
    c.disturbance_hold_s = s.number("disturbance_hold_s", c.disturbance_hold_s, "time");
    c.baseline_period_s = s.number("baseline_period_s", c.baseline_period_s, "time");
    c.background_period_s = s.number("background_period_s", c.background_period_s, "time");
    c.weight_a = s.number("weight_a", c.weight_a);
    if (s.has("sweep_a")) c.sweep_a = s.numbers("sweep_a");
    const std::string mode = s.string("circuit_power_mode", mode_name(c.circuit_power_mode));
    if (mode == "duty_cycled") {
      c.circuit_power_mode = CircuitPowerMode::kDutyCycled;
    } else if (mode == "always_on") {
      c.circuit_power_mode = CircuitPowerMode::kAlwaysOn;
    } else {
      throw SchemaError("sim.circuit_power_mode: expected duty_cycled or always_on");
    }
    const std::string form = s.string("upsilon_form", form_name(c.upsilon_form));
    if (form == "grouped") {
      c.upsilon_form = UpsilonForm::kGrouped;
    } else if (form == "literal") {
      c.upsilon_form = UpsilonForm::kLiteral;
    } else {
      throw SchemaError("sim.upsilon_form: expected grouped or literal");
    }
    c.h_max_s = s.number("h_max_s", c.h_max_s, "time");
    c.h_min_s = s.number("h_min_s", c.h_min_s, "time");
    c.solver_max_iters = s.integer("solver_max_iters", c.solver_max_iters);
    c.solver_tol = s.number("solver_tol", c.solver_tol);
    c.trajectory_stride = s.integer("trajectory_stride", c.trajectory_stride);
    s.finish();
  }
  r.finish();
  cfg.validate();
  return cfg;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

json emit_config(const ScenarioConfig& cfg) {
  json root;
  root["schema"] = "cpsim-config/1";
  json plants = json::array();
  for (const auto& p : cfg.plants) plants.push_back(plant_json(p));
  root["plants"] = plants;

  const auto& n = cfg.network;
  json net;
  net["subcarriers"] = n.subcarriers;
  net["bandwidth_hz"] = n.bandwidth_hz;
  net["p_max_user_dbm"] = n.p_max_user_dbm;
  net["p_max_bs_dbm"] = n.p_max_bs_dbm;
  net["p_cst_user_dbm"] = n.p_cst_user_dbm;
  net["p_cst_bs_dbm"] = n.p_cst_bs_dbm;
  net["noise_dbm"] = n.noise_dbm;
  net["h_bar"] = n.h_bar;
  net["distance_min_m"] = n.distance_min_m;
  net["distance_max_m"] = n.distance_max_m;
  net["payload_tc_bits"] = n.payload_tc_bits;
  if (n.payload_rc_bits) net["payload_rc_bits"] = *n.payload_rc_bits;
  net["comp_delay_max_s"] = n.comp_delay_max_s;
  root["network"] = net;

  const auto& u = cfg.users;
  json users;
  users["rc_users"] = u.rc_users;
  users["rate_floor_ul_bps"] = u.rate_floor_ul_bps;
  users["rate_floor_dl_bps"] = u.rate_floor_dl_bps;
  users["position_seed"] = u.position_seed;
  if (u.sensor_distances_m) users["sensor_distances_m"] = *u.sensor_distances_m;
  if (u.actuator_distances_m) users["actuator_distances_m"] = *u.actuator_distances_m;
  if (u.rc_distances_m) users["rc_distances_m"] = *u.rc_distances_m;
  root["users"] = users;

  const auto& s = cfg.sim;
  json sim;
  sim["duration_s"] = s.duration_s;
  sim["dt_s"] = s.dt_s;
  sim["seed"] = s.seed;
  sim["disturbance_hold_s"] = s.disturbance_hold_s;
  sim["baseline_period_s"] = s.baseline_period_s;
  sim["background_period_s"] = s.background_period_s;
  sim["weight_a"] = s.weight_a;
  sim["sweep_a"] = s.sweep_a;
  sim["circuit_power_mode"] = mode_name(s.circuit_power_mode);
  sim["upsilon_form"] = form_name(s.upsilon_form);
  sim["h_max_s"] = s.h_max_s;
  sim["h_min_s"] = s.h_min_s;
  sim["solver_max_iters"] = s.solver_max_iters;
  sim["solver_tol"] = s.solver_tol;
  sim["trajectory_stride"] = s.trajectory_stride;
  root["sim"] = sim;
  return root;
}

std::string emit_config_text(const ScenarioConfig& cfg) { return emit_config(cfg).dump(2) + "\n"; }

}  // namespace cps
