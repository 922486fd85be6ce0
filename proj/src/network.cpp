#include "cps/network.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "cps/errors.hpp"

namespace cps {

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

void ChannelState::validate() const {
  if (gains_ul.cols() != gains_dl.cols()) {
    throw DimensionMismatch("channel: uplink and downlink subcarrier counts differ");
  }
  if ((gains_ul.size() > 0 && !(gains_ul.minCoeff() > 0.0)) ||
      (gains_dl.size() > 0 && !(gains_dl.minCoeff() > 0.0))) {
    throw SchemaError("channel: all gains must be > 0");
  }
  if (!(w > 0.0) || !(n0 > 0.0)) throw SchemaError("channel: bandwidth and noise must be > 0");
  if (!(p_max_user > 0.0) || !(p_max_bs > 0.0) || !(p_cst_user > 0.0) || !(p_cst_bs > 0.0)) {
    throw SchemaError("channel: power caps and circuit powers must be > 0");
  }
}

void UserPopulation::validate() const {
  if (plants < 0) throw SchemaError("users: negative plant count");
  for (double r : rc_floor_ul) {
    if (!(r >= 0.0)) throw SchemaError("users: uplink rate floors must be >= 0");
  }
  for (double r : rc_floor_dl) {
    if (!(r >= 0.0)) throw SchemaError("users: downlink rate floors must be >= 0");
  }
}

double channel_gain(double distance_m, double h_bar) {
  if (!(distance_m > 0.0)) throw NonPositiveDistance("channel_gain: distance must be > 0");
  return h_bar / (distance_m * distance_m * distance_m);
}

double subcarrier_rate(double power, double gain, double w, double n0) {
  if (power <= 0.0) return 0.0;
  return w * std::log1p(power * gain / n0) / std::numbers::ln2;
}

double link_rate(std::span<const double> powers, std::span<const double> gains,
                 std::span<const int> assignment, double w, double n0) {
  if (powers.size() != gains.size() || powers.size() != assignment.size()) {
    throw DimensionMismatch("link_rate: vectors must have equal length");
  }
  double rate = 0.0;
  for (std::size_t l = 0; l < powers.size(); ++l) {
    if (assignment[l] != 0) rate += subcarrier_rate(powers[l], gains[l], w, n0);
  }
  return rate;
}

double transmission_delay(double payload_bits, double rate) {
  if (!(rate > 0.0)) throw ZeroRate("transmission_delay: link has zero rate");
  return payload_bits / (0.5 * rate);
}

double total_uplink_power(const IntMat& assignment, const Mat& powers,
                          const std::vector<bool>& active_users, double p_cst_user) {
  if (assignment.rows() != powers.rows() || assignment.cols() != powers.cols()) {
    throw DimensionMismatch("total_uplink_power: assignment/power shapes differ");
  }
  double total = 0.0;
  for (bool a : active_users) total += a ? p_cst_user : 0.0;
  total += (assignment.cast<double>().array() * powers.array()).sum();
  return total;
}

double total_bs_power(const IntMat& assignment, const Mat& powers, double p_cst_bs) {
  if (assignment.rows() != powers.rows() || assignment.cols() != powers.cols()) {
    throw DimensionMismatch("total_bs_power: assignment/power shapes differ");
  }
  return p_cst_bs + (assignment.cast<double>().array() * powers.array()).sum();
}

ChannelState build_channel(std::span<const double> distances_ul,
                           std::span<const double> distances_dl, int subcarriers, double h_bar,
                           const ChannelState& params) {
  if (subcarriers <= 0) throw SchemaError("build_channel: need at least one subcarrier");
  ChannelState ch = params;
  ch.gains_ul.resize(static_cast<Eigen::Index>(distances_ul.size()), subcarriers);
  ch.gains_dl.resize(static_cast<Eigen::Index>(distances_dl.size()), subcarriers);
  for (std::size_t m = 0; m < distances_ul.size(); ++m) {
    ch.gains_ul.row(static_cast<Eigen::Index>(m)).setConstant(channel_gain(distances_ul[m], h_bar));
  }
  for (std::size_t n = 0; n < distances_dl.size(); ++n) {
    ch.gains_dl.row(static_cast<Eigen::Index>(n)).setConstant(channel_gain(distances_dl[n], h_bar));
  }
  ch.validate();
  return ch;
}

void write_channel_csv(std::ostream& os, const ChannelState& channel) {
  os << "direction,user,subcarrier,gain\n";
  os.precision(17);
  for (Eigen::Index m = 0; m < channel.gains_ul.rows(); ++m) {
    for (Eigen::Index l = 0; l < channel.gains_ul.cols(); ++l) {
      os << "ul," << m << ',' << l << ',' << channel.gains_ul(m, l) << '\n';
    }
  }
  for (Eigen::Index n = 0; n < channel.gains_dl.rows(); ++n) {
    for (Eigen::Index l = 0; l < channel.gains_dl.cols(); ++l) {
      os << "dl," << n << ',' << l << ',' << channel.gains_dl(n, l) << '\n';
    }
  }
}

}  // namespace cps
