#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cps {

using Mat = Eigen::MatrixXd;
using IntMat = Eigen::MatrixXi;

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

// Single-cell OFDMA link parameters. Rows index users, columns subcarriers.
struct ChannelState {
  Mat gains_ul;  // M x L
  Mat gains_dl;  // N x L
  double w = 180e3;
  double n0 = 0.0;
  double p_max_user = 0.0;
  double p_max_bs = 0.0;
  double p_cst_user = 0.0;
  double p_cst_bs = 0.0;

  int subcarriers() const { return static_cast<int>(gains_ul.cols()); }
  void validate() const;
};

// User index convention, per direction: [0, plants) are the control RTUs of
// plants 0..I-1 (plant i owns uplink RTU i and downlink RTU i), followed by
// the rate-constrained users in order.
struct UserPopulation {
  int plants = 0;
  std::vector<double> rc_floor_ul;  // bit/s, one per uplink RC user
  std::vector<double> rc_floor_dl;  // bit/s, one per downlink RC user

  int ul_users() const { return plants + static_cast<int>(rc_floor_ul.size()); }
  int dl_users() const { return plants + static_cast<int>(rc_floor_dl.size()); }
  int rc_ul_index(int j) const { return plants + j; }
  int rc_dl_index(int j) const { return plants + j; }
  void validate() const;
};

double channel_gain(double distance_m, double h_bar);

/// Shannon rate of one subcarrier in bit/s (log base 2).
double subcarrier_rate(double power, double gain, double w, double n0);

/// Sum rate over the assigned subcarriers.
double link_rate(std::span<const double> powers, std::span<const double> gains,
                 std::span<const int> assignment, double w, double n0);

/// Time to move `payload_bits` when the direction only owns half the frame.
double transmission_delay(double payload_bits, double rate);

double total_uplink_power(const IntMat& assignment, const Mat& powers,
                          const std::vector<bool>& active_users, double p_cst_user);
double total_bs_power(const IntMat& assignment, const Mat& powers, double p_cst_bs);

/// Distance-only channel: every subcarrier of a user sees d^-3 * h_bar.
ChannelState build_channel(std::span<const double> distances_ul,
                           std::span<const double> distances_dl, int subcarriers, double h_bar,
                           const ChannelState& params);

/// direction,user,subcarrier,gain rows.
void write_channel_csv(std::ostream& os, const ChannelState& channel);

}  // namespace cps
