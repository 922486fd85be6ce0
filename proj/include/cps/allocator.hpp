#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cps/network.hpp"

namespace cps {

using Vec = Eigen::VectorXd;

enum class CircuitPowerMode { kDutyCycled, kAlwaysOn };

// One communication epoch: which plants must exchange a sample/input pair,
// their delay budgets, and the rate-constrained background traffic.
struct AllocationProblem {
  ChannelState channel;
  UserPopulation users;
  std::vector<int> active_plants;   // sorted, unique
  std::vector<double> delay_budget;  // per plant id: max total delay minus compute delay, s
  double payload_bits = 70.0;
  double weight_a = 0.5;
  CircuitPowerMode circuit_mode = CircuitPowerMode::kDutyCycled;

  void validate() const;
};

// Owner of every subcarrier per direction; -1 means unassigned.
struct Assignment {
  std::vector<int> ul_owner;
  std::vector<int> dl_owner;

  static Assignment empty(int subcarriers);
  IntMat ul_matrix(int users) const;
  IntMat dl_matrix(int users) const;
  bool operator==(const Assignment&) const = default;
};

struct WaterfillResult {
  Vec powers;
  double water_level = 0.0;
  double rate = 0.0;
  double kkt_residual = 0.0;
};

/// Minimum total power meeting `rate_target` over parallel channels with
/// gains `gains`. The caller applies any time-share factor to the target.
/// Throws Infeasible when the target needs more than `p_cap`.
WaterfillResult waterfill_min_power(std::span<const double> gains, double rate_target, double w,
                                    double n0, double p_cap);

/// Largest sum rate reachable with total power `p_total` (classic water-filling).
double max_rate_at_power(std::span<const double> gains, double w, double n0, double p_total);

/// Normalized KKT residual of a minimum-power water-filling solution.
double waterfill_kkt_residual(std::span<const double> gains, std::span<const double> powers,
                              double water_level, double rate_target, double w, double n0);

struct DelaySplit {
  double theta = 0.5;  // uplink share of the delay budget
  double rate_ul_target = 0.0;
  double rate_dl_target = 0.0;
  WaterfillResult ul;
  WaterfillResult dl;
};

/// Splits a plant's delay budget between uplink and downlink so that the
/// weighted transmit power is minimal (golden-section search on theta).
DelaySplit split_delay_budget(const AllocationProblem& problem, const Assignment& assignment,
                              int plant);

struct PowerAllocation {
  Mat powers_ul;
  Mat powers_dl;
  Vec rates_ul;
  Vec rates_dl;
  Vec water_ul;  // water level per uplink user (0 when idle)
  Vec water_dl;
  std::vector<double> theta;  // per plant id, NaN when inactive
  double p_ul_total = 0.0;
  double p_bs_total = 0.0;
  double objective = 0.0;
  double max_kkt_residual = 0.0;
};

PowerAllocation allocate_power(const AllocationProblem& problem, const Assignment& assignment);

// Candidate per-(user, subcarrier) powers used by the assignment step.
struct FixedPowers {
  Mat ul;
  Mat dl;
};

enum class AssignMode { kHeuristic, kExhaustive };

/// Weighted transmit power of `assignment` at the fixed powers, or +inf when
/// a rate, delay or power-cap constraint fails at those powers.
double surrogate_objective(const AllocationProblem& problem, const FixedPowers& fixed,
                           const Assignment& assignment);

Assignment assign_subcarriers(const AllocationProblem& problem, const FixedPowers& fixed,
                              AssignMode mode = AssignMode::kHeuristic,
                              const Assignment* warm_start = nullptr);

struct SolverOptions {
  int max_iters = 50;
  double tol = 1e-4;
  bool polish = true;
};

struct AllocationSolution {
  Assignment owners;
  IntMat assignment_ul;
  IntMat assignment_dl;
  Mat powers_ul;
  Mat powers_dl;
  Vec rates_ul;
  Vec rates_dl;
  std::vector<double> theta;
  double objective = 0.0;
  double p_ul_total = 0.0;
  double p_bs_total = 0.0;
  int iterations = 0;
  bool converged = false;
  bool feasible = false;
  double max_kkt_residual = 0.0;
  std::vector<double> objective_history;
};

AllocationSolution solve_allocation(const AllocationProblem& problem,
                                    const SolverOptions& opts = {});

/// Exact optimum over exclusive assignments (branch and bound, every leaf
/// scored with allocate_power). Guard rails: L <= 8, <= 4 users per direction.
AllocationSolution brute_force_allocation(const AllocationProblem& problem);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> failures;
};

/// Re-derives rates from scratch and checks exclusivity, caps, rate floors
/// and delay budgets.
ValidationReport validate_solution(const AllocationProblem& problem,
                                   const AllocationSolution& solution, double rel_tol = 1e-9);

/// Circuit power of awake uplink users (duty-cycled: active plant RTUs and
/// RC users; always-on: every uplink user).
double uplink_circuit_power(const AllocationProblem& problem);

double weighted_objective(const AllocationProblem& problem, double p_ul_total, double p_bs_total);

// Random desk-scale instance for oracle comparisons.
struct InstanceOptions {
  int max_subcarriers = 6;
  int max_users_per_direction = 4;
};
AllocationProblem random_allocation_instance(std::uint64_t seed, const InstanceOptions& opts = {});

}  // namespace cps
