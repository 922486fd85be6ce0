#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cps {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Continuous-time LTI plant x' = A x + B u + d under state feedback u = K x(t_k).
struct PlantModel {
  Mat A;
  Mat B;
  Mat C;
  Mat K;
  double d_bound = 0.0;
  double delta = 1.0;
  double delta_max = 1.0;
  Vec x0;

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  Mat closed_loop() const { return A + B * K; }

  // Throws DimensionMismatch / SchemaError when an invariant does not hold.
  void validate() const;
};

struct PlantState {
  double t = 0.0;
  Vec x;
  Vec u_held;
  Vec x_at_sample;
};

/// Ackermann's formula for single-input pairs. Returns K such that
/// eig(A + B K) equals `desired_eigs`.
Eigen::RowVectorXd pole_place(const Mat& A, const Mat& B,
                              std::span<const std::complex<double>> desired_eigs);

Eigen::VectorXcd closed_loop_eigenvalues(const PlantModel& model);
bool is_hurwitz(const Mat& M);

/// One classical RK4 step of x' = A x + B u + d with u and d frozen.
Vec integrate_step(const PlantModel& model, const Vec& x, const Vec& u, const Vec& d, double dt);

double error_norm(const Vec& x_now, const Vec& x_at_sample);

/// Piecewise-constant disturbance, uniform on the ball of radius `bound`,
/// redrawn every `hold_s` seconds. Slots are generated in order so values
/// depend only on the seed, not on the query pattern.
class DisturbancePath {
 public:
  DisturbancePath(int dim, double bound, double hold_s, std::uint64_t seed);

  const Vec& at(double t);
  const Vec& slot(std::size_t index);
  double bound() const { return bound_; }
  double hold() const { return hold_s_; }

 private:
  int dim_;
  double bound_;
  double hold_s_;
  std::mt19937_64 rng_;
  std::vector<Vec> slots_;
};

/// Integrates one ZOH interval from `state.t` to `t_end` with u_held fixed.
/// Returns every dt-spaced point including the start; the last point is at
/// t_end (a shorter final step is taken when needed).
std::vector<PlantState> simulate_hold_interval(const PlantModel& model, const PlantState& state,
                                               DisturbancePath& disturbance, double t_end,
                                               double dt);

}  // namespace cps
