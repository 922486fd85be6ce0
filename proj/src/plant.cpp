#include "cps/plant.hpp"

#include <cmath>
#include <sstream>

#include "cps/errors.hpp"

namespace cps {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }

// Monic characteristic polynomial coefficients from roots, highest power first.
std::vector<double> poly_from_roots(std::span<const std::complex<double>> roots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& r : roots) {
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c[i].imag()) > 1e-9 * (1.0 + std::abs(c[i].real()))) {
      throw SchemaError("pole_place: desired eigenvalues are not closed under conjugation");
    }
    out[i] = c[i].real();
  }
  return out;
}

}  // namespace

void PlantModel::validate() const {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n) throw DimensionMismatch("plant: A must be square and non-empty");
  if (B.rows() != n || B.cols() == 0) throw DimensionMismatch("plant: B must be n x m");
  if (C.cols() != n || C.rows() > n) throw DimensionMismatch("plant: C must be q x n with q <= n");
  if (K.rows() != B.cols() || K.cols() != n) throw DimensionMismatch("plant: K must be m x n");
  if (x0.size() != n) throw DimensionMismatch("plant: x0 must have n entries");
  if (!(d_bound >= 0.0)) throw SchemaError("plant: d_bound must be >= 0");
  if (!(delta > 0.0) || !(delta_max >= delta)) {
    throw SchemaError("plant: require 0 < delta <= delta_max");
  }
  if (!is_hurwitz(closed_loop())) throw SchemaError("plant: A + B K is not Hurwitz");
}

Eigen::RowVectorXd pole_place(const Mat& A, const Mat& B,
                              std::span<const std::complex<double>> desired_eigs) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n) throw DimensionMismatch("pole_place: A/B shapes disagree");
  if (B.cols() != 1) throw UnsupportedShape("pole_place: only single-input systems are supported");
  if (static_cast<Eigen::Index>(desired_eigs.size()) != n) {
    throw DimensionMismatch("pole_place: need exactly n desired eigenvalues");
  }

  Mat ctrb(n, n);
  Vec col = B.col(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.col(i) = col;
    col = A * col;
  }
  Eigen::FullPivLU<Mat> lu(ctrb);
  if (lu.rank() < n) throw UncontrollablePair("pole_place: (A, B) is not controllable");

  // phi(A) = A^n + c1 A^(n-1) + ... + cn I
  const auto coeffs = poly_from_roots(desired_eigs);
  Mat phi = Mat::Zero(n, n);
  Mat power = Mat::Identity(n, n);
  for (Eigen::Index k = n; k >= 0; --k) {
    phi += coeffs[static_cast<std::size_t>(k)] * power;
    if (k > 0) power = power * A;
  }
  Eigen::RowVectorXd last = Eigen::RowVectorXd::Zero(n);
  last(n - 1) = 1.0;
  // Ackermann gives A - B K_std; this code base uses u = K x, hence the sign.
  Eigen::RowVectorXd k_std = last * lu.solve(phi);
  return -k_std;
}

Eigen::VectorXcd closed_loop_eigenvalues(const PlantModel& model) {
  return Eigen::EigenSolver<Mat>(model.closed_loop(), false).eigenvalues();
}

bool is_hurwitz(const Mat& M) {
  const Eigen::VectorXcd eig = Eigen::EigenSolver<Mat>(M, false).eigenvalues();
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (!(eig(i).real() < 0.0)) return false;
  }
  return true;
}

Vec integrate_step(const PlantModel& model, const Vec& x, const Vec& u, const Vec& d, double dt) {
  if (!(dt > 0.0)) throw SchemaError("integrate_step: dt must be positive");
  if (x.size() != model.A.rows() || d.size() != x.size() || u.size() != model.B.cols()) {
    throw DimensionMismatch("integrate_step: state/input/disturbance sizes disagree with model");
  }
  const Vec forcing = model.B * u + d;
  auto f = [&](const Vec& s) -> Vec { return model.A * s + forcing; };
  const Vec k1 = f(x);
  const Vec k2 = f(x + 0.5 * dt * k1);
  const Vec k3 = f(x + 0.5 * dt * k2);
  const Vec k4 = f(x + dt * k3);
  Vec out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(out)) throw NonFiniteState("integrate_step: state became non-finite");
  return out;
}

double error_norm(const Vec& x_now, const Vec& x_at_sample) {
  if (x_now.size() != x_at_sample.size()) throw DimensionMismatch("error_norm: size mismatch");
  return (x_now - x_at_sample).norm();
}

DisturbancePath::DisturbancePath(int dim, double bound, double hold_s, std::uint64_t seed)
    : dim_(dim), bound_(bound), hold_s_(hold_s), rng_(seed) {
  if (dim <= 0 || !(bound >= 0.0) || !(hold_s > 0.0)) {
    throw SchemaError("disturbance: need dim > 0, bound >= 0, hold > 0");
  }
}

const Vec& DisturbancePath::slot(std::size_t index) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  while (slots_.size() <= index) {
    Vec v(dim_);
    for (int i = 0; i < dim_; ++i) v(i) = normal(rng_);
    const double r = bound_ * std::pow(uniform(rng_), 1.0 / dim_);
    const double norm = v.norm();
    if (norm > 0.0 && bound_ > 0.0) {
      v *= r / norm;
    } else {
      v.setZero();
    }
    slots_.push_back(std::move(v));
  }
  return slots_[index];
}

const Vec& DisturbancePath::at(double t) {
  const double idx = std::floor(t / hold_s_ + 1e-9);
  return slot(idx < 0.0 ? 0 : static_cast<std::size_t>(idx));
}

std::vector<PlantState> simulate_hold_interval(const PlantModel& model, const PlantState& state,
                                               DisturbancePath& disturbance, double t_end,
                                               double dt) {
  if (!(t_end > state.t)) throw SchemaError("simulate_hold_interval: t_end must exceed start");
  if (!(dt > 0.0)) throw SchemaError("simulate_hold_interval: dt must be positive");
  std::vector<PlantState> out;
  out.push_back(state);
  PlantState cur = state;
  const double span = t_end - state.t;
  const auto full = static_cast<long long>(std::floor(span / dt * (1.0 + 1e-12)));
  for (long long k = 0; k < full; ++k) {
    cur.x = integrate_step(model, cur.x, cur.u_held, disturbance.at(cur.t), dt);
    cur.t = state.t + static_cast<double>(k + 1) * dt;
    out.push_back(cur);
  }
  const double rest = t_end - cur.t;
  if (rest > 1e-12 * std::max(1.0, std::abs(t_end))) {
    cur.x = integrate_step(model, cur.x, cur.u_held, disturbance.at(cur.t), rest);
    cur.t = t_end;
    out.push_back(cur);
  } else {
    out.back().t = t_end;
  }
  return out;
}

}  // namespace cps
