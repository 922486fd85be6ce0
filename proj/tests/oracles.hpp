#pragma once
// Reference computations used only by tests. None of these call into the
// library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Largest singular value from the eigenvalues of M^T M.
inline double spectral_norm(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(M.transpose() * M);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Plain RK4 loop with many sub-steps.
inline Vec rk4(const Mat& A, const Mat& B, const Vec& u, const Vec& d, Vec x, double T, int steps) {
  const double h = T / steps;
  auto f = [&](const Vec& s) -> Vec { return A * s + B * u + d; };
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * h * k1);
    const Vec k3 = f(x + 0.5 * h * k2);
    const Vec k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

// Power needed on one subcarrier for `rate` bit/s.
inline double single_link_power(double rate, double gain, double w, double n0) {
  return (std::exp2(rate / w) - 1.0) * n0 / gain;
}

// Minimum-power spreading by bisection on the linear water level (no
// closed-form refinement, no active-set logic).
inline std::vector<double> waterfill(const std::vector<double>& gains, double rate, double w, double n0) {
  auto rate_at = [&](double mu) {
    double r = 0.0;
    for (double g : gains) {
      const double p = std::max(0.0, mu - n0 / g);
      r += w * std::log2(1.0 + p * g / n0);
    }
    return r;
  };
  double lo = 0.0, hi = 1.0;
  while (rate_at(hi) < rate) hi *= 2.0;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    (rate_at(mid) >= rate ? hi : lo) = mid;
  }
  std::vector<double> p;
  for (double g : gains) p.push_back(std::max(0.0, hi - n0 / g));
  return p;
}

inline double grouped_upsilon(const Mat& A, const Mat& B, const Mat& K, const Vec& x_km1, const Vec& x_k,
                              const Vec& d_k, double delta_total) {
  const double na = spectral_norm(A);
  const double first = (A * x_k + B * K * x_km1).norm() + d_k.norm();
  return first * (std::exp(na * delta_total) - 1.0) + ((A + B * K) * x_k).norm() + d_k.norm();
}

inline double literal_upsilon(const Mat& A, const Mat& B, const Mat& K, const Vec& x_km1, const Vec& x_k,
                              const Vec& d_k, double delta_total) {
  const double na = spectral_norm(A);
  return (A * x_k - B * K * x_km1).norm() + d_k.norm() * (std::exp(na * delta_total) - 1.0) * ((A + B * K) * x_k).norm() +
         d_k.norm();
}

inline double phi(const Mat& A, const Mat& B, const Mat& K, double delta, const Vec& x_k, const Vec& d_k) {
  return spectral_norm(A) * delta + ((A + B * K) * x_k).norm() + d_k.norm();
}

// Sorted eigenvalues (by real part, then imaginary part).
inline std::vector<std::complex<double>> sorted_eigs(const Mat& M) {
  Eigen::EigenSolver<Mat> es(M);
  std::vector<std::complex<double>> v;
  for (Eigen::Index i = 0; i < M.rows(); ++i) v.push_back(es.eigenvalues()(i));
  std::sort(v.begin(), v.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return v;
}

}  // namespace oracle
