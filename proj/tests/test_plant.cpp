#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "cps/errors.hpp"
#include "cps/plant.hpp"
#include "oracles.hpp"

using namespace cps;

namespace {

using C = std::complex<double>;

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}
Mat col2(double a, double b) {
  Mat m(2, 1);
  m << a, b;
  return m;
}
Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

struct PaperPlant {
  Mat A, B;
  std::vector<C> eigs;
  double d_bound;
  Vec x0;
};

std::vector<PaperPlant> paper_plants() {
  return {
      {mat2(-0.1, 0.05, 0.2, 0.1), col2(0, 1), {C(-0.25), C(-0.18)}, 0.6, vec2(-20, 15)},
      {mat2(0.01, 0.2, 0.03, 0.0), col2(1, 1), {C(-0.15), C(-0.3)}, 1.2, vec2(-12, 12)},
      {mat2(0.2, 0.01, 0.3, -0.8), col2(1, 2), {C(-0.4), C(-0.6)}, 0.55, vec2(-5, 4)},
  };
}

PlantModel model_of(const PaperPlant& p) {
  PlantModel m;
  m.A = p.A;
  m.B = p.B;
  m.C = Mat::Identity(2, 2);
  m.K = pole_place(p.A, p.B, p.eigs);
  m.d_bound = p.d_bound;
  m.delta = 1.0;
  m.delta_max = 2.0;
  m.x0 = p.x0;
  return m;
}

PlantModel scalar(double a, double b = 0.0) {
  PlantModel m;
  m.A = Mat::Constant(1, 1, a);
  m.B = Mat::Constant(1, 1, b);
  m.C = Mat::Identity(1, 1);
  m.K = Mat::Zero(1, 1);
  m.x0 = Vec::Ones(1);
  return m;
}

}  // namespace

TEST(PolePlace, DoubleIntegrator) {
  const auto K = pole_place(mat2(0, 1, 0, 0), col2(0, 1), std::vector<C>{C(-1), C(-1)});
  EXPECT_NEAR(K(0), -1.0, 1e-12);
  EXPECT_NEAR(K(1), -2.0, 1e-12);
}

TEST(PolePlace, AlreadyPlacedGivesZeroGain) {
  const auto K = pole_place(mat2(0, 1, -1, -2), col2(0, 1), std::vector<C>{C(-1), C(-1)});
  EXPECT_NEAR(K.norm(), 0.0, 1e-12);
}

TEST(PolePlace, PaperPlantsMatchEigenSolve) {
  for (const auto& p : paper_plants()) {
    const Mat K = pole_place(p.A, p.B, p.eigs);
    const auto got = oracle::sorted_eigs(p.A + p.B * K);
    auto want = p.eigs;
    std::sort(want.begin(), want.end(), [](C a, C b) { return a.real() < b.real(); });
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_NEAR(std::abs(got[i] - want[i]), 0.0, 1e-8);
    }
  }
}

TEST(PolePlace, ComplexPair) {
  const std::vector<C> eigs{C(-1, 2), C(-1, -2)};
  const Mat K = pole_place(mat2(0, 1, 0, 0), col2(0, 1), eigs);
  const auto got = oracle::sorted_eigs(mat2(0, 1, 0, 0) + col2(0, 1) * K);
  EXPECT_NEAR(std::abs(got[0] - eigs[1]), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(got[1] - eigs[0]), 0.0, 1e-10);
}

TEST(PolePlace, Errors) {
  EXPECT_THROW(pole_place(mat2(1, 0, 0, 1), col2(1, 0), std::vector<C>{C(-1), C(-2)}), UncontrollablePair);
  EXPECT_THROW(pole_place(mat2(0, 1, 0, 0), Mat::Identity(2, 2), std::vector<C>{C(-1), C(-2)}),
               UnsupportedShape);
  EXPECT_THROW(pole_place(mat2(0, 1, 0, 0), col2(0, 1), std::vector<C>{C(-1, 1), C(-2)}), SchemaError);
}

TEST(Integrate, ZeroDynamicsKeepsState) {
  PlantModel m = scalar(0.0);
  m.A = Mat::Zero(2, 2);
  m.B = Mat::Zero(2, 1);
  const Vec x = vec2(3, -4);
  EXPECT_EQ(integrate_step(m, x, Vec::Zero(1), Vec::Zero(2), 0.1), x);
}

TEST(Integrate, PureIntegratorIsExact) {
  PlantModel m = scalar(0.0);
  m.A = Mat::Zero(2, 2);
  m.B = Mat::Identity(2, 2);
  const Vec c = vec2(0.5, -2);
  const Vec got = integrate_step(m, vec2(1, 1), c, Vec::Zero(2), 0.1);
  EXPECT_NEAR((got - (vec2(1, 1) + 0.1 * c)).norm(), 0.0, 1e-15);
}

TEST(Integrate, ScalarDecayAgainstExp) {
  const Vec got = integrate_step(scalar(-1.0), Vec::Ones(1), Vec::Zero(1), Vec::Zero(1), 0.1);
  EXPECT_NEAR(got(0), std::exp(-0.1), 1e-7);
  EXPECT_NEAR(got(0), 0.9048374, 1e-7);
}

TEST(Integrate, ScalarEndpointsAgainstClosedForm) {
  // x' = a x + b u over 1 s; closed form x0 e^{aT} + b u (e^{aT} - 1)/a.
  for (double a : {-2.0, -0.5, 0.3, 1.0}) {
    PlantModel m = scalar(a, 1.5);
    Vec x = Vec::Constant(1, 0.7);
    const Vec u = Vec::Constant(1, -0.4);
    for (int i = 0; i < 1000; ++i) x = integrate_step(m, x, u, Vec::Zero(1), 1e-3);
    const double want = 0.7 * std::exp(a) + 1.5 * -0.4 * (std::exp(a) - 1.0) / a;
    EXPECT_LT(std::abs(x(0) - want), 1e-7) << "a=" << a;
  }
}

TEST(Integrate, FourthOrderConvergence) {
  const auto p = paper_plants()[0];
  PlantModel m = model_of(p);
  const Vec u = m.K * p.x0;
  const Vec d = vec2(0.3, -0.2);
  const double T = 2.0;
  auto run = [&](int steps) {
    Vec x = p.x0;
    for (int i = 0; i < steps; ++i) x = integrate_step(m, x, u, d, T / steps);
    return x;
  };
  const Vec ref = oracle::rk4(m.A, m.B, u, d, p.x0, T, 20 * 100);
  const double e1 = (run(20) - ref).norm();
  const double e2 = (run(40) - ref).norm();
  EXPECT_GE(e1 / e2, 8.0);
}

TEST(Integrate, NonFinite) {
  EXPECT_THROW(integrate_step(scalar(1.0), Vec::Constant(1, INFINITY), Vec::Zero(1), Vec::Zero(1), 0.1),
               NonFiniteState);
}

TEST(HoldInterval, MatchesDenseOracle) {
  const auto p = paper_plants()[0];
  PlantModel m = model_of(p);
  m.d_bound = 0.0;
  PlantState s;
  s.t = 0.0;
  s.x = p.x0;
  s.u_held = m.K * p.x0;
  s.x_at_sample = p.x0;
  DisturbancePath dist(2, 0.0, 0.01, 1);
  const auto traj = simulate_hold_interval(m, s, dist, 1.0, 1e-3);
  ASSERT_EQ(traj.size(), 1001u);
  EXPECT_DOUBLE_EQ(traj.back().t, 1.0);
  const Vec ref = oracle::rk4(m.A, m.B, s.u_held, Vec::Zero(2), p.x0, 1.0, 100000);
  EXPECT_LT((traj.back().x - ref).norm(), 1e-6);
  for (const auto& pt : traj) EXPECT_EQ(pt.u_held, s.u_held);
}

TEST(HoldInterval, ShortIntervalIsOneStep) {
  PlantModel m = scalar(-1.0);
  PlantState s{0.0, Vec::Ones(1), Vec::Zero(1), Vec::Ones(1)};
  DisturbancePath dist(1, 0.0, 0.01, 1);
  const auto traj = simulate_hold_interval(m, s, dist, 0.0004, 1e-3);
  ASSERT_EQ(traj.size(), 2u);
  EXPECT_DOUBLE_EQ(traj[1].t, 0.0004);
}

TEST(HoldInterval, ZeroDynamicsConstant) {
  PlantModel m = scalar(0.0);
  PlantState s{0.0, Vec::Constant(1, 2.5), Vec::Zero(1), Vec::Constant(1, 2.5)};
  DisturbancePath dist(1, 0.0, 0.01, 1);
  for (const auto& pt : simulate_hold_interval(m, s, dist, 1.0, 1e-3)) EXPECT_EQ(pt.x(0), 2.5);
}

TEST(ErrorNorm, Examples) {
  EXPECT_EQ(error_norm(vec2(1, 2), vec2(1, 2)), 0.0);
  EXPECT_DOUBLE_EQ(error_norm(vec2(3, 4), vec2(0, 0)), 5.0);
  EXPECT_DOUBLE_EQ(error_norm(vec2(-20, 15), vec2(-19, 15)), 1.0);
  EXPECT_THROW(error_norm(vec2(1, 2), Vec::Zero(3)), DimensionMismatch);
}

TEST(Disturbance, BoundedAndSeeded) {
  DisturbancePath a(2, 0.6, 0.01, 42), b(2, 0.6, 0.01, 42), c(2, 0.6, 0.01, 43);
  // Query order must not matter.
  const Vec late = b.at(0.995);
  for (int i = 0; i < 200; ++i) {
    EXPECT_LE(a.slot(static_cast<std::size_t>(i)).norm(), 0.6 + 1e-15);
  }
  EXPECT_EQ(a.at(0.995), late);
  EXPECT_EQ(a.at(0.0123), a.slot(1));
  EXPECT_NE(a.slot(0), c.slot(0));
  DisturbancePath zero(2, 0.0, 0.01, 1);
  EXPECT_EQ(zero.at(3.0).norm(), 0.0);
}

TEST(PlantModel, Validation) {
  PlantModel m = model_of(paper_plants()[0]);
  EXPECT_NO_THROW(m.validate());
  PlantModel bad = m;
  bad.K = Mat::Zero(1, 2);  // open loop of plant 1 is unstable
  EXPECT_THROW(bad.validate(), SchemaError);
  bad = m;
  bad.delta_max = 0.5;
  EXPECT_THROW(bad.validate(), SchemaError);
  bad = m;
  bad.x0 = Vec::Zero(3);
  EXPECT_THROW(bad.validate(), DimensionMismatch);
}

TEST(PlantModel, BoundedUnderDisturbance) {
  for (const auto& p : paper_plants()) {
    PlantModel m = model_of(p);
    DisturbancePath dist(2, p.d_bound, 0.01, 5);
    Vec x = p.x0;
    double sup_late = 0.0;
    for (int i = 0; i < 50000; ++i) {
      const double t = i * 1e-3;
      x = integrate_step(m, x, m.K * x, dist.at(t), 1e-3);
      if (t > 25.0) sup_late = std::max(sup_late, x.norm());
    }
    EXPECT_LT(sup_late, 10.0 * p.x0.norm());
  }
}
