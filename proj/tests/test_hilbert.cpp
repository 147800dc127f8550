#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rlk/error.hpp"
#include "rlk/hilbert.hpp"

namespace {

using rlk::BackgroundSlice;
using rlk::Coeff5;
using rlk::FluidState;

struct Bench {
  rlk::MomentumGrid grid{8, 4.5};
  rlk::CollisionOperator op{grid};
  rlk::EulerSolver fluid{16, 1.0, rlk::FluidClosure(grid)};
  std::vector<FluidState> wave(double amp, double u = 0.05) const {
    std::vector<FluidState> bg(fluid.nx());
    for (std::size_t i = 0; i < bg.size(); ++i) {
      double s = amp * std::sin(2 * std::numbers::pi * fluid.x(i));
      bg[i] = FluidState{1.0 + s, {u + 0.5 * s, 0.2 * s, 0.0}, 0.5 * (1.0 + 0.7 * s)};
    }
    return bg;
  }
};

TEST(Forcing, UniformBackgroundNeedsNoCorrection) {
  Bench S;
  BackgroundSlice s{FluidState{1.0, {0.1, 0, 0}, 0.5}, {}, {}};
  rlk::LinearizedOperator L(S.op, s.state);
  auto sol = rlk::build_F1_micro(L, s);
  for (double v : sol.g) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(sol.iterations, 0);
}

TEST(Forcing, GridClosureDerivativesAreSolvable) {
  Bench S;
  auto slices = rlk::background_slices(S.fluid, S.wave(0.05));
  for (std::size_t i : {0, 3, 9}) {
    rlk::LinearizedOperator L(S.op, slices[i].state);
    auto sol = rlk::build_F1_micro(L, slices[i]);
    EXPECT_LT(sol.orth_ratio, 1e-11);
    EXPECT_LT(sol.residual, 2e-9);
    EXPECT_LT(rlk::balance_residual(L, slices[i], sol.g), 1e-7);
    // g lies in the micro subspace
    auto inner = L.basis().inner(sol.g);
    double gn = rlk::l2_norm(S.grid, sol.g);
    EXPECT_LT(inner.norm(), 1e-12 * gn);
  }
}

TEST(Forcing, CorruptedTimeDerivativeIsNotOrthogonal) {
  Bench S;
  auto slices = rlk::background_slices(S.fluid, S.wave(0.05));
  BackgroundSlice s = slices[4];
  for (double& v : s.dt_prim) v *= 1.01;
  rlk::LinearizedOperator L(S.op, s.state);
  EXPECT_THROW(rlk::build_F1_micro(L, s), rlk::NotOrthogonal);
  try {
    rlk::build_F1_micro(L, s);
  } catch (const rlk::NotOrthogonal& e) {
    EXPECT_GT(e.ratio, 1e-6);
  }
}

TEST(Forcing, CgRespectsIterationCap) {
  Bench S;
  auto slices = rlk::background_slices(S.fluid, S.wave(0.05));
  rlk::LinearizedOperator L(S.op, slices[2].state);
  rlk::CgOptions o;
  o.max_iter = 2;
  EXPECT_THROW(rlk::build_F1_micro(L, slices[2], o), rlk::NonConvergence);
}

TEST(Forcing, CorrectionDecaysFasterThanAnyPowerOfTheTail) {
  Bench S;
  auto slices = rlk::background_slices(S.fluid, S.wave(0.05));
  rlk::LinearizedOperator L(S.op, slices[1].state);
  auto sol = rlk::build_F1_micro(L, slices[1]);
  double C = rlk::fit_F1_decay(L, sol.g);
  EXPECT_GT(C, 0.0);
  EXPECT_TRUE(std::isfinite(C));
  for (std::size_t a = 0; a < sol.g.size(); ++a)
    EXPECT_LE(std::abs(L.sqrtM()[a] * sol.g[a]), C * std::pow(L.M()[a], 0.95) * (1 + 1e-12));
}

TEST(Transport, MatrixIsLinearInGradients) {
  Bench S;
  FluidState st{1.0, {0.05, 0, 0}, 0.5};
  rlk::LinearizedOperator L(S.op, st);
  auto K = rlk::transport_matrix(L, S.fluid.closure());
  BackgroundSlice s{st, {0.3, -0.2, 0.1, 0.0, 0.4}, {}};
  s.dt_prim = S.fluid.closure().time_derivative(st, s.dx_prim);
  auto sol = rlk::build_F1_micro(L, s);
  Coeff5 d;
  for (int k = 0; k < 5; ++k) d(k) = s.dx_prim[k];
  Coeff5 direct = Coeff5::Zero();
  const auto& g = S.grid;
  for (std::size_t a = 0; a < g.size(); ++a) {
    const auto& p = g.p(a);
    double psi[5] = {1.0, p[0], p[1], p[2], g.p0(a)};
    for (int k = 0; k < 5; ++k) direct(k) += psi[k] * g.phat(a)[0] * L.sqrtM()[a] * sol.g[a] * g.weight();
  }
  EXPECT_LT((K * d - direct).norm(), 1e-7 * direct.norm());
  EXPECT_GT(K.norm(), 0.0);
}

TEST(Macro, ZeroStaysZeroOnUniformBackground) {
  Bench S;
  rlk::MacroEvolver ev(S.op, S.fluid, S.wave(0.0));
  std::vector<Coeff5> c(S.fluid.nx(), Coeff5::Zero());
  auto traj = rlk::evolve_F1_macro(ev, c, ev.max_dt(), 20, 5);
  ASSERT_EQ(traj.size(), 5u);
  for (const auto& snap : traj) EXPECT_EQ(ev.l2(snap), 0.0);
}

TEST(Macro, ForcedByBackgroundGradients) {
  Bench S;
  rlk::MacroEvolver ev(S.op, S.fluid, S.wave(0.05));
  std::vector<Coeff5> c(S.fluid.nx(), Coeff5::Zero());
  auto traj = rlk::evolve_F1_macro(ev, c, ev.max_dt(), 10, 1);
  // the micro flux divergence drives the coefficients linearly from zero at first
  double a1 = ev.l2(traj[1]), a2 = ev.l2(traj[2]);
  EXPECT_GT(a1, 0.0);
  EXPECT_NEAR(a2 / a1, 2.0, 0.15);
}

TEST(Macro, ConservesTotals) {
  Bench S;
  auto bg = S.wave(0.05);
  rlk::MacroEvolver ev(S.op, S.fluid, bg);
  std::vector<Coeff5> c(S.fluid.nx());
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] << std::cos(2 * std::numbers::pi * S.fluid.x(i)), 0.1, 0.0, 0.0, 0.2 * std::sin(2 * std::numbers::pi * S.fluid.x(i));
  auto total = [&](const std::vector<Coeff5>& v) {
    // sum of J0 c, with J0 rebuilt from the background
    Coeff5 s = Coeff5::Zero();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& g = S.grid;
      std::vector<double> M(g.size());
      rlk::juttner_into(bg[i], g, M);
      for (std::size_t a = 0; a < g.size(); ++a) {
        const auto& p = g.p(a);
        double psi[5] = {1.0, p[0], p[1], p[2], g.p0(a)};
        double phi = v[i].dot(Coeff5(psi[0], psi[1], psi[2], psi[3], psi[4]));
        for (int k = 0; k < 5; ++k) s(k) += psi[k] * phi * M[a] * g.weight();
      }
    }
    return s;
  };
  Coeff5 before = total(c);
  auto traj = rlk::evolve_F1_macro(ev, c, ev.max_dt(), 25, 25);
  Coeff5 after = total(traj.back());
  EXPECT_LT((after - before).norm(), 1e-12 * before.norm());
}

TEST(Macro, RungeKuttaIsFourthOrderInTime) {
  Bench S;
  rlk::MacroEvolver ev(S.op, S.fluid, S.wave(0.05));
  std::vector<Coeff5> c(S.fluid.nx());
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] << std::sin(2 * std::numbers::pi * S.fluid.x(i)), 0.0, 0.0, 0.0, 0.0;
  const double t = 8 * ev.max_dt();
  auto run = [&](long n) { return rlk::evolve_F1_macro(ev, c, t / n, n, n).back(); };
  auto a = run(8), b = run(16), r = run(64);
  auto diff = [&](const std::vector<Coeff5>& x) {
    std::vector<Coeff5> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - r[i];
    return ev.l2(d);
  };
  double ratio = diff(a) / diff(b);
  EXPECT_NEAR(ratio, 16.0, 2.0);
  EXPECT_THROW(ev.step(c, 1.01 * ev.max_dt()), rlk::CflViolation);
}

TEST(Limit, PhiIsBoundedAndBackgroundAdmissible) {
  rlk::LimitOptions o;
  rlk::MomentumGrid g(8, 4.5);
  rlk::EulerSolver fluid(o.nx, o.length, rlk::FluidClosure(g));
  auto bg = rlk::limit_background(o, fluid);
  for (const auto& s : bg) EXPECT_NO_THROW(s.validate());
  for (std::size_t a = 0; a < g.size(); a += 7)
    for (double x : {0.0, 0.3, 0.77}) EXPECT_LE(std::abs(rlk::limit_phi(o, x, g.p(a), 0.5)), o.phi_amplitude);
  o.zero_phi = true;
  EXPECT_EQ(rlk::limit_phi(o, 0.3, g.p(3), 0.5), 0.0);
}

TEST(Limit, SmallStudyDecreasesWithEps) {
  rlk::MomentumGrid g(6, 4.0);
  rlk::CollisionOperator op(g);
  rlk::LimitOptions o;
  o.nx = 8;
  o.t_end = 0.1;
  o.report_every = 2;
  auto st = rlk::limit_study(op, {0.2, 0.1}, o);
  ASSERT_EQ(st.cases.size(), 2u);
  EXPECT_TRUE(st.gate.holds);
  EXPECT_TRUE(st.strictly_decreasing);
  EXPECT_GT(st.order, 0.8);
  for (const auto& c : st.cases) {
    EXPECT_GT(c.bound.C, 0.0);
    EXPECT_FALSE(c.energy.empty());
    EXPECT_EQ(c.monitors.size(), static_cast<std::size_t>(c.steps));
  }
  EXPECT_THROW(rlk::limit_study(op, {}, o), rlk::ConfigError);
  EXPECT_THROW(rlk::limit_study(op, {-0.1}, o), rlk::ConfigError);
}

}  // namespace
