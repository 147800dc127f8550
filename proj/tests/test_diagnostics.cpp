#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "rlk/collision.hpp"
#include "rlk/diagnostics.hpp"
#include "rlk/error.hpp"
#include "rlk/linearized.hpp"

namespace {

using rlk::FluidState;
using rlk::MomentumGrid;
using rlk::WeightSpec;

TEST(Weights, RateMatchesFiniteDifferenceSecondOrder) {
  WeightSpec s{3, 0.6};
  for (double t : {0.0, 1.0, 10.0}) {
    double prev = 0.0;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
      // t = 0 sits on the boundary of t >= 0 but W is smooth through it
      double dW = (rlk::weight_W(s, t + h) - rlk::weight_W(s, t - h)) / (2 * h);
      double err = std::abs(-dW / rlk::weight_W(s, t) - rlk::weight_Y(s, t));
      if (prev > 0.0) {
        EXPECT_NEAR(prev / err, 4.0, 0.2) << "t=" << t;
      }
      prev = err;
    }
  }
}

TEST(Weights, StrictlyDecreasingInTime) {
  WeightSpec s{3, 0.5};
  for (int l = 0; l <= 2; ++l)
    for (double p0 : {1.0, 2.0, 7.0}) {
      double last = rlk::weight(s, l, 0.0, p0);
      for (double t = 0.5; t < 100; t *= 1.7) {
        double w = rlk::weight(s, l, t, p0);
        EXPECT_LT(w, last);
        EXPECT_GT(w, 0.0);
        last = w;
      }
    }
}

TEST(Weights, LevelsDifferByPowersOfEnergy) {
  WeightSpec s{4, 0.8};
  double p0 = 3.0;
  EXPECT_NEAR(rlk::weight(s, 0, 1.0, p0) / rlk::weight(s, 1, 1.0, p0), p0 * p0, 1e-12);
  EXPECT_NEAR(rlk::weight(s, 1, 1.0, p0) / rlk::weight(s, 2, 1.0, p0), p0 * p0, 1e-12);
  EXPECT_THROW(rlk::weight(s, 3, 0.0, p0), rlk::DomainError);
  EXPECT_THROW((WeightSpec{2, 1.0}.validate()), rlk::ConfigError);
  EXPECT_THROW((WeightSpec{3, 0.0}.validate()), rlk::ConfigError);
}

TEST(Weights, DecayEnvelopeHoldsNodewise) {
  MomentumGrid g(14, 7.0);
  for (const FluidState& st : {FluidState{1.0, {0, 0, 0}, 0.5}, FluidState{1.0, {0.15, -0.05, 0}, 0.4}}) {
    WeightSpec s = rlk::default_weights(st.T);
    std::vector<double> M(g.size());
    rlk::juttner_into(st, g, M);
    for (int l = 0; l <= 2; ++l)
      for (double t : {0.0, 5.0}) {
        auto fit = rlk::fit_weight_decay(s, l, t, st, g);
        EXPECT_GT(fit.c0, 0.0);
        EXPECT_GT(fit.C, 0.0);
        for (std::size_t a = 0; a < g.size(); ++a) {
          double w = rlk::weight(s, l, t, g.p0(a));
          ASSERT_LE(w * w * std::sqrt(M[a]), fit.C * std::exp(-fit.c0 * g.p0(a)) * (1 + 1e-14));
        }
      }
  }
}

TEST(Weights, FastDriftReportsNoDecay) {
  // the lab-frame tail rate (u0 - |u|)/(2T) falls below the weight growth 2/(5 Tc)
  MomentumGrid g(8, 5.0);
  FluidState st{1.0, {0.6, 0, 0}, 0.4};
  auto fit = rlk::fit_weight_decay(rlk::default_weights(st.T), 0, 0.0, st, g);
  EXPECT_EQ(fit.c0, 0.0);
  EXPECT_GT(fit.C, 0.0);
}

TEST(Gate, LhsIsHalfTheRate) {
  WeightSpec s{3, 0.7};
  for (double t : {0.0, 0.3, 2.0, 40.0}) EXPECT_NEAR(rlk::admissibility_lhs(s, t), 0.5 * rlk::weight_Y(s, t), 1e-15);
}

TEST(Gate, BisectionFindsLargestAdmissibleTime) {
  WeightSpec s{3, 0.5};
  double Z = 0.5 * rlk::admissibility_lhs(s, 0.0);
  double t0 = rlk::max_admissible_t0(s, Z);
  ASSERT_GT(t0, 0.0);
  EXPECT_NEAR(rlk::admissibility_lhs(s, t0), Z, 1e-10 * Z);
  EXPECT_LT(rlk::max_admissible_t0(s, 2.0 * rlk::admissibility_lhs(s, 0.0)), 0.0);

  auto ok = rlk::admissibility_gate(s, Z, 0.5 * t0);
  EXPECT_TRUE(ok.holds);
  EXPECT_TRUE(ok.z_below_half_y);
  auto bad = rlk::admissibility_gate(s, Z, 2.0 * t0);
  EXPECT_FALSE(bad.holds);
  EXPECT_FALSE(bad.z_below_half_y);
}

struct Setting {
  MomentumGrid grid{8, 4.5};
  rlk::CollisionOperator op{grid};
  std::size_t nx = 16;
  double dx = 1.0 / 16;
  std::vector<FluidState> bg;
  Setting() {
    for (std::size_t x = 0; x < nx; ++x)
      bg.push_back(FluidState{1.0 + 0.01 * std::sin(2 * std::numbers::pi * (x + 0.5) * dx), {0.02, 0, 0}, 0.5});
  }
};

TEST(Energy, ZeroRemainderGivesZeroReport) {
  Setting S;
  rlk::EnergyEvaluator ev(S.op, rlk::default_weights(0.5), S.dx);
  rlk::DistributionField f(S.nx, S.grid.size());
  auto r = ev.evaluate(0.3, 0.1, f, S.bg);
  EXPECT_EQ(r.E_total(), 0.0);
  EXPECT_EQ(r.D_total(), 0.0);
}

TEST(Energy, MacroscopicRemainderHasNoMicroscopicParts) {
  Setting S;
  rlk::EnergyEvaluator ev(S.op, rlk::default_weights(0.5), S.dx);
  rlk::DistributionField f(S.nx, S.grid.size());
  for (std::size_t x = 0; x < S.nx; ++x) {
    rlk::LinearizedOperator L(S.op, S.bg[x]);
    double s = std::sin(2 * std::numbers::pi * (x + 0.5) * S.dx);
    auto c = f.cell(x);
    for (int k = 0; k < 5; ++k)
      for (std::size_t a = 0; a < c.size(); ++a) c[a] += (0.3 + 0.1 * k) * s * L.basis().vector(k)[a];
  }
  auto r = ev.evaluate(0.0, 0.1, f, S.bg);
  EXPECT_GT(r.E[0], 0.0);
  EXPECT_GT(r.D[3], 0.0);
  EXPECT_GT(r.D[7], 0.0);
  // weights reach ~1e4 at the corner, so compare against the weighted scale of f
  double ref = r.E[0] * 1e8;
  for (std::size_t i : {1, 3}) EXPECT_LE(r.E[i], 1e-24 * ref) << rlk::EnergyReport::e_names()[i];
  for (std::size_t i : {0, 1, 2}) EXPECT_LE(r.D[i], 1e-24 * ref / 0.1) << rlk::EnergyReport::d_names()[i];
  // x-differences of the micro part pick up only the cell-to-cell change of P
  for (double v : r.E) EXPECT_GE(v, 0.0);
  for (double v : r.D) EXPECT_GE(v, 0.0);
}

TEST(Energy, UnweightedTermsMatchDirectSums) {
  Setting S;
  rlk::EnergyEvaluator ev(S.op, rlk::default_weights(0.5), S.dx);
  rlk::DistributionField f(S.nx, S.grid.size());
  auto g = rlk::random_smooth_field(S.grid, S.bg[0], 4);
  const double k = 2 * std::numbers::pi;
  for (std::size_t x = 0; x < S.nx; ++x) {
    double s = std::sin(k * (x + 0.5) * S.dx);
    for (std::size_t a = 0; a < g.size(); ++a) f.cell(x)[a] = s * g[a];
  }
  double eps = 0.2;
  auto r = ev.evaluate(1.0, eps, f, S.bg);
  double gg = rlk::l2_inner(S.grid, g, g);
  // sum over cells of sin^2 dx is exactly 1/2 for this lattice
  EXPECT_NEAR(r.E[0], 0.5 * gg, 1e-12 * gg);
  // centered difference symbols sin(k dx)/dx and 4 sin^2(k dx/2)/dx^2
  double s1 = std::sin(k * S.dx) / S.dx, s2 = 4 * std::pow(std::sin(0.5 * k * S.dx), 2) / (S.dx * S.dx);
  EXPECT_NEAR(r.E[2], eps * 0.5 * s1 * s1 * gg, 1e-10 * eps * s1 * s1 * gg);
  EXPECT_NEAR(r.E[4], eps * eps * 0.5 * s2 * s2 * gg, 1e-10 * eps * eps * s2 * s2 * gg);
  for (double v : r.D) EXPECT_GT(v, 0.0);
}

TEST(Energy, BoundAndCsvRoundtrip) {
  std::vector<rlk::EnergyReport> series;
  for (int i = 0; i < 5; ++i) {
    rlk::EnergyReport r;
    r.t = 0.25 * i;
    r.E[0] = 1.0 / (1 + i);
    r.D[0] = 2.0;
    series.push_back(r);
  }
  auto b = rlk::energy_bound(series, 0.5, 3);
  EXPECT_DOUBLE_EQ(b.sup_E, 1.0);
  EXPECT_DOUBLE_EQ(b.int_D, 2.0);
  EXPECT_DOUBLE_EQ(b.rhs, 1.0 + std::pow(0.5, 9));
  EXPECT_DOUBLE_EQ(b.C, 3.0 / b.rhs);
  EXPECT_THROW(rlk::energy_bound({}, 0.5, 3), rlk::Error);

  auto path = (std::filesystem::temp_directory_path() / "rlk_energy_roundtrip.csv").string();
  rlk::write_energy_csv(path, series);
  auto back = rlk::read_energy_csv(path);
  ASSERT_EQ(back.size(), series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    EXPECT_EQ(back[i].t, series[i].t);
    EXPECT_EQ(back[i].E, series[i].E);
    EXPECT_EQ(back[i].D, series[i].D);
  }
  std::filesystem::remove(path);
}

}  // namespace
