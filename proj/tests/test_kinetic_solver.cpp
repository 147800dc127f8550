#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "rlk/collision.hpp"
#include "rlk/csv.hpp"
#include "rlk/equilibrium.hpp"
#include "rlk/error.hpp"
#include "rlk/kinetic_solver.hpp"

namespace {

using rlk::CollisionOperator;
using rlk::DistributionField;
using rlk::FluidState;
using rlk::KineticSolver1D;
using rlk::MomentumGrid;

std::vector<double> bimaxwellian(const MomentumGrid& g, double T, double u) {
  std::vector<double> a(g.size()), b(g.size());
  rlk::juttner_into(FluidState{0.5, {u, 0, 0}, T}, g, a);
  rlk::juttner_into(FluidState{0.5, {-u, 0.5 * u, 0}, T}, g, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

double rel_l2(const MomentumGrid& g, std::span<const double> f, std::span<const double> ref) {
  double n = 0, d = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    n += (f[i] - ref[i]) * (f[i] - ref[i]);
    d += ref[i] * ref[i];
  }
  (void)g;
  return std::sqrt(n / d);
}

TEST(Relax, JuttnerIsStationary) {
  MomentumGrid g(8, 4.5);
  CollisionOperator op(g);
  auto M = rlk::juttner(FluidState{1.0, {0.1, 0, 0.05}, 0.5}, g);
  rlk::RelaxOptions o;
  o.dt = 0.1;
  o.steps = 20;
  auto r = rlk::relax_homogeneous(op, M.values, 1.0, o);
  EXPECT_LE(rel_l2(g, r.f, M.values), 1e-12);
}

TEST(Relax, BiMaxwellianReachesMomentMatchedJuttner) {
  MomentumGrid g(10, 5.0);
  CollisionOperator op(g);
  auto f0 = bimaxwellian(g, 0.4, 0.2);
  auto m0 = rlk::moments(f0, g);
  auto eq = rlk::juttner(rlk::fit_maxwellian_discrete(m0, g), g);
  rlk::RelaxOptions o;
  o.dt = 0.25;
  o.steps = 140;
  auto r = rlk::relax_homogeneous(op, f0, 1.0, o);
  double err = rel_l2(g, r.f, eq.values);
  std::printf("distance to equilibrium %.3e, substeps %d\n", err, r.max_substeps);
  EXPECT_LE(err, 1e-3);
  auto m1 = rlk::moments(r.f, g);
  EXPECT_LE(std::abs(m1.m0 - m0.m0), 1e-13 * m0.m0);
  EXPECT_LE(std::abs(m1.m2 - m0.m2), 1e-13 * m0.m2);
  for (int d = 0; d < 3; ++d) EXPECT_LE(std::abs(m1.m1[d] - m0.m1[d]), 1e-13 * m0.m2);
  EXPECT_EQ(r.entropy_increases, 0);
  for (const auto& row : r.log) EXPECT_GE(row.min_f, -1e-12 * row.max_f);
  for (std::size_t i = 1; i < r.log.size(); ++i) EXPECT_LE(r.log[i].mass, r.log[0].mass * (1 + 1e-13));
}

// late-time e-folding rate of |f - M_eq|
double decay_rate(const CollisionOperator& op, std::span<const double> f0, std::span<const double> eq, double eps,
                  double t_end) {
  rlk::RelaxOptions o;
  o.dt = 0.05 * eps;
  o.steps = static_cast<long>(std::lround(t_end / o.dt));
  std::vector<double> dist;
  o.snapshot_every = 1;
  o.on_snapshot = [&](long, double, std::span<const double> f) { dist.push_back(rel_l2(op.grid(), f, eq)); };
  rlk::relax_homogeneous(op, f0, eps, o);
  std::size_t a = dist.size() / 2, b = dist.size() - 1;
  return std::log(dist[a] / dist[b]) / ((b - a) * o.dt);
}

TEST(Relax, RelaxationTimeScalesWithEps) {
  MomentumGrid g(8, 4.5);
  CollisionOperator op(g);
  auto f0 = bimaxwellian(g, 0.5, 0.15);
  auto eq = rlk::juttner(rlk::fit_maxwellian_discrete(rlk::moments(f0, g), g), g);
  double r1 = decay_rate(op, f0, eq.values, 1.0, 6.0);
  double r2 = decay_rate(op, f0, eq.values, 0.5, 3.0);
  std::printf("decay rates %.4f %.4f ratio %.4f\n", r1, r2, r2 / r1);
  EXPECT_NEAR(r2 / r1, 2.0, 0.2);
}

TEST(Relax, RejectsBadInput) {
  MomentumGrid g(6, 4.0);
  CollisionOperator op(g);
  auto f = rlk::juttner(FluidState{1.0, {0, 0, 0}, 0.5}, g).values;
  rlk::RelaxOptions o;
  o.substep = false;
  o.dt = 10.0;
  EXPECT_THROW(rlk::relax_homogeneous(op, f, 1.0, o), rlk::CflViolation);
  auto bad = f;
  bad[3] = -1e-3;
  EXPECT_THROW(rlk::relax_homogeneous(op, bad, 1.0, rlk::RelaxOptions{}), rlk::DomainError);
  bad[3] = std::nan("");
  EXPECT_THROW(rlk::check_field(bad, 1e-12, 7), rlk::MonitorFailure);
  try {
    rlk::check_field(bad, 1e-12, 7);
  } catch (const rlk::MonitorFailure& e) {
    EXPECT_EQ(e.step, 7);
  }
}

TEST(Relax, WritesMonitorLog) {
  MomentumGrid g(6, 4.0);
  CollisionOperator op(g);
  auto path = (std::filesystem::temp_directory_path() / "rlk_relax_log.csv").string();
  rlk::RelaxOptions o;
  o.steps = 4;
  o.log_path = path;
  rlk::relax_homogeneous(op, bimaxwellian(g, 0.5, 0.2), 1.0, o);
  auto t = rlk::read_csv(path);
  EXPECT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(t.rows[4][t.column("step")], 4.0);
  EXPECT_LT(t.rows[4][t.column("entropy")], t.rows[0][t.column("entropy")]);
  std::filesystem::remove(path);
}

DistributionField wave_field(const KineticSolver1D& s, const MomentumGrid& g, double amp) {
  DistributionField F(s.nx(), g.size());
  for (std::size_t i = 0; i < s.nx(); ++i) {
    double x = s.x(i), k = 2 * std::numbers::pi / s.length();
    FluidState st{1.0 + amp * std::sin(k * x), {0.05 + amp * std::cos(k * x), 0, 0}, 0.5 + 0.5 * amp * std::sin(k * x)};
    rlk::juttner_into(st, g, F.cell(i));
  }
  return F;
}

TEST(Rlan, GlobalJuttnerIsInvariant) {
  MomentumGrid g(6, 4.0);
  CollisionOperator op(g);
  KineticSolver1D s(op, 8, 1.0);
  auto F = rlk::juttner(std::vector<FluidState>(8, FluidState{1.0, {0.1, 0, 0}, 0.5}), g);
  auto F0 = F;
  for (int k = 0; k < 5; ++k) s.step_rlan(F, s.max_dt());
  EXPECT_LE(rel_l2(g, F.values, F0.values), 1e-13);
}

TEST(Rlan, TotalsConserved) {
  MomentumGrid g(6, 4.0);
  CollisionOperator op(g);
  KineticSolver1D s(op, 8, 1.0, {0.2});
  auto F = wave_field(s, g, 0.1);
  auto a = s.monitor(F, 0, 0.0);
  for (int k = 0; k < 20; ++k) s.step_rlan(F, s.max_dt());
  auto b = s.monitor(F, 20, 20 * s.max_dt());
  EXPECT_LE(std::abs(b.mass - a.mass), 1e-13 * a.mass);
  EXPECT_LE(std::abs(b.energy - a.energy), 1e-12 * a.energy);
  for (int d = 0; d < 3; ++d) EXPECT_LE(std::abs(b.momentum[d] - a.momentum[d]), 1e-12 * a.energy);
  EXPECT_LT(b.entropy, a.entropy);
  EXPECT_GE(b.min_f, -1e-12 * b.max_f);
}

double advection_error(std::size_t nx, rlk::Limiter lim) {
  MomentumGrid g(4, 3.0);
  CollisionOperator op(g);
  rlk::KineticOptions o;
  o.collisions = false;
  o.limiter = lim;
  KineticSolver1D s(op, nx, 1.0, o);
  const double k = 2 * std::numbers::pi;
  DistributionField F(nx, g.size());
  auto prof = [&](double x, std::size_t a) { return 1.0 + 0.5 * std::sin(k * x) + 0.1 * g.p0(a); };
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t a = 0; a < g.size(); ++a) F.cell(i)[a] = prof(s.x(i), a);
  const double t_end = 0.5;
  int steps = static_cast<int>(std::ceil(t_end / s.max_dt()));
  double dt = t_end / steps;
  for (int n = 0; n < steps; ++n) s.step_rlan(F, dt);
  double e = 0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t a = 0; a < g.size(); ++a) e += std::abs(F.cell(i)[a] - prof(s.x(i) - g.phat(a)[0] * t_end, a));
  return e / (nx * g.size());
}

TEST(Transport, SecondOrderWithMinmod) {
  double e1 = advection_error(64, rlk::Limiter::Minmod), e2 = advection_error(128, rlk::Limiter::Minmod),
         e3 = advection_error(256, rlk::Limiter::Minmod);
  double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
  std::printf("advection errors %.3e %.3e %.3e orders %.3f %.3f\n", e1, e2, e3, o1, o2);
  EXPECT_GE(o2, 1.8);
}

TEST(Transport, CflAndPositivity) {
  MomentumGrid g(4, 3.0);
  CollisionOperator op(g);
  rlk::KineticOptions o;
  o.collisions = false;
  KineticSolver1D s(op, 16, 1.0, o);
  DistributionField F(16, g.size());
  for (std::size_t a = 0; a < g.size(); ++a) F.cell(3)[a] = 1.0;  // a square pulse
  EXPECT_THROW(s.step_rlan(F, 1.01 * s.max_dt()), rlk::CflViolation);
  for (int n = 0; n < 100; ++n) s.step_rlan(F, s.max_dt());
  EXPECT_GE(F.min(), 0.0);
}

struct Plasma {
  MomentumGrid g{6, 4.0};
  CollisionOperator op{g};
  KineticSolver1D s;
  DistributionField F;
  std::vector<double> E;
  double nbar = 0.0;
  static rlk::KineticOptions options(bool coll) {
    rlk::KineticOptions o;
    o.collisions = coll;
    o.lattice_velocity = true;
    return o;
  }
  Plasma(bool coll, double amp) : s(op, 16, 1.0, options(coll)) {
    F = DistributionField(16, g.size());
    for (std::size_t i = 0; i < 16; ++i)
      rlk::juttner_into(FluidState{1.0 + amp * std::cos(2 * std::numbers::pi * s.x(i)), {0, 0, 0}, 0.5}, g, F.cell(i));
    double tot = 0;
    for (std::size_t i = 0; i < 16; ++i) tot += g.integrate(F.cell(i));
    nbar = tot / 16;
    E = s.gauss_field(F, nbar);
  }
};

TEST(VlasovAmpere, HomogeneousStaysFieldFree) {
  Plasma p(true, 0.0);
  for (double e : p.E) EXPECT_NEAR(e, 0.0, 1e-14);
  for (int n = 0; n < 10; ++n) p.s.step_vlasov_ampere(p.F, p.E, p.nbar, p.s.max_dt());
  for (double e : p.E) EXPECT_NEAR(e, 0.0, 1e-13);
}

TEST(VlasovAmpere, GaussPropagatedAndEnergyConserved) {
  Plasma p(false, 0.01);
  auto a = p.s.monitor(p.F, 0, 0.0, &p.E, p.nbar);
  EXPECT_LE(a.gauss, 1e-12);
  EXPECT_GT(a.field_energy, 0.0);
  double worst = 0, fmax = 0;
  double dt = p.s.max_dt();
  for (int n = 1; n <= 1000; ++n) {
    p.s.step_vlasov_ampere(p.F, p.E, p.nbar, dt);
    auto r = p.s.monitor(p.F, n, n * dt, &p.E, p.nbar);
    worst = std::max(worst, r.gauss);
    fmax = std::max(fmax, r.field_energy);
    if (n == 1000) {
      double drift = std::abs(r.total_energy() - a.total_energy()) / a.total_energy();
      std::printf("gauss %.3e energy drift %.3e field energy max %.3e\n", worst, drift, fmax);
      EXPECT_LE(drift, 1e-6);
      EXPECT_LE(std::abs(r.mass - a.mass), 1e-13 * a.mass);
    }
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(VlasovAmpere, GaussRejectsChargedData) {
  Plasma p(false, 0.01);
  EXPECT_THROW(p.s.gauss_field(p.F, 1.1 * p.nbar), rlk::DomainError);
}

TEST(VlasovAmpere, WithCollisions) {
  Plasma p(true, 0.01);
  auto a = p.s.monitor(p.F, 0, 0.0, &p.E, p.nbar);
  for (int n = 1; n <= 20; ++n) p.s.step_vlasov_ampere(p.F, p.E, p.nbar, p.s.max_dt());
  auto b = p.s.monitor(p.F, 20, 0.0, &p.E, p.nbar);
  EXPECT_LE(b.gauss, 1e-10);
  EXPECT_LE(std::abs(b.total_energy() - a.total_energy()) / a.total_energy(), 1e-6);
}

TEST(Kick, ConservesMassAndMovesMomentum) {
  MomentumGrid g(8, 4.0);
  CollisionOperator op(g);
  KineticSolver1D s(op, 4, 1.0);
  auto F = rlk::juttner(std::vector<FluidState>(4, FluidState{1.0, {0, 0, 0}, 0.5}), g);
  auto before = rlk::moments(F, g);
  s.kick(F, {0.1, -0.1, 0.0, 0.2}, 0.5);
  auto after = rlk::moments(F, g);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(after[c].m0, before[c].m0, 1e-14);
  // d/dt int p1 F = force * mass, up to boundary truncation
  EXPECT_NEAR(after[0].m1[0], 0.05 * before[0].m0, 1e-3);
  EXPECT_NEAR(after[3].m1[0], 0.1 * before[0].m0, 2e-3);
  EXPECT_EQ(after[2].m1[0], before[2].m1[0]);
  EXPECT_THROW(s.kick(F, {10.0, 0, 0, 0}, 0.5), rlk::CflViolation);
}

}  // namespace
