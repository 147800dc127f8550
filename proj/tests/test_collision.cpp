#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <random>

#include "oracles.hpp"
#include "rlk/collision.hpp"
#include "rlk/equilibrium.hpp"
#include "rlk/error.hpp"

namespace {

using rlk::CollisionOperator;
using rlk::FluidState;
using rlk::MomentumGrid;

double fro(const std::array<double, 9>& m) {
  double s = 0;
  for (double v : m) s += v * v;
  return std::sqrt(s);
}

TEST(Kernel, NullDirection) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto p = oracle::random_momentum(rng, 4.0), q = oracle::random_momentum(rng, 4.0);
    auto kv = rlk::kernel(p, q);
    double p0 = rlk::p0_of(p), q0 = rlk::p0_of(q);
    rlk::Vec3 d{q[0] / q0 - p[0] / p0, q[1] / q0 - p[1] / p0, q[2] / q0 - p[2] / p0};
    for (int r = 0; r < 3; ++r) {
      double v = kv.phi[3 * r] * d[0] + kv.phi[3 * r + 1] * d[1] + kv.phi[3 * r + 2] * d[2];
      EXPECT_LE(std::abs(v), 1e-12 * fro(kv.phi));
    }
  }
}

TEST(Kernel, SymmetricAndPositiveSemidefinite) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    auto p = oracle::random_momentum(rng, 3.0), q = oracle::random_momentum(rng, 3.0);
    auto a = rlk::kernel(p, q), b = rlk::kernel(q, p);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(a.phi[3 * r + c], a.phi[3 * c + r]);
        EXPECT_NEAR(a.phi[3 * r + c], b.phi[3 * r + c], 1e-14 * fro(a.phi));
      }
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = a.phi[3 * r + c];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_GE(es.eigenvalues()(0), -1e-12 * rho);
    EXPECT_GE(a.lambda, 0.0);
  }
}

TEST(Kernel, MatchesDirectExpression) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    auto p = oracle::random_momentum(rng, 3.0), q = oracle::random_momentum(rng, 3.0);
    auto a = rlk::kernel(p, q);
    auto ref = oracle::kernel_direct(p, q);
    for (int k = 0; k < 9; ++k) EXPECT_NEAR(a.phi[k], ref[k], 1e-10 * fro(ref));
  }
}

TEST(Kernel, CoincidentMomenta) {
  rlk::Vec3 p{0.3, -0.2, 1.0};
  EXPECT_THROW(rlk::kernel(p, p), rlk::CoincidentMomenta);
}

TEST(KernelTable, CachedEqualsOnTheFlyBitwise) {
  MomentumGrid g(6, 3.0);
  CollisionOperator a(g, {rlk::KernelCache::On, 0, 1}), b(g, {rlk::KernelCache::Off, 0, 1});
  ASSERT_TRUE(a.cached());
  ASSERT_FALSE(b.cached());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(a.phi(i, j), b.phi(i, j));
}

TEST(KernelTable, AnnihilatesDiscreteVelocityDifference) {
  MomentumGrid g(8, 4.0);
  CollisionOperator op(g);
  for (std::size_t i = 0; i < g.size(); i += 7)
    for (std::size_t j = 0; j < g.size(); j += 5) {
      if (i == j) continue;
      auto k = op.phi(i, j);
      rlk::Vec3 v{g.dp0(j)[0] - g.dp0(i)[0], g.dp0(j)[1] - g.dp0(i)[1], g.dp0(j)[2] - g.dp0(i)[2]};
      auto r = rlk::sym_apply(k, v);
      double s = std::abs(k[0]) + std::abs(k[3]) + std::abs(k[5]);
      for (double x : r) EXPECT_LE(std::abs(x), 1e-14 * s);
    }
}

std::vector<double> bimaxwellian(const MomentumGrid& g, double T, double du) {
  std::vector<double> a(g.size()), b(g.size()), f(g.size());
  rlk::juttner_into(FluidState{0.5, {du, 0, 0}, T}, g, a);
  rlk::juttner_into(FluidState{0.5, {-du, 0, 0}, T}, g, b);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = a[i] + b[i];
  return f;
}

TEST(Contract, BlockedMatchesNaive) {
  MomentumGrid g(8, 4.0);
  CollisionOperator cached(g, {rlk::KernelCache::On, 0, 3}), fly(g, {rlk::KernelCache::Off, 0, 2});
  std::size_t sz = g.size(), nc = 3;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> s(nc * sz), v(3 * nc * sz);
  for (auto& x : s) x = nd(rng);
  for (auto& x : v) x = nd(rng);
  std::vector<double> A0(6 * nc * sz), B0(3 * nc * sz), A1 = A0, B1 = B0, A2 = A0, B2 = B0;
  cached.contract_naive(nc, s, v, A0, B0);
  cached.contract(nc, s, v, A1, B1);
  fly.contract(nc, s, v, A2, B2);
  double scale = 0;
  for (double x : A0) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < A0.size(); ++i) {
    EXPECT_LE(std::abs(A0[i] - A1[i]), 1e-13 * scale);
    EXPECT_EQ(A1[i], A2[i]);
  }
  for (std::size_t i = 0; i < B0.size(); ++i) EXPECT_LE(std::abs(B0[i] - B1[i]), 1e-13 * scale);
}

TEST(CollideSelf, WorkerCountDoesNotChangeBits) {
  MomentumGrid g(8, 4.0);
  auto f = bimaxwellian(g, 0.3, 0.2);
  CollisionOperator a(g, {rlk::KernelCache::On, 0, 1}), b(g, {rlk::KernelCache::On, 0, 4});
  std::vector<double> ca(g.size()), cb(g.size());
  a.collide_self(f, ca);
  b.collide_self(f, cb);
  EXPECT_EQ(ca, cb);
}

TEST(CollideSelf, JuttnerIsDiscreteEquilibrium) {
  for (std::size_t n : {8, 12}) {
    MomentumGrid g(n, 4.5);
    CollisionOperator op(g);
    std::vector<double> M(g.size()), C(g.size()), Cb(g.size());
    rlk::juttner_into(FluidState{1.0, {0, 0, 0}, 0.5}, g, M);
    op.collide_self(M, C);
    auto f = bimaxwellian(g, 0.5, 0.3);
    op.collide_self(f, Cb);
    double scale = 0, res = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      scale = std::max(scale, std::abs(Cb[i]));
      res = std::max(res, std::abs(C[i]));
    }
    EXPECT_LE(res, 1e-13 * scale) << n;
  }
}

TEST(CollideSelf, MovingJuttnerIsDiscreteEquilibrium) {
  MomentumGrid g(10, 5.0);
  CollisionOperator op(g);
  std::vector<double> M(g.size()), C(g.size()), Cb(g.size());
  rlk::juttner_into(FluidState{1.0, {0.2, -0.1, 0.05}, 0.4}, g, M);
  op.collide_self(M, C);
  op.collide_self(bimaxwellian(g, 0.4, 0.3), Cb);
  double scale = 0, res = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    scale = std::max(scale, std::abs(Cb[i]));
    res = std::max(res, std::abs(C[i]));
  }
  EXPECT_LE(res, 1e-13 * scale);
}

TEST(CollideSelf, ConservesMassMomentumEnergy) {
  MomentumGrid g(12, 5.0);
  CollisionOperator op(g);
  auto f = bimaxwellian(g, 0.3, 0.15);
  // break the symmetry so every moment is exercised
  for (std::size_t i = 0; i < g.size(); ++i) f[i] *= 1.0 + 0.3 * std::tanh(g.p(i)[1] - 0.5 * g.p(i)[2]);
  std::vector<double> C(g.size());
  op.collide_self(f, C);
  double s0 = 0, s1[3] = {0, 0, 0}, s2 = 0, a0 = 0, a1 = 0, a2 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    s0 += C[i];
    a0 += std::abs(C[i]);
    for (int d = 0; d < 3; ++d) s1[d] += g.p(i)[d] * C[i];
    a1 += (std::abs(g.p(i)[0]) + std::abs(g.p(i)[1]) + std::abs(g.p(i)[2])) * std::abs(C[i]);
    s2 += g.p0(i) * C[i];
    a2 += g.p0(i) * std::abs(C[i]);
  }
  EXPECT_LE(std::abs(s0), 1e-14 * a0);
  for (double x : s1) EXPECT_LE(std::abs(x), 1e-13 * a1);
  EXPECT_LE(std::abs(s2), 1e-13 * a2);
}

TEST(CollideSelf, EntropyProductionMatchesSymmetrizedOracle) {
  MomentumGrid g(8, 4.0);
  CollisionOperator op(g);
  auto f = bimaxwellian(g, 0.3, 0.15);
  std::vector<double> C(g.size());
  op.collide_self(f, C);
  double prod = 0;
  for (std::size_t i = 0; i < g.size(); ++i) prod += g.weight() * C[i] * std::log(f[i]);
  // -1/2 sum_pq w^2 f f' (G - G')^T Phi (G - G')
  std::vector<double> l(g.size()), G(3 * g.size());
  for (std::size_t i = 0; i < g.size(); ++i) l[i] = std::log(f[i]);
  g.grad(l, G);
  long double ref = 0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (i == j) continue;
      rlk::Vec3 d{G[3 * i] - G[3 * j], G[3 * i + 1] - G[3 * j + 1], G[3 * i + 2] - G[3 * j + 2]};
      auto k = op.phi(i, j);
      auto kd = rlk::sym_apply(k, d);
      ref += -0.5L * f[i] * f[j] * (d[0] * kd[0] + d[1] * kd[1] + d[2] * kd[2]);
    }
  ref *= (long double)g.weight() * g.weight();
  EXPECT_LT(prod, 0.0);
  EXPECT_NEAR(prod / (double)ref, 1.0, 1e-10);
}

TEST(CollideDispatch, SameFieldUsesWeakForm) {
  MomentumGrid g(8, 4.0);
  CollisionOperator op(g);
  rlk::DistributionField f(1, g.size());
  auto v = bimaxwellian(g, 0.3, 0.15);
  std::copy(v.begin(), v.end(), f.values.begin());
  auto C = rlk::collide(f, f, g, op);
  std::vector<double> ref(g.size());
  op.collide_self(v, ref);
  EXPECT_EQ(C.values, ref);
  MomentumGrid other(6, 4.0);
  EXPECT_THROW(rlk::collide(f, f, other, op), rlk::GridMismatch);
}

TEST(CollideBilinear, MassConservedAndApproachesWeakForm) {
  double prev = 1e9;
  for (std::size_t n : {8, 12, 16}) {
    MomentumGrid g(n, 4.0);
    CollisionOperator op(g);
    auto f = bimaxwellian(g, 0.5, 0.3);
    std::vector<double> C(g.size()), Cw(g.size());
    op.collide_bilinear(f, f, C);
    op.collide_self(f, Cw);
    double s0 = 0, a0 = 0, diff = 0, sc = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      s0 += C[i];
      a0 += std::abs(C[i]);
      diff += (C[i] - Cw[i]) * (C[i] - Cw[i]);
      sc += Cw[i] * Cw[i];
    }
    EXPECT_LE(std::abs(s0), 1e-14 * a0);
    double rel = std::sqrt(diff / sc);
    std::printf("N=%zu strong/weak rel diff %.3e\n", n, rel);
    EXPECT_LT(rel, prev);
    prev = rel;
  }
}

TEST(Entropy, ScalingIdentity) {
  MomentumGrid g(8, 4.0);
  auto f = bimaxwellian(g, 0.3, 0.15);
  double c = 2.7;
  std::vector<double> cf(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) cf[i] = c * f[i];
  double mass = g.integrate(f);
  EXPECT_NEAR(rlk::entropy(cf, g), c * rlk::entropy(f, g) + c * std::log(c) * mass, 1e-12);
}

TEST(Entropy, JuttnerMinimizesAmongMomentMatchedFields) {
  MomentumGrid g(10, 4.5);
  std::vector<double> M(g.size());
  rlk::juttner_into(FluidState{1.0, {0.1, 0, 0}, 0.35}, g, M);
  double h0 = rlk::entropy(M, g);
  // f = M(1 + 0.3 r) with r orthogonal to 1, p, p0 in the M-weighted inner product
  std::vector<std::vector<double>> basis(5, std::vector<double>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    basis[0][i] = 1;
    for (int d = 0; d < 3; ++d) basis[1 + d][i] = g.p(i)[d];
    basis[4][i] = g.p0(i);
  }
  Eigen::MatrixXd B(g.size(), 5);
  for (int k = 0; k < 5; ++k)
    for (std::size_t i = 0; i < g.size(); ++i) B(i, k) = std::sqrt(M[i]) * basis[k][i];
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(g.size(), 5);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd d(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) d(i) = std::tanh(nd(rng)) * std::sqrt(M[i]);
    d -= Q * (Q.transpose() * d);
    double worst = 0;
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, -d(i) / std::sqrt(M[i]));
    double amp = std::min(0.3, 0.5 / worst);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = M[i] + amp * std::sqrt(M[i]) * d(i);
    for (double v : f) ASSERT_GT(v, 0.0);
    auto mf = rlk::moments(f, g), mm = rlk::moments(M, g);
    ASSERT_NEAR(mf.m0, mm.m0, 1e-12);
    ASSERT_NEAR(mf.m2, mm.m2, 1e-12);
    EXPECT_GT(rlk::entropy(f, g), h0);
  }
}

TEST(ExcludedShell, SmallAndDecreasing) {
  double prev = 1e9;
  for (std::size_t n : {8, 12, 16}) {
    MomentumGrid g(n, 4.0);
    CollisionOperator op(g);
    std::vector<double> M(g.size());
    rlk::juttner_into(FluidState{1.0, {0, 0, 0}, 0.5}, g, M);
    double r = op.excluded_shell_ratio(M);
    EXPECT_GT(r, 0.0);
    EXPECT_LT(r, 0.2);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

}  // namespace
