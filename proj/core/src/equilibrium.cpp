#include "rlk/equilibrium.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rlk/error.hpp"
#include "rlk/special_functions.hpp"

namespace rlk {
namespace {

constexpr double kTmin = 1.0 / kGammaMax;
constexpr double kTmax = 1.0 / kGammaMin;

void check_admissible(const Moments& m) {
  double m1sq = m.m1[0] * m.m1[0] + m.m1[1] * m.m1[1] + m.m1[2] * m.m1[2];
  if (!(m.m0 > 0.0) || !(m.m2 > 0.0) || !std::isfinite(m.m0) || !std::isfinite(m.m2))
    throw DomainError("fit_maxwellian: moments must have m0 > 0 and m2 > 0");
  if (!(m.m2 * m.m2 > m1sq + m.m0 * m.m0))
    throw DomainError("fit_maxwellian: inadmissible moments, m2^2 <= |m1|^2 + m0^2");
}

double scale_of(const Moments& m) {
  return std::max({std::abs(m.m0), std::abs(m.m2), std::abs(m.m1[0]), std::abs(m.m1[1]), std::abs(m.m1[2])});
}

Eigen::Matrix<double, 5, 1> residual(const FluidState& s, const Moments& m) {
  Moments c = continuum_moments(s);
  Eigen::Matrix<double, 5, 1> r;
  r << c.m0 - m.m0, c.m1[0] - m.m1[0], c.m1[1] - m.m1[1], c.m1[2] - m.m1[2], c.m2 - m.m2;
  return r;
}

}  // namespace

double FluidState::energy() const { return n * (closure_ratios(gamma()).k3_k2 - T); }
double FluidState::enthalpy() const { return closure_ratios(gamma()).k3_k2; }

void FluidState::validate() const {
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("FluidState: n must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("FluidState: T must be positive");
  for (double v : u)
    if (!std::isfinite(v)) throw DomainError("FluidState: u must be finite");
}

void juttner_into(const FluidState& s, const MomentumGrid& grid, std::span<double> out) {
  s.validate();
  double T = s.T;
  double norm = s.n / (4.0 * std::numbers::pi * T * bessel_k_scaled(2, 1.0 / T));
  double u0 = s.u0();
  // K2 scaled by e^gamma, so the exponent carries +1/T
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const Vec3& p = grid.p(a);
    double up = -u0 * grid.p0(a) + s.u[0] * p[0] + s.u[1] * p[1] + s.u[2] * p[2];
    out[a] = norm * std::exp((up + 1.0) / T);
  }
}

DistributionField juttner(const FluidState& s, const MomentumGrid& grid) {
  DistributionField f(1, grid.size());
  juttner_into(s, grid, f.cell(0));
  return f;
}

DistributionField juttner(const std::vector<FluidState>& cells, const MomentumGrid& grid) {
  DistributionField f(cells.size(), grid.size());
  for (std::size_t x = 0; x < cells.size(); ++x) juttner_into(cells[x], grid, f.cell(x));
  return f;
}

std::array<std::vector<double>, 5> juttner_jacobian(const FluidState& s, const MomentumGrid& grid) {
  std::vector<double> M(grid.size());
  juttner_into(s, grid, M);
  double T = s.T, u0 = s.u0();
  ClosureRatios r = closure_ratios(1.0 / T);
  // d ln M/dT = -1/T - (r1 + 2T)/T^2 - (u.p)_mu/T^2
  std::array<std::vector<double>, 5> J;
  for (auto& v : J) v.resize(grid.size());
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const Vec3& p = grid.p(a);
    double p0 = grid.p0(a);
    double up = -u0 * p0 + s.u[0] * p[0] + s.u[1] * p[1] + s.u[2] * p[2];
    J[0][a] = M[a] / s.n;
    for (int i = 0; i < 3; ++i) J[1 + i][a] = M[a] * (p[i] - s.u[i] / u0 * p0) / T;
    J[4][a] = M[a] * (-1.0 / T - (r.k1_k2 + 2.0 * T) / (T * T) - up / (T * T));
  }
  return J;
}

Moments continuum_moments(const FluidState& s) {
  double h = s.enthalpy();
  double u0 = s.u0();
  Moments m;
  m.m0 = s.n * u0;
  for (int i = 0; i < 3; ++i) m.m1[i] = s.n * h * u0 * s.u[i];
  m.m2 = s.n * h * u0 * u0 - s.n * s.T;
  return m;
}

FluidState fit_maxwellian(const Moments& m, FitInfo* info) {
  check_admissible(m);
  FluidState g;
  double d = m.m2 + m.m0;
  for (int i = 0; i < 3; ++i) g.u[i] = m.m1[i] / d;
  double u0 = g.u0();
  g.n = m.m0 / u0;
  g.T = std::clamp(2.0 / 3.0 * (m.m2 / m.m0 - u0), 0.01, 10.0);
  return fit_maxwellian(m, g, info);
}

FluidState fit_maxwellian(const Moments& m, const FluidState& guess, FitInfo* info) {
  check_admissible(m);
  const double scale = scale_of(m);
  FluidState s = guess;
  auto r = residual(s, m);
  double rn = r.lpNorm<Eigen::Infinity>() / scale;
  int it = 0;
  for (; it < 50 && rn > 1e-15; ++it) {
    double u0 = s.u0();
    double h = s.enthalpy();
    double dh = -d_k3_k2(1.0 / s.T) / (s.T * s.T);
    Eigen::Matrix<double, 5, 5> J = Eigen::Matrix<double, 5, 5>::Zero();
    J(0, 0) = u0;
    for (int i = 0; i < 3; ++i) J(0, 1 + i) = s.n * s.u[i] / u0;
    for (int k = 0; k < 3; ++k) {
      J(1 + k, 0) = h * u0 * s.u[k];
      for (int i = 0; i < 3; ++i) J(1 + k, 1 + i) = s.n * h * (s.u[i] * s.u[k] / u0 + (i == k ? u0 : 0.0));
      J(1 + k, 4) = s.n * u0 * s.u[k] * dh;
    }
    J(4, 0) = h * u0 * u0 - s.T;
    for (int i = 0; i < 3; ++i) J(4, 1 + i) = 2.0 * s.n * h * s.u[i];
    J(4, 4) = s.n * u0 * u0 * dh - s.n;
    Eigen::Matrix<double, 5, 1> step = J.partialPivLu().solve(-r);
    double lam = 1.0;
    FluidState t;
    double tn = rn;
    for (int ls = 0; ls < 30; ++ls) {
      t = s;
      t.n = s.n + lam * step(0);
      for (int i = 0; i < 3; ++i) t.u[i] = s.u[i] + lam * step(1 + i);
      t.T = s.T + lam * step(4);
      if (t.n > 0.0 && t.T > kTmin && t.T < kTmax) {
        auto rt = residual(t, m);
        tn = rt.lpNorm<Eigen::Infinity>() / scale;
        if (tn < rn || tn <= 1e-15) {
          r = rt;
          break;
        }
      }
      lam *= 0.5;
    }
    if (!(tn < rn) && tn > 1e-15) {
      // no further decrease available at rounding level
      if (rn < 1e-12) break;
      throw NonConvergence("fit_maxwellian: line search failed", rn, it);
    }
    s = t;
    rn = tn;
  }
  if (rn > 1e-11) throw NonConvergence("fit_maxwellian: no convergence after 50 iterations", rn, it);
  for (int i = 0; i < 3; ++i)
    if (m.m1[i] == 0.0) s.u[i] = 0.0;
  if (info) *info = {it, rn};
  return s;
}

FluidState fit_maxwellian_discrete(const Moments& m, const MomentumGrid& grid, FitInfo* info) {
  return fit_maxwellian_discrete(m, grid, fit_maxwellian(m), info);
}

FluidState fit_maxwellian_discrete(const Moments& m, const MomentumGrid& grid, const FluidState& guess,
                                   FitInfo* info) {
  check_admissible(m);
  using V5 = Eigen::Matrix<double, 5, 1>;
  const std::size_t sz = grid.size();
  const double w = grid.weight();
  V5 target;
  target << m.m0, m.m1[0], m.m1[1], m.m1[2], m.m2;
  const double scale = target.lpNorm<Eigen::Infinity>();

  double T = guess.T, u0 = guess.u0();
  V5 lam;
  lam << std::log(guess.n / (4.0 * std::numbers::pi * T * bessel_k(2, 1.0 / T))), guess.u[0] / T, guess.u[1] / T,
      guess.u[2] / T, -u0 / T;

  auto psi = [&](std::size_t a) {
    V5 v;
    const Vec3& p = grid.p(a);
    v << 1.0, p[0], p[1], p[2], grid.p0(a);
    return v;
  };
  auto evaluate = [&](const V5& l, V5& g, Eigen::Matrix<double, 5, 5>* H, double& obj) {
    g.setZero();
    if (H) H->setZero();
    double mass = 0.0;
    for (std::size_t a = 0; a < sz; ++a) {
      V5 ps = psi(a);
      double f = std::exp(l.dot(ps)) * w;
      mass += f;
      g += f * ps;
      if (H) *H += f * ps * ps.transpose();
    }
    obj = mass - l.dot(target);
    g -= target;
  };

  V5 g;
  Eigen::Matrix<double, 5, 5> H;
  double obj;
  evaluate(lam, g, &H, obj);
  double rn = g.lpNorm<Eigen::Infinity>() / scale;
  int it = 0;
  for (; it < 50 && rn > 1e-15; ++it) {
    V5 step = H.ldlt().solve(-g);
    double t = 1.0;
    V5 trial, gt;
    double ot = obj;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      trial = lam + t * step;
      evaluate(trial, gt, nullptr, ot);
      if (std::isfinite(ot) && (ot <= obj || gt.lpNorm<Eigen::Infinity>() / scale < rn)) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) {
      if (rn < 1e-12) break;
      throw NonConvergence("fit_maxwellian_discrete: line search failed", rn, it);
    }
    double rt = gt.lpNorm<Eigen::Infinity>() / scale;
    if (rt >= rn && rn < 1e-13) break;
    lam = trial;
    evaluate(lam, g, &H, obj);
    rn = g.lpNorm<Eigen::Infinity>() / scale;
  }
  if (rn > 1e-11) throw NonConvergence("fit_maxwellian_discrete: no convergence", rn, it);
  double c = lam(4);
  double b2 = lam(1) * lam(1) + lam(2) * lam(2) + lam(3) * lam(3);
  if (!(c < 0.0) || !(c * c > b2)) throw DomainError("fit_maxwellian_discrete: multipliers not timelike");
  FluidState s;
  s.T = 1.0 / std::sqrt(c * c - b2);
  for (int i = 0; i < 3; ++i) s.u[i] = m.m1[i] == 0.0 ? 0.0 : lam(1 + i) * s.T;
  s.n = std::exp(lam(0)) * 4.0 * std::numbers::pi * s.T * bessel_k(2, 1.0 / s.T);
  if (info) *info = {it, rn};
  return s;
}

}  // namespace rlk
