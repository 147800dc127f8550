#include "rlk/euler_fluid.hpp"

#include <cmath>

#include "rlk/csv.hpp"
#include "rlk/error.hpp"
#include "rlk/parallel.hpp"
#include "rlk/special_functions.hpp"

namespace rlk {

Prim5 to_prim5(const FluidState& s) { return {s.n, s.u[0], s.u[1], s.u[2], s.T}; }
FluidState from_prim5(const Prim5& v) { return FluidState{v[0], {v[1], v[2], v[3]}, v[4]}; }

Closure parse_closure(const std::string& s) {
  if (s == "continuum") return Closure::Continuum;
  if (s == "grid") return Closure::Grid;
  throw ConfigError("closure", "expected continuum or grid, got '" + s + "'");
}

Limiter parse_limiter(const std::string& s) {
  if (s == "minmod") return Limiter::Minmod;
  if (s == "mc") return Limiter::MC;
  if (s == "vanleer") return Limiter::VanLeer;
  if (s == "none") return Limiter::None;
  throw ConfigError("limiter", "expected minmod, mc, vanleer or none, got '" + s + "'");
}

namespace {

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return a > 0 ? std::min(a, b) : std::max(a, b);
}

}  // namespace

double limit_slope(Limiter l, double left, double right) {
  switch (l) {
    case Limiter::Minmod:
      return minmod(left, right);
    case Limiter::MC: {
      if (left * right <= 0.0) return 0.0;
      double c = 0.5 * (left + right);
      return minmod(c, minmod(2.0 * left, 2.0 * right));
    }
    case Limiter::VanLeer:
      if (left * right <= 0.0) return 0.0;
      return 2.0 * left * right / (left + right);
    case Limiter::None:
      return 0.5 * (left + right);
  }
  return 0.0;
}

ConservedState prim2cons(const FluidState& s) {
  Moments m = continuum_moments(s);
  return {m.m0, m.m1, m.m2};
}

FluidState cons2prim(const ConservedState& u, FitInfo* info) { return FluidClosure().cons2prim(u, nullptr, -1, info); }

FluidClosure::FluidClosure(const MomentumGrid& grid) : grid_(&grid) {}

ConservedState FluidClosure::prim2cons(const FluidState& s) const {
  if (!grid_) return rlk::prim2cons(s);
  std::vector<double> M(grid_->size());
  juttner_into(s, *grid_, M);
  Moments m = moments(M, *grid_);
  return {m.m0, m.m1, m.m2};
}

ConservedState FluidClosure::flux(const FluidState& s) const {
  if (!grid_) {
    double u0 = s.u0(), P = s.pressure(), w = s.n * s.enthalpy();
    ConservedState f;
    f.D = s.n * s.u[0];
    for (int j = 0; j < 3; ++j) f.m[j] = w * s.u[j] * s.u[0];
    f.m[0] += P;
    f.E = w * u0 * s.u[0];
    return f;
  }
  std::vector<double> M(grid_->size());
  juttner_into(s, *grid_, M);
  ConservedState f;
  for (std::size_t a = 0; a < M.size(); ++a) {
    const Vec3& p = grid_->p(a);
    double v = grid_->phat(a)[0] * M[a];
    f.D += v;
    for (int j = 0; j < 3; ++j) f.m[j] += p[j] * v;
    f.E += p[0] * M[a];
  }
  double w = grid_->weight();
  f.D *= w;
  for (double& x : f.m) x *= w;
  f.E *= w;
  return f;
}

FluidState FluidClosure::cons2prim(const ConservedState& u, const FluidState* guess, int cell,
                                   FitInfo* info) const {
  double mm = std::sqrt(u.m[0] * u.m[0] + u.m[1] * u.m[1] + u.m[2] * u.m[2]);
  std::size_t c = cell < 0 ? 0 : static_cast<std::size_t>(cell);
  if (!(u.D > 0.0) || !(u.E > mm) || !std::isfinite(u.E))
    throw InadmissibleState("cons2prim: inadmissible conserved state (need D > 0, E > |m|)", c);
  Moments m{u.D, u.m, u.E};
  if (grid_) return guess ? fit_maxwellian_discrete(m, *grid_, *guess, info) : fit_maxwellian_discrete(m, *grid_, info);
  return guess ? fit_maxwellian(m, *guess, info) : fit_maxwellian(m, info);
}

void FluidClosure::jacobians(const FluidState& s, Eigen::Matrix<double, 5, 5>& J0,
                             Eigen::Matrix<double, 5, 5>& J1) const {
  if (grid_) {
    auto dM = juttner_jacobian(s, *grid_);
    J0.setZero();
    J1.setZero();
    for (std::size_t a = 0; a < grid_->size(); ++a) {
      const Vec3& p = grid_->p(a);
      double psi[5] = {1.0, p[0], p[1], p[2], grid_->p0(a)};
      double v = grid_->phat(a)[0];
      for (int k = 0; k < 5; ++k) {
        double d = dM[k][a];
        for (int r = 0; r < 5; ++r) {
          J0(r, k) += psi[r] * d;
          J1(r, k) += psi[r] * v * d;
        }
      }
    }
    J0 *= grid_->weight();
    J1 *= grid_->weight();
    return;
  }
  // fourth-order central differences of the closed-form maps
  Prim5 base = to_prim5(s);
  const double steps[5] = {1e-4 * s.n, 1e-4, 1e-4, 1e-4, 1e-4 * s.T};
  auto pack = [](const ConservedState& c) {
    Eigen::Matrix<double, 5, 1> v;
    v << c.D, c.m[0], c.m[1], c.m[2], c.E;
    return v;
  };
  for (int k = 0; k < 5; ++k) {
    Eigen::Matrix<double, 5, 1> u[4], f[4];
    const double off[4] = {-2, -1, 1, 2};
    for (int j = 0; j < 4; ++j) {
      Prim5 q = base;
      q[k] += off[j] * steps[k];
      FluidState st = from_prim5(q);
      u[j] = pack(rlk::prim2cons(st));
      f[j] = pack(flux(st));
    }
    J0.col(k) = (u[0] - 8.0 * u[1] + 8.0 * u[2] - u[3]) / (12.0 * steps[k]);
    J1.col(k) = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * steps[k]);
  }
}

Prim5 FluidClosure::time_derivative(const FluidState& s, const Prim5& dx_prim) const {
  Eigen::Matrix<double, 5, 5> J0, J1;
  jacobians(s, J0, J1);
  Eigen::Matrix<double, 5, 1> g;
  for (int k = 0; k < 5; ++k) g(k) = dx_prim[k];
  Eigen::Matrix<double, 5, 1> r = -J0.partialPivLu().solve(J1 * g);
  return {r(0), r(1), r(2), r(3), r(4)};
}

EulerSolver::EulerSolver(std::size_t nx, double length, FluidClosure closure, EulerOptions opt)
    : nx_(nx), length_(length), closure_(closure), opt_(opt) {
  if (nx < 4) throw DomainError("EulerSolver: need at least 4 cells");
  if (!(length > 0.0)) throw DomainError("EulerSolver: length must be positive");
}

std::vector<ConservedState> EulerSolver::to_conserved(const std::vector<FluidState>& prim) const {
  if (prim.size() != nx_) throw GridMismatch("EulerSolver: state count does not match cells");
  std::vector<ConservedState> u(nx_);
  parallel_for(nx_, opt_.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) u[i] = closure_.prim2cons(prim[i]);
  });
  guess_ = prim;
  return u;
}

std::vector<FluidState> EulerSolver::to_primitive(const std::vector<ConservedState>& u) const {
  if (u.size() != nx_) throw GridMismatch("EulerSolver: state count does not match cells");
  std::vector<FluidState> prim(nx_);
  bool have = guess_.size() == nx_;
  parallel_for(nx_, opt_.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      prim[i] = closure_.cons2prim(u[i], have ? &guess_[i] : nullptr, static_cast<int>(i));
  });
  guess_ = prim;
  return prim;
}

void EulerSolver::rhs(const std::vector<ConservedState>& u, std::vector<ConservedState>& out) const {
  auto prim = to_primitive(u);
  const std::size_t n = nx_;
  std::vector<Prim5> q(n), s(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = to_prim5(prim[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const Prim5 &a = q[(i + n - 1) % n], &b = q[i], &c = q[(i + 1) % n];
    for (int k = 0; k < 5; ++k) s[i][k] = limit_slope(opt_.limiter, b[k] - a[k], c[k] - b[k]);
  }
  // flux through face i + 1/2
  std::vector<ConservedState> F(n);
  parallel_for(n, opt_.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      std::size_t j = (i + 1) % n;
      Prim5 L, R;
      for (int k = 0; k < 5; ++k) {
        L[k] = q[i][k] + 0.5 * s[i][k];
        R[k] = q[j][k] - 0.5 * s[j][k];
      }
      FluidState sl = from_prim5(L), sr = from_prim5(R);
      if (!(sl.n > 0.0 && sl.T > 0.0 && sr.n > 0.0 && sr.T > 0.0))
        throw InadmissibleState("euler: reconstructed face state is inadmissible", i);
      ConservedState ul = closure_.prim2cons(sl), ur = closure_.prim2cons(sr);
      ConservedState fl = closure_.flux(sl), fr = closure_.flux(sr);
      // HLL with S_L = -1, S_R = +1
      ConservedState f;
      f.D = 0.5 * (fl.D + fr.D) - 0.5 * (ur.D - ul.D);
      for (int d = 0; d < 3; ++d) f.m[d] = 0.5 * (fl.m[d] + fr.m[d]) - 0.5 * (ur.m[d] - ul.m[d]);
      f.E = 0.5 * (fl.E + fr.E) - 0.5 * (ur.E - ul.E);
      F[i] = f;
    }
  });
  out.resize(n);
  double idx = 1.0 / dx();
  for (std::size_t i = 0; i < n; ++i) {
    const ConservedState &fr = F[i], &fl = F[(i + n - 1) % n];
    out[i].D = -(fr.D - fl.D) * idx;
    for (int d = 0; d < 3; ++d) out[i].m[d] = -(fr.m[d] - fl.m[d]) * idx;
    out[i].E = -(fr.E - fl.E) * idx;
  }
}

void EulerSolver::step(std::vector<ConservedState>& u, double dt) const {
  if (dt > max_dt() * (1.0 + 1e-12)) throw CflViolation("euler: dt exceeds 0.4 dx");
  std::vector<ConservedState> k1, k2, u1(nx_);
  rhs(u, k1);
  for (std::size_t i = 0; i < nx_; ++i) {
    u1[i].D = u[i].D + dt * k1[i].D;
    for (int d = 0; d < 3; ++d) u1[i].m[d] = u[i].m[d] + dt * k1[i].m[d];
    u1[i].E = u[i].E + dt * k1[i].E;
  }
  rhs(u1, k2);
  for (std::size_t i = 0; i < nx_; ++i) {
    u[i].D = 0.5 * (u[i].D + u1[i].D + dt * k2[i].D);
    for (int d = 0; d < 3; ++d) u[i].m[d] = 0.5 * (u[i].m[d] + u1[i].m[d] + dt * k2[i].m[d]);
    u[i].E = 0.5 * (u[i].E + u1[i].E + dt * k2[i].E);
  }
}

ConservedState EulerSolver::totals(const std::vector<ConservedState>& u) const {
  ConservedState t;
  for (const auto& c : u) {
    t.D += c.D;
    for (int d = 0; d < 3; ++d) t.m[d] += c.m[d];
    t.E += c.E;
  }
  double h = dx();
  t.D *= h;
  for (double& x : t.m) x *= h;
  t.E *= h;
  return t;
}

std::vector<Prim5> EulerSolver::dx_primitive(const std::vector<FluidState>& prim) const {
  const std::size_t n = nx_;
  std::vector<Prim5> d(n);
  double c = 1.0 / (12.0 * dx());
  for (std::size_t i = 0; i < n; ++i) {
    Prim5 m2 = to_prim5(prim[(i + n - 2) % n]), m1 = to_prim5(prim[(i + n - 1) % n]);
    Prim5 p1 = to_prim5(prim[(i + 1) % n]), p2 = to_prim5(prim[(i + 2) % n]);
    for (int k = 0; k < 5; ++k) d[i][k] = ((m2[k] - p2[k]) + 8.0 * (p1[k] - m1[k])) * c;
  }
  return d;
}

std::vector<Prim5> EulerSolver::dt_primitive(const std::vector<FluidState>& prim) const {
  auto dxp = dx_primitive(prim);
  std::vector<Prim5> dt(nx_);
  parallel_for(nx_, opt_.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) dt[i] = closure_.time_derivative(prim[i], dxp[i]);
  });
  return dt;
}

EulerSolver::GradientReport EulerSolver::gradients(const std::vector<FluidState>& prim) const {
  auto dxp = dx_primitive(prim);
  auto dtp = dt_primitive(prim);
  GradientReport r;
  for (std::size_t i = 0; i < nx_; ++i) {
    double s = 0.0;
    for (int k = 0; k < 5; ++k) s += dxp[i][k] * dxp[i][k] + dtp[i][k] * dtp[i][k];
    double g = std::sqrt(s);
    const FluidState& st = prim[i];
    r.grad = std::max(r.grad, g);
    r.weighted = std::max(r.weighted, g * (1.0 + st.T) * st.u0() / (st.T * st.T));
  }
  return r;
}

void write_fluid_csv(const std::string& path, const EulerSolver& s, const std::vector<FluidState>& prim) {
  CsvWriter w(path, {"x", "n", "u1", "u2", "u3", "T"});
  for (std::size_t i = 0; i < prim.size(); ++i)
    w.row({s.x(i), prim[i].n, prim[i].u[0], prim[i].u[1], prim[i].u[2], prim[i].T});
}

}  // namespace rlk
