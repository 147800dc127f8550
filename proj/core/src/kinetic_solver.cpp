#include "rlk/kinetic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rlk/csv.hpp"
#include "rlk/error.hpp"
#include "rlk/parallel.hpp"

namespace rlk {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// allowance for rounding in the entropy sum
double entropy_slack(std::span<const double> f, double w) {
  double s = 0.0;
  for (double v : f)
    if (v > 0.0) s += std::abs(v * std::log(v));
  return 64.0 * std::numeric_limits<double>::epsilon() * s * w;
}

// k0, when given, is C[f] already computed
void heun(const CollisionOperator& op, std::span<double> f, double tau, double eps, const double* k0 = nullptr) {
  const std::size_t sz = f.size();
  std::vector<double> k(sz), f1(sz);
  if (k0)
    std::copy(k0, k0 + sz, k.begin());
  else
    op.collide_self(f, k);
  for (std::size_t a = 0; a < sz; ++a) f1[a] = f[a] + tau / eps * k[a];
  op.collide_self(f1, k);
  for (std::size_t a = 0; a < sz; ++a) f[a] = 0.5 * (f[a] + f1[a] + tau / eps * k[a]);
}

}  // namespace

KineticMode parse_kinetic_mode(const std::string& s) {
  if (s == "homogeneous") return KineticMode::Homogeneous;
  if (s == "rlan" || s == "rlan_1d3v") return KineticMode::Rlan;
  if (s == "vlasov_ampere" || s == "vlasov_ampere_1d3v") return KineticMode::VlasovAmpere;
  throw ConfigError("mode", "unknown kinetic mode '" + s + "'");
}

std::vector<std::string> monitor_header() {
  return {"step", "t",     "mass",  "p1",    "p2",           "p3",          "energy",
          "entropy", "min_f", "max_f", "gauss", "field_energy", "total_energy", "substeps"};
}

std::vector<double> monitor_values(const MonitorRow& r) {
  return {static_cast<double>(r.step), r.t,      r.mass, r.momentum[0], r.momentum[1],
          r.momentum[2],               r.energy, r.entropy,                  r.min_f,       r.max_f,
          r.gauss,                     r.field_energy, r.total_energy(),     static_cast<double>(r.substeps)};
}

MonitorLog::MonitorLog(const std::string& path) {
  if (!path.empty()) out_ = std::make_shared<CsvWriter>(path, monitor_header());
}

void MonitorLog::add(const MonitorRow& r) {
  rows_.push_back(r);
  if (out_) out_->row(monitor_values(r));
}

void check_field(std::span<const double> f, double tol, long step) {
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  for (double v : f) {
    if (!std::isfinite(v)) throw MonitorFailure("non-finite value in distribution", step);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (mn < -tol * mx) throw MonitorFailure("positivity floor violated: min F = " + format_double(mn), step);
}

double collision_spectral_radius(const CollisionOperator& op, const DistributionField& f, std::vector<double>& w,
                                 int iters, DistributionField* c0_out) {
  const std::size_t n = f.values.size();
  if (w.size() != n) {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    w.resize(n);
    for (double& x : w) x = u(rng);
  }
  const double tau = 1e-7;
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  auto perturb = [&](double* fp) {
    double nw = norm(w);
    if (!(nw > 0.0)) return false;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= nw;
      fp[i] = f.values[i] * (1.0 + tau * w[i]);
    }
    return true;
  };
  auto update = [&](const double* c1, const double* c0) {
    // Jacobian in the relative variable: diag(f)^-1 J diag(f)
    for (std::size_t i = 0; i < n; ++i) {
      double fi = f.values[i];
      w[i] = fi > 0.0 ? (c1[i] - c0[i]) / (tau * fi) : 0.0;
    }
    return norm(w);
  };
  // C[f] and the first perturbed call share one pass over the kernel table;
  // cells are independent, so the bits match two separate calls
  DistributionField both(2 * f.nx, f.nodes, f.kind), out;
  std::copy(f.values.begin(), f.values.end(), both.values.begin());
  bool first = iters > 0 && perturb(both.values.data() + n);
  op.collide_self(both, out);
  DistributionField c0 = f, c1, fp = f;
  std::copy(out.values.begin(), out.values.begin() + n, c0.values.begin());
  double rho = first ? update(out.values.data() + n, c0.values.data()) : 0.0;
  for (int it = 1; first && it < iters; ++it) {
    if (!perturb(fp.values.data())) break;
    op.collide_self(fp, c1);
    rho = update(c1.values.data(), c0.values.data());
  }
  if (c0_out) *c0_out = std::move(c0);
  return std::max(rho, op.stiffness(f));
}

double collision_dt(const CollisionOperator& op, std::span<const double> f, double eps) {
  DistributionField fd(1, f.size());
  std::copy(f.begin(), f.end(), fd.values.begin());
  std::vector<double> w;
  double r = collision_spectral_radius(op, fd, w, 20);
  return r > 0.0 ? eps / r : std::numeric_limits<double>::infinity();
}

RelaxResult relax_homogeneous(const CollisionOperator& op, std::span<const double> f0, double eps,
                              const RelaxOptions& opt) {
  const MomentumGrid& g = op.grid();
  if (f0.size() != g.size()) throw GridMismatch("relax: field size does not match grid");
  if (!(eps > 0.0)) throw DomainError("relax: eps must be positive");
  if (!(opt.dt > 0.0) || opt.steps < 0) throw DomainError("relax: dt must be positive and steps nonnegative");
  for (double v : f0)
    if (!(v >= 0.0)) throw DomainError("relax: initial data must be nonnegative");
  if (!opt.substep && opt.dt > collision_dt(op, f0, eps))
    throw CflViolation("relax: dt above the explicit collision bound " + format_double(collision_dt(op, f0, eps)));

  RelaxResult res;
  res.f.assign(f0.begin(), f0.end());
  res.max_entropy_increase = -std::numeric_limits<double>::infinity();
  MonitorLog log(opt.log_path);
  auto row = [&](long step, double t, int sub) {
    MonitorRow r;
    r.step = step;
    r.t = t;
    Moments m = moments(res.f, g);
    r.mass = m.m0;
    r.momentum = m.m1;
    r.energy = m.m2;
    r.entropy = entropy(res.f, g);
    r.min_f = *std::min_element(res.f.begin(), res.f.end());
    r.max_f = *std::max_element(res.f.begin(), res.f.end());
    r.substeps = sub;
    log.add(r);
    return r;
  };
  MonitorRow last = row(0, 0.0, 0);
  if (opt.on_snapshot && opt.snapshot_every > 0) opt.on_snapshot(0, 0.0, res.f);
  DistributionField cur(1, g.size());
  std::vector<double> eig;
  DistributionField c0;
  double rho = 0.0;
  for (long n = 1; n <= opt.steps; ++n) {
    int sub = 1;
    if (opt.substep) {
      // the stiff tail rates can double within ten steps while the tail fills
      // in, so a warm one-iteration update runs between the full refreshes
      std::copy(res.f.begin(), res.f.end(), cur.values.begin());
      bool full = (n - 1) % std::max(1, opt.refresh_every) == 0;
      rho = collision_spectral_radius(op, cur, eig, eig.empty() ? 20 : full ? 6 : 1, &c0);
      sub = std::max(1, static_cast<int>(std::ceil(opt.dt * rho / eps)));
    }
    double tau = opt.dt / sub;
    for (int s = 0; s < sub; ++s) heun(op, res.f, tau, eps, s == 0 && opt.substep ? c0.values.data() : nullptr);
    check_field(res.f, opt.positivity_tol, n);
    res.max_substeps = std::max(res.max_substeps, sub);
    MonitorRow r = row(n, n * opt.dt, sub);
    double dH = r.entropy - last.entropy;
    res.max_entropy_increase = std::max(res.max_entropy_increase, dH);
    if (dH > entropy_slack(res.f, g.weight())) ++res.entropy_increases;
    last = r;
    if (opt.on_snapshot && opt.snapshot_every > 0 && n % opt.snapshot_every == 0) opt.on_snapshot(n, n * opt.dt, res.f);
  }
  res.log = log.rows();
  return res;
}

KineticSolver1D::KineticSolver1D(const CollisionOperator& op, std::size_t nx, double length, KineticOptions opt)
    : op_(&op), nx_(nx), length_(length), opt_(opt) {
  if (nx < 4) throw DomainError("kinetic: need at least 4 cells");
  if (!(length > 0.0)) throw DomainError("kinetic: length must be positive");
  if (!(opt.eps > 0.0)) throw DomainError("kinetic: eps must be positive");
  const MomentumGrid& g = op.grid();
  const std::size_t n = g.n();
  vel_.resize(g.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t a = g.index(i, j, k);
        if (!opt.lattice_velocity) {
          vel_[a] = g.phat(a)[0];
          continue;
        }
        // half the p0 differences to the p1 neighbours, zero-flux ends
        double up = i + 1 < n ? g.p0(g.index(i + 1, j, k)) - g.p0(a) : 0.0;
        double dn = i > 0 ? g.p0(a) - g.p0(g.index(i - 1, j, k)) : 0.0;
        vel_[a] = 0.5 * (up + dn) / g.h();
      }
}

void KineticSolver1D::check_cfl(double dt) const {
  if (!(dt > 0.0)) throw DomainError("kinetic: dt must be positive");
  if (dt > max_dt() * (1 + 1e-12))
    throw CflViolation("kinetic: dt = " + format_double(dt) + " exceeds 0.4 dx = " + format_double(max_dt()));
}

void KineticSolver1D::transport_rhs(const DistributionField& F, DistributionField& out,
                                    std::vector<double>& phi) const {
  const MomentumGrid& g = op_->grid();
  const std::size_t sz = g.size(), n = nx_;
  const double inv = 1.0 / dx();
  std::vector<double> flux(n * sz);
  phi.assign(n, 0.0);
  // face i + 1/2, upwind reconstruction per node
  parallel_for(n, op_->workers(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto fm = F.cell((i + n - 1) % n), f0 = F.cell(i), f1 = F.cell((i + 1) % n), f2 = F.cell((i + 2) % n);
      double* fl = flux.data() + i * sz;
      double s = 0.0;
      for (std::size_t a = 0; a < sz; ++a) {
        double v = vel_[a];
        double face = v >= 0.0 ? f0[a] + 0.5 * limit_slope(opt_.limiter, f0[a] - fm[a], f1[a] - f0[a])
                               : f1[a] - 0.5 * limit_slope(opt_.limiter, f1[a] - f0[a], f2[a] - f1[a]);
        fl[a] = v * face;
        s += fl[a];
      }
      phi[i] = s * g.weight();
    }
  });
  if (out.nx != n || out.nodes != sz) out = DistributionField(n, sz, F.kind);
  parallel_for(n, op_->workers(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double* r = flux.data() + i * sz;
      const double* l = flux.data() + ((i + n - 1) % n) * sz;
      auto o = out.cell(i);
      for (std::size_t a = 0; a < sz; ++a) o[a] = -(r[a] - l[a]) * inv;
    }
  });
}

void KineticSolver1D::transport(DistributionField& F, double dt, std::vector<double>* phi) const {
  check_grid(F, op_->grid());
  if (F.nx != nx_) throw GridMismatch("transport: cell count does not match solver");
  check_cfl(dt);
  DistributionField k, F1 = F;
  std::vector<double> p0, p1;
  transport_rhs(F, k, p0);
  for (std::size_t i = 0; i < F.values.size(); ++i) F1.values[i] += dt * k.values[i];
  transport_rhs(F1, k, p1);
  for (std::size_t i = 0; i < F.values.size(); ++i)
    F.values[i] = 0.5 * (F.values[i] + F1.values[i] + dt * k.values[i]);
  if (phi) {
    phi->resize(nx_, 0.0);
    for (std::size_t i = 0; i < nx_; ++i) (*phi)[i] += 0.5 * dt * (p0[i] + p1[i]);
  }
}

void KineticSolver1D::kick(DistributionField& F, const std::vector<double>& force, double dt) const {
  const MomentumGrid& g = op_->grid();
  const std::size_t n = g.n(), sz = g.size();
  if (force.size() != F.nx) throw GridMismatch("kick: one force value per cell expected");
  const double h = g.h();
  for (double a : force)
    if (std::abs(a) * dt > 0.4 * h) throw CflViolation("kick: |force| dt exceeds 0.4 h");
  auto rhs = [&](std::span<const double> f, double a, std::span<double> out) {
    std::vector<double> line(n), gface(n + 1);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) line[i] = f[g.index(i, j, k)];
        auto slope = [&](std::size_t i) {
          if (i == 0 || i + 1 == n) return 0.0;
          return limit_slope(opt_.kick_limiter, line[i] - line[i - 1], line[i + 1] - line[i]);
        };
        gface[0] = gface[n] = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          if (opt_.kick_centered)
            gface[i + 1] = 0.5 * a * (line[i] + line[i + 1]);
          else
            gface[i + 1] = a * (a >= 0.0 ? line[i] + 0.5 * slope(i) : line[i + 1] - 0.5 * slope(i + 1));
        }
        for (std::size_t i = 0; i < n; ++i) out[g.index(i, j, k)] = -(gface[i + 1] - gface[i]) / h;
      }
  };
  parallel_for(F.nx, op_->workers(), [&](std::size_t b, std::size_t e) {
    std::vector<double> k(sz), f1(sz);
    for (std::size_t c = b; c < e; ++c) {
      if (force[c] == 0.0) continue;
      auto f = F.cell(c);
      rhs(f, force[c], k);
      for (std::size_t a = 0; a < sz; ++a) f1[a] = f[a] + dt * k[a];
      rhs(f1, force[c], k);
      for (std::size_t a = 0; a < sz; ++a) f[a] = 0.5 * (f[a] + f1[a] + dt * k[a]);
    }
  });
}

int KineticSolver1D::collide(DistributionField& F, double dt) const {
  if (!opt_.collisions) return 0;
  bool full = calls_++ % std::max(1, opt_.refresh_every) == 0;
  DistributionField k, F1 = F;
  rho_ = collision_spectral_radius(*op_, F, eigvec_, eigvec_.empty() ? 20 : full ? 6 : 1, &k);
  int sub = std::max(1, static_cast<int>(std::ceil(dt * rho_ / opt_.eps)));
  double tau = dt / sub;
  for (int it = 0; it < sub; ++it) {
    if (it > 0) op_->collide_self(F, k);
    for (std::size_t i = 0; i < F.values.size(); ++i) F1.values[i] = F.values[i] + tau / opt_.eps * k.values[i];
    op_->collide_self(F1, k);
    for (std::size_t i = 0; i < F.values.size(); ++i)
      F.values[i] = 0.5 * (F.values[i] + F1.values[i] + tau / opt_.eps * k.values[i]);
  }
  return sub;
}

int KineticSolver1D::step_rlan(DistributionField& F, double dt) const {
  check_cfl(dt);
  if (opt_.transport) transport(F, 0.5 * dt);
  int sub = collide(F, dt);
  if (opt_.transport) transport(F, 0.5 * dt);
  return sub;
}

std::vector<double> KineticSolver1D::gauss_field(const DistributionField& F, double nbar) const {
  const MomentumGrid& g = op_->grid();
  check_grid(F, g);
  std::vector<double> q(nx_);
  double net = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < nx_; ++i) {
    double rho = g.integrate(F.cell(i));
    q[i] = nbar - rho;
    net += q[i];
    tot += rho;
  }
  if (std::abs(net) > 1e-12 * std::max(tot, nbar * nx_))
    throw DomainError("gauss: initial data are not neutral, mean charge " + format_double(net / nx_));
  std::vector<double> E(nx_);
  double run = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < nx_; ++i) {
    run += kFourPi * dx() * q[i];
    E[i] = run;
    mean += run;
  }
  mean /= static_cast<double>(nx_);
  for (double& e : E) e -= mean;
  return E;
}

double KineticSolver1D::gauss_residual(const DistributionField& F, const std::vector<double>& E,
                                       double nbar) const {
  const MomentumGrid& g = op_->grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < nx_; ++i) {
    double div = (E[i] - E[(i + nx_ - 1) % nx_]) / dx();
    worst = std::max(worst, std::abs(div - kFourPi * (nbar - g.integrate(F.cell(i)))));
  }
  return worst;
}

int KineticSolver1D::step_vlasov_ampere(DistributionField& F, std::vector<double>& E, double nbar, double dt) const {
  check_cfl(dt);
  if (E.size() != nx_) throw GridMismatch("vlasov: one field value per face expected");
  auto half_transport = [&] {
    if (!opt_.transport) return;
    std::vector<double> phi(nx_, 0.0);
    transport(F, 0.5 * dt, &phi);
    for (std::size_t i = 0; i < nx_; ++i) E[i] += kFourPi * phi[i];
  };
  // electrons: dp/dt = -E, so dF/dt = -d_{p1}(-E F)
  auto half_kick = [&] {
    std::vector<double> force(nx_);
    for (std::size_t i = 0; i < nx_; ++i) force[i] = -0.5 * (E[i] + E[(i + nx_ - 1) % nx_]);
    kick(F, force, 0.5 * dt);
  };
  half_transport();
  half_kick();
  int sub = collide(F, dt);
  half_kick();
  half_transport();
  double r = gauss_residual(F, E, nbar);
  if (r > opt_.gauss_abort) throw MonitorFailure("Gauss residual " + format_double(r) + " above abort level", -1);
  return sub;
}

MonitorRow KineticSolver1D::monitor(const DistributionField& F, long step, double t, const std::vector<double>* E,
                                    double nbar) const {
  const MomentumGrid& g = op_->grid();
  MonitorRow r;
  r.step = step;
  r.t = t;
  for (std::size_t i = 0; i < nx_; ++i) {
    Moments m = moments(F.cell(i), g);
    r.mass += m.m0 * dx();
    for (int d = 0; d < 3; ++d) r.momentum[d] += m.m1[d] * dx();
    r.energy += m.m2 * dx();
    r.entropy += entropy(F.cell(i), g) * dx();
  }
  r.min_f = F.min();
  r.max_f = F.max();
  if (E) {
    r.gauss = gauss_residual(F, *E, nbar);
    for (double e : *E) r.field_energy += e * e * dx() / (2.0 * kFourPi);
  }
  return r;
}

}  // namespace rlk
