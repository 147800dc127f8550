#include "rlk/hilbert.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "rlk/csv.hpp"
#include "rlk/error.hpp"
#include "rlk/parallel.hpp"

namespace rlk {

namespace {

using Mat5 = Eigen::Matrix<double, 5, 5>;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::array<double, 5> invariants(const MomentumGrid& g, std::size_t a) {
  const Vec3& p = g.p(a);
  return {1.0, p[0], p[1], p[2], g.p0(a)};
}

// sum psi_k phat1 sqrt(M) g w
Coeff5 micro_flux(const LinearizedOperator& L, const std::vector<double>& g) {
  const MomentumGrid& gr = L.grid();
  Coeff5 f = Coeff5::Zero();
  for (std::size_t a = 0; a < gr.size(); ++a) {
    auto psi = invariants(gr, a);
    double v = gr.phat(a)[0] * L.sqrtM()[a] * g[a];
    for (int k = 0; k < 5; ++k) f(k) += psi[k] * v;
  }
  return f * gr.weight();
}

// G0 = sum psi phi^T M w, G1 = sum psi phat1 phi^T M w with phi = psi = (1, p, p0)
void coefficient_maps(const MomentumGrid& g, const FluidState& s, Mat5& G0, Mat5& G1) {
  std::vector<double> M(g.size());
  juttner_into(s, g, M);
  G0.setZero();
  G1.setZero();
  for (std::size_t a = 0; a < g.size(); ++a) {
    auto psi = invariants(g, a);
    double v = g.phat(a)[0];
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) {
        double m = psi[r] * psi[c] * M[a];
        G0(r, c) += m;
        G1(r, c) += v * m;
      }
  }
  G0 *= g.weight();
  G1 *= g.weight();
}

}  // namespace

std::vector<BackgroundSlice> background_slices(const EulerSolver& fluid, const std::vector<FluidState>& prim) {
  auto dx = fluid.dx_primitive(prim);
  auto dt = fluid.dt_primitive(prim);
  std::vector<BackgroundSlice> out(prim.size());
  for (std::size_t i = 0; i < prim.size(); ++i) out[i] = {prim[i], dx[i], dt[i]};
  return out;
}

std::vector<double> hilbert_forcing(const LinearizedOperator& L, const BackgroundSlice& s) {
  const MomentumGrid& g = L.grid();
  auto dM = juttner_jacobian(s.state, g);
  std::vector<double> r(g.size());
  for (std::size_t a = 0; a < g.size(); ++a) {
    double v = g.phat(a)[0], acc = 0.0;
    for (int k = 0; k < 5; ++k) acc += dM[k][a] * (s.dt_prim[k] + v * s.dx_prim[k]);
    r[a] = L.sqrtM()[a] > 0.0 ? -acc / L.sqrtM()[a] : 0.0;
  }
  return r;
}

MicroSolve solve_micro(const LinearizedOperator& L, const std::vector<double>& r, const CgOptions& opt) {
  const NullSpaceBasis& B = L.basis();
  const std::size_t n = r.size();
  MicroSolve out;
  out.r = r;
  out.g.assign(n, 0.0);
  double rn = norm(r);
  if (rn == 0.0) return out;
  auto b = B.project_micro(r);
  std::vector<double> Pr(n);
  for (std::size_t a = 0; a < n; ++a) Pr[a] = r[a] - b[a];
  out.orth_ratio = norm(Pr) / rn;
  if (out.orth_ratio > opt.orth_tol)
    throw NotOrthogonal("hilbert: forcing has a macroscopic component", out.orth_ratio);

  // CG on the micro subspace, where L is symmetric positive definite
  std::vector<double>& x = out.g;
  std::vector<double> res = b, d = b, Ld(n);
  double rr = dot(res, res), target = opt.rel_tol * rn;
  int it = 0;
  while (std::sqrt(rr) > target) {
    if (it >= opt.max_iter) throw NonConvergence("hilbert: CG did not converge", std::sqrt(rr) / rn, it);
    L.apply_L(d, Ld);
    Ld = B.project_micro(Ld);
    double dLd = dot(d, Ld);
    if (!(dLd > 0.0)) throw NonConvergence("hilbert: L not positive on the search direction", std::sqrt(rr) / rn, it);
    double alpha = rr / dLd;
    for (std::size_t a = 0; a < n; ++a) {
      x[a] += alpha * d[a];
      res[a] -= alpha * Ld[a];
    }
    // refresh the true residual now and then against drift
    if (++it % 50 == 0) {
      x = B.project_micro(x);
      auto Lx = B.project_micro(L.apply_L(x));
      for (std::size_t a = 0; a < n; ++a) res[a] = b[a] - Lx[a];
    }
    double rr_new = dot(res, res);
    double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t a = 0; a < n; ++a) d[a] = res[a] + beta * d[a];
  }
  x = B.project_micro(x);
  out.iterations = it;
  auto Lx = L.apply_L(x);
  for (std::size_t a = 0; a < n; ++a) Lx[a] -= b[a];
  out.residual = norm(Lx) / rn;
  return out;
}

MicroSolve build_F1_micro(const LinearizedOperator& L, const BackgroundSlice& s, const CgOptions& opt) {
  return solve_micro(L, hilbert_forcing(L, s), opt);
}

double balance_residual(const LinearizedOperator& L, const BackgroundSlice& s, const std::vector<double>& g) {
  auto r = hilbert_forcing(L, s);
  double rn = norm(r);
  if (rn == 0.0) return norm(g) == 0.0 ? 0.0 : INFINITY;
  // (I - P) M^{-1/2}(dt F0 + phat1 dx F0) = -(I - P) r
  auto b = L.basis().project_micro(r);
  auto Lg = L.apply_L(g);
  for (std::size_t a = 0; a < r.size(); ++a) Lg[a] -= b[a];
  return norm(Lg) / rn;
}

double fit_F1_decay(const LinearizedOperator& L, const std::vector<double>& g, double eta) {
  // |sqrt(M) g| <= C M^(1 - eta)  <=>  |g| <= C M^(1/2 - eta)
  double C = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    double m = L.M()[a];
    if (!(m > 0.0)) continue;
    C = std::max(C, std::abs(g[a]) * std::pow(m, eta - 0.5));
  }
  return C;
}

Mat5 transport_matrix(const LinearizedOperator& L, const FluidClosure& closure, const CgOptions& opt) {
  Mat5 K;
  for (int j = 0; j < 5; ++j) {
    BackgroundSlice s;
    s.state = L.state();
    s.dx_prim.fill(0.0);
    s.dx_prim[j] = 1.0;
    s.dt_prim = closure.time_derivative(s.state, s.dx_prim);
    auto sol = build_F1_micro(L, s, opt);
    K.col(j) = micro_flux(L, sol.g);
  }
  return K;
}

MacroEvolver::MacroEvolver(const CollisionOperator& op, const EulerSolver& fluid, std::vector<FluidState> background,
                           MacroOptions opt)
    : op_(&op), fluid_(&fluid), bg_(std::move(background)), opt_(opt) {
  if (bg_.size() != fluid.nx()) throw GridMismatch("hilbert: background size does not match the fluid grid");
  if (fluid.closure().kind() != Closure::Grid) throw DomainError("hilbert: the macro evolution needs the grid closure");
  // kappa frozen at the mean background state
  Prim5 mean{};
  for (const auto& s : bg_) {
    auto v = to_prim5(s);
    for (int k = 0; k < 5; ++k) mean[k] += v[k] / static_cast<double>(bg_.size());
  }
  LinearizedOperator L(op, from_prim5(mean));
  kappa_ = transport_matrix(L, fluid.closure(), opt_.cg);
  bg_cons_ = fluid.to_conserved(bg_);
  refresh();
}

void MacroEvolver::refresh() {
  const std::size_t n = bg_.size();
  J0_.resize(n);
  J1_.resize(n);
  J0inv_.resize(n);
  micro_flux_.resize(n);
  auto dx = fluid_->dx_primitive(bg_);
  for (std::size_t i = 0; i < n; ++i) {
    coefficient_maps(op_->grid(), bg_[i], J0_[i], J1_[i]);
    J0inv_[i] = J0_[i].inverse();
    Coeff5 d;
    for (int k = 0; k < 5; ++k) d(k) = dx[i][k];
    micro_flux_[i] = kappa_ * d;
  }
}

void MacroEvolver::rhs(const std::vector<Coeff5>& w, std::vector<Coeff5>& out) const {
  const std::size_t n = w.size();
  std::vector<Coeff5> flux(n);
  for (std::size_t i = 0; i < n; ++i) flux[i] = J1_[i] * (J0inv_[i] * w[i]) + micro_flux_[i];
  out.resize(n);
  const double c = 1.0 / (2.0 * fluid_->dx());
  for (std::size_t i = 0; i < n; ++i) out[i] = -(flux[(i + 1) % n] - flux[(i + n - 1) % n]) * c;
}

void MacroEvolver::step(std::vector<Coeff5>& c, double dt) {
  if (dt > max_dt() * (1.0 + 1e-12)) throw CflViolation("hilbert: dt exceeds 0.4 dx");
  const std::size_t n = c.size();
  if (n != bg_.size()) throw GridMismatch("hilbert: coefficient field size does not match the background");
  std::vector<Coeff5> w(n), k1, k2, k3, k4, tmp(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = J0_[i] * c[i];
  rhs(w, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * dt * k1[i];
  rhs(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + 0.5 * dt * k2[i];
  rhs(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = w[i] + dt * k3[i];
  rhs(tmp, k4);
  for (std::size_t i = 0; i < n; ++i) w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  if (opt_.evolve_background) {
    fluid_->step(bg_cons_, dt);
    bg_ = fluid_->to_primitive(bg_cons_);
    refresh();
  }
  for (std::size_t i = 0; i < n; ++i) c[i] = J0inv_[i] * w[i];
}

double MacroEvolver::l2(const std::vector<Coeff5>& c) const {
  double s = 0.0;
  for (const auto& v : c) s += v.squaredNorm();
  return std::sqrt(s * fluid_->dx());
}

std::vector<std::vector<Coeff5>> evolve_F1_macro(MacroEvolver& ev, std::vector<Coeff5> c0, double dt, long steps,
                                                 long every) {
  std::vector<std::vector<Coeff5>> out{c0};
  for (long s = 1; s <= steps; ++s) {
    ev.step(c0, dt);
    if (every > 0 && s % every == 0) out.push_back(c0);
  }
  return out;
}

std::vector<FluidState> limit_background(const LimitOptions& o, const EulerSolver& fluid) {
  std::vector<FluidState> bg(fluid.nx());
  const double k = 2.0 * std::numbers::pi / o.length;
  for (std::size_t i = 0; i < bg.size(); ++i) {
    double s = o.uniform_background ? 0.0 : o.amplitude * std::sin(k * fluid.x(i));
    bg[i] = FluidState{1.0 + s, {o.u0 + s, 0.0, 0.0}, o.T0 * (1.0 + s)};
  }
  return bg;
}

double limit_phi(const LimitOptions& o, double x, const Vec3& p, double T) {
  if (o.zero_phi) return 0.0;
  const double k = 2.0 * std::numbers::pi / o.length;
  double s = std::sqrt(T * (1.0 + T));
  return o.phi_amplitude * 0.5 * (std::sin(k * x) * std::tanh(p[0] / s) + std::cos(k * x) * std::cos(p[1] / s));
}

namespace {

// sqrt(sum_{l <= 2} |dx^l u|^2) with periodic centered differences
double h2_surrogate(const DistributionField& u, double dx, double weight) {
  const std::size_t nx = u.nx, sz = u.nodes;
  double s = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    auto l = u.cell((x + nx - 1) % nx), c = u.cell(x), r = u.cell((x + 1) % nx);
    for (std::size_t a = 0; a < sz; ++a) {
      double d1 = (r[a] - l[a]) / (2.0 * dx), d2 = (r[a] - 2.0 * c[a] + l[a]) / (dx * dx);
      s += c[a] * c[a] + d1 * d1 + d2 * d2;
    }
  }
  return std::sqrt(s * weight * dx);
}

LimitCase run_limit_case(const CollisionOperator& op, double eps, const LimitOptions& o, const WeightSpec& ws) {
  auto t0 = std::chrono::steady_clock::now();
  const MomentumGrid& g = op.grid();
  const std::size_t sz = g.size();
  EulerSolver fluid(o.nx, o.length, FluidClosure(g));
  auto bg = limit_background(o, fluid);
  auto U = fluid.to_conserved(bg);
  KineticOptions ko;
  ko.eps = eps;
  KineticSolver1D ks(op, o.nx, o.length, ko);
  EnergyEvaluator ev(op, ws, ks.dx());

  DistributionField F = juttner(bg, g);
  for (std::size_t x = 0; x < o.nx; ++x) {
    auto c = F.cell(x);
    for (std::size_t a = 0; a < sz; ++a) c[a] *= 1.0 + eps * limit_phi(o, ks.x(x), g.p(a), bg[x].T);
  }

  LimitCase out;
  out.eps = eps;
  long steps = static_cast<long>(std::ceil(o.t_end / ks.max_dt() - 1e-9));
  double dt = o.t_end / static_cast<double>(steps);
  out.steps = steps;

  MonitorLog log;
  if (!o.log_dir.empty()) {
    std::filesystem::create_directories(o.log_dir);
    char name[64];
    std::snprintf(name, sizeof name, "monitor_eps_%.6g.csv", eps);
    log = MonitorLog((std::filesystem::path(o.log_dir) / name).string());
  }

  DistributionField u(o.nx, sz), fR(o.nx, sz);
  auto measure = [&](long n, double t) {
    DistributionField M = juttner(bg, g);
    for (std::size_t i = 0; i < F.values.size(); ++i) {
      double m = M.values[i];
      u.values[i] = m > 0.0 ? (F.values[i] - m) / std::sqrt(m) : 0.0;
      fR.values[i] = u.values[i] / eps;
    }
    double nrm = h2_surrogate(u, ks.dx(), g.weight());
    out.sup_norm = std::max(out.sup_norm, nrm);
    out.final_norm = nrm;
    if (n % o.report_every == 0 || n == steps) out.energy.push_back(ev.evaluate(t, eps, fR, bg));
  };

  measure(0, 0.0);
  for (long n = 1; n <= steps; ++n) {
    int sub = ks.step_rlan(F, dt);
    out.max_substeps = std::max(out.max_substeps, sub);
    fluid.step(U, dt);
    bg = fluid.to_primitive(U);
    double t = n * dt;
    check_field(F.values, ko.positivity_tol, n);
    MonitorRow row = ks.monitor(F, n, t);
    row.substeps = sub;
    log.add(row);
    measure(n, t);
  }
  out.monitors = log.rows();
  out.bound = energy_bound(out.energy, eps, o.k);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace

LimitStudy limit_study(const CollisionOperator& op, const std::vector<double>& eps_list, const LimitOptions& o) {
  if (eps_list.empty()) throw ConfigError("eps", "need at least one value");
  for (double e : eps_list)
    if (!(e > 0.0)) throw ConfigError("eps", "values must be positive");
  if (o.nx < 4) throw ConfigError("nx", "need at least 4 cells");
  if (!(o.t_end > 0.0)) throw ConfigError("t_end", "must be positive");
  if (!(o.T0 > 0.0)) throw ConfigError("T0", "must be positive");

  EulerSolver fluid(o.nx, o.length, FluidClosure(op.grid()));
  auto bg = limit_background(o, fluid);
  double supT = 0.0;
  for (const auto& s : bg) supT = std::max(supT, s.T);
  WeightSpec ws = o.weights.Tc > 0.0 ? o.weights : WeightSpec{o.weights.Nc, default_weights(supT).Tc};
  ws.validate();

  LimitStudy st;
  st.gate = admissibility_gate(ws, fluid.gradients(bg).weighted, o.t_end);
  st.cases.resize(eps_list.size());
  parallel_for(eps_list.size(), o.workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) st.cases[i] = run_limit_case(op, eps_list[i], o, ws);
  });

  // least-squares slope of log sup_norm against log eps
  if (st.cases.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = static_cast<double>(st.cases.size());
    for (const auto& c : st.cases) {
      double x = std::log(c.eps), y = std::log(c.sup_norm);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    st.order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  auto sorted = st.cases;
  std::sort(sorted.begin(), sorted.end(), [](const LimitCase& a, const LimitCase& b) { return a.eps > b.eps; });
  st.strictly_decreasing = sorted.size() >= 2;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (!(sorted[i].sup_norm < sorted[i - 1].sup_norm)) st.strictly_decreasing = false;
  return st;
}

void write_limit_csv(const std::string& path, const LimitStudy& s) {
  std::vector<std::string> head{"eps", "sup_norm", "final_norm", "sup_E", "int_D", "E0", "rhs", "C", "steps",
                                "max_substeps"};
  for (const char* n : EnergyReport::e_names()) head.push_back(std::string("sup_") + n);
  for (const char* n : EnergyReport::d_names()) head.push_back(std::string("int_") + n);
  head.push_back("wall_seconds");
  CsvWriter w(path, head);
  for (const auto& c : s.cases) {
    std::vector<double> row{c.eps, c.sup_norm, c.final_norm, c.bound.sup_E, c.bound.int_D, c.bound.E0, c.bound.rhs,
                            c.bound.C, static_cast<double>(c.steps), static_cast<double>(c.max_substeps)};
    std::array<double, EnergyReport::kE> supE{};
    std::array<double, EnergyReport::kD> intD{};
    for (std::size_t i = 0; i < c.energy.size(); ++i) {
      for (std::size_t k = 0; k < EnergyReport::kE; ++k) supE[k] = std::max(supE[k], c.energy[i].E[k]);
      if (i == 0) continue;
      double h = c.energy[i].t - c.energy[i - 1].t;
      for (std::size_t k = 0; k < EnergyReport::kD; ++k)
        intD[k] += 0.5 * h * (c.energy[i].D[k] + c.energy[i - 1].D[k]);
    }
    row.insert(row.end(), supE.begin(), supE.end());
    row.insert(row.end(), intD.begin(), intD.end());
    row.push_back(c.wall_seconds);
    w.row(row);
  }
}

}  // namespace rlk
