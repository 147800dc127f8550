#include "rlk/drivers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "rlk/collision.hpp"
#include "rlk/csv.hpp"
#include "rlk/diagnostics.hpp"
#include "rlk/equilibrium.hpp"
#include "rlk/error.hpp"
#include "rlk/euler_fluid.hpp"
#include "rlk/hilbert.hpp"
#include "rlk/kinetic_solver.hpp"
#include "rlk/linearized.hpp"
#include "rlk/parallel.hpp"
#include "rlk/snapshot.hpp"
#include "rlk/special_functions.hpp"

namespace rlk {

namespace fs = std::filesystem;
using nlohmann::json;

bool RunSummary::passed() const {
  if (!error.empty()) return false;
  return std::all_of(invariants.begin(), invariants.end(), [](const Invariant& i) { return i.pass; });
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"relax", "limit", "expand", "fluid", "spectrum", "check", "report"};
  return names;
}

namespace {

constexpr double kEpsMach = std::numeric_limits<double>::epsilon();

struct Run {
  const RunConfig& cfg;
  fs::path dir;
  RunSummary& sum;
  int workers;

  std::string path(const std::string& name) {
    sum.artifacts.push_back(name);
    fs::path p = dir / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p.string();
  }
  void below(const std::string& name, double value, double tol) { sum.invariants.push_back({name, value, tol, value <= tol}); }
  void above(const std::string& name, double value, double tol) { sum.invariants.push_back({name, value, tol, value > tol}); }
  void measure(const std::string& name, double v) { sum.measured.emplace_back(name, v); }
};

Stencil stencil_of(const RunConfig& c) {
  return c.grid.stencil == "centered" ? Stencil::Centered : Stencil::OneSided;
}

// Automatic p_max: the tail rule, but never so wide that the spacing exceeds
// 2.5 T. Coarser tails lose positivity in the explicit collision steps; the
// tail rule with tail = 1 reduces to the plain thermal-width floor.
MomentumGrid make_grid(const RunConfig& c, double t_max, double u_max, double t_min = 0.0) {
  if (c.grid.p_max > 0.0) return MomentumGrid(c.grid.N, c.grid.p_max, stencil_of(c));
  const double n = static_cast<double>(c.grid.N);
  double resolved = 1.25 * n * (t_min > 0.0 ? t_min : t_max);
  double pm = std::max(default_p_max(t_max, u_max, c.grid.N, 1.0),
                       std::min(default_p_max(t_max, u_max, c.grid.N), resolved));
  return MomentumGrid(c.grid.N, pm, stencil_of(c));
}

CollisionOptions collision_options(const RunConfig& c, int workers) {
  CollisionOptions o;
  o.cache = parse_kernel_cache(c.solver.kernel_cache);
  o.workers = workers;
  return o;
}

void write_grid_json(Run& r, const MomentumGrid& g, std::size_t nx, double dx) {
  json j{{"N", g.n()}, {"p_max", g.p_max()}, {"stencil", r.cfg.grid.stencil}, {"Nx", nx}, {"dx", dx}};
  std::ofstream(r.path("grid.json")) << j.dump(2) << "\n";
}

void snapshot(Run& r, const DistributionField& f, std::size_t n, long step) {
  char name[64];
  std::snprintf(name, sizeof name, "snapshots/snap_%08ld.rlk", step);
  write_snapshot(r.path(name), f, n);
}

std::vector<FluidState> wave_background(const RunConfig& c, std::size_t nx, double length) {
  std::vector<FluidState> bg(nx);
  const auto& b = c.background;
  for (std::size_t i = 0; i < nx; ++i) {
    double x = (static_cast<double>(i) + 0.5) * length / static_cast<double>(nx);
    double s = b.amplitude * std::sin(2.0 * std::numbers::pi * x / length);
    bg[i] = FluidState{b.n * (1.0 + s), {b.u[0] + s, b.u[1], b.u[2]}, b.T * (1.0 + s)};
  }
  return bg;
}

double speed(const std::array<double, 3>& u) { return std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]); }

// conservation drifts of a monitor series against the first row
struct Drift {
  double mass = 0.0, momentum = 0.0, energy = 0.0, total_energy = 0.0, positivity = 0.0, gauss = 0.0;
};

Drift drifts(const std::vector<MonitorRow>& rows, const MonitorRow& ref, double momentum_scale) {
  Drift d;
  for (const auto& r : rows) {
    d.mass = std::max(d.mass, std::abs(r.mass - ref.mass) / std::abs(ref.mass));
    double dp = 0.0;
    for (int k = 0; k < 3; ++k) dp += (r.momentum[k] - ref.momentum[k]) * (r.momentum[k] - ref.momentum[k]);
    d.momentum = std::max(d.momentum, std::sqrt(dp) / momentum_scale);
    d.energy = std::max(d.energy, std::abs(r.energy - ref.energy) / std::abs(ref.energy));
    d.total_energy =
        std::max(d.total_energy, std::abs(r.total_energy() - ref.total_energy()) / std::abs(ref.total_energy()));
    if (r.max_f > 0.0) d.positivity = std::max(d.positivity, -r.min_f / r.max_f);
    d.gauss = std::max(d.gauss, r.gauss);
  }
  return d;
}

// sum |p| F w over all cells, the scale for momentum drifts
double momentum_scale(const DistributionField& F, const MomentumGrid& g, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < F.values.size(); ++i) {
    const Vec3& p = g.p(i % g.size());
    s += std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) * std::abs(F.values[i]);
  }
  return s * g.weight() * dx;
}

// rescale F so its cell mean density equals the ion background exactly; the
// quadrature density of a Juttner state is off by the grid error
void neutralize(DistributionField& F, const MomentumGrid& g, double nbar) {
  double tot = 0.0;
  for (std::size_t i = 0; i < F.nx; ++i) tot += moments(F.cell(i), g).m0;
  double s = nbar * static_cast<double>(F.nx) / tot;
  for (double& v : F.values) v *= s;
}

void relax_homogeneous_cmd(Run& r) {
  const RunConfig& c = r.cfg;
  const double T = c.initial.T, u = c.initial.u, n = c.background.n;
  MomentumGrid grid = make_grid(c, T, 1.2 * std::abs(u));
  CollisionOperator op(grid, collision_options(c, r.workers));
  const std::size_t sz = grid.size();
  DistributionField f(1, sz);
  std::vector<double> b(sz);
  juttner_into(FluidState{0.5 * n, {u, 0, 0}, T}, grid, f.cell(0));
  juttner_into(FluidState{0.5 * n, {-u, 0.5 * u, 0}, T}, grid, b);
  for (std::size_t a = 0; a < sz; ++a) f.values[a] += b[a];
  FluidState eq_state = fit_maxwellian_discrete(moments(f.values, grid), grid);
  std::vector<double> eq(sz);
  juttner_into(eq_state, grid, eq);
  write_grid_json(r, grid, 1, 1.0);

  const double eps = c.physics.eps;
  RelaxOptions o;
  o.dt = c.solver.dt > 0.0 ? c.solver.dt : collision_dt(op, f.values, eps);
  o.steps = c.solver.steps;
  o.positivity_tol = c.solver.positivity_tol;
  o.log_path = r.path("monitor.csv");
  o.snapshot_every = c.solver.snapshot_every;
  o.on_snapshot = [&](long step, double, std::span<const double> v) {
    DistributionField s(1, sz);
    std::copy(v.begin(), v.end(), s.values.begin());
    snapshot(r, s, grid.n(), step);
  };
  MonitorRow ref;
  {
    Moments m = moments(f.values, grid);
    ref.mass = m.m0;
    ref.momentum = m.m1;
    ref.energy = m.m2;
  }
  RelaxResult res = relax_homogeneous(op, f.values, eps, o);
  DistributionField fin(1, sz);
  fin.values = res.f;
  snapshot(r, fin, grid.n(), c.solver.steps);

  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < sz; ++a) {
    num += (res.f[a] - eq[a]) * (res.f[a] - eq[a]);
    den += eq[a] * eq[a];
  }
  Drift d = drifts(res.log, ref, momentum_scale(f, grid, 1.0));
  r.below("mass_drift", d.mass, 1e-13);
  r.below("momentum_drift", d.momentum, 1e-8);
  r.below("energy_drift", d.energy, 1e-8);
  r.below("entropy_increases", static_cast<double>(res.entropy_increases), 0.0);
  r.below("negativity", d.positivity, c.solver.positivity_tol);
  r.measure("distance_to_juttner", std::sqrt(num / den));
  r.measure("dt", o.dt);
  r.measure("max_substeps", res.max_substeps);
  r.measure("max_entropy_increase", res.max_entropy_increase);
  r.measure("p_max", grid.p_max());
}

void relax_slab_cmd(Run& r, bool field) {
  const RunConfig& c = r.cfg;
  const auto& bgc = c.background;
  const double amp = field ? 0.0 : std::abs(bgc.amplitude);
  MomentumGrid grid = make_grid(c, bgc.T * (1.0 + amp), speed(bgc.u) + amp, bgc.T * (1.0 - amp));
  CollisionOperator op(grid, collision_options(c, r.workers));
  KineticOptions ko;
  ko.eps = c.physics.eps;
  ko.limiter = parse_limiter(c.solver.limiter);
  ko.positivity_tol = c.solver.positivity_tol;
  if (field) ko.lattice_velocity = true;
  KineticSolver1D ks(op, c.grid.Nx, c.grid.L, ko);
  write_grid_json(r, grid, ks.nx(), ks.dx());

  std::vector<FluidState> bg;
  if (field) {
    for (std::size_t i = 0; i < ks.nx(); ++i) {
      double s = c.initial.perturbation * std::cos(2.0 * std::numbers::pi * ks.x(i) / c.grid.L);
      bg.push_back(FluidState{c.physics.nbar * (1.0 + s), bgc.u, bgc.T});
    }
  } else {
    bg = wave_background(c, ks.nx(), c.grid.L);
  }
  DistributionField F = juttner(bg, grid);
  std::vector<double> E;
  const double nbar = c.physics.nbar;
  if (field) {
    neutralize(F, grid, nbar);
    E = ks.gauss_field(F, nbar);
  }
  const double dt = c.solver.dt > 0.0 ? c.solver.dt : ks.max_dt();

  MonitorLog log(r.path("monitor.csv"));
  MonitorRow ref = ks.monitor(F, 0, 0.0, field ? &E : nullptr, nbar);
  log.add(ref);
  int max_sub = 0;
  for (long n = 1; n <= c.solver.steps; ++n) {
    int sub = field ? ks.step_vlasov_ampere(F, E, nbar, dt) : ks.step_rlan(F, dt);
    max_sub = std::max(max_sub, sub);
    check_field(F.values, c.solver.positivity_tol, n);
    MonitorRow row = ks.monitor(F, n, n * dt, field ? &E : nullptr, nbar);
    row.substeps = sub;
    log.add(row);
    if (c.solver.snapshot_every > 0 && n % c.solver.snapshot_every == 0) snapshot(r, F, grid.n(), n);
  }
  snapshot(r, F, grid.n(), c.solver.steps);
  Drift d = drifts(log.rows(), ref, momentum_scale(F, grid, ks.dx()));
  r.below("mass_drift", d.mass, 1e-12);
  // the field force changes the electron momentum
  if (!field) r.below("momentum_drift", d.momentum, 1e-10);
  if (field) {
    r.below("gauss_residual", d.gauss, 1e-8);
    r.below("total_energy_drift", d.total_energy, 1e-6);
  } else {
    r.below("energy_drift", d.energy, 1e-12);
  }
  r.below("negativity", d.positivity, c.solver.positivity_tol);
  r.measure("dt", dt);
  r.measure("max_substeps", max_sub);
  r.measure("p_max", grid.p_max());
}

void relax_cmd(Run& r) {
  KineticMode m = parse_kinetic_mode(r.cfg.solver.kinetic_mode);
  if (m == KineticMode::Homogeneous)
    relax_homogeneous_cmd(r);
  else
    relax_slab_cmd(r, m == KineticMode::VlasovAmpere);
}

void limit_cmd(Run& r) {
  const RunConfig& c = r.cfg;
  LimitOptions o;
  o.nx = c.grid.Nx;
  o.length = c.grid.L;
  o.t_end = c.solver.t_end;
  o.amplitude = c.background.amplitude;
  o.phi_amplitude = c.initial.phi_amplitude;
  o.T0 = c.background.T;
  o.u0 = c.background.u[0];
  o.k = c.physics.k;
  o.report_every = c.solver.report_every;
  o.weights = WeightSpec{c.weights.Nc, c.weights.Tc};
  o.log_dir = (r.dir / "monitors").string();
  o.workers = r.workers;
  double amp = std::abs(o.amplitude);
  MomentumGrid grid = make_grid(c, o.T0 * (1.0 + amp), std::abs(o.u0) + amp, o.T0 * (1.0 - amp));
  // eps cases already run in parallel; keep each contraction serial
  CollisionOperator op(grid, collision_options(c, 1));
  write_grid_json(r, grid, o.nx, o.length / static_cast<double>(o.nx));
  LimitStudy st = limit_study(op, c.physics.eps_list, o);
  for (const auto& cs : st.cases) {
    char name[64];
    std::snprintf(name, sizeof name, "monitors/monitor_eps_%.6g.csv", cs.eps);
    r.sum.artifacts.push_back(name);
  }
  write_limit_csv(r.path("convergence.csv"), st);
  double worst_neg = 0.0, Cmax = 0.0, Cmin = INFINITY;
  for (const auto& cs : st.cases) {
    char name[64];
    std::snprintf(name, sizeof name, "energy_eps_%.6g.csv", cs.eps);
    write_energy_csv(r.path(name), cs.energy);
    for (const auto& m : cs.monitors)
      if (m.max_f > 0.0) worst_neg = std::max(worst_neg, -m.min_f / m.max_f);
    Cmax = std::max(Cmax, cs.bound.C);
    Cmin = std::min(Cmin, cs.bound.C);
  }
  r.below("not_strictly_decreasing", st.strictly_decreasing ? 0.0 : 1.0, 0.0);
  if (st.cases.size() >= 2) r.above("empirical_order", st.order, 0.8);
  r.below("negativity", worst_neg, c.solver.positivity_tol);
  r.measure("order", st.order);
  r.measure("single_C", Cmax);
  r.measure("C_spread", Cmax / Cmin);
  r.measure("gate_holds", st.gate.holds ? 1.0 : 0.0);
  r.measure("gate_Z", st.gate.Z);
  r.measure("gate_t0_max", st.gate.t0_max);
  r.measure("p_max", grid.p_max());
}

void expand_cmd(Run& r) {
  const RunConfig& c = r.cfg;
  const auto& bgc = c.background;
  double amp = std::abs(bgc.amplitude);
  MomentumGrid grid = make_grid(c, bgc.T * (1.0 + amp), speed(bgc.u) + amp, bgc.T * (1.0 - amp));
  CollisionOperator op(grid, collision_options(c, r.workers));
  EulerOptions eo;
  eo.limiter = parse_limiter(c.solver.limiter);
  eo.workers = r.workers;
  EulerSolver fluid(c.grid.Nx, c.grid.L, FluidClosure(grid), eo);
  auto bg = wave_background(c, fluid.nx(), c.grid.L);
  auto slices = background_slices(fluid, bg);
  const std::size_t ns = std::min(c.expand.slices, fluid.nx());

  struct Row {
    std::vector<double> v;
  };
  std::vector<Row> rows(ns);
  parallel_for(ns, r.workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      std::size_t i = k * fluid.nx() / ns;
      LinearizedOperator L(op, slices[i].state);
      auto sol = build_F1_micro(L, slices[i]);
      double bal = balance_residual(L, slices[i], sol.g);
      double decay = fit_F1_decay(L, sol.g);
      BackgroundSlice bad = slices[i];
      for (double& v : bad.dt_prim) v *= 1.0 + c.expand.corrupt;
      double bad_ratio = 0.0, detected = 0.0;
      try {
        build_F1_micro(L, bad);
      } catch (const NotOrthogonal& e) {
        bad_ratio = e.ratio;
        detected = 1.0;
      }
      double rn = 0.0;
      for (double x : sol.r) rn += x * x;
      rows[k].v = {static_cast<double>(i), fluid.x(i), std::sqrt(rn), sol.orth_ratio,
                   static_cast<double>(sol.iterations), sol.residual, bal, decay, bad_ratio, detected};
    }
  });
  CsvWriter w(r.path("expand.csv"), {"cell", "x", "forcing_norm", "orth_ratio", "cg_iterations", "cg_residual",
                                     "balance_residual", "decay_C", "corrupted_ratio", "corrupted_detected"});
  double worst_bal = 0.0, worst_orth = 0.0, missed = 0.0, decay = 0.0;
  for (const auto& row : rows) {
    w.row(row.v);
    worst_orth = std::max(worst_orth, row.v[3]);
    worst_bal = std::max(worst_bal, row.v[6]);
    decay = std::max(decay, row.v[7]);
    missed += 1.0 - row.v[9];
  }
  r.below("balance_residual", worst_bal, 1e-7);
  r.below("orthogonality_ratio", worst_orth, 1e-6);
  r.below("corruptions_missed", missed, 0.0);
  r.measure("F1_decay_C", decay);

  // macroscopic part of F1 from zero data over t_end
  MacroEvolver ev(op, fluid, bg);
  long steps = static_cast<long>(std::ceil(c.solver.t_end / ev.max_dt() - 1e-9));
  double dt = c.solver.t_end / static_cast<double>(steps);
  std::vector<Coeff5> coef(fluid.nx(), Coeff5::Zero());
  CsvWriter m(r.path("macro.csv"), {"t", "l2"});
  m.row({0.0, 0.0});
  for (long s = 1; s <= steps; ++s) {
    ev.step(coef, dt);
    m.row({s * dt, ev.l2(coef)});
  }
  r.measure("macro_l2_final", ev.l2(coef));
  r.measure("p_max", grid.p_max());
}

void fluid_cmd(Run& r) {
  const RunConfig& c = r.cfg;
  const auto& bgc = c.background;
  double amp = std::abs(bgc.amplitude);
  std::unique_ptr<MomentumGrid> grid;
  FluidClosure closure;
  if (c.solver.closure == "grid") {
    grid = std::make_unique<MomentumGrid>(make_grid(c, bgc.T * (1.0 + amp), speed(bgc.u) + amp));
    closure = FluidClosure(*grid);
  }
  EulerOptions eo;
  eo.limiter = parse_limiter(c.solver.limiter);
  eo.workers = r.workers;
  EulerSolver fluid(c.grid.Nx, c.grid.L, closure, eo);
  auto bg = wave_background(c, fluid.nx(), c.grid.L);
  auto U = fluid.to_conserved(bg);
  r.measure("gradient_Z", fluid.gradients(bg).weighted);
  double dt = c.solver.dt > 0.0 ? c.solver.dt : fluid.max_dt();
  long steps = static_cast<long>(std::ceil(c.solver.t_end / dt - 1e-9));
  dt = c.solver.t_end / static_cast<double>(steps);

  CsvWriter w(r.path("totals.csv"), {"t", "D", "m1", "m2", "m3", "E"});
  ConservedState t0 = fluid.totals(U);
  auto row = [&](double t, const ConservedState& s) { w.row({t, s.D, s.m[0], s.m[1], s.m[2], s.E}); };
  row(0.0, t0);
  double drift = 0.0;
  for (long s = 1; s <= steps; ++s) {
    fluid.step(U, dt);
    ConservedState t = fluid.totals(U);
    row(s * dt, t);
    double dm = 0.0;
    for (int k = 0; k < 3; ++k) dm = std::max(dm, std::abs(t.m[k] - t0.m[k]));
    drift = std::max({drift, std::abs(t.D - t0.D) / std::abs(t0.D), std::abs(t.E - t0.E) / std::abs(t0.E),
                      dm / std::abs(t0.E)});
  }
  write_fluid_csv(r.path("fluid.csv"), fluid, fluid.to_primitive(U));

  // a uniform state must not move at all
  std::vector<FluidState> flat(fluid.nx(), FluidState{bgc.n, bgc.u, bgc.T});
  auto V = fluid.to_conserved(flat), V0 = V;
  for (int s = 0; s < 10; ++s) fluid.step(V, fluid.max_dt());
  double moved = 0.0;
  for (std::size_t i = 0; i < V.size(); ++i) {
    moved = std::max(moved, std::abs(V[i].D - V0[i].D) / V0[i].D);
    moved = std::max(moved, std::abs(V[i].E - V0[i].E) / V0[i].E);
    for (int k = 0; k < 3; ++k) moved = std::max(moved, std::abs(V[i].m[k] - V0[i].m[k]) / V0[i].E);
  }
  r.below("conservation_drift", drift, 1e-12);
  r.below("uniform_state_change", moved, 1e-13);
  r.measure("steps", steps);
}

void spectrum_cmd(Run& r) {
  const RunConfig& c = r.cfg;
  if (c.grid.N > 12) throw ConfigError("grid.N", "spectrum uses a dense eigensolve and needs N <= 12");
  const auto& bgc = c.background;
  FluidState st{bgc.n, bgc.u, bgc.T};
  MomentumGrid grid = make_grid(c, bgc.T, speed(bgc.u));
  CollisionOperator op(grid, collision_options(c, r.workers));
  LinearizedOperator L(op, st);
  SpectrumReport rep = dense_spectrum(L, 20);
  double delta = fitted_coercivity(L, 50, c.seed);
  double eqres = equilibrium_residual(op, st, rep.top);
  double floor = static_cast<double>(grid.size()) * kEpsMach;
  CsvWriter w(r.path("spectrum.csv"), {"index", "eigenvalue", "relative"});
  for (std::size_t k = 0; k < rep.smallest.size(); ++k)
    w.row({static_cast<double>(k), rep.smallest[k], rep.smallest[k] / rep.top});
  double null_max = 0.0;
  for (std::size_t k = 0; k < 5; ++k) null_max = std::max(null_max, std::abs(rep.smallest[k]) / rep.top);
  r.below("null_rayleigh_quotients", null_max, 10.0 * std::max(eqres, floor));
  r.above("first_nonzero_eigenvalue", rep.smallest[5] / rep.top, 10.0 * std::max(eqres, floor));
  r.above("coercivity_delta", delta, 0.0);
  r.measure("delta_hat", rep.smallest[5]);
  r.measure("top_eigenvalue", rep.top);
  r.measure("equilibrium_residual", eqres);
  r.measure("p_max", grid.p_max());
}

void check_cmd(Run& r) {
  const RunConfig& c = r.cfg;
  CsvWriter w(r.path("check.csv"), {"case", "value", "tolerance", "pass"});
  auto rec = [&](const std::string& name, double v, double tol) {
    r.below(name, v, tol);
    w.row({static_cast<double>(r.sum.invariants.size() - 1), v, tol, v <= tol ? 1.0 : 0.0});
  };

  // energy identity of the Synge closure
  double bes = 0.0;
  for (double gma : {0.1, 0.5, 1.0, 5.0, 20.0, 50.0}) {
    auto cr = closure_ratios(gma);
    bes = std::max(bes, std::abs((cr.k3_k2 - 1.0 / gma) - (cr.k1_k2 + 3.0 / gma)) / cr.k3_k2);
  }
  rec("bessel_energy_identity", bes, 1e-9);

  MomentumGrid g(8, 4.5, stencil_of(c));
  CollisionOperator op(g, collision_options(c, r.workers));
  const std::size_t sz = g.size();
  std::vector<double> f(sz), b(sz), C(sz);
  juttner_into(FluidState{0.5, {0.2, 0, 0}, 0.4}, g, f);
  juttner_into(FluidState{0.5, {-0.2, 0.1, 0}, 0.4}, g, b);
  for (std::size_t a = 0; a < sz; ++a) f[a] += b[a];
  op.collide_self(f, C);
  double cons = 0.0, scale = 0.0, prod = 0.0;
  std::array<double, 5> inv{};
  for (std::size_t a = 0; a < sz; ++a) {
    const Vec3& p = g.p(a);
    double psi[5] = {1.0, p[0], p[1], p[2], g.p0(a)};
    for (int k = 0; k < 5; ++k) inv[k] += psi[k] * C[a];
    scale += g.p0(a) * std::abs(C[a]);
    prod += std::log(f[a]) * C[a];
  }
  for (double v : inv) cons = std::max(cons, std::abs(v) / scale);
  rec("collision_conservation", cons, 1e-12);
  rec("entropy_production_sign", prod * g.weight(), 0.0);

  FluidState rest{1.0, {0.1, 0.0, 0.0}, 0.5};
  std::vector<double> M(sz);
  juttner_into(rest, g, M);
  op.collide_self(M, C);
  double cm = 0.0, mm = 0.0;
  for (std::size_t a = 0; a < sz; ++a) {
    cm = std::max(cm, std::abs(C[a]));
    mm = std::max(mm, M[a]);
  }
  rec("juttner_equilibrium", cm / (op.stiffness(M) * mm), 1e-13);

  LinearizedOperator L(op, rest);
  auto rnd = random_smooth_field(g, rest, c.seed);
  double ref = l2_norm(g, L.apply_L(rnd)) / l2_norm(g, rnd), nul = 0.0;
  for (int k = 0; k < 5; ++k) {
    const auto& chi = L.basis().vector(k);
    nul = std::max(nul, l2_norm(g, L.apply_L(chi)) / l2_norm(g, chi) / ref);
  }
  rec("null_space_of_L", nul, 1e-10);

  std::vector<double> v(3 * sz), A1(6 * sz), B1(3 * sz), A2(6 * sz), B2(3 * sz);
  for (std::size_t a = 0; a < sz; ++a)
    for (int d = 0; d < 3; ++d) v[3 * a + d] = f[a] * std::sin(1.0 + a + d);
  op.contract(1, f, v, A1, B1);
  op.contract_naive(1, f, v, A2, B2);
  double cd = 0.0, cs = 0.0;
  for (std::size_t i = 0; i < A1.size(); ++i) {
    cd = std::max(cd, std::abs(A1[i] - A2[i]));
    cs = std::max(cs, std::abs(A2[i]));
  }
  for (std::size_t i = 0; i < B1.size(); ++i) {
    cd = std::max(cd, std::abs(B1[i] - B2[i]));
    cs = std::max(cs, std::abs(B2[i]));
  }
  rec("blocked_matches_naive", cd / cs, 1e-13);

  RelaxOptions ro;
  ro.dt = collision_dt(op, f, 1.0);
  ro.steps = 20;
  auto rr = relax_homogeneous(op, f, 1.0, ro);
  rec("relax_entropy_increases", static_cast<double>(rr.entropy_increases), 0.0);
  double neg = 0.0;
  for (const auto& row : rr.log) neg = std::max(neg, -row.min_f / row.max_f);
  rec("relax_negativity", neg, c.solver.positivity_tol);

  EulerSolver fluid(16, 1.0, FluidClosure());
  std::vector<FluidState> flat(16, rest);
  auto U = fluid.to_conserved(flat), U0 = U;
  for (int s = 0; s < 5; ++s) fluid.step(U, fluid.max_dt());
  double moved = 0.0;
  for (std::size_t i = 0; i < U.size(); ++i) moved = std::max(moved, std::abs(U[i].E - U0[i].E) / U0[i].E);
  rec("euler_uniform_state", moved, 1e-13);

  EulerSolver gf(16, 1.0, FluidClosure(g));
  std::vector<FluidState> wave(16);
  for (std::size_t i = 0; i < 16; ++i) {
    double s = 0.05 * std::sin(2.0 * std::numbers::pi * gf.x(i));
    wave[i] = FluidState{1.0 + s, {0.1 + s, 0, 0}, 0.5 * (1.0 + s)};
  }
  auto slices = background_slices(gf, wave);
  LinearizedOperator Ls(op, slices[3].state);
  auto sol = build_F1_micro(Ls, slices[3]);
  rec("hilbert_orthogonality", sol.orth_ratio, 1e-10);
  rec("hilbert_balance", balance_residual(Ls, slices[3], sol.g), 1e-7);

  MomentumGrid g6(6, 4.0, stencil_of(c));
  CollisionOperator op6(g6, collision_options(c, r.workers));
  KineticOptions ko;
  ko.lattice_velocity = true;
  ko.collisions = false;
  KineticSolver1D ks(op6, 8, 1.0, ko);
  std::vector<FluidState> cells;
  for (std::size_t i = 0; i < 8; ++i)
    cells.push_back(FluidState{1.0 + 0.01 * std::cos(2.0 * std::numbers::pi * ks.x(i)), {0, 0, 0}, 0.5});
  DistributionField F = juttner(cells, g6);
  neutralize(F, g6, 1.0);
  auto E = ks.gauss_field(F, 1.0);
  for (int s = 0; s < 20; ++s) ks.step_vlasov_ampere(F, E, 1.0, ks.max_dt());
  rec("gauss_residual", ks.gauss_residual(F, E, 1.0), 1e-8);
}

void report_cmd(Run& r) {
  const RunConfig& c = r.cfg;
  fs::path src = c.report.source.empty() ? r.dir : fs::path(c.report.source);
  std::ifstream gin(src / "grid.json");
  if (!gin) throw ConfigError("report.source", "no grid.json in " + src.string());
  json gj = json::parse(gin);
  MomentumGrid g(gj.at("N").get<std::size_t>(), gj.at("p_max").get<double>(),
                 gj.at("stencil").get<std::string>() == "centered" ? Stencil::Centered : Stencil::OneSided);
  double dx = gj.at("dx").get<double>();
  std::vector<fs::path> snaps;
  if (fs::exists(src / "snapshots"))
    for (const auto& e : fs::directory_iterator(src / "snapshots"))
      if (e.path().extension() == ".rlk") snaps.push_back(e.path());
  std::sort(snaps.begin(), snaps.end());
  CsvWriter w(r.path("report.csv"), {"step", "mass", "p1", "p2", "p3", "energy", "entropy", "min_f", "max_f"});
  double bad = 0.0;
  for (const auto& p : snaps) {
    std::size_t n = 0;
    DistributionField F = read_snapshot(p.string(), &n);
    if (n != g.n()) throw GridMismatch("report: snapshot " + p.string() + " does not match grid.json");
    long step = std::stol(p.stem().string().substr(5));
    std::vector<double> row{static_cast<double>(step), 0, 0, 0, 0, 0, 0, F.min(), F.max()};
    for (std::size_t i = 0; i < F.nx; ++i) {
      Moments m = moments(F.cell(i), g);
      row[1] += m.m0 * dx;
      for (int d = 0; d < 3; ++d) row[2 + d] += m.m1[d] * dx;
      row[5] += m.m2 * dx;
      row[6] += entropy(F.cell(i), g) * dx;
    }
    for (double v : row)
      if (!std::isfinite(v)) bad += 1.0;
    w.row(row);
  }
  r.above("snapshots_found", static_cast<double>(snaps.size()), 0.0);
  r.below("nonfinite_values", bad, 0.0);
}

}  // namespace

std::string summary_json(const RunSummary& s) {
  json j;
  j["command"] = s.command;
  j["passed"] = s.passed();
  j["wall_seconds"] = s.wall_seconds;
  j["invariants"] = json::array();
  for (const auto& i : s.invariants)
    j["invariants"].push_back({{"name", i.name}, {"value", i.value}, {"tolerance", i.tolerance}, {"pass", i.pass}});
  j["measured"] = json::object();
  for (const auto& [k, v] : s.measured) j["measured"][k] = v;
  j["artifacts"] = s.artifacts;
  j["error"] = s.error;
  return j.dump(2) + "\n";
}

RunSummary run_command(const std::string& command, const RunConfig& cfg) {
  auto known = command_names();
  if (std::find(known.begin(), known.end(), command) == known.end())
    throw ConfigError("command", "unknown subcommand " + command);
  validate(cfg);
  auto t0 = std::chrono::steady_clock::now();
  RunSummary sum;
  sum.command = command;
  fs::path dir(cfg.out);
  fs::create_directories(dir);
  sum.run_dir = dir.string();
  Run run{cfg, dir, sum, cfg.workers > 0 ? cfg.workers : default_workers()};
  std::ofstream(run.path("config.json")) << to_json(cfg);
  try {
    if (command == "relax") relax_cmd(run);
    if (command == "limit") limit_cmd(run);
    if (command == "expand") expand_cmd(run);
    if (command == "fluid") fluid_cmd(run);
    if (command == "spectrum") spectrum_cmd(run);
    if (command == "check") check_cmd(run);
    if (command == "report") report_cmd(run);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    sum.error = e.what();
  }
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  sum.artifacts.push_back("summary.json");
  std::ofstream(dir / "summary.json") << summary_json(sum);
  return sum;
}

}  // namespace rlk
