#include "rlk/diagnostics.hpp"

#include <cmath>
#include <numbers>

#include "rlk/csv.hpp"
#include "rlk/error.hpp"
#include "rlk/linearized.hpp"

namespace rlk {

void WeightSpec::validate() const {
  if (Nc < 3) throw ConfigError("weights.Nc", "must be at least 3");
  if (!(Tc > 0.0)) throw ConfigError("weights.Tc", "must be positive");
}

WeightSpec default_weights(double sup_T) { return WeightSpec{3, 1.05 * sup_T}; }

namespace {

double lnet(double t) { return std::log(std::numbers::e + t); }

}  // namespace

double weight(const WeightSpec& s, int level, double t, double p0) {
  if (level < 0 || level > 2) throw DomainError("weight: level must be 0, 1 or 2");
  return std::pow(p0, 2.0 * (s.Nc - level)) * std::exp(p0 / (5.0 * lnet(t) * s.Tc));
}

double weight_W(const WeightSpec& s, double t) { return std::exp(1.0 / (5.0 * lnet(t) * s.Tc)); }

double weight_Y(const WeightSpec& s, double t) {
  double l = lnet(t);
  return 1.0 / (5.0 * l * l * (std::numbers::e + t) * s.Tc);
}

WeightDecayFit fit_weight_decay(const WeightSpec& s, int level, double t, const FluidState& state,
                                const MomentumGrid& grid) {
  // sqrt(M) <= C' exp(-p0 (u0 - |u|)/(2T)); half of the remaining margin is kept as c0
  double umag = std::sqrt(state.u[0] * state.u[0] + state.u[1] * state.u[1] + state.u[2] * state.u[2]);
  double margin = (state.u0() - umag) / (2.0 * state.T) - 2.0 / (5.0 * lnet(t) * s.Tc);
  WeightDecayFit f;
  f.c0 = margin > 0.0 ? 0.5 * margin : 0.0;
  std::vector<double> M(grid.size());
  juttner_into(state, grid, M);
  for (std::size_t a = 0; a < grid.size(); ++a) {
    double w = weight(s, level, t, grid.p0(a));
    f.C = std::max(f.C, w * w * std::sqrt(M[a]) * std::exp(f.c0 * grid.p0(a)));
  }
  return f;
}

double admissibility_lhs(const WeightSpec& s, double t0) {
  double l = lnet(t0);
  return 1.0 / (10.0 * s.Tc * (std::numbers::e + t0) * l * l);
}

double max_admissible_t0(const WeightSpec& s, double Z, double t_cap) {
  if (admissibility_lhs(s, 0.0) < Z) return -1.0;
  if (admissibility_lhs(s, t_cap) >= Z) return t_cap;
  double lo = 0.0, hi = t_cap;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
    double mid = 0.5 * (lo + hi);
    (admissibility_lhs(s, mid) >= Z ? lo : hi) = mid;
  }
  return lo;
}

GateReport admissibility_gate(const WeightSpec& s, double Z, double t_end) {
  GateReport g;
  g.Z = Z;
  g.t_end = t_end;
  g.t0_max = max_admissible_t0(s, Z);
  g.holds = g.t0_max >= t_end;
  g.z_below_half_y = Z <= 0.5 * weight_Y(s, t_end);
  return g;
}

double EnergyReport::E_total() const {
  double s = 0.0;
  for (double v : E) s += v;
  return s;
}

double EnergyReport::D_total() const {
  double s = 0.0;
  for (double v : D) s += v;
  return s;
}

const std::array<const char*, EnergyReport::kE>& EnergyReport::e_names() {
  static const std::array<const char*, kE> n = {"E_l2",          "E_w0_micro", "E_dx_l2",
                                                "E_dx_w1_micro", "E_dxx_l2",   "E_dxx_w2"};
  return n;
}

const std::array<const char*, EnergyReport::kD>& EnergyReport::d_names() {
  static const std::array<const char*, kD> n = {
      "D_sigma_micro",     "D_sigma_w0_micro",    "D_Y_w0_micro",    "D_dx_macro",
      "D_sigma_dx_micro",  "D_sigma_w1_dx_micro", "D_Y_w1_dx_micro", "D_dxx_macro",
      "D_sigma_dxx_micro", "D_sigma_w2_dxx_micro", "D_Y_w2_dxx_micro"};
  return n;
}

EnergyEvaluator::EnergyEvaluator(const CollisionOperator& op, const WeightSpec& w, double dx)
    : op_(&op), w_(w), dx_(dx) {
  w_.validate();
}

EnergyReport EnergyEvaluator::evaluate(double t, double eps, const DistributionField& fR,
                                       const std::vector<FluidState>& background) const {
  const MomentumGrid& g = op_->grid();
  check_grid(fR, g);
  const std::size_t nx = fR.nx, sz = g.size();
  if (background.size() != nx) throw GridMismatch("energy: background count does not match cells");
  if (nx < 3) throw DomainError("energy: need at least 3 cells");

  std::vector<LinearizedOperator> lin;
  lin.reserve(nx);
  for (std::size_t x = 0; x < nx; ++x) lin.emplace_back(*op_, background[x]);

  DistributionField micro(nx, sz), macro(nx, sz);
  for (std::size_t x = 0; x < nx; ++x) {
    auto P = lin[x].basis().project(fR.cell(x));
    auto mi = micro.cell(x), ma = macro.cell(x);
    auto f = fR.cell(x);
    for (std::size_t a = 0; a < sz; ++a) {
      ma[a] = P.Pf[a];
      mi[a] = f[a] - P.Pf[a];
    }
  }
  auto d1 = [&](const DistributionField& v, std::size_t x, std::vector<double>& out) {
    auto l = v.cell((x + nx - 1) % nx), r = v.cell((x + 1) % nx);
    for (std::size_t a = 0; a < sz; ++a) out[a] = (r[a] - l[a]) / (2.0 * dx_);
  };
  auto d2 = [&](const DistributionField& v, std::size_t x, std::vector<double>& out) {
    auto l = v.cell((x + nx - 1) % nx), c = v.cell(x), r = v.cell((x + 1) % nx);
    for (std::size_t a = 0; a < sz; ++a) out[a] = (r[a] - 2.0 * c[a] + l[a]) / (dx_ * dx_);
  };

  std::vector<double> w0(sz), w1(sz), w2(sz), sp(sz);
  for (std::size_t a = 0; a < sz; ++a) {
    w0[a] = weight(w_, 0, t, g.p0(a));
    w1[a] = weight(w_, 1, t, g.p0(a));
    w2[a] = weight(w_, 2, t, g.p0(a));
    sp[a] = std::sqrt(g.p0(a));
  }
  const double hw = g.weight();
  auto l2 = [&](std::span<const double> v, const std::vector<double>* w, bool root_p0) {
    double s = 0.0;
    for (std::size_t a = 0; a < sz; ++a) {
      double y = v[a];
      if (w) y *= (*w)[a];
      if (root_p0) y *= sp[a];
      s += y * y;
    }
    return s * hw;
  };
  std::vector<double> tmp(sz);
  auto sig = [&](const LinearizedOperator& L, std::span<const double> v, const std::vector<double>* w) {
    if (!w) return L.sigma_inner(v, v);
    for (std::size_t a = 0; a < sz; ++a) tmp[a] = (*w)[a] * v[a];
    return L.sigma_inner(tmp, tmp);
  };

  const double Y = weight_Y(w_, t);
  EnergyReport r;
  r.t = t;
  std::vector<double> fx(sz), fxx(sz), mx(sz), mxx(sz), Px(sz), Pxx(sz);
  for (std::size_t x = 0; x < nx; ++x) {
    const LinearizedOperator& L = lin[x];
    auto f = fR.cell(x);
    auto mi = micro.cell(x);
    d1(fR, x, fx);
    d2(fR, x, fxx);
    d1(micro, x, mx);
    d2(micro, x, mxx);
    d1(macro, x, Px);
    d2(macro, x, Pxx);
    r.E[0] += l2(f, nullptr, false);
    r.E[1] += l2(mi, &w0, false);
    r.E[2] += eps * l2(fx, nullptr, false);
    r.E[3] += eps * l2(mx, &w1, false);
    r.E[4] += eps * eps * l2(fxx, nullptr, false);
    r.E[5] += eps * eps * eps * l2(fxx, &w2, false);

    r.D[0] += sig(L, mi, nullptr) / eps;
    r.D[1] += sig(L, mi, &w0) / eps;
    r.D[2] += Y * l2(mi, &w0, true);
    r.D[3] += eps * l2(Px, nullptr, false);
    r.D[4] += sig(L, mx, nullptr);
    r.D[5] += sig(L, mx, &w1);
    r.D[6] += eps * Y * l2(mx, &w1, true);
    r.D[7] += eps * eps * l2(Pxx, nullptr, false);
    r.D[8] += eps * sig(L, mxx, nullptr);
    r.D[9] += eps * eps * sig(L, mxx, &w2);
    r.D[10] += eps * eps * eps * Y * l2(mxx, &w2, true);
  }
  for (double& v : r.E) v = std::max(0.0, v * dx_);
  for (double& v : r.D) v = std::max(0.0, v * dx_);
  return r;
}

EnergyBound energy_bound(const std::vector<EnergyReport>& series, double eps, int k) {
  if (series.empty()) throw Error("energy_bound: empty series");
  EnergyBound b;
  b.E0 = series.front().E_total();
  for (std::size_t i = 0; i < series.size(); ++i) {
    b.sup_E = std::max(b.sup_E, series[i].E_total());
    if (i) b.int_D += 0.5 * (series[i].t - series[i - 1].t) * (series[i].D_total() + series[i - 1].D_total());
  }
  b.rhs = b.E0 + std::pow(eps, 2 * k + 3);
  b.C = (b.sup_E + b.int_D) / b.rhs;
  return b;
}

void write_energy_csv(const std::string& path, const std::vector<EnergyReport>& series) {
  std::vector<std::string> h{"t"};
  for (auto n : EnergyReport::e_names()) h.push_back(n);
  h.push_back("E_total");
  for (auto n : EnergyReport::d_names()) h.push_back(n);
  h.push_back("D_total");
  CsvWriter w(path, h);
  for (const auto& r : series) {
    std::vector<double> row{r.t};
    row.insert(row.end(), r.E.begin(), r.E.end());
    row.push_back(r.E_total());
    row.insert(row.end(), r.D.begin(), r.D.end());
    row.push_back(r.D_total());
    w.row(row);
  }
}

std::vector<EnergyReport> read_energy_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  std::vector<EnergyReport> out;
  std::size_t ct = t.column("t");
  std::array<std::size_t, EnergyReport::kE> ce{};
  std::array<std::size_t, EnergyReport::kD> cd{};
  for (std::size_t i = 0; i < EnergyReport::kE; ++i) ce[i] = t.column(EnergyReport::e_names()[i]);
  for (std::size_t i = 0; i < EnergyReport::kD; ++i) cd[i] = t.column(EnergyReport::d_names()[i]);
  for (const auto& row : t.rows) {
    EnergyReport r;
    r.t = row.at(ct);
    for (std::size_t i = 0; i < EnergyReport::kE; ++i) r.E[i] = row.at(ce[i]);
    for (std::size_t i = 0; i < EnergyReport::kD; ++i) r.D[i] = row.at(cd[i]);
    out.push_back(r);
  }
  return out;
}

}  // namespace rlk
