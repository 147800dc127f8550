#include "rlk/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rlk/error.hpp"
#include "rlk/parallel.hpp"

namespace rlk {

namespace {

// coefficient (times 2h) of column c in row r of the one-axis gradient stencil
double stencil_coef(const MomentumGrid& g, std::size_t r, std::size_t c) {
  auto row = g.stencil_row(r);
  return c >= row.first && c < row.first + 3 ? row.c[c - row.first] : 0.0;
}

std::vector<double> juttner_values(const FluidState& s, const MomentumGrid& g) {
  std::vector<double> M(g.size());
  juttner_into(s, g, M);
  return M;
}

std::vector<double> grad_weighted(const MomentumGrid& g, std::span<const double> f, const std::vector<double>& isq) {
  std::vector<double> h(f.size()), X(3 * f.size());
  for (std::size_t a = 0; a < f.size(); ++a) h[a] = f[a] * isq[a];
  g.grad(h, X);
  return X;
}

}  // namespace

double SigmaField::min_eigenvalue() const {
  double mn = INFINITY;
  for (std::size_t a = 0; a < values.size() / 6; ++a) {
    Sym3 s = at(a);
    Eigen::Matrix3d m;
    m << s[0], s[1], s[2], s[1], s[3], s[4], s[2], s[4], s[5];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
    mn = std::min(mn, es.eigenvalues()(0));
  }
  return mn;
}

SigmaField sigma(const CollisionOperator& op, std::span<const double> M) {
  std::size_t sz = op.grid().size();
  std::vector<double> v(3 * sz, 0.0), B(3 * sz);
  SigmaField s;
  s.values.resize(6 * sz);
  op.contract(1, M, v, s.values, B);
  return s;
}

NullSpaceBasis::NullSpaceBasis(const MomentumGrid& grid, std::span<const double> M) : grid_(&grid) {
  std::size_t sz = grid.size();
  for (auto& c : chi_) c.resize(sz);
  for (std::size_t a = 0; a < sz; ++a) {
    double r = std::sqrt(M[a]);
    chi_[0][a] = r;
    for (int i = 0; i < 3; ++i) chi_[1 + i][a] = grid.p(a)[i] * r;
    chi_[4][a] = grid.p0(a) * r;
    rho1_ += M[a];
    rho2_ += grid.p0(a) * M[a];
  }
  rho1_ *= grid.weight();
  rho2_ *= grid.weight();
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) gram_(i, j) = l2_inner(grid, chi_[i], chi_[j]);
  llt_.compute(gram_);
  if (llt_.info() != Eigen::Success) throw DomainError("NullSpaceBasis: Gram matrix not positive definite");
}

Eigen::Matrix<double, 5, 1> NullSpaceBasis::inner(std::span<const double> f) const {
  Eigen::Matrix<double, 5, 1> r;
  for (int k = 0; k < 5; ++k) r(k) = l2_inner(*grid_, chi_[k], f);
  return r;
}

Projection NullSpaceBasis::project(std::span<const double> f) const {
  Eigen::Matrix<double, 5, 1> c = llt_.solve(inner(f));
  Projection P;
  P.Pf.assign(f.size(), 0.0);
  for (std::size_t a = 0; a < f.size(); ++a) {
    double v = 0.0;
    for (int k = 0; k < 5; ++k) v += c(k) * chi_[k][a];
    P.Pf[a] = v;
  }
  P.constant = c(0);
  P.b = {c(1), c(2), c(3)};
  P.c = c(4);
  P.a = c(0) + rho2_ / rho1_ * c(4);
  return P;
}

std::vector<double> NullSpaceBasis::project_micro(std::span<const double> f) const {
  Projection P = project(f);
  std::vector<double> r(f.size());
  for (std::size_t a = 0; a < f.size(); ++a) r[a] = f[a] - P.Pf[a];
  return r;
}

LinearizedOperator::LinearizedOperator(const CollisionOperator& op, const FluidState& state)
    : op_(&op), state_(state), M_(juttner_values(state, op.grid())), sqrtM_(M_.size()), isqrtM_(M_.size()),
      basis_(op.grid(), M_) {
  for (std::size_t a = 0; a < M_.size(); ++a) {
    if (!(M_[a] > 0.0)) throw DomainError("LinearizedOperator: Juttner underflows on this grid");
    sqrtM_[a] = std::sqrt(M_[a]);
    isqrtM_[a] = 1.0 / sqrtM_[a];
  }
  sigma_ = sigma(op, M_);
}

void LinearizedOperator::kpart(std::span<const double> X, std::span<double> Y) const {
  std::size_t sz = M_.size();
  std::vector<double> v(3 * sz), A(6 * sz);
  for (std::size_t q = 0; q < sz; ++q)
    for (int d = 0; d < 3; ++d) v[3 * q + d] = M_[q] * X[3 * q + d];
  op_->contract(1, M_, v, A, Y);
  for (std::size_t a = 0; a < sz; ++a)
    for (int d = 0; d < 3; ++d) Y[3 * a + d] *= M_[a];
}


void LinearizedOperator::apply_A(std::span<const double> f, std::span<double> out) const {
  const MomentumGrid& g = grid();
  std::vector<double> X = grad_weighted(g, f, isqrtM_);
  std::vector<double> Y(X.size());
  for (std::size_t a = 0; a < M_.size(); ++a) {
    Vec3 y = sym_apply(sigma_.at(a), {X[3 * a], X[3 * a + 1], X[3 * a + 2]});
    for (int d = 0; d < 3; ++d) Y[3 * a + d] = M_[a] * y[d];
  }
  g.div(Y, out);
  for (std::size_t a = 0; a < M_.size(); ++a) out[a] *= isqrtM_[a];
}

void LinearizedOperator::apply_K(std::span<const double> f, std::span<double> out) const {
  const MomentumGrid& g = grid();
  std::vector<double> X = grad_weighted(g, f, isqrtM_);
  std::vector<double> Y(X.size());
  kpart(X, Y);
  for (auto& y : Y) y = -y;
  g.div(Y, out);
  for (std::size_t a = 0; a < M_.size(); ++a) out[a] *= isqrtM_[a];
}

void LinearizedOperator::apply_L(std::span<const double> f, std::span<double> out) const {
  // L = M^{-1/2} D^T [ M sigma X - M sum_q Phi M X ],  X = D(M^{-1/2} f)
  const MomentumGrid& g = grid();
  std::vector<double> X = grad_weighted(g, f, isqrtM_);
  std::vector<double> K(X.size()), Y(X.size());
  kpart(X, K);
  for (std::size_t a = 0; a < M_.size(); ++a) {
    Vec3 y = sym_apply(sigma_.at(a), {X[3 * a], X[3 * a + 1], X[3 * a + 2]});
    for (int d = 0; d < 3; ++d) Y[3 * a + d] = -(M_[a] * y[d] - K[3 * a + d]);
  }
  g.div(Y, out);
  for (std::size_t a = 0; a < M_.size(); ++a) out[a] *= isqrtM_[a];
}

std::vector<double> LinearizedOperator::apply_L(std::span<const double> f) const {
  std::vector<double> out(f.size());
  apply_L(f, out);
  return out;
}

void LinearizedOperator::apply_Gamma(std::span<const double> f, std::span<const double> g,
                                     std::span<double> out) const {
  // M^{-1/2} div { sqrt M(p) sum_q Phi sqrt M(q) (D f(p) g(q) - f(p) D g(q)) }
  const MomentumGrid& gr = grid();
  std::size_t sz = M_.size();
  std::vector<double> Df(3 * sz), Dg(3 * sz), s(sz), v(3 * sz), A(6 * sz), B(3 * sz), J(3 * sz);
  gr.grad(f, Df);
  gr.grad(g, Dg);
  for (std::size_t q = 0; q < sz; ++q) {
    s[q] = sqrtM_[q] * g[q];
    for (int d = 0; d < 3; ++d) v[3 * q + d] = sqrtM_[q] * Dg[3 * q + d];
  }
  op_->contract(1, s, v, A, B);
  for (std::size_t a = 0; a < sz; ++a) {
    Sym3 m{A[6 * a], A[6 * a + 1], A[6 * a + 2], A[6 * a + 3], A[6 * a + 4], A[6 * a + 5]};
    Vec3 ad = sym_apply(m, {Df[3 * a], Df[3 * a + 1], Df[3 * a + 2]});
    for (int d = 0; d < 3; ++d) J[3 * a + d] = sqrtM_[a] * (ad[d] - f[a] * B[3 * a + d]);
  }
  gr.div(J, out);
  for (std::size_t a = 0; a < sz; ++a) out[a] *= isqrtM_[a];
}

double LinearizedOperator::sigma_inner(std::span<const double> f, std::span<const double> g) const {
  const MomentumGrid& gr = grid();
  std::size_t sz = M_.size();
  std::vector<double> Df(3 * sz), Dg(3 * sz);
  gr.grad(f, Df);
  gr.grad(g, Dg);
  double c = 1.0 / (4.0 * state_.T * state_.T);
  double s = 0.0;
  for (std::size_t a = 0; a < sz; ++a) {
    Sym3 m = sigma_.at(a);
    Vec3 y = sym_apply(m, {Dg[3 * a], Dg[3 * a + 1], Dg[3 * a + 2]});
    const Vec3& ph = gr.phat(a);
    Vec3 z = sym_apply(m, ph);
    s += Df[3 * a] * y[0] + Df[3 * a + 1] * y[1] + Df[3 * a + 2] * y[2];
    s += c * (ph[0] * z[0] + ph[1] * z[1] + ph[2] * z[2]) * f[a] * g[a];
  }
  return s * gr.weight();
}

double LinearizedOperator::sigma_norm(std::span<const double> f) const {
  return std::sqrt(std::max(0.0, sigma_inner(f, f)));
}

Eigen::MatrixXd LinearizedOperator::dense() const {
  // column k: X = D(M^{-1/2} e_k) is supported on the stencil rows touching k
  const MomentumGrid& gr = grid();
  const std::size_t sz = M_.size(), n = gr.n();
  const double inv2h = 1.0 / (2.0 * gr.h());
  const double w = gr.weight();
  Eigen::MatrixXd L(sz, sz);
  const std::size_t stride[3] = {n * n, n, 1};
  parallel_for(sz, op_->workers(), [&](std::size_t lo, std::size_t hi) {
    std::vector<double> Y(3 * sz), out(sz);
    struct Entry {
      std::size_t node;
      int dir;
      double val;
    };
    std::vector<Entry> X;
    for (std::size_t k = lo; k < hi; ++k) {
      X.clear();
      std::size_t ck[3] = {k / (n * n), (k / n) % n, k % n};
      // rows r of D_d whose stencil contains column ck[d]
      for (int d = 0; d < 3; ++d) {
        std::size_t i = ck[d];
        std::size_t r0 = i >= 2 ? i - 2 : 0, r1 = std::min(n - 1, i + 2);
        for (std::size_t r = r0; r <= r1; ++r) {
          double c = stencil_coef(gr, r, i);
          if (c == 0.0) continue;
          std::size_t node = k + r * stride[d] - i * stride[d];
          X.push_back({node, d, c * inv2h * isqrtM_[k]});
        }
      }
      std::fill(Y.begin(), Y.end(), 0.0);
      for (const Entry& e : X) {
        // M sigma X on the diagonal block
        Sym3 sg = sigma_.at(e.node);
        double g3[3] = {0, 0, 0};
        g3[e.dir] = e.val;
        Vec3 y = sym_apply(sg, {g3[0], g3[1], g3[2]});
        for (int d = 0; d < 3; ++d) Y[3 * e.node + d] += M_[e.node] * y[d];
        // - M(p) w Phi(p,q) M(q) X(q) with q = e.node
        for (std::size_t a = 0; a < sz; ++a) {
          if (a == e.node) continue;
          Sym3 ph = op_->phi(a, e.node);
          Vec3 z = sym_apply(ph, {g3[0], g3[1], g3[2]});
          double f = w * M_[a] * M_[e.node];
          for (int d = 0; d < 3; ++d) Y[3 * a + d] -= f * z[d];
        }
      }
      for (auto& y : Y) y = -y;
      gr.div(Y, out);
      for (std::size_t a = 0; a < sz; ++a) L(a, k) = out[a] * isqrtM_[a];
    }
  });
  Eigen::MatrixXd S = 0.5 * (L + L.transpose());
  return S;
}

double fitted_coercivity(const LinearizedOperator& L, int fields, std::uint64_t seed) {
  const MomentumGrid& g = L.grid();
  double delta = INFINITY;
  for (int i = 0; i < fields; ++i) {
    auto f = random_smooth_field(g, L.state(), seed + static_cast<std::uint64_t>(i));
    double q = l2_inner(g, L.apply_L(f), f);
    double m = L.sigma_norm(L.basis().project_micro(f));
    if (m > 0.0) delta = std::min(delta, q / (m * m));
  }
  return delta;
}

SpectrumReport dense_spectrum(const LinearizedOperator& L, std::size_t count) {
  SpectrumReport r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.dense(), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  r.top = ev.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(ev.size(), static_cast<Eigen::Index>(count)); ++k)
    r.smallest.push_back(ev(k));
  return r;
}

double equilibrium_residual(const CollisionOperator& op, const FluidState& s, double top) {
  const MomentumGrid& g = op.grid();
  auto M = juttner_values(s, g);
  std::vector<double> C(g.size());
  op.collide_self(M, C);
  double num = 0.0, den = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    if (!(M[a] > 0.0)) continue;
    double v = C[a] / std::sqrt(M[a]);
    num += v * v;
    den += M[a];
  }
  return std::sqrt(num / den) / top;
}

double l2_inner(const MomentumGrid& grid, std::span<const double> f, std::span<const double> g) {
  double s = 0.0;
  for (std::size_t a = 0; a < f.size(); ++a) s += f[a] * g[a];
  return s * grid.weight();
}

double l2_norm(const MomentumGrid& grid, std::span<const double> f) { return std::sqrt(l2_inner(grid, f, f)); }

std::vector<double> random_smooth_field(const MomentumGrid& grid, const FluidState& state, std::uint64_t seed,
                                        int degree) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  // monomials p1^i p2^j p3^k with i+j+k <= degree, scaled by the thermal momentum
  struct Term {
    int i, j, k;
    double c;
  };
  std::vector<Term> terms;
  for (int t = 0; t <= degree; ++t)
    for (int i = 0; i <= t; ++i)
      for (int j = 0; j <= t - i; ++j) terms.push_back({i, j, t - i - j, nd(rng)});
  double scale = std::sqrt(state.T * (1.0 + state.T));
  std::vector<double> M(grid.size()), f(grid.size());
  juttner_into(state, grid, M);
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const Vec3& p = grid.p(a);
    double x = p[0] / scale, y = p[1] / scale, z = p[2] / scale;
    double v = 0.0;
    for (const Term& t : terms) v += t.c * std::pow(x, t.i) * std::pow(y, t.j) * std::pow(z, t.k);
    f[a] = v * std::sqrt(M[a]);
  }
  return f;
}

}  // namespace rlk
