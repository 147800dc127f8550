#include "rlk/collision.hpp"

#include <algorithm>
#include <cmath>

#include "rlk/error.hpp"
#include "rlk/parallel.hpp"

namespace rlk {

KernelValue kernel(const Vec3& p, const Vec3& q) {
  double gap = lorentz_gap(p, q);  // rho - 1
  double rho = 1.0 + gap;
  double r2m1 = gap * (rho + 1.0);
  if (!(r2m1 > 1e-14)) throw CoincidentMomenta("kernel: coincident momenta");
  double lam = rho * rho / (r2m1 * std::sqrt(r2m1));
  double pref = lam / (p0_of(p) * p0_of(q));
  KernelValue kv;
  kv.lambda = lam;
  Vec3 d{p[0] - q[0], p[1] - q[1], p[2] - q[2]};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = (i == j ? r2m1 : 0.0) - d[i] * d[j] + gap * (p[i] * q[j] + q[i] * p[j]);
      kv.S[3 * i + j] = s;
      kv.phi[3 * i + j] = pref * s;
    }
  return kv;
}

Sym3 kernel_sym(const Vec3& p, const Vec3& q) {
  KernelValue kv = kernel(p, q);
  return {kv.phi[0], kv.phi[1], kv.phi[2], kv.phi[4], kv.phi[5], kv.phi[8]};
}

Vec3 sym_apply(const Sym3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[1] * v[0] + m[3] * v[1] + m[4] * v[2],
          m[2] * v[0] + m[4] * v[1] + m[5] * v[2]};
}

KernelCache parse_kernel_cache(const std::string& s) {
  if (s == "auto") return KernelCache::Auto;
  if (s == "on") return KernelCache::On;
  if (s == "off") return KernelCache::Off;
  throw DomainError("kernel cache mode must be auto, on or off");
}

namespace {

// Pi Phi Pi with Pi = I - v v^T/|v|^2
Sym3 project(const Sym3& m, const Vec3& v) {
  double vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  if (!(vv > 1e-30)) return m;
  Vec3 mv = sym_apply(m, v);
  double vmv = v[0] * mv[0] + v[1] * mv[1] + v[2] * mv[2];
  double iv = 1.0 / vv;
  // m - (mv v^T + v mv^T)/vv + vmv v v^T/vv^2
  auto e = [&](int i, int j) { return -(mv[i] * v[j] + v[i] * mv[j]) * iv + vmv * v[i] * v[j] * iv * iv; };
  return {m[0] + e(0, 0), m[1] + e(0, 1), m[2] + e(0, 2), m[3] + e(1, 1), m[4] + e(1, 2), m[5] + e(2, 2)};
}

}  // namespace

CollisionOperator::CollisionOperator(const MomentumGrid& grid, CollisionOptions opt) : grid_(grid), opt_(opt) {
  std::size_t sz = grid_.size();
  std::size_t bytes = sz * sz * 6 * sizeof(double);
  bool use = opt_.cache == KernelCache::On || (opt_.cache == KernelCache::Auto && bytes <= opt_.cache_limit_bytes);
  if (use) build_table();
}

Sym3 CollisionOperator::phi(std::size_t a, std::size_t b) const {
  if (a == b) return {0, 0, 0, 0, 0, 0};
  if (cached()) {
    const double* r = table_.data() + (a * grid_.size() + b) * 6;
    return {r[0], r[1], r[2], r[3], r[4], r[5]};
  }
  const Vec3& va = grid_.dp0(a);
  const Vec3& vb = grid_.dp0(b);
  Vec3 v{vb[0] - va[0], vb[1] - va[1], vb[2] - va[2]};
  return project(kernel_sym(grid_.p(a), grid_.p(b)), v);
}

void CollisionOperator::compute_row_block(std::size_t a, std::size_t b0, std::size_t b1, double* out) const {
  for (std::size_t b = b0; b < b1; ++b) {
    Sym3 k = phi(a, b);
    std::copy(k.begin(), k.end(), out + (b - b0) * 6);
  }
}

void CollisionOperator::build_table() {
  std::size_t sz = grid_.size();
  table_.assign(sz * sz * 6, 0.0);
  std::vector<double> t;
  parallel_for(sz, opt_.workers, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t a = lo; a < hi; ++a)
      for (std::size_t b = a + 1; b < sz; ++b) {
        const Vec3& va = grid_.dp0(a);
        const Vec3& vb = grid_.dp0(b);
        Vec3 v{vb[0] - va[0], vb[1] - va[1], vb[2] - va[2]};
        Sym3 k = project(kernel_sym(grid_.p(a), grid_.p(b)), v);
        std::copy(k.begin(), k.end(), table_.data() + (a * sz + b) * 6);
        std::copy(k.begin(), k.end(), table_.data() + (b * sz + a) * 6);
      }
  });
}

void CollisionOperator::contract_naive(std::size_t ncell, std::span<const double> s, std::span<const double> v,
                                       std::span<double> A, std::span<double> B) const {
  const std::size_t sz = grid_.size();
  const double w = grid_.weight();
  for (std::size_t c = 0; c < ncell; ++c)
    for (std::size_t a = 0; a < sz; ++a) {
      double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
      for (std::size_t b = 0; b < sz; ++b) {
        if (b == a) continue;
        const Vec3& va = grid_.dp0(a);
        const Vec3& vb = grid_.dp0(b);
        Vec3 dv{vb[0] - va[0], vb[1] - va[1], vb[2] - va[2]};
        Sym3 k = project(kernel_sym(grid_.p(a), grid_.p(b)), dv);
        double sb = s[c * sz + b];
        const double* vq = &v[(c * sz + b) * 3];
        for (int i = 0; i < 6; ++i) acc[i] += k[i] * sb;
        acc[6] += k[0] * vq[0] + k[1] * vq[1] + k[2] * vq[2];
        acc[7] += k[1] * vq[0] + k[3] * vq[1] + k[4] * vq[2];
        acc[8] += k[2] * vq[0] + k[4] * vq[1] + k[5] * vq[2];
      }
      for (int i = 0; i < 6; ++i) A[(c * sz + a) * 6 + i] = acc[i] * w;
      for (int i = 0; i < 3; ++i) B[(c * sz + a) * 3 + i] = acc[6 + i] * w;
    }
}

void CollisionOperator::contract(std::size_t ncell, std::span<const double> s, std::span<const double> v,
                                 std::span<double> A, std::span<double> B) const {
  const std::size_t sz = grid_.size();
  if (s.size() < ncell * sz || v.size() < ncell * sz * 3 || A.size() < ncell * sz * 6 || B.size() < ncell * sz * 3)
    throw GridMismatch("contract: buffer sizes do not match grid");
  contract_cells(ncell, s.data(), v.data(), A.data(), B.data());
}

void CollisionOperator::contract_cells(std::size_t ncell, const double* s, const double* v, double* A,
                                       double* B) const {
  const std::size_t sz = grid_.size();
  const double w = grid_.weight();
  // q-major copies: sq[q][c], vq[q][c][3]
  std::vector<double> st(sz * ncell), vt(sz * ncell * 3);
  for (std::size_t c = 0; c < ncell; ++c)
    for (std::size_t q = 0; q < sz; ++q) {
      st[q * ncell + c] = s[c * sz + q];
      for (int d = 0; d < 3; ++d) vt[(q * ncell + c) * 3 + d] = v[(c * sz + q) * 3 + d];
    }
  constexpr std::size_t kQB = 256;
  parallel_for(sz, opt_.workers, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> acc(ncell * 9);
    std::vector<double> rowbuf(cached() ? 0 : kQB * 6);
    for (std::size_t a = lo; a < hi; ++a) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t q0 = 0; q0 < sz; q0 += kQB) {
        std::size_t q1 = std::min(sz, q0 + kQB);
        const double* row;
        if (cached()) {
          row = table_.data() + (a * sz + q0) * 6;
        } else {
          compute_row_block(a, q0, q1, rowbuf.data());
          row = rowbuf.data();
        }
        for (std::size_t q = q0; q < q1; ++q) {
          if (q == a) continue;
          const double* k = row + (q - q0) * 6;
          const double k0 = k[0], k1 = k[1], k2 = k[2], k3 = k[3], k4 = k[4], k5 = k[5];
          const double* sq = st.data() + q * ncell;
          const double* vq = vt.data() + q * ncell * 3;
          for (std::size_t c = 0; c < ncell; ++c) {
            double* ac = acc.data() + c * 9;
            double sb = sq[c];
            const double* x = vq + 3 * c;
            ac[0] += k0 * sb;
            ac[1] += k1 * sb;
            ac[2] += k2 * sb;
            ac[3] += k3 * sb;
            ac[4] += k4 * sb;
            ac[5] += k5 * sb;
            ac[6] += k0 * x[0] + k1 * x[1] + k2 * x[2];
            ac[7] += k1 * x[0] + k3 * x[1] + k4 * x[2];
            ac[8] += k2 * x[0] + k4 * x[1] + k5 * x[2];
          }
        }
      }
      for (std::size_t c = 0; c < ncell; ++c) {
        for (int i = 0; i < 6; ++i) A[(c * sz + a) * 6 + i] = acc[c * 9 + i] * w;
        for (int i = 0; i < 3; ++i) B[(c * sz + a) * 3 + i] = acc[c * 9 + 6 + i] * w;
      }
    }
  });
}

namespace {

void log_gradient(const MomentumGrid& grid, std::span<const double> f, std::vector<double>& G) {
  std::vector<double> l(f.size());
  for (std::size_t a = 0; a < f.size(); ++a) l[a] = std::log(std::max(f[a], kLogFloor));
  G.resize(3 * f.size());
  grid.grad(l, G);
}

}  // namespace

void CollisionOperator::collide_self(std::span<const double> f, std::span<double> out) const {
  const std::size_t sz = grid_.size();
  if (f.size() != sz || out.size() != sz) throw GridMismatch("collide_self: field size does not match grid");
  std::vector<double> G, v(3 * sz), A(6 * sz), B(3 * sz), J(3 * sz);
  log_gradient(grid_, f, G);
  for (std::size_t q = 0; q < sz; ++q)
    for (int d = 0; d < 3; ++d) v[3 * q + d] = f[q] * G[3 * q + d];
  contract_cells(1, f.data(), v.data(), A.data(), B.data());
  for (std::size_t a = 0; a < sz; ++a) {
    Sym3 m{A[6 * a], A[6 * a + 1], A[6 * a + 2], A[6 * a + 3], A[6 * a + 4], A[6 * a + 5]};
    Vec3 ag = sym_apply(m, {G[3 * a], G[3 * a + 1], G[3 * a + 2]});
    for (int d = 0; d < 3; ++d) J[3 * a + d] = f[a] * (ag[d] - B[3 * a + d]);
  }
  grid_.div(J, out);
}

void CollisionOperator::collide_self(const DistributionField& f, DistributionField& out) const {
  check_grid(f, grid_);
  const std::size_t sz = grid_.size(), nc = f.nx;
  if (out.nx != nc || out.nodes != sz) out = DistributionField(nc, sz, f.kind);
  std::vector<double> G(3 * sz * nc), v(3 * sz * nc), A(6 * sz * nc), B(3 * sz * nc), J(3 * sz);
  std::vector<double> g;
  for (std::size_t c = 0; c < nc; ++c) {
    log_gradient(grid_, f.cell(c), g);
    std::copy(g.begin(), g.end(), G.begin() + 3 * sz * c);
    auto fc = f.cell(c);
    for (std::size_t q = 0; q < sz; ++q)
      for (int d = 0; d < 3; ++d) v[3 * (c * sz + q) + d] = fc[q] * g[3 * q + d];
  }
  contract_cells(nc, f.values.data(), v.data(), A.data(), B.data());
  for (std::size_t c = 0; c < nc; ++c) {
    auto fc = f.cell(c);
    for (std::size_t a = 0; a < sz; ++a) {
      std::size_t i = c * sz + a;
      Sym3 m{A[6 * i], A[6 * i + 1], A[6 * i + 2], A[6 * i + 3], A[6 * i + 4], A[6 * i + 5]};
      Vec3 ag = sym_apply(m, {G[3 * i], G[3 * i + 1], G[3 * i + 2]});
      for (int d = 0; d < 3; ++d) J[3 * a + d] = fc[a] * (ag[d] - B[3 * i + d]);
    }
    grid_.div(J, out.cell(c));
  }
}

void CollisionOperator::collide_bilinear(std::span<const double> g, std::span<const double> h,
                                         std::span<double> out) const {
  const std::size_t sz = grid_.size();
  if (g.size() != sz || h.size() != sz || out.size() != sz)
    throw GridMismatch("collide: field size does not match grid");
  std::vector<double> Dg(3 * sz), Dh(3 * sz), A(6 * sz), B(3 * sz), J(3 * sz);
  grid_.grad(g, Dg);
  grid_.grad(h, Dh);
  contract_cells(1, h.data(), Dh.data(), A.data(), B.data());
  for (std::size_t a = 0; a < sz; ++a) {
    Sym3 m{A[6 * a], A[6 * a + 1], A[6 * a + 2], A[6 * a + 3], A[6 * a + 4], A[6 * a + 5]};
    Vec3 ag = sym_apply(m, {Dg[3 * a], Dg[3 * a + 1], Dg[3 * a + 2]});
    for (int d = 0; d < 3; ++d) J[3 * a + d] = ag[d] - g[a] * B[3 * a + d];
  }
  grid_.div(J, out);
}

double CollisionOperator::stiffness(std::span<const double> f) const {
  const std::size_t sz = grid_.size();
  std::vector<double> v(3 * sz, 0.0), A(6 * sz), B(3 * sz);
  contract_cells(1, f.data(), v.data(), A.data(), B.data());
  double mx = 0.0;
  for (std::size_t a = 0; a < sz; ++a) mx = std::max(mx, A[6 * a] + A[6 * a + 3] + A[6 * a + 5]);
  double h = grid_.h();
  return mx / (h * h);
}

double CollisionOperator::stiffness(const DistributionField& f) const {
  const std::size_t sz = grid_.size(), nc = f.nx;
  std::vector<double> v(3 * sz * nc, 0.0), A(6 * sz * nc), B(3 * sz * nc);
  contract_cells(nc, f.values.data(), v.data(), A.data(), B.data());
  double mx = 0.0;
  for (std::size_t i = 0; i < sz * nc; ++i) mx = std::max(mx, A[6 * i] + A[6 * i + 3] + A[6 * i + 5]);
  double h = grid_.h();
  return mx / (h * h);
}

double CollisionOperator::excluded_shell_ratio(std::span<const double> f, int sub) const {
  const std::size_t sz = grid_.size();
  std::vector<double> v(3 * sz, 0.0), A(6 * sz), B(3 * sz);
  contract_cells(1, f.data(), v.data(), A.data(), B.data());
  double fmax = *std::max_element(f.begin(), f.end());
  double h = grid_.h(), hs = h / sub, ws = hs * hs * hs;
  double worst = 0.0;
  for (std::size_t a = 0; a < sz; ++a) {
    if (f[a] < 1e-3 * fmax) continue;
    Sym3 shell{0, 0, 0, 0, 0, 0};
    const Vec3& p = grid_.p(a);
    for (int i = 0; i < sub; ++i)
      for (int j = 0; j < sub; ++j)
        for (int k = 0; k < sub; ++k) {
          Vec3 q{p[0] - 0.5 * h + (i + 0.5) * hs, p[1] - 0.5 * h + (j + 0.5) * hs, p[2] - 0.5 * h + (k + 0.5) * hs};
          Sym3 kv = kernel_sym(p, q);
          for (int c = 0; c < 6; ++c) shell[c] += kv[c] * ws * f[a];
        }
    auto fro = [](const double* m) {
      return std::sqrt(m[0] * m[0] + m[3] * m[3] + m[5] * m[5] + 2 * (m[1] * m[1] + m[2] * m[2] + m[4] * m[4]));
    };
    double r = fro(shell.data()) / std::max(fro(&A[6 * a]), 1e-300);
    worst = std::max(worst, r);
  }
  return worst;
}

DistributionField collide(const DistributionField& g, const DistributionField& h, const MomentumGrid& grid,
                          const CollisionOperator& op) {
  check_grid(g, grid);
  check_grid(h, grid);
  if (!grid.same_as(op.grid())) throw GridMismatch("collide: operator built on a different grid");
  if (g.nx != h.nx) throw GridMismatch("collide: cell counts differ");
  DistributionField out(g.nx, grid.size(), g.kind);
  if (&g == &h || g.values == h.values) {
    op.collide_self(g, out);
    return out;
  }
  for (std::size_t c = 0; c < g.nx; ++c) op.collide_bilinear(g.cell(c), h.cell(c), out.cell(c));
  return out;
}

double entropy(std::span<const double> f, const MomentumGrid& grid) {
  double s = 0.0;
  for (double v : f)
    if (v > kLogFloor) s += v * std::log(v);
  return s * grid.weight();
}

double entropy(const DistributionField& f, const MomentumGrid& grid) {
  check_grid(f, grid);
  double s = 0.0;
  for (std::size_t c = 0; c < f.nx; ++c) s += entropy(f.cell(c), grid);
  return s;
}

}  // namespace rlk
