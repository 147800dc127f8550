#include "rlk/momentum_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rlk/error.hpp"

namespace rlk {

double lorentz_product(const Vec3& p, const Vec3& q) {
  return -p0_of(p) * p0_of(q) + p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
}

double lorentz_gap(const Vec3& p, const Vec3& q) {
  // 2(rho - 1) = |p - q|^2 - (p0 - q0)^2, with p0 - q0 = (|p|^2 - |q|^2)/(p0 + q0)
  double pp = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
  double qq = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
  double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
  double d2 = dx * dx + dy * dy + dz * dz;
  double p0 = std::sqrt(1.0 + pp), q0 = std::sqrt(1.0 + qq);
  double de = (p[0] + q[0]) * dx + (p[1] + q[1]) * dy + (p[2] + q[2]) * dz;
  double dp0 = de / (p0 + q0);
  return 0.5 * (d2 - dp0 * dp0);
}

MomentumGrid::MomentumGrid(std::size_t n, double p_max, Stencil stencil) : n_(n), p_max_(p_max), stencil_(stencil) {
  if (n < 4) throw DomainError("MomentumGrid: need at least 4 points per axis");
  if (!(p_max > 0.0)) throw DomainError("MomentumGrid: p_max must be positive");
  h_ = 2.0 * p_max / static_cast<double>(n);
  w_ = h_ * h_ * h_;
  std::size_t sz = size();
  p_.resize(sz);
  p0_.resize(sz);
  phat_.resize(sz);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t a = index(i, j, k);
        p_[a] = {coord(i), coord(j), coord(k)};
        p0_[a] = p0_of(p_[a]);
        for (int d = 0; d < 3; ++d) phat_[a][d] = p_[a][d] / p0_[a];
      }
  std::vector<double> g(3 * sz);
  grad(p0_, g);
  dp0_.resize(sz);
  for (std::size_t a = 0; a < sz; ++a) dp0_[a] = {g[3 * a], g[3 * a + 1], g[3 * a + 2]};
}

bool MomentumGrid::on_boundary(std::size_t a) const {
  std::size_t k = a % n_, j = (a / n_) % n_, i = a / (n_ * n_);
  auto edge = [&](std::size_t c) { return c == 0 || c + 1 == n_; };
  return edge(i) || edge(j) || edge(k);
}

MomentumGrid::Row MomentumGrid::stencil_row(std::size_t r) const {
  if (stencil_ == Stencil::OneSided) {
    if (r + 2 < n_) return {r, {-3.0, 4.0, -1.0}};
    return {r - 2, {1.0, -4.0, 3.0}};
  }
  if (r == 0) return {0, {-3.0, 4.0, -1.0}};
  if (r + 1 == n_) return {r - 2, {1.0, -4.0, 3.0}};
  return {r - 1, {-1.0, 0.0, 1.0}};
}

void MomentumGrid::grad(std::span<const double> f, std::span<double> out) const {
  const std::size_t n = n_;
  const double inv2h = 1.0 / (2.0 * h_);
  const std::size_t stride[3] = {n * n, n, 1};
  std::vector<Row> rows(n);
  for (std::size_t r = 0; r < n; ++r) rows[r] = stencil_row(r);
  for (std::size_t a = 0; a < size(); ++a) {
    std::size_t c[3] = {a / (n * n), (a / n) % n, a % n};
    for (int d = 0; d < 3; ++d) {
      std::size_t s = stride[d];
      const Row& row = rows[c[d]];
      const double* b = &f[a - c[d] * s + row.first * s];
      out[3 * a + d] = (row.c[0] * b[0] + row.c[1] * b[s] + row.c[2] * b[2 * s]) * inv2h;
    }
  }
}

void MomentumGrid::div(std::span<const double> v, std::span<double> out) const {
  // out = -D^T v, accumulated as the transpose of grad's stencils
  const std::size_t n = n_;
  const double inv2h = 1.0 / (2.0 * h_);
  const std::size_t stride[3] = {n * n, n, 1};
  std::vector<Row> rows(n);
  for (std::size_t r = 0; r < n; ++r) rows[r] = stencil_row(r);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t a = 0; a < size(); ++a) {
    std::size_t c[3] = {a / (n * n), (a / n) % n, a % n};
    for (int d = 0; d < 3; ++d) {
      std::size_t s = stride[d];
      const Row& row = rows[c[d]];
      double x = v[3 * a + d] * inv2h;
      double* b = &out[a - c[d] * s + row.first * s];
      b[0] -= row.c[0] * x;
      b[s] -= row.c[1] * x;
      b[2 * s] -= row.c[2] * x;
    }
  }
}

double MomentumGrid::integrate(std::span<const double> f) const {
  double s = 0.0;
  for (double v : f) s += v;
  return s * w_;
}

double default_p_max(double t_max, double u_max, std::size_t n, double tail) {
  double base = std::max(5.0, 6.0 * std::sqrt(t_max * (1.0 + t_max)) + 4.0 * u_max);
  // exp(-(p0 - 1)/T) = tail in the rest frame, boosted by u_max
  double e = 1.0 + t_max * std::log(1.0 / tail);
  double p = std::sqrt(e * e - 1.0);
  double u0 = std::sqrt(1.0 + u_max * u_max);
  double boosted = u0 * p + u_max * e;
  // the boundary node sits half a cell inside p_max
  double pm = boosted * static_cast<double>(n) / (static_cast<double>(n) - 1.0);
  return std::max(base, pm);
}

double DistributionField::min() const {
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}
double DistributionField::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

Moments moments(std::span<const double> f, const MomentumGrid& grid) {
  Moments m;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    double v = f[a];
    m.m0 += v;
    const Vec3& p = grid.p(a);
    m.m1[0] += p[0] * v;
    m.m1[1] += p[1] * v;
    m.m1[2] += p[2] * v;
    m.m2 += grid.p0(a) * v;
  }
  double w = grid.weight();
  m.m0 *= w;
  for (auto& x : m.m1) x *= w;
  m.m2 *= w;
  return m;
}

std::vector<Moments> moments(const DistributionField& f, const MomentumGrid& grid) {
  check_grid(f, grid);
  std::vector<Moments> out(f.nx);
  for (std::size_t x = 0; x < f.nx; ++x) out[x] = moments(f.cell(x), grid);
  return out;
}

double boundary_ratio(std::span<const double> f, const MomentumGrid& grid) {
  double mx = 0.0, mb = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    double v = std::abs(f[a]);
    mx = std::max(mx, v);
    if (grid.on_boundary(a)) mb = std::max(mb, v);
  }
  return mx > 0.0 ? mb / mx : 0.0;
}

void check_grid(const DistributionField& f, const MomentumGrid& grid) {
  if (f.nodes != grid.size() || f.values.size() != f.nx * f.nodes)
    throw GridMismatch("field has " + std::to_string(f.nodes) + " nodes per cell, grid has " +
                       std::to_string(grid.size()));
}

}  // namespace rlk
