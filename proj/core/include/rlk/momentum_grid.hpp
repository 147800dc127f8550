#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace rlk {

using Vec3 = std::array<double, 3>;

// p^mu q_mu = -p0 q0 + p.q for on-shell momenta (m = c = 1).
double lorentz_product(const Vec3& p, const Vec3& q);

// -p^mu q_mu - 1, evaluated without cancellation for nearby momenta.
double lorentz_gap(const Vec3& p, const Vec3& q);

inline double p0_of(const Vec3& p) { return std::sqrt(1.0 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

// One-axis gradient stencil. Centered has the null vector (-1)^i on top of the
// constants, which decouples the parity sublattices of the collision operator.
// OneSided is second order forward, backward in the last two rows; only
// constants are annihilated.
enum class Stencil { Centered, OneSided };

// Uniform midpoint lattice on [-p_max, p_max]^3.
class MomentumGrid {
 public:
  MomentumGrid(std::size_t n, double p_max, Stencil stencil = Stencil::OneSided);

  std::size_t n() const { return n_; }
  std::size_t size() const { return n_ * n_ * n_; }
  double p_max() const { return p_max_; }
  double h() const { return h_; }
  double weight() const { return w_; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * n_ + j) * n_ + k; }
  // symmetric about 0 bit for bit: the offset is an exact half-integer
  double coord(std::size_t i) const { return (static_cast<double>(i) + 0.5 - 0.5 * static_cast<double>(n_)) * h_; }

  const Vec3& p(std::size_t a) const { return p_[a]; }
  double p0(std::size_t a) const { return p0_[a]; }
  const Vec3& phat(std::size_t a) const { return phat_[a]; }
  // grad_p p0 on the lattice (discrete velocity)
  const Vec3& dp0(std::size_t a) const { return dp0_[a]; }
  bool on_boundary(std::size_t a) const;

  Stencil stencil() const { return stencil_; }
  // row r of the one-axis gradient times 2h: coefficients of columns first, first+1, first+2
  struct Row {
    std::size_t first;
    std::array<double, 3> c;
  };
  Row stencil_row(std::size_t r) const;

  // grad_p, second order, with the stencil above
  void grad(std::span<const double> f, std::span<double> out) const;  // out: 3*size, node-major
  // div_p := -grad^T, so sum w (div v) g = -sum w v.grad g exactly
  void div(std::span<const double> v, std::span<double> out) const;

  double integrate(std::span<const double> f) const;

  bool same_as(const MomentumGrid& o) const { return n_ == o.n_ && p_max_ == o.p_max_ && stencil_ == o.stencil_; }

 private:
  std::size_t n_;
  double p_max_;
  Stencil stencil_;
  double h_;
  double w_;
  std::vector<Vec3> p_;
  std::vector<double> p0_;
  std::vector<Vec3> phat_;
  std::vector<Vec3> dp0_;
};

// Default truncation for temperatures up to t_max and bulk speeds up to u_max:
// the larger of 6 sqrt(T(1+T)) + 4|u| (at least 5) and the radius where the
// Juttner tail drops below `tail` of its peak with one cell of margin.
double default_p_max(double t_max, double u_max, std::size_t n, double tail = 1e-7);

enum class FieldKind { Raw, Perturbation };

// Nx cells of values on a momentum grid, row-major (x, p1, p2, p3).
struct DistributionField {
  DistributionField() = default;
  DistributionField(std::size_t nx, std::size_t nodes, FieldKind kind = FieldKind::Raw)
      : nx(nx), nodes(nodes), kind(kind), values(nx * nodes, 0.0) {}

  std::size_t nx = 0;
  std::size_t nodes = 0;
  FieldKind kind = FieldKind::Raw;
  std::vector<double> values;

  std::span<double> cell(std::size_t x) { return {values.data() + x * nodes, nodes}; }
  std::span<const double> cell(std::size_t x) const { return {values.data() + x * nodes, nodes}; }
  double min() const;
  double max() const;
};

struct Moments {
  double m0 = 0.0;
  Vec3 m1{0.0, 0.0, 0.0};
  double m2 = 0.0;
};

Moments moments(std::span<const double> f, const MomentumGrid& grid);
std::vector<Moments> moments(const DistributionField& f, const MomentumGrid& grid);

// max over boundary nodes divided by max over all nodes
double boundary_ratio(std::span<const double> f, const MomentumGrid& grid);

void check_grid(const DistributionField& f, const MomentumGrid& grid);

}  // namespace rlk
