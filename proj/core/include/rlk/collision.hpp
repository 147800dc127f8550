#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rlk/momentum_grid.hpp"

namespace rlk {

using Mat3 = std::array<double, 9>;  // row-major
using Sym3 = std::array<double, 6>;  // xx xy xz yy yz zz

struct KernelValue {
  Mat3 phi;
  double lambda;
  Mat3 S;
};

// Lambda S/(p0 q0) with Lambda = rho^2 (rho^2 - 1)^(-3/2), rho = -p^mu q_mu,
// S = (rho^2 - 1) I - (p - q)(p - q)^T + (rho - 1)(p q^T + q p^T).
KernelValue kernel(const Vec3& p, const Vec3& q);
Sym3 kernel_sym(const Vec3& p, const Vec3& q);

Vec3 sym_apply(const Sym3& m, const Vec3& v);

enum class KernelCache { Auto, On, Off };
KernelCache parse_kernel_cache(const std::string& s);

struct CollisionOptions {
  KernelCache cache = KernelCache::Auto;
  std::size_t cache_limit_bytes = std::size_t(2) << 30;
  int workers = 1;
};

// Discrete Landau operator on one momentum grid. The lattice kernel is the
// continuum kernel sandwiched by the projector orthogonal to the difference
// of discrete velocities grad_p p0, so the discrete energy is an exact
// collision invariant.
class CollisionOperator {
 public:
  CollisionOperator(const MomentumGrid& grid, CollisionOptions opt = {});

  const MomentumGrid& grid() const { return grid_; }
  bool cached() const { return !table_.empty(); }
  int workers() const { return opt_.workers; }
  void set_workers(int w) { opt_.workers = w; }

  // lattice kernel for nodes a != b (zero on the diagonal)
  Sym3 phi(std::size_t a, std::size_t b) const;

  // A(p) = sum_q w Phi(p,q) s(q)   (6 per node)
  // B(p) = sum_q w Phi(p,q) v(q)   (3 per node)
  // for ncell cells laid out contiguously (s: ncell*sz, v: ncell*sz*3).
  void contract(std::size_t ncell, std::span<const double> s, std::span<const double> v, std::span<double> A,
                std::span<double> B) const;
  // reference path: single thread, kernel evaluated on the fly, one pair at a time
  void contract_naive(std::size_t ncell, std::span<const double> s, std::span<const double> v, std::span<double> A,
                      std::span<double> B) const;

  // C[f, f] in the entropic weak form: -D^T [ f(p) sum_q Phi f(q) (D ln f(p) - D ln f(q)) ]
  void collide_self(std::span<const double> f, std::span<double> out) const;
  void collide_self(const DistributionField& f, DistributionField& out) const;
  // strong form C[g, h] = -D^T [ sum_q Phi (D g(p) h(q) - g(p) D h(q)) ]
  void collide_bilinear(std::span<const double> g, std::span<const double> h, std::span<double> out) const;

  // largest eigenvalue scale of the collision operator linearized at f, for explicit steps
  double stiffness(std::span<const double> f) const;
  double stiffness(const DistributionField& f) const;

  // max over nodes with f > 1e-3 max f of |excluded diagonal cell| / |retained sum| in A
  double excluded_shell_ratio(std::span<const double> f, int sub = 4) const;

 private:
  void build_table();
  void compute_row_block(std::size_t a, std::size_t b0, std::size_t b1, double* out) const;
  void contract_cells(std::size_t ncell, const double* s, const double* v, double* A, double* B) const;

  MomentumGrid grid_;
  CollisionOptions opt_;
  std::vector<double> table_;
};

// dispatches g == h (same storage or equal values) to the weak form
DistributionField collide(const DistributionField& g, const DistributionField& h, const MomentumGrid& grid,
                          const CollisionOperator& op);

double entropy(std::span<const double> f, const MomentumGrid& grid);
double entropy(const DistributionField& f, const MomentumGrid& grid);

inline constexpr double kLogFloor = 1e-300;

}  // namespace rlk
