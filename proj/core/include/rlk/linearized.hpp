#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rlk/collision.hpp"
#include "rlk/equilibrium.hpp"

namespace rlk {

// sigma^{ij}(p) = sum_{q != p} w Phi^{ij}(p,q) M(q)
struct SigmaField {
  std::vector<double> values;  // 6 per node
  Sym3 at(std::size_t a) const {
    const double* s = values.data() + 6 * a;
    return {s[0], s[1], s[2], s[3], s[4], s[5]};
  }
  // smallest eigenvalue over all nodes
  double min_eigenvalue() const;
};

SigmaField sigma(const CollisionOperator& op, std::span<const double> M);

struct Projection {
  std::vector<double> Pf;
  double a = 0.0;              // coefficient of (p0 - rho2/rho1) form's constant, mapped back
  Vec3 b{0.0, 0.0, 0.0};
  double c = 0.0;
  double constant = 0.0;       // a - (rho2/rho1) c, the coefficient of sqrt(M) itself
};

// span{sqrt M, p_i sqrt M, p0 sqrt M} with the grid inner product
class NullSpaceBasis {
 public:
  NullSpaceBasis(const MomentumGrid& grid, std::span<const double> M);

  Projection project(std::span<const double> f) const;
  std::vector<double> project_micro(std::span<const double> f) const;  // (I - P) f
  const Eigen::Matrix<double, 5, 5>& gram() const { return gram_; }
  const std::vector<double>& vector(int k) const { return chi_[k]; }
  // grid inner products <chi_k, f>
  Eigen::Matrix<double, 5, 1> inner(std::span<const double> f) const;
  double rho1() const { return rho1_; }
  double rho2() const { return rho2_; }

 private:
  const MomentumGrid* grid_;
  std::array<std::vector<double>, 5> chi_;
  Eigen::Matrix<double, 5, 5> gram_;
  Eigen::LLT<Eigen::Matrix<double, 5, 5>> llt_;
  double rho1_ = 0.0, rho2_ = 0.0;
};

class LinearizedOperator {
 public:
  LinearizedOperator(const CollisionOperator& op, const FluidState& state);

  const MomentumGrid& grid() const { return op_->grid(); }
  const FluidState& state() const { return state_; }
  const std::vector<double>& M() const { return M_; }
  const std::vector<double>& sqrtM() const { return sqrtM_; }
  const SigmaField& sigma_field() const { return sigma_; }
  const NullSpaceBasis& basis() const { return basis_; }

  void apply_A(std::span<const double> f, std::span<double> out) const;
  void apply_K(std::span<const double> f, std::span<double> out) const;
  void apply_L(std::span<const double> f, std::span<double> out) const;
  std::vector<double> apply_L(std::span<const double> f) const;
  void apply_Gamma(std::span<const double> f, std::span<const double> g, std::span<double> out) const;

  double sigma_inner(std::span<const double> f, std::span<const double> g) const;
  double sigma_norm(std::span<const double> f) const;

  // dense symmetric matrix of L in the grid basis (unit vectors), size N^3
  Eigen::MatrixXd dense() const;

 private:
  void kpart(std::span<const double> X, std::span<double> Y) const;  // Y(p) = M(p) sum_q w Phi M(q) X(q)

  const CollisionOperator* op_;
  FluidState state_;
  std::vector<double> M_, sqrtM_, isqrtM_;
  SigmaField sigma_;
  NullSpaceBasis basis_;
};

// min over `fields` random smooth fields of <L f, f> / |(I - P) f|_sigma^2
double fitted_coercivity(const LinearizedOperator& L, int fields = 50, std::uint64_t seed = 200);

// Dense eigensolve of dense(), ascending.
struct SpectrumReport {
  std::vector<double> smallest;  // first `count` eigenvalues
  double top = 0.0;              // largest |eigenvalue|
};
SpectrumReport dense_spectrum(const LinearizedOperator& L, std::size_t count = 12);

// |M^{-1/2} C[M, M]| / (|sqrt M| rho) with rho the largest eigenvalue scale of L;
// the self-collision weak form gives rounding here
double equilibrium_residual(const CollisionOperator& op, const FluidState& s, double top);

// grid L2 inner product (weight h^3)
double l2_inner(const MomentumGrid& grid, std::span<const double> f, std::span<const double> g);
double l2_norm(const MomentumGrid& grid, std::span<const double> f);

// Smooth random field sqrt(M) * polynomial(p/scale) with normal coefficients.
// The same seed yields the same continuum function on every grid.
std::vector<double> random_smooth_field(const MomentumGrid& grid, const FluidState& state, std::uint64_t seed,
                                        int degree = 3);

}  // namespace rlk
