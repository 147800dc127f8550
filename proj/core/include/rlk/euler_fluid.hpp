#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "rlk/equilibrium.hpp"
#include "rlk/momentum_grid.hpp"

namespace rlk {

// (D, m, E) = (n u0, (e+P) u0 u, e u0^2 + P|u|^2)
struct ConservedState {
  double D = 0.0;
  Vec3 m{0.0, 0.0, 0.0};
  double E = 0.0;
};

using Prim5 = std::array<double, 5>;  // (n, u1, u2, u3, T)
Prim5 to_prim5(const FluidState& s);
FluidState from_prim5(const Prim5& v);

// How conserved variables and fluxes are evaluated from primitives.
// Continuum uses the Synge closure. Grid uses discrete moments of the Juttner
// state on a momentum grid, which is what the kinetic solver conserves.
enum class Closure { Continuum, Grid };
Closure parse_closure(const std::string& s);

// None: unlimited centered slope (Fromm)
enum class Limiter { Minmod, MC, VanLeer, None };
Limiter parse_limiter(const std::string& s);
double limit_slope(Limiter l, double left, double right);

class FluidClosure {
 public:
  FluidClosure() = default;                                // continuum
  explicit FluidClosure(const MomentumGrid& grid);         // grid
  Closure kind() const { return grid_ ? Closure::Grid : Closure::Continuum; }
  const MomentumGrid* grid() const { return grid_; }

  ConservedState prim2cons(const FluidState& s) const;
  // x-flux of (D, m, E)
  ConservedState flux(const FluidState& s) const;
  // Throws InadmissibleState (cell index `cell`) or NonConvergence.
  FluidState cons2prim(const ConservedState& u, const FluidState* guess = nullptr, int cell = -1,
                       FitInfo* info = nullptr) const;

  // dU/dprim and dF/dprim (5x5, rows D, m1, m2, m3, E)
  void jacobians(const FluidState& s, Eigen::Matrix<double, 5, 5>& J0, Eigen::Matrix<double, 5, 5>& J1) const;
  // Time derivative of primitives from the quasi-linear form, dprim/dt = -J0^{-1} J1 dprim/dx.
  Prim5 time_derivative(const FluidState& s, const Prim5& dx_prim) const;

 private:
  const MomentumGrid* grid_ = nullptr;
};

ConservedState prim2cons(const FluidState& s);
FluidState cons2prim(const ConservedState& u, FitInfo* info = nullptr);

struct EulerOptions {
  Limiter limiter = Limiter::MC;
  int workers = 1;
};

// Periodic slab [0, L) with nx cells, MUSCL reconstruction of primitives,
// HLL flux with wave speeds -1 and +1, SSP-RK2 in time.
class EulerSolver {
 public:
  EulerSolver(std::size_t nx, double length, FluidClosure closure, EulerOptions opt = {});

  std::size_t nx() const { return nx_; }
  double dx() const { return length_ / static_cast<double>(nx_); }
  double length() const { return length_; }
  double x(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx(); }
  const FluidClosure& closure() const { return closure_; }
  double max_dt() const { return 0.4 * dx(); }

  std::vector<ConservedState> to_conserved(const std::vector<FluidState>& prim) const;
  // Uses and refreshes the cached primitives as Newton guesses.
  std::vector<FluidState> to_primitive(const std::vector<ConservedState>& u) const;

  void rhs(const std::vector<ConservedState>& u, std::vector<ConservedState>& out) const;
  // Throws CflViolation when dt > 0.4 dx.
  void step(std::vector<ConservedState>& u, double dt) const;

  // sum over cells times dx
  ConservedState totals(const std::vector<ConservedState>& u) const;

  // Fourth-order centered x-derivatives of primitives.
  std::vector<Prim5> dx_primitive(const std::vector<FluidState>& prim) const;
  std::vector<Prim5> dt_primitive(const std::vector<FluidState>& prim) const;
  // sup over cells of |grad_{t,x}(n,u,T)| and of |grad_{t,x}(n,u,T)| (1+T) u0 / T^2
  struct GradientReport {
    double grad = 0.0;
    double weighted = 0.0;
  };
  GradientReport gradients(const std::vector<FluidState>& prim) const;

 private:
  std::size_t nx_;
  double length_;
  FluidClosure closure_;
  EulerOptions opt_;
  mutable std::vector<FluidState> guess_;
};

// One row per cell: x, n, u1, u2, u3, T
void write_fluid_csv(const std::string& path, const EulerSolver& s, const std::vector<FluidState>& prim);

}  // namespace rlk
