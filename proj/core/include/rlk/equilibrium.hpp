#pragma once

#include <array>
#include <span>
#include <vector>

#include "rlk/momentum_grid.hpp"

namespace rlk {

struct FluidState {
  double n = 1.0;
  Vec3 u{0.0, 0.0, 0.0};
  double T = 1.0;

  double gamma() const { return 1.0 / T; }
  double u0() const { return std::sqrt(1.0 + u[0] * u[0] + u[1] * u[1] + u[2] * u[2]); }
  double pressure() const { return n * T; }
  // total energy density in the rest frame, rest mass included
  double energy() const;
  // (e + P)/n
  double enthalpy() const;
  void validate() const;  // throws DomainError
};

// n/(4 pi T K2(1/T)) exp((-u0 p0 + u.p)/T) at every node
void juttner_into(const FluidState& s, const MomentumGrid& grid, std::span<double> out);
DistributionField juttner(const FluidState& s, const MomentumGrid& grid);
DistributionField juttner(const std::vector<FluidState>& cells, const MomentumGrid& grid);

// dM/d(n, u1, u2, u3, T) at every node, five arrays of grid.size()
std::array<std::vector<double>, 5> juttner_jacobian(const FluidState& s, const MomentumGrid& grid);

// (n u0, (e+P) u0 u, e u0^2 + P |u|^2)
Moments continuum_moments(const FluidState& s);

// Inverts continuum_moments by damped Newton on (n, u, T).
struct FitInfo {
  int iterations = 0;
  double residual = 0.0;
};
FluidState fit_maxwellian(const Moments& m, FitInfo* info = nullptr);
FluidState fit_maxwellian(const Moments& m, const FluidState& guess, FitInfo* info = nullptr);

// The Juttner state whose grid moments equal m (Newton on ln M = a + b.p + c p0).
FluidState fit_maxwellian_discrete(const Moments& m, const MomentumGrid& grid, FitInfo* info = nullptr);
FluidState fit_maxwellian_discrete(const Moments& m, const MomentumGrid& grid, const FluidState& guess,
                                   FitInfo* info = nullptr);

}  // namespace rlk
