#pragma once

#include <array>
#include <string>
#include <vector>

#include "rlk/collision.hpp"
#include "rlk/equilibrium.hpp"
#include "rlk/momentum_grid.hpp"

namespace rlk {

struct WeightSpec {
  int Nc = 3;
  double Tc = 1.0;
  void validate() const;  // Nc >= 3, Tc > 0
};

// T_c default: 1.05 times the largest background temperature
WeightSpec default_weights(double sup_T);

// w^l(t, p0) = p0^(2(Nc - l)) exp(p0 / (5 ln(e + t) Tc)), l in {0, 1, 2}
double weight(const WeightSpec& s, int level, double t, double p0);
double weight_W(const WeightSpec& s, double t);  // exp(1/(5 ln(e+t) Tc))
double weight_Y(const WeightSpec& s, double t);  // -W'/W

// Fitted envelope (w^l)^2 M^(1/2) <= C exp(-c0 p0) over the grid nodes.
struct WeightDecayFit {
  double C = 0.0;
  double c0 = 0.0;
};
WeightDecayFit fit_weight_decay(const WeightSpec& s, int level, double t, const FluidState& state,
                                const MomentumGrid& grid);

// Admissibility of a time horizon t0 against a background with
// Z = sup |grad_{t,x}(n,u,T)| (1+T) u0 / T^2.
double admissibility_lhs(const WeightSpec& s, double t0);  // 1/(10 Tc (e+t0) ln(e+t0)^2)
// Largest t0 with lhs(t0) >= Z, capped at t_cap; negative when none.
double max_admissible_t0(const WeightSpec& s, double Z, double t_cap = 1e6);

struct GateReport {
  double Z = 0.0;
  double t0_max = 0.0;
  double t_end = 0.0;
  bool holds = false;          // t_end <= t0_max
  bool z_below_half_y = false;  // Z <= Y(t)/2 on [0, t_end]
};
GateReport admissibility_gate(const WeightSpec& s, double Z, double t_end);

// E and D components in a 1d3v run, each a nonnegative number.
struct EnergyReport {
  static constexpr std::size_t kE = 6;
  static constexpr std::size_t kD = 11;
  double t = 0.0;
  std::array<double, kE> E{};
  std::array<double, kD> D{};
  double E_total() const;
  double D_total() const;
  static const std::array<const char*, kE>& e_names();
  static const std::array<const char*, kD>& d_names();
};

// Evaluates reports for remainder fields f_R on an Nx-cell periodic x-grid.
// The per-cell backgrounds fix M, P and sigma.
class EnergyEvaluator {
 public:
  EnergyEvaluator(const CollisionOperator& op, const WeightSpec& w, double dx);
  EnergyReport evaluate(double t, double eps, const DistributionField& fR,
                        const std::vector<FluidState>& background) const;

 private:
  const CollisionOperator* op_;
  WeightSpec w_;
  double dx_;
};

// sup_t E(t) + int D dt (trapezoid) against E(0) + eps^(2k+3)
struct EnergyBound {
  double sup_E = 0.0;
  double int_D = 0.0;
  double E0 = 0.0;
  double rhs = 0.0;
  double C = 0.0;  // (sup E + int D) / rhs
};
EnergyBound energy_bound(const std::vector<EnergyReport>& series, double eps, int k);

void write_energy_csv(const std::string& path, const std::vector<EnergyReport>& series);
std::vector<EnergyReport> read_energy_csv(const std::string& path);

}  // namespace rlk
