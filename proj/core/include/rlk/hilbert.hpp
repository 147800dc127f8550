#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rlk/collision.hpp"
#include "rlk/diagnostics.hpp"
#include "rlk/euler_fluid.hpp"
#include "rlk/kinetic_solver.hpp"
#include "rlk/linearized.hpp"

namespace rlk {

// Background at one (t, x): primitives and their derivatives.
struct BackgroundSlice {
  FluidState state;
  Prim5 dx_prim{};
  Prim5 dt_prim{};
};

// Slices of an Euler profile; dt from the quasi-linear Euler form of the closure.
std::vector<BackgroundSlice> background_slices(const EulerSolver& fluid, const std::vector<FluidState>& prim);

// r = -M^{-1/2} (dt M + phat1 dx M)
std::vector<double> hilbert_forcing(const LinearizedOperator& L, const BackgroundSlice& s);

struct CgOptions {
  double rel_tol = 1e-9;
  int max_iter = 4000;
  double orth_tol = 1e-6;  // |P r| / |r| above this is NotOrthogonal
};

struct MicroSolve {
  std::vector<double> g;    // (I - P) M^{-1/2} F1
  std::vector<double> r;    // forcing
  double orth_ratio = 0.0;  // |P r| / |r|
  double residual = 0.0;    // |L g - (I - P) r| / |r|
  int iterations = 0;
};

// Projected conjugate gradients for L g = (I - P) r with g orthogonal to the null space.
MicroSolve solve_micro(const LinearizedOperator& L, const std::vector<double>& r, const CgOptions& opt = {});
MicroSolve build_F1_micro(const LinearizedOperator& L, const BackgroundSlice& s, const CgOptions& opt = {});

// |(I-P) M^{-1/2}(dt F0 + phat1 dx F0) + L g| / |r|
double balance_residual(const LinearizedOperator& L, const BackgroundSlice& s, const std::vector<double>& g);

// Smallest C with |sqrt(M) g| <= C M^(1 - eta) at every node
double fit_F1_decay(const LinearizedOperator& L, const std::vector<double>& g, double eta = 0.05);

// Micro flux sum psi phat1 sqrt(M) g for psi = (1, p, p0) as a linear map of dx_prim (5 L-solves).
Eigen::Matrix<double, 5, 5> transport_matrix(const LinearizedOperator& L, const FluidClosure& closure,
                                             const CgOptions& opt = {});

// Macroscopic part of F1: M (a + b.p + c p0) with coefficient vector (a, b1, b2, b3, c).
using Coeff5 = Eigen::Matrix<double, 5, 1>;

struct MacroOptions {
  bool evolve_background = false;  // lock-step Euler update of the background
  CgOptions cg;
};

// Method of lines: dt(J0' c) + dx(J1' c + kappa dx prim) = 0, centered differences, RK4.
class MacroEvolver {
 public:
  MacroEvolver(const CollisionOperator& op, const EulerSolver& fluid, std::vector<FluidState> background,
               MacroOptions opt = {});

  double max_dt() const { return 0.4 * fluid_->dx(); }
  // Throws CflViolation when dt > 0.4 dx.
  void step(std::vector<Coeff5>& c, double dt);
  const std::vector<FluidState>& background() const { return bg_; }
  const Eigen::Matrix<double, 5, 5>& kappa() const { return kappa_; }
  double l2(const std::vector<Coeff5>& c) const;

 private:
  void refresh();
  void rhs(const std::vector<Coeff5>& w, std::vector<Coeff5>& out) const;

  const CollisionOperator* op_;
  const EulerSolver* fluid_;
  std::vector<FluidState> bg_;
  std::vector<ConservedState> bg_cons_;
  MacroOptions opt_;
  Eigen::Matrix<double, 5, 5> kappa_;
  std::vector<Eigen::Matrix<double, 5, 5>> J0_, J1_, J0inv_;
  std::vector<Coeff5> micro_flux_;
};

// coefficient trajectory sampled every `every` steps
std::vector<std::vector<Coeff5>> evolve_F1_macro(MacroEvolver& ev, std::vector<Coeff5> c0, double dt, long steps,
                                                 long every = 1);

struct LimitCase {
  double eps = 0.0;
  double sup_norm = 0.0;  // sup over t of the H^2_x L^2_p surrogate of M^{-1/2}(F - M)
  double final_norm = 0.0;
  EnergyBound bound;
  std::vector<EnergyReport> energy;
  std::vector<MonitorRow> monitors;
  long steps = 0;
  int max_substeps = 0;
  double wall_seconds = 0.0;
};

struct LimitOptions {
  std::size_t nx = 32;
  double length = 1.0;
  double t_end = 0.5;
  double amplitude = 2e-4;  // background wave amplitude
  double phi_amplitude = 0.5;
  bool zero_phi = false;
  bool uniform_background = false;
  double T0 = 0.5;
  double u0 = 0.05;
  int k = 3;                // expansion order in the energy bound
  long report_every = 5;    // steps between energy reports
  WeightSpec weights{3, 0.0};  // Tc = 0 selects the default from the background
  std::string log_dir;      // per-eps monitor CSVs when set
  int workers = 1;          // eps cases run concurrently
};

// Background for the limit study and its admissibility.
std::vector<FluidState> limit_background(const LimitOptions& o, const EulerSolver& fluid);
// Bounded smooth phi(x, p) of the initial data F = M (1 + eps phi)
double limit_phi(const LimitOptions& o, double x, const Vec3& p, double T);

struct LimitStudy {
  std::vector<LimitCase> cases;
  GateReport gate;
  double order = 0.0;  // log2 fit of sup_norm against eps over the list
  bool strictly_decreasing = false;
};
LimitStudy limit_study(const CollisionOperator& op, const std::vector<double>& eps_list, const LimitOptions& o);

void write_limit_csv(const std::string& path, const LimitStudy& s);

}  // namespace rlk
