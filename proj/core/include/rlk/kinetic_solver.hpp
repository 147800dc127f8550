#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rlk/collision.hpp"
#include "rlk/csv.hpp"
#include "rlk/euler_fluid.hpp"
#include "rlk/momentum_grid.hpp"

namespace rlk {

enum class KineticMode { Homogeneous, Rlan, VlasovAmpere };
KineticMode parse_kinetic_mode(const std::string& s);

// Scalar monitors after an accepted step. Field terms stay zero without a field.
struct MonitorRow {
  long step = 0;
  double t = 0.0;
  double mass = 0.0;
  Vec3 momentum{0.0, 0.0, 0.0};
  double energy = 0.0;  // sum p0 F
  double entropy = 0.0;
  double min_f = 0.0;
  double max_f = 0.0;
  double gauss = 0.0;         // max |dx E - 4 pi (nbar - int F)|
  double field_energy = 0.0;  // (1/8 pi) int E^2
  int substeps = 0;
  double total_energy() const { return energy + field_energy; }
};
std::vector<std::string> monitor_header();
std::vector<double> monitor_values(const MonitorRow& r);

// Appends one CSV row per accepted step.
class MonitorLog {
 public:
  MonitorLog() = default;
  explicit MonitorLog(const std::string& path);
  void add(const MonitorRow& r);
  const std::vector<MonitorRow>& rows() const { return rows_; }

 private:
  std::shared_ptr<CsvWriter> out_;
  std::vector<MonitorRow> rows_;
};

// min F >= -tol * max F, else MonitorFailure; NaN always fails.
void check_field(std::span<const double> f, double tol, long step);

// Largest |eigenvalue| of the Jacobian of C[f, f] (all cells together), by power
// iteration on relative perturbations f*w. w carries the iterate between calls
// and is seeded deterministically when empty. Never below op.stiffness(f).
// c0, when given, receives C[f, f].
double collision_spectral_radius(const CollisionOperator& op, const DistributionField& f, std::vector<double>& w,
                                 int iters = 12, DistributionField* c0 = nullptr);

// Explicit collision sub-step bound eps / rho, half of Heun's real-axis limit.
double collision_dt(const CollisionOperator& op, std::span<const double> f, double eps);

struct RelaxOptions {
  double dt = 0.05;
  long steps = 100;
  bool substep = true;  // otherwise dt above the collision bound is a CflViolation
  double positivity_tol = 1e-12;
  std::string log_path;  // empty: keep rows in memory only
  long snapshot_every = 0;
  std::function<void(long step, double t, std::span<const double> f)> on_snapshot;
  int refresh_every = 10;  // steps between full spectral radius updates (a cheap one runs every step)
};

struct RelaxResult {
  std::vector<double> f;
  std::vector<MonitorRow> log;
  long entropy_increases = 0;        // accepted steps with H above the rounding allowance
  double max_entropy_increase = 0.0;  // largest H(n+1) - H(n), may be negative
  int max_substeps = 0;
};

// dF/dt = C[F, F] / eps, Heun sub-steps inside each outer step.
RelaxResult relax_homogeneous(const CollisionOperator& op, std::span<const double> f0, double eps,
                              const RelaxOptions& opt);

struct KineticOptions {
  double eps = 1.0;
  Limiter limiter = Limiter::Minmod;
  // momentum kick: centered flux (exact discrete work) or limited upwind
  bool kick_centered = true;
  Limiter kick_limiter = Limiter::Minmod;
  // x-velocity per node: p1/p0, or the lattice velocity matching the centered kick's work
  bool lattice_velocity = false;
  bool collisions = true;
  bool transport = true;
  double positivity_tol = 1e-12;
  double gauss_abort = 1e-6;
  int refresh_every = 10;  // collision calls between full spectral radius updates
};

// Periodic slab [0, L) with nx cells, one momentum grid per cell.
// E lives on the faces x_{i+1/2}; face i sits between cells i and i+1.
class KineticSolver1D {
 public:
  KineticSolver1D(const CollisionOperator& op, std::size_t nx, double length, KineticOptions opt = {});

  std::size_t nx() const { return nx_; }
  double dx() const { return length_ / static_cast<double>(nx_); }
  double length() const { return length_; }
  double x(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx(); }
  double max_dt() const { return 0.4 * dx(); }
  const KineticOptions& options() const { return opt_; }
  KineticOptions& options() { return opt_; }
  const CollisionOperator& op() const { return *op_; }

  // Strang: transport dt/2, collision dt, transport dt/2. Returns collision sub-steps.
  int step_rlan(DistributionField& F, double dt) const;
  // transport, momentum kick by the field, collision, with Ampere updates from the transport fluxes
  int step_vlasov_ampere(DistributionField& F, std::vector<double>& E, double nbar, double dt) const;

  // SSP-RK2 MUSCL upwind in x; adds dt times the density face flux into phi when given
  void transport(DistributionField& F, double dt, std::vector<double>* phi = nullptr) const;
  // dF/dt = -d_{p1}(force F), conservative upwind, zero flux through the p1 faces
  void kick(DistributionField& F, const std::vector<double>& force, double dt) const;
  int collide(DistributionField& F, double dt) const;

  // x-velocity used by transport at node a
  double velocity(std::size_t a) const { return vel_[a]; }

  // zero-mean face field with dx E = 4 pi (nbar - int F)
  std::vector<double> gauss_field(const DistributionField& F, double nbar) const;
  double gauss_residual(const DistributionField& F, const std::vector<double>& E, double nbar) const;

  MonitorRow monitor(const DistributionField& F, long step, double t, const std::vector<double>* E = nullptr,
                     double nbar = 0.0) const;

 private:
  void check_cfl(double dt) const;
  void transport_rhs(const DistributionField& F, DistributionField& out, std::vector<double>& phi) const;

  const CollisionOperator* op_;
  std::size_t nx_;
  double length_;
  KineticOptions opt_;
  std::vector<double> vel_;
  mutable std::vector<double> eigvec_;
  mutable double rho_ = 0.0;
  mutable long calls_ = 0;
};

}  // namespace rlk
