#pragma once

namespace rlk {

inline constexpr double kGammaMin = 0.05;
inline constexpr double kGammaMax = 200.0;
inline constexpr int kBesselMaxOrder = 6;

// K_j(gamma) = 2^j j!/(2j)! * gamma^-j * int_gamma^inf e^-lambda (lambda^2 - gamma^2)^(j-1/2) dlambda.
// Supported for j in 0..6, gamma in [0.05, 200].
double bessel_k(int j, double gamma);

// e^gamma * K_j(gamma); same support, no underflow at the upper end.
double bessel_k_scaled(int j, double gamma);

struct ClosureRatios {
  double k3_k2;      // K_3/K_2
  double k1_k2;      // K_1/K_2
  double enthalpy;   // (e + P)/n, equal to K_3/K_2
};

ClosureRatios closure_ratios(double gamma);

// d(K_3/K_2)/dgamma = -1 - r3/gamma + r3*r1
double d_k3_k2(double gamma);

}  // namespace rlk
