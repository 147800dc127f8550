#include "rlk/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rlk/error.hpp"

namespace rlk {
namespace {

// Gauss-Kronrod 7/15 on [-1, 1]
constexpr std::array<double, 8> kXk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
  double kronrod;
  double error;
  double absolute;  // integral of |f|, for the rounding floor
};

template <class F>
Piece gk15(const F& f, double a, double b) {
  double c = 0.5 * (a + b);
  double r = 0.5 * (b - a);
  double fc = f(c);
  double k = fc * kWk[7];
  double g = fc * kWg[3];
  double ab = std::abs(fc) * kWk[7];
  for (int i = 0; i < 7; ++i) {
    double x = r * kXk[i];
    double fl = f(c - x), fr = f(c + x);
    k += kWk[i] * (fl + fr);
    ab += kWk[i] * (std::abs(fl) + std::abs(fr));
    if (i % 2 == 1) g += kWg[i / 2] * (fl + fr);
  }
  return {k * r, std::abs((k - g) * r), ab * std::abs(r)};
}

template <class F>
double adaptive(const F& f, double a, double b, double rel) {
  Piece whole = gk15(f, a, b);
  struct Job {
    double a, b;
    Piece p;
    int depth;
  };
  // first pass on a uniform split to get a scale for the tolerance
  const int n0 = 16;
  std::vector<Job> stack;
  double scale = 0.0;
  for (int i = 0; i < n0; ++i) {
    double lo = a + (b - a) * i / n0;
    double hi = a + (b - a) * (i + 1) / n0;
    Piece p = gk15(f, lo, hi);
    scale += p.kronrod;
    stack.push_back({lo, hi, p, 0});
  }
  if (!(scale > 0.0)) scale = std::abs(whole.kronrod);
  double tol = rel * std::abs(scale);
  double total = 0.0;
  while (!stack.empty()) {
    Job j = stack.back();
    stack.pop_back();
    double allowed = std::max(tol * (j.b - j.a) / (b - a), 50.0 * 2.2e-16 * j.p.absolute);
    if (j.p.error <= allowed || j.depth > 24) {
      total += j.p.kronrod;
      continue;
    }
    double m = 0.5 * (j.a + j.b);
    stack.push_back({j.a, m, gk15(f, j.a, m), j.depth + 1});
    stack.push_back({m, j.b, gk15(f, m, j.b), j.depth + 1});
  }
  return total;
}

double prefactor(int j) {
  // 2^j j! / (2j)!
  double v = 1.0;
  for (int i = 1; i <= j; ++i) v *= 2.0 * i / ((2.0 * i - 1.0) * (2.0 * i));
  return v;
}

void check(int j, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("bessel_k: gamma must be positive, got " + std::to_string(gamma));
  if (j < 0 || j > kBesselMaxOrder)
    throw RangeError("bessel_k: order " + std::to_string(j) + " outside supported [0, 6]", 0, kBesselMaxOrder);
  if (gamma < kGammaMin || gamma > kGammaMax)
    throw RangeError("bessel_k: gamma " + std::to_string(gamma) + " outside supported [0.05, 200]", kGammaMin,
                     kGammaMax);
}

double scaled_quadrature(int j, double gamma) {
  // e^gamma K_j = c_j gamma^j int_0^inf e^{-gamma (cosh s - 1)} sinh^{2j} s ds
  auto f = [&](double s) {
    double sh = std::sinh(s);
    double e = -gamma * 2.0 * std::sinh(0.5 * s) * std::sinh(0.5 * s);
    return std::exp(e) * std::pow(sh, 2 * j);
  };
  // upper limit: gamma (cosh s - 1) - 2j log sinh s > 80
  double s = 1.0;
  for (int it = 0; it < 30; ++it) s = std::acosh(1.0 + (80.0 + 2.0 * j * s) / gamma);
  double v = adaptive(f, 0.0, s, 1e-14);
  return prefactor(j) * std::pow(gamma, j) * v;
}

double scaled_asymptotic(int j, double gamma) {
  double mu = 4.0 * j * j;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    double next = term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k * gamma);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return std::sqrt(std::numbers::pi / (2.0 * gamma)) * sum;
}

}  // namespace

double bessel_k_scaled(int j, double gamma) {
  check(j, gamma);
  if (gamma > 50.0) return scaled_asymptotic(j, gamma);
  return scaled_quadrature(j, gamma);
}

double bessel_k(int j, double gamma) { return bessel_k_scaled(j, gamma) * std::exp(-gamma); }

ClosureRatios closure_ratios(double gamma) {
  check(3, gamma);
  // e^gamma K_nu = int_0^inf e^{-gamma (cosh t - 1)} cosh(nu t) dt. The integrand is
  // entire and even, so the trapezoidal rule converges geometrically in 1/h.
  double h = std::min(0.125, 0.5 / std::sqrt(gamma));
  double tmax = std::acosh(1.0 + 60.0 / gamma) + 6.0 * h;
  double k1 = 0.5, k2 = 0.5, k3 = 0.5;
  for (int i = 1;; ++i) {
    double t = i * h;
    if (t > tmax) break;
    double sh = std::sinh(0.5 * t);
    double e = std::exp(-2.0 * gamma * sh * sh);
    double c = std::cosh(t);
    k1 += e * c;
    k2 += e * (2.0 * c * c - 1.0);
    k3 += e * c * (4.0 * c * c - 3.0);
  }
  return {k3 / k2, k1 / k2, k3 / k2};
}

double d_k3_k2(double gamma) {
  ClosureRatios r = closure_ratios(gamma);
  return -1.0 - r.k3_k2 / gamma + r.k3_k2 * r.k1_k2;
}

}  // namespace rlk
