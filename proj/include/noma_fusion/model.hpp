#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace noma_fusion {

using Complex = std::complex<double>;

/// A received channel value r.
using ComplexSample = Complex;

using Bit = int;

/// Problem instance: sensor crossover probabilities, sensor powers and the
/// channel noise power. Validated on construction; every downstream routine
/// assumes a well-formed instance.
class SystemParams {
public:
  SystemParams(double eps1, double eps2, double p1, double p2, double n0)
      : eps1_(eps1), eps2_(eps2), p1_(p1), p2_(p2), n0_(n0) {
    validate_crossovers(eps1, eps2);
    validate_powers(p1, p2);
    if (!(n0 > 0.0) || !std::isfinite(n0)) {
      throw std::domain_error("n0 must be finite and > 0 (got " + std::to_string(n0) + ")");
    }
  }

  static void validate_crossovers(double eps1, double eps2) {
    if (!std::isfinite(eps1) || !std::isfinite(eps2)) {
      throw std::domain_error("eps1 and eps2 must be finite");
    }
    if (!(eps1 > 0.0)) {
      throw std::domain_error("eps1 must be > 0 (got " + std::to_string(eps1) + ")");
    }
    if (!(eps1 < eps2)) {
      throw std::domain_error("eps1 < eps2 required (got eps1=" + std::to_string(eps1) +
                              ", eps2=" + std::to_string(eps2) + ")");
    }
    if (!(eps2 < 0.5)) {
      throw std::domain_error("eps2 < 0.5 required (got " + std::to_string(eps2) + ")");
    }
  }

  static void validate_powers(double p1, double p2) {
    if (!(p1 > 0.0) || !std::isfinite(p1)) {
      throw std::domain_error("p1 must be finite and > 0 (got " + std::to_string(p1) + ")");
    }
    if (!(p2 > 0.0) || !std::isfinite(p2)) {
      throw std::domain_error("p2 must be finite and > 0 (got " + std::to_string(p2) + ")");
    }
  }

  double eps1() const noexcept { return eps1_; }
  double eps2() const noexcept { return eps2_; }
  double p1() const noexcept { return p1_; }
  double p2() const noexcept { return p2_; }
  double n0() const noexcept { return n0_; }

  double amp1() const noexcept { return std::sqrt(p1_); }
  double amp2() const noexcept { return std::sqrt(p2_); }

  /// Per-component noise standard deviation, sqrt(N0/2).
  double sigma() const noexcept { return std::sqrt(n0_ / 2.0); }

  /// Same instance with a different noise power.
  SystemParams with_n0(double n0) const { return {eps1_, eps2_, p1_, p2_, n0}; }

  friend bool operator==(const SystemParams&, const SystemParams&) = default;

private:
  double eps1_;
  double eps2_;
  double p1_;
  double p2_;
  double n0_;
};

// Geometric-mean SNR, sqrt(P1 P2)/N0, and its dB form.

inline double snr_linear(const SystemParams& params) {
  return std::sqrt(params.p1() * params.p2()) / params.n0();
}

inline double snr_db(const SystemParams& params) { return 10.0 * std::log10(snr_linear(params)); }

inline double n0_from_snr_db(double p1, double p2, double snr_db) {
  return std::sqrt(p1 * p2) / std::pow(10.0, snr_db / 10.0);
}

inline SystemParams params_at_snr_db(double eps1, double eps2, double p1, double p2, double snr_db) {
  SystemParams::validate_powers(p1, p2);
  return {eps1, eps2, p1, p2, n0_from_snr_db(p1, p2, snr_db)};
}

/// Pr(X1 = l, X2 = m | X = i), indexed as p(l, m, i).
struct ConditionalPmf {
  std::array<std::array<std::array<double, 2>, 2>, 2> p{};

  double operator()(int l, int m, int i) const { return p[l][m][i]; }
};

inline ConditionalPmf conditional_pmf(double eps1, double eps2) {
  SystemParams::validate_crossovers(eps1, eps2);
  ConditionalPmf pmf;
  auto& p = pmf.p;
  p[0][0][0] = (1.0 - eps1) * (1.0 - eps2);
  p[0][1][0] = (1.0 - eps1) * eps2;
  p[1][0][0] = eps1 * (1.0 - eps2);
  p[1][1][0] = eps1 * eps2;
  for (int l = 0; l < 2; ++l) {
    for (int m = 0; m < 2; ++m) {
      p[l][m][1] = p[1 - l][1 - m][0];
    }
  }
  return pmf;
}

inline ConditionalPmf conditional_pmf(const SystemParams& params) {
  return conditional_pmf(params.eps1(), params.eps2());
}

/// The four superimposed points a[l][m] = c_{l,1} + c_{m,2} for a rotation
/// theta of sensor 2's BPSK pair relative to sensor 1's.
struct SuperConstellation {
  double theta = 0.0;
  std::array<std::array<Complex, 2>, 2> a{};

  const Complex& operator()(int l, int m) const { return a[l][m]; }
};

/// Sensor 1's point for X1 = 1, sqrt(P1).
inline Complex sensor1_point(const SystemParams& params) { return {params.amp1(), 0.0}; }

/// Sensor 2's point for X2 = 1, sqrt(P2) e^{j theta}.
inline Complex sensor2_point(const SystemParams& params, double theta) {
  return std::polar(params.amp2(), theta);
}

inline SuperConstellation super_constellation(const SystemParams& params, double theta) {
  const Complex c1 = sensor1_point(params);
  const Complex c2 = sensor2_point(params, theta);
  SuperConstellation sc;
  sc.theta = theta;
  sc.a[1][1] = c1 + c2;
  sc.a[1][0] = c1 - c2;
  sc.a[0][1] = -c1 + c2;
  sc.a[0][0] = -c1 - c2;
  return sc;
}

/// Folds any angle onto [0, pi]. Both the planar bound and the ML error
/// probability are even and 2*pi-periodic in theta.
inline double fold_to_half_turn(double theta) {
  double t = std::fmod(theta, 2.0 * std::numbers::pi);
  if (t < 0.0) t += 2.0 * std::numbers::pi;
  if (t > std::numbers::pi) t = 2.0 * std::numbers::pi - t;
  return t;
}

}  // namespace noma_fusion
