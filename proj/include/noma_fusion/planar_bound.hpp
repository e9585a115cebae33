#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>

#include "noma_fusion/model.hpp"

namespace noma_fusion {

/// Gaussian tail Q(x) = Pr(N(0,1) > x).
template <std::floating_point T = double>
T q_function(T x) {
  return T(0.5) * std::erfc(x / std::numbers::sqrt2_v<T>);
}

template <std::floating_point T = double>
T normal_pdf(T x) {
  return std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::numbers::pi_v<T>);
}

/// Power-correlation factor N0/(4 sqrt(P1 P2)) ln((1 - eps1 - eps2)/(eps2 - eps1)).
/// Decision regions are exactly the half planes at theta = arccos(min(pcf, 1)).
inline double pcf(const SystemParams& params) {
  return params.n0() / (4.0 * std::sqrt(params.p1() * params.p2())) *
         std::log((1.0 - params.eps2() - params.eps1()) / (params.eps2() - params.eps1()));
}

/// Pr(Re R <= 0 | X = 1): the error probability of the half-plane decoder,
/// an upper bound on the ML error probability at every theta.
template <std::floating_point T = double>
T planar_upper_bound(T theta, const SystemParams& params) {
  const T e1 = params.eps1();
  const T e2 = params.eps2();
  const T s1 = std::sqrt(T(params.p1()));
  const T s2cos = std::sqrt(T(params.p2())) * std::cos(theta);
  const T sigma = std::sqrt(T(params.n0()) / T(2));
  return e1 + (T(1) - e1 - e2) * q_function((s1 + s2cos) / sigma) +
         (e2 - e1) * q_function((s1 - s2cos) / sigma);
}

/// Closed-form d/dtheta of planar_upper_bound.
template <std::floating_point T = double>
T bound_derivative(T theta, const SystemParams& params) {
  const T e1 = params.eps1();
  const T e2 = params.eps2();
  const T s1 = std::sqrt(T(params.p1()));
  const T s2 = std::sqrt(T(params.p2()));
  const T sigma = std::sqrt(T(params.n0()) / T(2));
  const T c = s2 * std::cos(theta);
  const T chain = std::sin(theta) * s2 / sigma;
  return (T(1) - e1 - e2) * normal_pdf((s1 + c) / sigma) * chain -
         (e2 - e1) * normal_pdf((s1 - c) / sigma) * chain;
}

struct BoundCurvePoint {
  double theta = 0.0;
  double pe_ub = 0.0;
};

struct OptimalDesign {
  double pcf = 0.0;         ///< unclamped; > 1 in the low-SNR regime
  double theta_star = 0.0;  ///< radians, in [0, pi/2]
  double pe_ub_star = 0.0;
  bool clamped = false;     ///< pcf > 1, so theta_star = 0
};

/// Rotation minimizing the planar bound over [0, pi] and the bound value there.
inline OptimalDesign optimal_design(const SystemParams& params) {
  OptimalDesign d;
  d.pcf = pcf(params);
  d.clamped = d.pcf > 1.0;
  d.theta_star = std::acos(std::clamp(std::min(d.pcf, 1.0), -1.0, 1.0));
  d.pe_ub_star = planar_upper_bound(d.theta_star, params);
  return d;
}

}  // namespace noma_fusion
