#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "noma_fusion/decoder.hpp"
#include "noma_fusion/model.hpp"
#include "noma_fusion/planar_bound.hpp"

namespace noma_fusion {

/// Limiting (N0 -> 0) decision region D1: the union of the nearest-neighbour
/// cells of a10 and a11. Its boundary is built from the vertical lines
/// x = +/- sqrt(P2) cos(theta) and a line through the origin separating a10
/// from a01.
struct HighSnrRegion {
  double theta = 0.0;
  double x_right = 0.0;
  double x_left = 0.0;
  /// Slope of the dividing line through the origin; empty when it is vertical
  /// (theta = 0).
  std::optional<double> diag_slope;
  /// Normal of the dividing line, pointing towards a10: a10 - a01 halved.
  double normal_x = 0.0;
  double normal_y = 0.0;

  /// Signed distance-like value of r against the dividing line; > 0 on a10's side.
  double diag_side(ComplexSample r) const { return r.real() * normal_x + r.imag() * normal_y; }

  /// Euclidean distance from r to the nearest of the three lines.
  double distance_to_lines(ComplexSample r) const {
    const double nn = std::hypot(normal_x, normal_y);
    double d = std::min(std::abs(r.real() - x_right), std::abs(r.real() - x_left));
    if (nn > 0.0) d = std::min(d, std::abs(diag_side(r)) / nn);
    return d;
  }
};

inline HighSnrRegion high_snr_region(const SystemParams& params, double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 2.0)) {
    throw std::domain_error("high_snr_region needs theta in [0, pi/2]");
  }
  const double s1 = params.amp1();
  const double s2 = params.amp2();
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  HighSnrRegion region;
  region.theta = theta;
  region.x_right = s2 * c;
  region.x_left = -s2 * c;
  region.normal_x = s1 - s2 * c;
  region.normal_y = -s2 * s;
  if (theta > 0.0) region.diag_slope = (s1 - s2 * c) / (s2 * s);
  return region;
}

/// Membership of r in the limiting D1. Points on a boundary line decode to 0.
inline Bit high_snr_decide(ComplexSample r, const HighSnrRegion& region) {
  if (r.real() > region.x_right) return 1;
  if (r.real() < region.x_left) return 0;
  return region.diag_side(r) > 0.0 ? 1 : 0;
}

inline RegionRaster rasterize_high_snr(const HighSnrRegion& region, const RasterBounds& bounds, int nx,
                                       int ny) {
  return rasterize(bounds, nx, ny, region.theta,
                   [&](ComplexSample r) { return high_snr_decide(r, region); });
}

struct RegionAgreement {
  std::size_t compared = 0;
  std::size_t matched = 0;
  std::size_t excluded = 0;

  double fraction() const { return compared == 0 ? 1.0 : static_cast<double>(matched) / compared; }
};

/// Cell agreement between a raster and the analytic region, skipping cells
/// whose center lies within `band` cell widths of a boundary line.
inline RegionAgreement compare_with_high_snr(const RegionRaster& raster, const HighSnrRegion& region,
                                             double band = 1.0) {
  const double guard = band * std::max(raster.cell_width(), raster.cell_height());
  RegionAgreement out;
  for (int j = 0; j < raster.ny; ++j) {
    for (int i = 0; i < raster.nx; ++i) {
      const auto r = raster.center(i, j);
      if (region.distance_to_lines(r) <= guard) {
        ++out.excluded;
        continue;
      }
      ++out.compared;
      if (raster.at(i, j) == high_snr_decide(r, region)) ++out.matched;
    }
  }
  return out;
}

struct AsymptoticLimits {
  double pcf_limit = 0.0;
  double theta_limit = std::numbers::pi / 2.0;
  double pe_limit = 0.0;
};

/// Limits of pcf, the optimal rotation, and the least planar bound as N0 -> 0.
inline AsymptoticLimits asymptotic_limits(double eps1, double eps2, double p1, double p2) {
  SystemParams::validate_crossovers(eps1, eps2);
  SystemParams::validate_powers(p1, p2);
  return {0.0, std::numbers::pi / 2.0, eps1};
}

struct ConvergenceTrace {
  std::vector<double> n0;
  std::vector<OptimalDesign> designs;
  /// |theta_star - pi/2| never increases along the sequence.
  bool theta_monotone = false;
  /// pe_ub_star - eps1 never increases. Once both Q tails are below the
  /// rounding of eps1 the gap is exactly zero, so strict decrease is not
  /// observable in double precision.
  bool bound_monotone = false;
};

/// Evaluates optimal_design along a strictly decreasing N0 sequence and checks
/// that it moves monotonically towards the limits.
inline ConvergenceTrace trace_convergence(double eps1, double eps2, double p1, double p2,
                                          std::span<const double> n0_sequence) {
  ConvergenceTrace trace;
  trace.theta_monotone = true;
  trace.bound_monotone = true;
  const auto limits = asymptotic_limits(eps1, eps2, p1, p2);
  for (double n0 : n0_sequence) {
    const SystemParams params(eps1, eps2, p1, p2, n0);
    const auto design = optimal_design(params);
    if (!trace.designs.empty()) {
      if (!(n0 < trace.n0.back())) throw std::domain_error("N0 sequence must be strictly decreasing");
      const auto& prev = trace.designs.back();
      if (!(std::abs(design.theta_star - limits.theta_limit) <= std::abs(prev.theta_star - limits.theta_limit))) {
        trace.theta_monotone = false;
      }
      if (!(design.pe_ub_star - limits.pe_limit <= prev.pe_ub_star - limits.pe_limit)) {
        trace.bound_monotone = false;
      }
    }
    trace.n0.push_back(n0);
    trace.designs.push_back(design);
  }
  return trace;
}

}  // namespace noma_fusion
