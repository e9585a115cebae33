#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "noma_fusion/model.hpp"

namespace noma_fusion {

/// K0(theta) = (eps2 - eps1) exp(-|a01|^2/N0) and
/// K1(theta) = (1 - eps1 - eps2) exp(-|a11|^2/N0), held in log form because
/// both exponentials underflow long before the decision rule degenerates.
struct BoundaryConstants {
  double log_k0 = 0.0;
  double log_k1 = 0.0;

  double k0() const { return std::exp(log_k0); }
  double k1() const { return std::exp(log_k1); }

  /// (K0 - K1)/(K0 + K1), evaluated as tanh((ln K0 - ln K1)/2).
  double ratio() const { return std::tanh(0.5 * (log_k0 - log_k1)); }
};

inline BoundaryConstants boundary_constants(const SystemParams& params, double theta) {
  const auto sc = super_constellation(params, theta);
  return {std::log(params.eps2() - params.eps1()) - std::norm(sc(0, 1)) / params.n0(),
          std::log(1.0 - params.eps1() - params.eps2()) - std::norm(sc(1, 1)) / params.n0()};
}

/// ML fusion decoder for one (params, theta) pair. Holds the constellation and
/// conditional pmf so the per-sample cost is four exponentials.
class MlDecoder {
public:
  MlDecoder(const SystemParams& params, double theta)
      : params_(params),
        theta_(theta),
        points_(super_constellation(params, theta)),
        pmf_(conditional_pmf(params)),
        inv_n0_(1.0 / params.n0()) {}

  const SystemParams& params() const { return params_; }
  double theta() const { return theta_; }
  const SuperConstellation& constellation() const { return points_; }

  /// ln sum_{l,m} p_{lm|i} exp(-|r - a_lm|^2 / N0), finite for any finite r.
  double log_likelihood(ComplexSample r, Bit i) const {
    const auto e = exponents(r);
    const double top = std::max({e[0], e[1], e[2], e[3]});
    // Antipodal pairs (k, 3 - k) are summed first so that points symmetric
    // about the origin give bit-identical sums for both hypotheses.
    double w[4];
    for (int k = 0; k < 4; ++k) w[k] = std::exp(e[k] - top);
    const double s = (pmf_(0, 0, i) * w[0] + pmf_(1, 1, i) * w[3]) + (pmf_(0, 1, i) * w[1] + pmf_(1, 0, i) * w[2]);
    return std::log(s) + top;
  }

  /// Raw likelihood. Underflows to zero once every |r - a_lm|^2/N0 exceeds
  /// ~745; compare via log_likelihood or decide() in that regime.
  double likelihood(ComplexSample r, Bit i) const { return std::exp(log_likelihood(r, i)); }

  /// 1 iff the X = 1 likelihood strictly exceeds the X = 0 likelihood.
  Bit decide(ComplexSample r) const {
    const auto e = exponents(r);
    const double top = std::max({e[0], e[1], e[2], e[3]});
    double w[4];
    for (int k = 0; k < 4; ++k) w[k] = std::exp(e[k] - top);
    // Likelihood difference written via p_{lm|1} = p_{(1-l)(1-m)|0}; it is
    // exactly zero whenever the received point is equidistant from each
    // antipodal pair.
    const double diff = (pmf_(1, 1, 0) - pmf_(0, 0, 0)) * (w[0] - w[3]) + (pmf_(1, 0, 0) - pmf_(0, 1, 0)) * (w[1] - w[2]);
    return diff > 0.0 ? 1 : 0;
  }

private:
  // Exponents for a00, a01, a10, a11 in that order.
  std::array<double, 4> exponents(ComplexSample r) const {
    std::array<double, 4> e{};
    for (int k = 0; k < 4; ++k) {
      e[k] = -std::norm(r - points_(k >> 1, k & 1)) * inv_n0_;
    }
    return e;
  }

  SystemParams params_;
  double theta_;
  SuperConstellation points_;
  ConditionalPmf pmf_;
  double inv_n0_;
};

inline double likelihood(ComplexSample r, Bit i, const SystemParams& params, double theta) {
  return MlDecoder(params, theta).likelihood(r, i);
}

inline double log_likelihood(ComplexSample r, Bit i, const SystemParams& params, double theta) {
  return MlDecoder(params, theta).log_likelihood(r, i);
}

inline Bit ml_decide(ComplexSample r, const SystemParams& params, double theta) {
  return MlDecoder(params, theta).decide(r);
}

/// A(r) = 2 Re(r conj(c_{1,1}))/N0.
inline double tanh_arg_a(ComplexSample r, const SystemParams& params) {
  return 2.0 * (r * std::conj(sensor1_point(params))).real() / params.n0();
}

/// B(r, theta) = 2 Re(r conj(c_{1,2}))/N0.
inline double tanh_arg_b(ComplexSample r, const SystemParams& params, double theta) {
  return 2.0 * (r * std::conj(sensor2_point(params, theta))).real() / params.n0();
}

/// tanh A(r) - tanh B(r, theta) (K0 - K1)/(K0 + K1). Positive inside D1,
/// negative inside D0, zero on the ML boundary.
inline double boundary_residual(ComplexSample r, const SystemParams& params, double theta) {
  const double ratio = boundary_constants(params, theta).ratio();
  return std::tanh(tanh_arg_a(r, params)) - std::tanh(tanh_arg_b(r, params, theta)) * ratio;
}

/// Same decision as ml_decide, through the hyperbolic-tangent form of the
/// likelihood comparison. Ties decode to 0.
inline Bit ml_decide_tanh(ComplexSample r, const SystemParams& params, double theta) {
  return boundary_residual(r, params, theta) > 0.0 ? 1 : 0;
}

struct RasterBounds {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
};

/// Decoded bits sampled at cell centers of an nx-by-ny grid, row-major with
/// x varying fastest.
struct RegionRaster {
  RasterBounds bounds;
  int nx = 0;
  int ny = 0;
  double theta = 0.0;
  std::vector<std::uint8_t> cells;

  double cell_width() const { return (bounds.x_max - bounds.x_min) / nx; }
  double cell_height() const { return (bounds.y_max - bounds.y_min) / ny; }
  double x_center(int i) const { return bounds.x_min + (i + 0.5) * cell_width(); }
  double y_center(int j) const { return bounds.y_min + (j + 0.5) * cell_height(); }
  ComplexSample center(int i, int j) const { return {x_center(i), y_center(j)}; }
  Bit at(int i, int j) const { return cells[static_cast<std::size_t>(j) * nx + i]; }

  /// CSV with header `x,y,bit`, coordinates to 9 significant digits.
  void write_csv(std::ostream& out) const {
    out << "x,y,bit\n";
    char line[96];
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        std::snprintf(line, sizeof line, "%.9g,%.9g,%d\n", x_center(i), y_center(j), at(i, j));
        out << line;
      }
    }
  }
};

inline void validate_raster_spec(const RasterBounds& bounds, int nx, int ny) {
  if (nx < 2 || ny < 2) {
    throw std::domain_error("raster needs nx >= 2 and ny >= 2");
  }
  const bool finite = std::isfinite(bounds.x_min) && std::isfinite(bounds.x_max) &&
                      std::isfinite(bounds.y_min) && std::isfinite(bounds.y_max);
  if (!finite || !(bounds.x_min < bounds.x_max) || !(bounds.y_min < bounds.y_max)) {
    throw std::domain_error("raster bounds are degenerate (need x_min < x_max, y_min < y_max)");
  }
}

/// Samples an arbitrary decision rule `decide(ComplexSample) -> Bit` over the
/// grid.
template <typename Decide>
RegionRaster rasterize(const RasterBounds& bounds, int nx, int ny, double theta, Decide&& decide) {
  validate_raster_spec(bounds, nx, ny);
  RegionRaster raster{bounds, nx, ny, theta, {}};
  raster.cells.resize(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      raster.cells[static_cast<std::size_t>(j) * nx + i] =
          static_cast<std::uint8_t>(decide(raster.center(i, j)));
    }
  }
  return raster;
}

inline RegionRaster rasterize_regions(const SystemParams& params, double theta,
                                      const RasterBounds& bounds, int nx, int ny) {
  const MlDecoder decoder(params, theta);
  return rasterize(bounds, nx, ny, theta, [&](ComplexSample r) { return decoder.decide(r); });
}

}  // namespace noma_fusion
