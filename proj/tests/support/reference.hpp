#pragma once

// Independent reference implementations used as test oracles. They share no
// code path with the library's renderer: centers are chained in long double,
// and the quadratic form is evaluated in the blob's rotated frame rather than
// through the inverted covariance.

#include <cmath>
#include <functional>
#include <vector>

#include "blobmask/geometry.hpp"
#include "blobmask/raster.hpp"

namespace blobmask::testing {

using real = long double;

struct RefPoint {
  real x = 0;
  real y = 0;
};

inline std::vector<RefPoint> reference_centers(const BlobParams& p) {
  std::vector<RefPoint> c{{p.x1.x, p.x1.y}};
  for (int i = 1; i < p.k; ++i) {
    const real ang = p.alpha[i - 1];
    c.push_back({c.back().x + p.r * std::cos(ang), c.back().y + p.r * std::sin(ang)});
  }
  return c;
}

inline real reference_blob_value(real gx, real gy, RefPoint center, real s, real a, real theta,
                                 real c) {
  const real dx = gx - center.x;
  const real dy = gy - center.y;
  const real u = std::cos(theta) * dx + std::sin(theta) * dy;
  const real v = -std::sin(theta) * dx + std::cos(theta) * dy;
  const real var_u = c * (s * s / a);
  const real var_v = c * (s * s * a);
  return std::exp(-0.5L * (u * u / var_u + v * v / var_v));
}

inline std::vector<real> reference_render(const BlobParams& p, const GridSpec& grid) {
  const auto centers = reference_centers(p);
  std::vector<real> out(grid.pixel_count(), 0);
  for (int py = 0; py < grid.height; ++py) {
    for (int px = 0; px < grid.width; ++px) {
      const real gx = (px + 0.5L) / grid.width;
      const real gy = (py + 0.5L) / grid.height;
      real sum = 0;
      for (int i = 0; i < p.k; ++i) {
        sum += reference_blob_value(gx, gy, centers[i], p.s, p.a, p.theta[i], p.c);
      }
      out[static_cast<std::size_t>(py) * grid.width + px] = sum / p.k;
    }
  }
  return out;
}

inline real reference_objective(const BlobParams& p, const GridSpec& grid, const MaskField& upstream) {
  const auto m = reference_render(p, grid);
  real total = 0;
  for (std::size_t i = 0; i < m.size(); ++i) total += upstream[i] * m[i];
  return total;
}

/// Central differences of f over each coordinate of x.
inline std::vector<double> central_differences(const std::function<real(const std::vector<double>&)>& f,
                                               const std::vector<double>& x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto plus = x;
    auto minus = x;
    plus[i] += h;
    minus[i] -= h;
    g[i] = static_cast<double>((f(plus) - f(minus)) / (2.0L * h));
  }
  return g;
}

/// Finite-difference gradient of <upstream, M> over the learnable parameters
/// (pack_learnable layout), from the reference renderer.
inline std::vector<double> reference_mask_gradient(const BlobParams& p, const GridSpec& grid,
                                                   const MaskField& upstream, double h) {
  return central_differences(
      [&](const std::vector<double>& v) {
        BlobParams q = p;
        unpack_learnable(q, v);
        return reference_objective(q, grid, upstream);
      },
      pack_learnable(p), h);
}

/// max over components with magnitude > floor of |a - n| / max(|a|, |n|).
inline double max_relative_error(const std::vector<double>& analytic,
                                 const std::vector<double>& numeric, double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double mag = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    if (mag > floor) worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / mag);
  }
  return worst;
}

}  // namespace blobmask::testing
