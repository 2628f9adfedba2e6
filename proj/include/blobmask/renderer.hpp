#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "blobmask/geometry.hpp"
#include "blobmask/raster.hpp"

namespace blobmask {

namespace detail {

// Per-blob constants shared by the forward and backward passes.
struct BlobKernel {
  Vec2 center;
  double cos_t = 1.0;
  double sin_t = 0.0;
  double inv_dxx = 1.0;
  double inv_dyy = 1.0;
  // Closed-form inverse of R diag(dxx, dyy) R^T.
  double p00 = 1.0;
  double p01 = 0.0;
  double p11 = 1.0;

  BlobKernel(Vec2 c, const Covariance2& cov) : center(c) {
    cos_t = std::cos(cov.theta);
    sin_t = std::sin(cov.theta);
    inv_dxx = 1.0 / cov.dxx;
    inv_dyy = 1.0 / cov.dyy;
    const SymMat2 m = rotated(cov);
    const double det = m.m00 * m.m11 - m.m01 * m.m01;
    p00 = m.m11 / det;
    p01 = -m.m01 / det;
    p11 = m.m00 / det;
  }

  double quadratic(double dx, double dy) const {
    return p00 * dx * dx + 2.0 * p01 * dx * dy + p11 * dy * dy;
  }
};

}  // namespace detail

/// Single Gaussian blob: exp(-0.5 (g - mu)^T (R Sigma R^T)^{-1} (g - mu)).
inline MaskField render_blob(Vec2 center, double s, double a, double theta, double c,
                             const GridSpec& grid) {
  validate(grid);
  const detail::BlobKernel kernel(center, blob_covariance(s, a, theta, c));
  MaskField out(grid);
  for (int py = 0; py < grid.height; ++py) {
    const double dy = grid.y_of(py) - center.y;
    for (int px = 0; px < grid.width; ++px) {
      const double dx = grid.x_of(px) - center.x;
      out(px, py) = std::exp(-0.5 * kernel.quadratic(dx, dy));
    }
  }
  return out;
}

/// Pixel-wise mean of the k blob masks.
inline MaskField render_mask(const BlobParams& params, const GridSpec& grid) {
  validate(params);
  validate(grid);
  const auto centers = chain_centers(params);
  std::vector<detail::BlobKernel> kernels;
  kernels.reserve(params.k);
  for (int i = 0; i < params.k; ++i) {
    kernels.emplace_back(centers[i], blob_covariance(params.s, params.a, params.theta[i], params.c));
  }
  const double inv_k = 1.0 / params.k;
  MaskField out(grid);
  for (int py = 0; py < grid.height; ++py) {
    const double gy = grid.y_of(py);
    for (int px = 0; px < grid.width; ++px) {
      const double gx = grid.x_of(px);
      double sum = 0.0;
      for (const auto& kn : kernels) {
        sum += std::exp(-0.5 * kn.quadratic(gx - kn.center.x, gy - kn.center.y));
      }
      out(px, py) = sum * inv_k;
    }
  }
  return out;
}

/// Gradient of <upstream, M> with respect to the learnable blob parameters.
struct BlobGradients {
  Vec2 d_x1;
  std::vector<double> d_theta;
  std::vector<double> d_alpha;

  /// Same layout as pack_learnable().
  std::vector<double> flatten() const {
    std::vector<double> v{d_x1.x, d_x1.y};
    v.insert(v.end(), d_theta.begin(), d_theta.end());
    v.insert(v.end(), d_alpha.begin(), d_alpha.end());
    return v;
  }
};

inline BlobGradients mask_backward(const BlobParams& params, const GridSpec& grid,
                                   const MaskField& upstream) {
  validate(params);
  validate(grid);
  if (upstream.grid() != grid) {
    throw ValidationError("mask_backward: upstream is " + describe(upstream.grid()) +
                          ", grid is " + describe(grid));
  }
  const int k = params.k;
  const auto centers = chain_centers(params);
  const double inv_k = 1.0 / k;

  std::vector<Vec2> d_center(k);
  BlobGradients out;
  out.d_theta.assign(k, 0.0);
  out.d_alpha.assign(k - 1, 0.0);

  for (int i = 0; i < k; ++i) {
    const detail::BlobKernel kn(centers[i],
                                blob_covariance(params.s, params.a, params.theta[i], params.c));
    const double aniso = kn.inv_dxx - kn.inv_dyy;
    double gx_total = 0.0;
    double gy_total = 0.0;
    double gt_total = 0.0;
    for (int py = 0; py < grid.height; ++py) {
      const double dy = grid.y_of(py) - kn.center.y;
      double gx_row = 0.0;
      double gy_row = 0.0;
      double gt_row = 0.0;
      for (int px = 0; px < grid.width; ++px) {
        const double up = upstream(px, py);
        if (up == 0.0) continue;
        const double dx = grid.x_of(px) - kn.center.x;
        const double m = std::exp(-0.5 * kn.quadratic(dx, dy));
        const double w = up * m;
        // Rotated offsets u = R^T d.
        const double ux = kn.cos_t * dx + kn.sin_t * dy;
        const double uy = -kn.sin_t * dx + kn.cos_t * dy;
        // dM/dmu = M * P d with P d = R (ux / dxx, uy / dyy).
        const double qx = ux * kn.inv_dxx;
        const double qy = uy * kn.inv_dyy;
        gx_row += w * (kn.cos_t * qx - kn.sin_t * qy);
        gy_row += w * (kn.sin_t * qx + kn.cos_t * qy);
        // dD/dtheta = 2 ux uy (1/dxx - 1/dyy).
        gt_row -= w * ux * uy * aniso;
      }
      gx_total += gx_row;
      gy_total += gy_row;
      gt_total += gt_row;
    }
    d_center[i] = {gx_total * inv_k, gy_total * inv_k};
    out.d_theta[i] = gt_total * inv_k;
  }

  for (const Vec2& g : d_center) out.d_x1 += g;

  const CenterJacobians jac = center_jacobians(params);
  // Center i depends on alpha[j] for all i > j; accumulate a suffix sum.
  Vec2 suffix{};
  for (int j = k - 2; j >= 0; --j) {
    suffix += d_center[j + 1];
    out.d_alpha[j] = dot(suffix, jac.d_alpha[j]);
  }
  return out;
}

struct GradientCheckEntry {
  std::string name;
  double analytic = 0.0;
  double numeric = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  bool checked = false;  // magnitude above the comparison floor
};

struct GradientCheckReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  std::vector<GradientCheckEntry> entries;

  std::vector<GradientCheckEntry> group(const std::string& prefix) const {
    std::vector<GradientCheckEntry> out;
    for (const auto& e : entries) {
      if (e.name.rfind(prefix, 0) == 0) out.push_back(e);
    }
    return out;
  }
};

/// Compares mask_backward with central differences of <upstream, render_mask>.
/// Relative error is |a - n| / max(|a|, |n|) and only counts for components
/// whose magnitude exceeds `floor`.
inline GradientCheckReport finite_diff_check(const BlobParams& params, const GridSpec& grid,
                                             double step, const MaskField& upstream,
                                             double floor = 1e-8) {
  if (!(step > 0.0)) throw ValidationError("finite_diff_check: step must be > 0");
  const auto analytic = mask_backward(params, grid, upstream).flatten();
  const auto names = learnable_names(params);
  const auto base = pack_learnable(params);

  auto objective = [&](const std::vector<double>& v) {
    BlobParams p = params;
    unpack_learnable(p, v);
    return dot(upstream, render_mask(p, grid));
  };

  GradientCheckReport report;
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto plus = base;
    auto minus = base;
    plus[i] += step;
    minus[i] -= step;
    const double numeric = (objective(plus) - objective(minus)) / (2.0 * step);
    GradientCheckEntry e;
    e.name = names[i];
    e.analytic = analytic[i];
    e.numeric = numeric;
    e.abs_err = std::abs(e.analytic - e.numeric);
    const double mag = std::max(std::abs(e.analytic), std::abs(e.numeric));
    e.checked = mag > floor;
    e.rel_err = mag > 0.0 ? e.abs_err / mag : 0.0;
    report.max_abs_err = std::max(report.max_abs_err, e.abs_err);
    if (e.checked) report.max_rel_err = std::max(report.max_rel_err, e.rel_err);
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace blobmask
