#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "blobmask/errors.hpp"

namespace blobmask {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Parameters of a chain of `k` elliptical Gaussian blobs.
///
/// Only `x1`, `theta` and `alpha` are learnable; `s`, `a`, `r` and `c` are
/// shared across blobs and held fixed. `alpha[j]` is the chaining angle of
/// blob j + 2 (measured from the x-axis), so `alpha` has k - 1 entries.
/// Coordinates are normalized to [0,1]^2 with the origin at the top-left
/// and y pointing down.
struct BlobParams {
  int k = 5;
  Vec2 x1{0.5, 0.5};
  double s = 0.6;
  double a = 2.0;
  double r = 0.01;
  double c = 0.02;
  std::vector<double> theta = std::vector<double>(5, 0.0);
  std::vector<double> alpha = std::vector<double>(4, std::numbers::pi / 2);

  friend bool operator==(const BlobParams&, const BlobParams&) = default;
};

/// Builds a chain with `k` blobs using the default shape constants and the
/// standing-body initialization: first center at `x1`, unrotated blobs and
/// chaining angles pointing straight down.
inline BlobParams make_chain(int k, Vec2 x1 = {0.5, 0.5}, double s = 0.6) {
  BlobParams p;
  p.k = k;
  p.x1 = x1;
  p.s = s;
  p.theta.assign(k > 0 ? k : 0, 0.0);
  p.alpha.assign(k > 1 ? k - 1 : 0, std::numbers::pi / 2);
  return p;
}

inline void validate(const BlobParams& p) {
  auto fail = [](const std::string& msg) { throw ValidationError("invalid blob params: " + msg); };
  if (p.k < 1) fail("k must be >= 1");
  if (!(p.s > 0.0)) fail("scale s must be > 0");
  if (!(p.a > 0.0)) fail("aspect a must be > 0");
  if (!(p.r >= 0.0)) fail("spacing r must be >= 0");
  if (!(p.c > 0.0)) fail("sharpness c must be > 0");
  if (p.theta.size() != static_cast<std::size_t>(p.k)) fail("theta must have k entries");
  if (p.alpha.size() != static_cast<std::size_t>(p.k - 1)) fail("alpha must have k - 1 entries");
  if (!std::isfinite(p.x1.x) || !std::isfinite(p.x1.y) || !std::isfinite(p.s) ||
      !std::isfinite(p.a) || !std::isfinite(p.r) || !std::isfinite(p.c)) {
    fail("non-finite value");
  }
  for (double t : p.theta)
    if (!std::isfinite(t)) fail("non-finite theta");
  for (double t : p.alpha)
    if (!std::isfinite(t)) fail("non-finite alpha");
}

/// Maps an angle into [-pi/2, pi/2) modulo pi. Blob ellipses are symmetric
/// under a half turn, so this is only used for reporting.
inline double canonical_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  double t = std::fmod(theta + pi / 2, pi);
  if (t < 0) t += pi;
  if (t >= pi) t -= pi;
  return t - pi / 2;
}

/// Centers of every blob: x_1 given, x_i = x_{i-1} + r (cos a_i, sin a_i).
inline std::vector<Vec2> chain_centers(const BlobParams& p) {
  std::vector<Vec2> centers;
  centers.reserve(p.k);
  centers.push_back(p.x1);
  // Offsets from x1 accumulate separately from x1 itself.
  Vec2 offset{};
  for (int i = 1; i < p.k; ++i) {
    const double ang = p.alpha[i - 1];
    offset += Vec2{p.r * std::cos(ang), p.r * std::sin(ang)};
    centers.push_back(p.x1 + offset);
  }
  return centers;
}

struct Covariance2 {
  double dxx = 0.0;  // c * (s / sqrt(a))^2
  double dyy = 0.0;  // c * (s * sqrt(a))^2
  double theta = 0.0;
};

inline Covariance2 blob_covariance(double s, double a, double theta, double c) {
  if (!(s > 0.0) || !(a > 0.0) || !(c > 0.0)) {
    throw ValidationError("blob covariance needs s, a, c > 0");
  }
  const double dx = s / std::sqrt(a);
  const double dy = s * std::sqrt(a);
  return {c * dx * dx, c * dy * dy, theta};
}

/// Full rotated covariance R diag(dxx, dyy) R^T as {m00, m01, m11}.
struct SymMat2 {
  double m00 = 0.0;
  double m01 = 0.0;
  double m11 = 0.0;
};

inline SymMat2 rotated(const Covariance2& cov) {
  const double ct = std::cos(cov.theta);
  const double st = std::sin(cov.theta);
  return {ct * ct * cov.dxx + st * st * cov.dyy, ct * st * (cov.dxx - cov.dyy),
          st * st * cov.dxx + ct * ct * cov.dyy};
}

/// Derivatives of the chain centers. `d_alpha[j]` is the derivative of every
/// center i > j with respect to alpha[j]; centers with i <= j do not depend on
/// it. The derivative with respect to x1 is the identity for all centers.
struct CenterJacobians {
  std::vector<Vec2> d_alpha;

  /// d center[i] / d alpha[j] (alpha index j belongs to blob j + 2).
  Vec2 center_wrt_alpha(int i, int j) const { return i > j ? d_alpha[j] : Vec2{}; }
};

inline CenterJacobians center_jacobians(const BlobParams& p) {
  CenterJacobians jac;
  jac.d_alpha.reserve(p.alpha.size());
  for (const double ang : p.alpha) {
    jac.d_alpha.push_back({-p.r * std::sin(ang), p.r * std::cos(ang)});
  }
  return jac;
}

/// Learnable subset flattened as [x1.x, x1.y, theta..., alpha...].
inline std::vector<double> pack_learnable(const BlobParams& p) {
  std::vector<double> v{p.x1.x, p.x1.y};
  v.insert(v.end(), p.theta.begin(), p.theta.end());
  v.insert(v.end(), p.alpha.begin(), p.alpha.end());
  return v;
}

inline void unpack_learnable(BlobParams& p, const std::vector<double>& v) {
  if (v.size() != 2 + p.theta.size() + p.alpha.size()) {
    throw ValidationError("learnable vector size does not match blob count");
  }
  p.x1 = {v[0], v[1]};
  std::copy(v.begin() + 2, v.begin() + 2 + p.theta.size(), p.theta.begin());
  std::copy(v.begin() + 2 + p.theta.size(), v.end(), p.alpha.begin());
}

inline std::vector<std::string> learnable_names(const BlobParams& p) {
  std::vector<std::string> names{"x1.x", "x1.y"};
  for (std::size_t i = 0; i < p.theta.size(); ++i) names.push_back("theta[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < p.alpha.size(); ++i) names.push_back("alpha[" + std::to_string(i) + "]");
  return names;
}

}  // namespace blobmask
