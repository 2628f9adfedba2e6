#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "blobmask/errors.hpp"
#include "blobmask/raster.hpp"

namespace blobmask {

inline constexpr double kDefaultThreshold = 0.2;
inline constexpr int kDefaultDilation = 15;
inline constexpr int kReferenceResolution = 512;

/// Set where value >= threshold.
inline BinaryMask binarize(const MaskField& field, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("binarize: threshold must lie in (0, 1)");
  }
  BinaryMask out(field.grid());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = field[i] >= threshold ? 1 : 0;
  return out;
}

/// Square kernel x kernel dilation. Done as two separable 1-D max passes,
/// which is exact for a rectangular structuring element.
inline BinaryMask dilate(const BinaryMask& mask, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ValidationError("dilate: kernel must be an odd integer >= 1, got " + std::to_string(kernel));
  }
  if (kernel == 1) return mask;
  const int radius = kernel / 2;
  const int w = mask.width();
  const int h = mask.height();

  // Horizontal pass using a running count of set pixels in the window.
  BinaryMask horiz(mask.grid());
  for (int y = 0; y < h; ++y) {
    int count = 0;
    for (int x = 0; x < std::min(radius, w); ++x) count += mask(x, y);
    for (int x = 0; x < w; ++x) {
      if (x + radius < w) count += mask(x + radius, y);
      if (x - radius - 1 >= 0) count -= mask(x - radius - 1, y);
      horiz(x, y) = count > 0 ? 1 : 0;
    }
  }
  BinaryMask out(mask.grid());
  for (int x = 0; x < w; ++x) {
    int count = 0;
    for (int y = 0; y < std::min(radius, h); ++y) count += horiz(x, y);
    for (int y = 0; y < h; ++y) {
      if (y + radius < h) count += horiz(x, y + radius);
      if (y - radius - 1 >= 0) count -= horiz(x, y - radius - 1);
      out(x, y) = count > 0 ? 1 : 0;
    }
  }
  return out;
}

inline std::size_t set_count(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.values().begin(), mask.values().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

inline double mask_area_fraction(const BinaryMask& mask) {
  if (mask.empty()) return 0.0;
  return static_cast<double>(set_count(mask)) / static_cast<double>(mask.size());
}

/// Intersection over union; 1 when both masks are empty.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_grid(a, b, "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ia = a[i] != 0;
    const bool ib = b[i] != 0;
    inter += (ia && ib) ? 1 : 0;
    uni += (ia || ib) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline BinaryMask complement(const BinaryMask& mask) {
  BinaryMask out(mask.grid());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 0 : 1;
  return out;
}

/// Binary mask as a 0/1 soft field (e.g. for the overlap penalty).
inline MaskField to_field(const BinaryMask& mask) {
  MaskField out(mask.grid());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return out;
}

/// Odd integer nearest to `v` (ties go up), never below 1.
inline int nearest_odd(double v) {
  const int k = 2 * static_cast<int>(std::floor((v - 1.0) / 2.0 + 0.5)) + 1;
  return std::max(k, 1);
}

/// Dilation kernel for a grid: `base_kernel` at 512 px along the longer side,
/// scaled proportionally and rounded to the nearest odd size.
inline int scaled_dilation_kernel(const GridSpec& grid, int base_kernel = kDefaultDilation) {
  validate(grid);
  if (base_kernel < 1 || base_kernel % 2 == 0) {
    throw ValidationError("dilation kernel must be an odd integer >= 1");
  }
  const int side = std::max(grid.width, grid.height);
  return nearest_odd(static_cast<double>(base_kernel) * side / kReferenceResolution);
}

/// Binarize then dilate.
inline BinaryMask inpainting_mask(const MaskField& field, double threshold, int kernel) {
  return dilate(binarize(field, threshold), kernel);
}

}  // namespace blobmask
