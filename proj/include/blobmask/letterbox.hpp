#pragma once

#include <algorithm>
#include <cmath>

#include "blobmask/raster.hpp"

namespace blobmask {

/// Aspect-preserving fit of a source frame inside a target frame, centered,
/// with the uncovered border filled by edge replication.
struct Letterbox {
  GridSpec source;
  GridSpec target;
  double scale = 1.0;
  double off_x = 0.0;
  double off_y = 0.0;

  static Letterbox fit(const GridSpec& source, const GridSpec& target) {
    validate(source);
    validate(target);
    Letterbox lb{source, target};
    lb.scale = std::min(static_cast<double>(target.width) / source.width,
                        static_cast<double>(target.height) / source.height);
    lb.off_x = (target.width - source.width * lb.scale) / 2.0;
    lb.off_y = (target.height - source.height * lb.scale) / 2.0;
    return lb;
  }

  bool identity() const { return source == target; }

  /// Bilinear resample of `img` into the target frame.
  template <typename T, int C>
  Raster<T, C> forward(const Raster<T, C>& img) const {
    require_grid(img, source, "letterbox");
    if (identity()) return img;
    Raster<T, C> out(target);
    const double max_x = source.width - 1;
    const double max_y = source.height - 1;
    for (int ty = 0; ty < target.height; ++ty) {
      const double sy = std::clamp((ty + 0.5 - off_y) / scale - 0.5, 0.0, max_y);
      const int y0 = static_cast<int>(std::floor(sy));
      const int y1 = std::min(y0 + 1, source.height - 1);
      const double fy = sy - y0;
      for (int tx = 0; tx < target.width; ++tx) {
        const double sx = std::clamp((tx + 0.5 - off_x) / scale - 0.5, 0.0, max_x);
        const int x0 = static_cast<int>(std::floor(sx));
        const int x1 = std::min(x0 + 1, source.width - 1);
        const double fx = sx - x0;
        for (int ch = 0; ch < C; ++ch) {
          const double top = (1 - fx) * img(x0, y0, ch) + fx * img(x1, y0, ch);
          const double bot = (1 - fx) * img(x0, y1, ch) + fx * img(x1, y1, ch);
          out(tx, ty, ch) = static_cast<T>((1 - fy) * top + fy * bot);
        }
      }
    }
    return out;
  }

  /// Nearest-neighbor map of a target-frame raster back to the source frame.
  template <typename T, int C>
  Raster<T, C> backward(const Raster<T, C>& img) const {
    require_grid(img, target, "letterbox");
    if (identity()) return img;
    Raster<T, C> out(source);
    for (int py = 0; py < source.height; ++py) {
      const int ty = std::clamp(static_cast<int>(std::floor((py + 0.5) * scale + off_y)), 0,
                                target.height - 1);
      for (int px = 0; px < source.width; ++px) {
        const int tx = std::clamp(static_cast<int>(std::floor((px + 0.5) * scale + off_x)), 0,
                                  target.width - 1);
        for (int ch = 0; ch < C; ++ch) out(px, py, ch) = img(tx, ty, ch);
      }
    }
    return out;
  }
};

}  // namespace blobmask
