#pragma once

#include "blobmask/raster.hpp"

namespace blobmask {

/// I_c = M * fg + (1 - M) * bg, per channel. No clamping.
inline ImageBuffer composite(const MaskField& mask, const ImageBuffer& fg, const ImageBuffer& bg) {
  require_same_grid(mask, fg, "composite");
  require_same_grid(mask, bg, "composite");
  ImageBuffer out(mask.grid());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const double m = mask(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        out(x, y, ch) = m * fg(x, y, ch) + (1.0 - m) * bg(x, y, ch);
      }
    }
  }
  return out;
}

struct CompositeGradients {
  MaskField grad_mask;
  ImageBuffer grad_fg;
};

inline CompositeGradients composite_backward(const MaskField& mask, const ImageBuffer& fg,
                                             const ImageBuffer& bg, const ImageBuffer& grad_out) {
  require_same_grid(mask, fg, "composite_backward");
  require_same_grid(mask, bg, "composite_backward");
  require_same_grid(mask, grad_out, "composite_backward");
  CompositeGradients g{MaskField(mask.grid()), ImageBuffer(mask.grid())};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const double m = mask(x, y);
      double gm = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        const double go = grad_out(x, y, ch);
        g.grad_fg(x, y, ch) = go * m;
        gm += go * (fg(x, y, ch) - bg(x, y, ch));
      }
      g.grad_mask(x, y) = gm;
    }
  }
  return g;
}

/// Copy with every sample clamped to [0, 1]; used only when exporting.
inline ImageBuffer clamped(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

/// Solid-color image.
inline ImageBuffer solid_image(const GridSpec& grid, double r, double g, double b) {
  ImageBuffer out(grid);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      out(x, y, 0) = r;
      out(x, y, 1) = g;
      out(x, y, 2) = b;
    }
  }
  return out;
}

}  // namespace blobmask
