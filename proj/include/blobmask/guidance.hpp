#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "blobmask/compositor.hpp"
#include "blobmask/raster.hpp"

namespace blobmask {

struct GuidanceOutput {
  ImageBuffer grad;
  std::optional<double> loss;
};

/// Source of the loss gradient with respect to the composite image.
///
/// Implementations must be deterministic in (image, step_index, rng_seed)
/// and return a finite gradient with the image's dimensions. evaluate() is
/// called serially; implementations need not be reentrant.
class GuidanceOracle {
 public:
  virtual ~GuidanceOracle() = default;
  virtual GuidanceOutput evaluate(const ImageBuffer& image, std::int64_t step_index,
                                  std::uint64_t rng_seed) = 0;
};

/// Always returns a zero gradient and zero loss.
class ZeroOracle final : public GuidanceOracle {
 public:
  GuidanceOutput evaluate(const ImageBuffer& image, std::int64_t, std::uint64_t) override {
    return {ImageBuffer(image.grid()), 0.0};
  }
};

/// loss = weight * mean((I - target)^2).
class TargetImageOracle : public GuidanceOracle {
 public:
  TargetImageOracle(ImageBuffer target, double weight) : target_(std::move(target)), weight_(weight) {}

  GuidanceOutput evaluate(const ImageBuffer& image, std::int64_t, std::uint64_t) override {
    require_same_grid(image, target_, "target oracle");
    const double n = static_cast<double>(image.size());
    const double scale = 2.0 * weight_ / n;
    GuidanceOutput out{ImageBuffer(image.grid()), std::nullopt};
    double total = 0.0;
    for (int y = 0; y < image.height(); ++y) {
      const auto src = image.row(y);
      const auto tgt = target_.row(y);
      auto dst = out.grad.row(y);
      double row_sum = 0.0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double diff = src[i] - tgt[i];
        row_sum += diff * diff;
        dst[i] = scale * diff;
      }
      total += row_sum;
    }
    out.loss = weight_ * total / n;
    return out;
  }

  const ImageBuffer& target() const { return target_; }
  double weight() const { return weight_; }

 private:
  ImageBuffer target_;
  double weight_;
};

using Color = std::array<double, 3>;

/// Target image built by compositing a solid fill over the background through
/// a known mask. Recovering that mask is the synthetic stand-in for SDS.
class MaskRecoveryOracle final : public TargetImageOracle {
 public:
  MaskRecoveryOracle(const MaskField& target_mask, const ImageBuffer& bg, Color fill,
                     double weight = 1.0)
      : TargetImageOracle(
            composite(target_mask, solid_image(bg.grid(), fill[0], fill[1], fill[2]), bg), weight),
        target_mask_(target_mask) {}

  const MaskField& target_mask() const { return target_mask_; }

 private:
  MaskField target_mask_;
};

}  // namespace blobmask
