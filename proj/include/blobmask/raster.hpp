#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "blobmask/errors.hpp"

namespace blobmask {

struct GridSpec {
  int width = 0;
  int height = 0;

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  // Normalized coordinate of a pixel center: origin top-left, x right, y down.
  double x_of(int px) const { return (px + 0.5) / width; }
  double y_of(int py) const { return (py + 0.5) / height; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline void validate(const GridSpec& grid) {
  if (grid.width < 1 || grid.height < 1) {
    throw ValidationError("grid must be at least 1x1, got " + std::to_string(grid.width) + "x" +
                          std::to_string(grid.height));
  }
}

inline std::string describe(const GridSpec& grid) {
  return std::to_string(grid.width) + "x" + std::to_string(grid.height);
}

/// Dense row-major raster with interleaved channels.
template <typename T, int Channels>
class Raster {
 public:
  static_assert(Channels >= 1);
  using value_type = T;
  static constexpr int channels = Channels;

  Raster() = default;
  explicit Raster(GridSpec grid, T fill = T{})
      : grid_(checked(grid)), data_(grid.pixel_count() * Channels, fill) {}

  int width() const { return grid_.width; }
  int height() const { return grid_.height; }
  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y, int ch = 0) { return data_[index(x, y, ch)]; }
  const T& operator()(int x, int y, int ch = 0) const { return data_[index(x, y, ch)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  std::span<T> row(int y) {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(y) * grid_.width * Channels,
                                       static_cast<std::size_t>(grid_.width) * Channels);
  }
  std::span<const T> row(int y) const {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(y) * grid_.width * Channels,
                                             static_cast<std::size_t>(grid_.width) * Channels);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static GridSpec checked(GridSpec grid) {
    validate(grid);
    return grid;
  }

  std::size_t index(int x, int y, int ch) const {
    return (static_cast<std::size_t>(y) * grid_.width + x) * Channels + ch;
  }

  GridSpec grid_{};
  std::vector<T> data_;
};

/// Soft mask over the pixel grid. Rendered masks lie in (0, 1]; frozen
/// (binary) masks fed to the overlap penalty may contain zeros.
using MaskField = Raster<double, 1>;

/// H x W x 3 floating image. Loaded images lie in [0, 1]; gradient buffers
/// and the unclamped foreground do not.
using ImageBuffer = Raster<double, 3>;

using BinaryMask = Raster<std::uint8_t, 1>;

template <typename A, typename B>
void require_same_grid(const A& a, const B& b, const char* what) {
  if (a.grid() != b.grid()) {
    throw ValidationError(std::string(what) + ": dimension mismatch (" + describe(a.grid()) +
                          " vs " + describe(b.grid()) + ")");
  }
}

template <typename A>
void require_grid(const A& a, const GridSpec& grid, const char* what) {
  if (a.grid() != grid) {
    throw ValidationError(std::string(what) + ": expected " + describe(grid) + ", got " +
                          describe(a.grid()));
  }
}

template <typename T, int C>
bool all_finite(const Raster<T, C>& r) {
  for (const T v : r.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

/// Inner product over every sample.
template <typename T, int C>
double dot(const Raster<T, C>& a, const Raster<T, C>& b) {
  require_same_grid(a, b, "dot");
  double total = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    const auto ra = a.row(y);
    const auto rb = b.row(y);
    double row_sum = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) row_sum += static_cast<double>(ra[i]) * rb[i];
    total += row_sum;
  }
  return total;
}

template <typename T, int C>
double mean(const Raster<T, C>& r) {
  if (r.empty()) return 0.0;
  double total = 0.0;
  for (int y = 0; y < r.height(); ++y) {
    double row_sum = 0.0;
    for (const T v : r.row(y)) row_sum += v;
    total += row_sum;
  }
  return total / static_cast<double>(r.size());
}

}  // namespace blobmask
