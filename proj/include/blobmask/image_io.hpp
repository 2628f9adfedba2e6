#pragma once

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "blobmask/errors.hpp"
#include "blobmask/raster.hpp"

namespace blobmask {

/// 8-bit RGB or gray pixels as stored in a PNG.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 3;  // 1 or 3
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const Image8&, const Image8&) = default;
};

/// v * 255 rounded half-up and clamped to [0, 255].
inline std::uint8_t to_byte(double v) {
  const double scaled = std::floor(v * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

namespace detail {

inline png_uint_32 png_format(int channels) {
  return channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const Image8& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = detail::png_format(img.channels);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

/// Decodes any PNG to gray (channels = 1) or RGB (channels = 3).
inline Image8 decode_png(const std::uint8_t* data, std::size_t size, int channels = 3) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data, size)) {
    throw IoError(std::string("png decode failed: ") + image.message);
  }
  image.format = detail::png_format(channels);
  Image8 img{static_cast<int>(image.width), static_cast<int>(image.height), channels, {}};
  img.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError(std::string("png decode failed: ") + image.message);
  }
  return img;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("short write to " + path.string());
}

inline Image8 read_png(const std::filesystem::path& path, int channels = 3) {
  const auto bytes = read_file(path);
  return decode_png(bytes.data(), bytes.size(), channels);
}

inline void write_png(const std::filesystem::path& path, const Image8& img) {
  const auto bytes = encode_png(img);
  write_file(path, bytes.data(), bytes.size());
}

// Conversions between 8-bit storage and floating rasters. Loading is v / 255
// with no gamma transform.

inline ImageBuffer to_image(const Image8& img) {
  if (img.channels != 3) throw ValidationError("expected an RGB image");
  ImageBuffer out(GridSpec{img.width, img.height});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out[i] = img.pixels[i] / 255.0;
  return out;
}

inline Image8 to_image8(const ImageBuffer& img) {
  Image8 out{img.width(), img.height(), 3, std::vector<std::uint8_t>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) out.pixels[i] = to_byte(img[i]);
  return out;
}

inline Image8 to_image8(const MaskField& mask) {
  Image8 out{mask.width(), mask.height(), 1, std::vector<std::uint8_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) out.pixels[i] = to_byte(mask[i]);
  return out;
}

/// 0 / 255 gray image.
inline Image8 to_image8(const BinaryMask& mask) {
  Image8 out{mask.width(), mask.height(), 1, std::vector<std::uint8_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) out.pixels[i] = mask[i] ? 255 : 0;
  return out;
}

/// Any nonzero gray value counts as set.
inline BinaryMask to_binary_mask(const Image8& img) {
  if (img.channels != 1) throw ValidationError("expected a single-channel mask image");
  BinaryMask out(GridSpec{img.width, img.height});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out[i] = img.pixels[i] ? 1 : 0;
  return out;
}

inline ImageBuffer load_image(const std::filesystem::path& path) { return to_image(read_png(path, 3)); }

inline void save_image(const std::filesystem::path& path, const ImageBuffer& img) {
  write_png(path, to_image8(img));
}

inline BinaryMask load_binary_mask(const std::filesystem::path& path) {
  return to_binary_mask(read_png(path, 1));
}

// Lossless mask dump: "MSKF", u32 width, u32 height, u32 reserved (0), then
// width * height little-endian f32 values in row-major order.

namespace detail {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_mask_dump(const MaskField& mask) {
  std::vector<std::uint8_t> out{'M', 'S', 'K', 'F'};
  out.reserve(16 + 4 * mask.size());
  detail::put_u32le(out, static_cast<std::uint32_t>(mask.width()));
  detail::put_u32le(out, static_cast<std::uint32_t>(mask.height()));
  detail::put_u32le(out, 0);
  for (const double v : mask.values()) {
    detail::put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

inline MaskField decode_mask_dump(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "MSKF", 4) != 0) {
    throw ValidationError("not a mask dump (missing MSKF header)");
  }
  const auto w = detail::get_u32le(bytes.data() + 4);
  const auto h = detail::get_u32le(bytes.data() + 8);
  const std::size_t expected = 16 + 4ull * w * h;
  if (bytes.size() != expected) {
    throw ValidationError("mask dump is " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected));
  }
  MaskField out(GridSpec{static_cast<int>(w), static_cast<int>(h)});
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<float>(detail::get_u32le(bytes.data() + 16 + 4 * i));
  }
  return out;
}

}  // namespace blobmask
