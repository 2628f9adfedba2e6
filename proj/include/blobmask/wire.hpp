#pragma once

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blobmask/errors.hpp"
#include "blobmask/image_io.hpp"
#include "blobmask/raster.hpp"

namespace blobmask::wire {

using nlohmann::json;

inline std::string base64_encode(const std::uint8_t* data, std::size_t size) {
  std::string out(4 * ((size + 2) / 3), '\0');
  if (size > 0) {
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data,
                                  static_cast<int>(size));
    out.resize(static_cast<std::size_t>(n));
  }
  return out;
}

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  return base64_encode(bytes.data(), bytes.size());
}

/// Strict decoder: length must be a multiple of 4, padding only at the end.
inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 payload length is not a multiple of 4");
  if (text.empty()) return {};
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ProtocolError("invalid base64 payload");
  std::size_t pad = 0;
  if (text.back() == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

/// HWC float tensor as carried on the wire (f32, little-endian).
struct Tensor {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> data;

  std::size_t byte_size() const { return 4 * data.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline Tensor to_tensor(const ImageBuffer& img) {
  Tensor t{img.height(), img.width(), 3, std::vector<float>(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) t.data[i] = static_cast<float>(img[i]);
  return t;
}

inline ImageBuffer to_image(const Tensor& t) {
  if (t.channels != 3) throw ProtocolError("tensor must have 3 channels");
  ImageBuffer img(GridSpec{t.width, t.height});
  if (t.data.size() != img.size()) throw ProtocolError("tensor data does not match its dims");
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = t.data[i];
  return img;
}

inline std::vector<std::uint8_t> f32le_bytes(const std::vector<float>& values) {
  std::vector<std::uint8_t> out;
  out.reserve(4 * values.size());
  for (const float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

/// Decodes base64 f32le, checking the byte length against `expected_values`.
inline std::vector<float> f32le_values(std::string_view b64, std::size_t expected_values,
                                       const char* field) {
  const auto bytes = base64_decode(b64);
  if (bytes.size() != 4 * expected_values) {
    throw ProtocolError(std::string(field) + ": expected " + std::to_string(4 * expected_values) +
                        " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<float> out(expected_values);
  for (std::size_t i = 0; i < expected_values; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

struct SdsRequest {
  std::string prompt;
  double guidance_scale = 200.0;
  Tensor image;
  std::uint64_t seed = 0;
  double t_min = 0.02;
  double t_max = 0.98;

  friend bool operator==(const SdsRequest&, const SdsRequest&) = default;
};

struct SdsResponse {
  Tensor grad;
  std::optional<double> loss;
};

inline void validate(const SdsRequest& req) {
  if (req.image.channels != 3) throw ValidationError("sds request: channels must be 3");
  if (req.image.height < 1 || req.image.width < 1) throw ValidationError("sds request: empty image");
  if (req.image.data.size() != static_cast<std::size_t>(req.image.height) * req.image.width * 3) {
    throw ValidationError("sds request: tensor length does not match dims");
  }
  if (!(req.t_min > 0.0 && req.t_max < 1.0 && req.t_min < req.t_max)) {
    throw ValidationError("sds request: need 0 < t_min < t_max < 1");
  }
}

inline json to_json(const SdsRequest& req) {
  return json{{"prompt", req.prompt},
              {"guidance_scale", req.guidance_scale},
              {"height", req.image.height},
              {"width", req.image.width},
              {"channels", 3},
              {"layout", "HWC"},
              {"dtype", "f32le"},
              {"seed", req.seed},
              {"t_min", req.t_min},
              {"t_max", req.t_max},
              {"image_b64", base64_encode(f32le_bytes(req.image.data))}};
}

namespace detail {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("field '") + key + "' has the wrong type");
  }
}

inline json parse(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

/// Parses and validates a request body. Violations raise ProtocolError, which
/// a server maps to a 4xx status.
inline SdsRequest parse_sds_request(std::string_view body) {
  const json j = detail::parse(body);
  if (!j.is_object()) throw ProtocolError("request must be a JSON object");
  SdsRequest req;
  req.prompt = detail::field<std::string>(j, "prompt");
  req.guidance_scale = detail::field<double>(j, "guidance_scale");
  req.image.height = detail::field<int>(j, "height");
  req.image.width = detail::field<int>(j, "width");
  req.image.channels = detail::field<int>(j, "channels");
  if (req.image.channels != 3) throw ProtocolError("channels must be 3");
  if (detail::field<std::string>(j, "layout") != "HWC") throw ProtocolError("layout must be HWC");
  if (detail::field<std::string>(j, "dtype") != "f32le") throw ProtocolError("dtype must be f32le");
  if (req.image.height < 1 || req.image.width < 1) throw ProtocolError("dims must be positive");
  req.seed = detail::field<std::uint64_t>(j, "seed");
  req.t_min = detail::field<double>(j, "t_min");
  req.t_max = detail::field<double>(j, "t_max");
  if (!(req.t_min > 0.0 && req.t_max < 1.0 && req.t_min < req.t_max)) {
    throw ProtocolError("need 0 < t_min < t_max < 1");
  }
  const std::size_t n = static_cast<std::size_t>(req.image.height) * req.image.width * 3;
  req.image.data = f32le_values(detail::field<std::string>(j, "image_b64"), n, "image_b64");
  return req;
}

inline json to_json(const SdsResponse& resp) {
  json j{{"grad_b64", base64_encode(f32le_bytes(resp.grad.data))}};
  j["loss"] = resp.loss ? json(*resp.loss) : json(nullptr);
  return j;
}

/// The response carries no dims of its own; they must match the request.
inline SdsResponse parse_sds_response(std::string_view body, int height, int width) {
  const json j = detail::parse(body);
  if (!j.is_object()) throw ProtocolError("response must be a JSON object");
  SdsResponse resp;
  resp.grad.height = height;
  resp.grad.width = width;
  const std::size_t n = static_cast<std::size_t>(height) * width * 3;
  resp.grad.data = f32le_values(detail::field<std::string>(j, "grad_b64"), n, "grad_b64");
  if (j.contains("loss") && !j["loss"].is_null()) {
    if (!j["loss"].is_number()) throw ProtocolError("field 'loss' must be a number or null");
    resp.loss = j["loss"].get<double>();
  }
  return resp;
}

/// Mask-conditioned inpainting request. `mask` is gray with 255 = repaint.
struct InpaintRequest {
  Image8 image;
  Image8 mask;
  std::string prompt;
  std::uint64_t seed = 0;
  int steps = 50;
};

inline json to_json(const InpaintRequest& req) {
  return json{{"prompt", req.prompt},
              {"seed", req.seed},
              {"steps", req.steps},
              {"image", base64_encode(encode_png(req.image))},
              {"mask", base64_encode(encode_png(req.mask))}};
}

inline Image8 decode_png_field(const json& j, const char* key, int channels) {
  const auto bytes = base64_decode(detail::field<std::string>(j, key));
  try {
    return decode_png(bytes.data(), bytes.size(), channels);
  } catch (const IoError& e) {
    throw ProtocolError(std::string("field '") + key + "': " + e.what());
  }
}

inline InpaintRequest parse_inpaint_request(std::string_view body) {
  const json j = detail::parse(body);
  if (!j.is_object()) throw ProtocolError("request must be a JSON object");
  InpaintRequest req;
  req.prompt = detail::field<std::string>(j, "prompt");
  req.seed = detail::field<std::uint64_t>(j, "seed");
  req.steps = detail::field<int>(j, "steps");
  req.image = decode_png_field(j, "image", 3);
  req.mask = decode_png_field(j, "mask", 1);
  if (req.image.width != req.mask.width || req.image.height != req.mask.height) {
    throw ProtocolError("image and mask dims differ");
  }
  return req;
}

inline json inpaint_response_json(const Image8& image) {
  return json{{"image", base64_encode(encode_png(image))}};
}

inline Image8 parse_inpaint_response(std::string_view body) {
  const json j = detail::parse(body);
  if (!j.is_object()) throw ProtocolError("response must be a JSON object");
  return decode_png_field(j, "image", 3);
}

}  // namespace blobmask::wire
