#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include <json.hpp>

#include "blobmask/errors.hpp"
#include "blobmask/geometry.hpp"
#include "blobmask/guidance.hpp"
#include "blobmask/optimizer.hpp"
#include "blobmask/postprocess.hpp"

namespace blobmask {

using nlohmann::json;

// ---- BlobParams document --------------------------------------------------

inline json to_json(const BlobParams& p) {
  return json{{"k", p.k},         {"x1", {p.x1.x, p.x1.y}}, {"s", p.s},
              {"a", p.a},         {"r", p.r},               {"c", p.c},
              {"theta", p.theta}, {"alpha", p.alpha}};
}

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Missing keys keep the values already in `base`. When only `k` changes,
/// theta and alpha are reset to the default chain of that length.
inline BlobParams blob_params_from_json(const json& j, BlobParams base = {}) {
  if (!j.is_object()) throw ValidationError("blob params must be a JSON object");
  const int old_k = base.k;
  detail::read_opt(j, "k", base.k);
  if (base.k != old_k) {
    const BlobParams fresh = make_chain(base.k);
    base.theta = fresh.theta;
    base.alpha = fresh.alpha;
  }
  if (j.contains("x1")) {
    std::array<double, 2> xy{base.x1.x, base.x1.y};
    detail::read_opt(j, "x1", xy);
    base.x1 = {xy[0], xy[1]};
  }
  detail::read_opt(j, "s", base.s);
  detail::read_opt(j, "a", base.a);
  detail::read_opt(j, "r", base.r);
  detail::read_opt(j, "c", base.c);
  detail::read_opt(j, "theta", base.theta);
  detail::read_opt(j, "alpha", base.alpha);
  validate(base);
  return base;
}

// ---- Run configuration ----------------------------------------------------

struct PostprocessConfig {
  double threshold = kDefaultThreshold;
  int dilation = kDefaultDilation;  // kernel at the 512 px reference resolution
};

struct GuidanceSettings {
  double t_min = 0.02;
  double t_max = 0.98;
};

/// Synthetic-oracle settings used by the mock modes.
struct MockSettings {
  /// Target chain for mock-recovery; when absent it is derived from the blob
  /// config (same shape, first center at (0.44, 0.42), tilted blobs).
  std::optional<BlobParams> target;
  Color fill{1.0, 0.1, 0.1};
  double weight = 1.0;
};

struct RunConfig {
  BlobParams blob = make_chain(5);
  TrainConfig train;
  PostprocessConfig post;
  GuidanceSettings guidance;
  MockSettings mock;
};

inline BlobParams default_mock_target(const BlobParams& shape) {
  BlobParams t = shape;
  t.x1 = {0.44, 0.42};
  for (double& th : t.theta) th = 0.25;
  for (double& al : t.alpha) al = std::numbers::pi / 2 + 0.2;
  return t;
}

inline json to_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  json mock{{"fill", cfg.mock.fill}, {"weight", cfg.mock.weight}};
  mock["target"] = cfg.mock.target ? to_json(*cfg.mock.target) : json(nullptr);
  return json{
      {"blob", to_json(cfg.blob)},
      {"train",
       {{"iterations", t.iterations},
        {"lr_fg", t.lr_fg},
        {"lr_blob", t.lr_blob},
        {"betas", {t.beta1, t.beta2}},
        {"eps", t.eps},
        {"weight_decay", t.weight_decay},
        {"schedule", "cosine"},
        {"guidance_scale", t.guidance_scale},
        {"resolution", {t.resolution.width, t.resolution.height}},
        {"snapshot_every", t.snapshot_every},
        {"base_seed", t.base_seed},
        {"overlap_weight", t.overlap_weight}}},
      {"postprocess", {{"threshold", cfg.post.threshold}, {"dilation", cfg.post.dilation}}},
      {"guidance", {{"t_min", cfg.guidance.t_min}, {"t_max", cfg.guidance.t_max}}},
      {"mock", mock},
  };
}

inline void validate(const RunConfig& cfg) {
  validate(cfg.blob);
  validate(cfg.train);
  if (!(cfg.post.threshold > 0.0 && cfg.post.threshold < 1.0)) {
    throw ValidationError("threshold must lie in (0, 1)");
  }
  if (cfg.post.dilation < 1 || cfg.post.dilation % 2 == 0) {
    throw ValidationError("dilation kernel must be an odd integer >= 1");
  }
  if (!(cfg.guidance.t_min > 0.0 && cfg.guidance.t_max < 1.0 &&
        cfg.guidance.t_min < cfg.guidance.t_max)) {
    throw ValidationError("need 0 < t_min < t_max < 1");
  }
  if (cfg.mock.target) validate(*cfg.mock.target);
}

/// Overlays `j` onto `base`; absent keys keep their current values.
inline RunConfig run_config_from_json(const json& j, RunConfig base = {}) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  if (j.contains("blob")) base.blob = blob_params_from_json(j.at("blob"), base.blob);
  if (j.contains("train")) {
    const json& t = j.at("train");
    TrainConfig& tc = base.train;
    detail::read_opt(t, "iterations", tc.iterations);
    detail::read_opt(t, "lr_fg", tc.lr_fg);
    detail::read_opt(t, "lr_blob", tc.lr_blob);
    if (t.contains("betas")) {
      std::array<double, 2> b{tc.beta1, tc.beta2};
      detail::read_opt(t, "betas", b);
      tc.beta1 = b[0];
      tc.beta2 = b[1];
    }
    detail::read_opt(t, "eps", tc.eps);
    detail::read_opt(t, "weight_decay", tc.weight_decay);
    if (t.contains("schedule") && t.at("schedule") != "cosine") {
      throw ValidationError("only the cosine schedule is supported");
    }
    detail::read_opt(t, "guidance_scale", tc.guidance_scale);
    if (t.contains("resolution")) {
      std::array<int, 2> r{tc.resolution.width, tc.resolution.height};
      detail::read_opt(t, "resolution", r);
      tc.resolution = {r[0], r[1]};
    }
    detail::read_opt(t, "snapshot_every", tc.snapshot_every);
    detail::read_opt(t, "base_seed", tc.base_seed);
    detail::read_opt(t, "overlap_weight", tc.overlap_weight);
  }
  if (j.contains("postprocess")) {
    detail::read_opt(j.at("postprocess"), "threshold", base.post.threshold);
    detail::read_opt(j.at("postprocess"), "dilation", base.post.dilation);
  }
  if (j.contains("guidance")) {
    detail::read_opt(j.at("guidance"), "t_min", base.guidance.t_min);
    detail::read_opt(j.at("guidance"), "t_max", base.guidance.t_max);
  }
  if (j.contains("mock")) {
    const json& m = j.at("mock");
    if (m.contains("target") && !m.at("target").is_null()) {
      base.mock.target = blob_params_from_json(m.at("target"), base.blob);
    }
    detail::read_opt(m, "fill", base.mock.fill);
    detail::read_opt(m, "weight", base.mock.weight);
  }
  validate(base);
  return base;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace blobmask
