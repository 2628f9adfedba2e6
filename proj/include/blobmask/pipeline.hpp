#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "blobmask/config.hpp"
#include "blobmask/errors.hpp"
#include "blobmask/image_io.hpp"
#include "blobmask/letterbox.hpp"
#include "blobmask/optimizer.hpp"
#include "blobmask/postprocess.hpp"
#include "blobmask/remote.hpp"

namespace blobmask {

namespace fs = std::filesystem;

enum class OracleKind { mock_target, mock_recovery, remote };

inline OracleKind parse_oracle_kind(const std::string& name) {
  if (name == "mock-target") return OracleKind::mock_target;
  if (name == "mock-recovery") return OracleKind::mock_recovery;
  if (name == "remote") return OracleKind::remote;
  throw ValidationError("unknown oracle '" + name + "' (mock-target, mock-recovery, remote)");
}

inline const char* to_string(OracleKind k) {
  switch (k) {
    case OracleKind::mock_target: return "mock-target";
    case OracleKind::mock_recovery: return "mock-recovery";
    case OracleKind::remote: return "remote";
  }
  return "unknown";
}

struct RunManifest {
  fs::path background;
  std::string prompt;
  /// Replaces every "{subject}" in the prompt sent to /inpaint.
  std::optional<std::string> subject_token;
  RunConfig config;
  fs::path out_dir;
  OracleKind oracle = OracleKind::mock_recovery;
  std::string endpoint;
  std::optional<fs::path> target_image;  // mock-target only
  std::vector<fs::path> frozen_masks;
  int inpaint_steps = 50;
  RetryPolicy retry;
};

inline void validate(const RunManifest& m) {
  if (m.background.empty() || !fs::is_regular_file(m.background)) {
    throw ValidationError("background not found: " + m.background.string());
  }
  if (m.prompt.empty()) throw ValidationError("prompt must not be empty");
  if (m.out_dir.empty()) throw ValidationError("output directory must be given");
  if (m.oracle == OracleKind::remote && m.endpoint.empty()) {
    throw ValidationError("the remote oracle needs --endpoint");
  }
  if (m.oracle == OracleKind::mock_target && !m.target_image) {
    throw ValidationError("the mock-target oracle needs --target-image");
  }
  validate(m.config);
}

inline std::string inpaint_prompt(const RunManifest& m) {
  if (!m.subject_token) return m.prompt;
  return std::regex_replace(m.prompt, std::regex(R"(\{subject\})"), *m.subject_token);
}

/// Background in its original frame and letterboxed to the working grid.
struct Scene {
  Image8 original;
  Letterbox frame;
  ImageBuffer working;
};

inline Scene load_scene(const fs::path& background, const GridSpec& resolution) {
  if (!fs::is_regular_file(background)) {
    throw ValidationError("background not found: " + background.string());
  }
  Scene scene;
  try {
    scene.original = read_png(background, 3);
  } catch (const IoError& e) {
    throw ValidationError(std::string("background does not decode: ") + e.what());
  }
  const ImageBuffer full = to_image(scene.original);
  scene.frame = Letterbox::fit(full.grid(), resolution);
  scene.working = scene.frame.forward(full);
  return scene;
}

/// Binary mask file mapped onto the working grid as a 0/1 field.
inline MaskField load_frozen_mask(const fs::path& path, const Letterbox& frame) {
  const BinaryMask bin = load_binary_mask(path);
  MaskField field = to_field(bin);
  if (field.grid() == frame.source) {
    field = frame.forward(field);
  } else if (field.grid() != frame.target) {
    throw ValidationError("frozen mask " + path.string() + " is " + describe(field.grid()) +
                          "; expected the background or working resolution");
  }
  return to_field(binarize(field, 0.5));
}

struct OracleBundle {
  std::unique_ptr<GuidanceOracle> oracle;
  std::optional<MaskField> reference_mask;  // known target under mock-recovery
};

inline OracleBundle make_oracle(const RunManifest& m, const RunConfig& cfg, const Scene& scene) {
  OracleBundle b;
  switch (m.oracle) {
    case OracleKind::mock_target: {
      ImageBuffer target = load_image(*m.target_image);
      const Letterbox lb = Letterbox::fit(target.grid(), cfg.train.resolution);
      b.oracle = std::make_unique<TargetImageOracle>(lb.forward(target), cfg.mock.weight);
      break;
    }
    case OracleKind::mock_recovery: {
      const BlobParams target = cfg.mock.target ? *cfg.mock.target : default_mock_target(cfg.blob);
      MaskField mask = render_mask(target, cfg.train.resolution);
      b.oracle = std::make_unique<MaskRecoveryOracle>(mask, scene.working, cfg.mock.fill,
                                                      cfg.mock.weight);
      b.reference_mask = std::move(mask);
      break;
    }
    case OracleKind::remote:
      b.oracle = std::make_unique<RemoteSdsOracle>(m.endpoint, m.prompt, cfg.train.guidance_scale,
                                                   cfg.guidance.t_min, cfg.guidance.t_max, m.retry);
      break;
  }
  return b;
}

struct OptimizeOutcome {
  OptimizationResult result;
  BinaryMask binary;         // thresholded, working grid
  BinaryMask inpaint_mask;   // thresholded + dilated, working grid
  BinaryMask output_mask;    // inpaint_mask in the background's own frame
  double area_fraction = 0.0;
  double inpaint_area_fraction = 0.0;
  std::optional<double> iou_vs_reference;
  std::optional<double> final_loss;
  int dilation_kernel = 1;
  fs::path run_dir;

  bool ok() const { return result.ok(); }
};

inline void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,lr_blob,lr_fg,loss\n";
  char buf[128];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,", row.step, row.lr_blob, row.lr_fg);
    out << buf;
    if (row.loss) {
      std::snprintf(buf, sizeof buf, "%.17g", *row.loss);
      out << buf;
    }
    out << '\n';
  }
}

inline fs::path snapshot_path(const fs::path& dir, int step, const char* kind) {
  return dir / ("step_" + std::to_string(step) + "_" + kind + ".png");
}

/// Optimizes one mask and writes the run directory:
///   config.json, trace.csv, params.json, summary.json,
///   mask_soft.mskf / mask_soft.png (working grid), mask_binary.png
///   (post-processed, background frame), foreground.png, composite.png and
///   step_{N}_mask.png / step_{N}_composite.png snapshots.
/// Oracle failures leave a partial run directory and a non-ok outcome.
inline OptimizeOutcome optimize_scene(const RunManifest& m, const Scene& scene,
                                      OracleBundle& bundle, const std::vector<MaskField>& frozen,
                                      const fs::path& run_dir, const RunHooks& hooks = {}) {
  const RunConfig& cfg = m.config;
  TrainConfig train = cfg.train;
  train.frozen_masks.insert(train.frozen_masks.end(), frozen.begin(), frozen.end());

  fs::create_directories(run_dir);
  json echo = to_json(cfg);
  echo["manifest"] = {{"background", m.background.string()},
                      {"prompt", m.prompt},
                      {"oracle", to_string(m.oracle)},
                      {"endpoint", m.endpoint},
                      {"frozen_masks", frozen.size()}};
  write_json_file(run_dir / "config.json", echo);

  OptimizeOutcome out;
  out.run_dir = run_dir;
  out.result = run_optimization(scene.working, cfg.blob, *bundle.oracle, train, hooks);
  const OptimizationResult& res = out.result;

  write_trace_csv(run_dir / "trace.csv", res.trace);
  for (const auto& snap : res.snapshots) {
    write_png(snapshot_path(run_dir, snap.step, "mask"), to_image8(snap.mask));
    write_png(snapshot_path(run_dir, snap.step, "composite"), to_image8(snap.composite));
  }
  write_json_file(run_dir / "params.json", to_json(res.params));
  const auto dump = encode_mask_dump(res.mask);
  write_file(run_dir / "mask_soft.mskf", dump.data(), dump.size());
  write_png(run_dir / "mask_soft.png", to_image8(res.mask));
  write_png(run_dir / "foreground.png", to_image8(res.foreground));
  write_png(run_dir / "composite.png",
            to_image8(composite(res.mask, res.foreground, scene.working)));

  out.dilation_kernel = scaled_dilation_kernel(train.resolution, cfg.post.dilation);
  out.binary = binarize(res.mask, cfg.post.threshold);
  out.inpaint_mask = dilate(out.binary, out.dilation_kernel);
  out.output_mask = scene.frame.backward(out.inpaint_mask);
  out.area_fraction = mask_area_fraction(out.binary);
  out.inpaint_area_fraction = mask_area_fraction(out.inpaint_mask);
  if (bundle.reference_mask) {
    out.iou_vs_reference = iou(out.binary, binarize(*bundle.reference_mask, cfg.post.threshold));
  }
  if (!res.trace.empty()) out.final_loss = res.trace.back().loss;
  write_png(run_dir / "mask_binary.png", to_image8(out.output_mask));

  std::vector<double> canonical;
  for (const double t : res.params.theta) canonical.push_back(canonical_angle(t));
  json summary{{"status", to_string(res.status)},
               {"error", res.error},
               {"steps_completed", res.steps_completed},
               {"area_fraction", out.area_fraction},
               {"inpaint_area_fraction", out.inpaint_area_fraction},
               {"dilation_kernel", out.dilation_kernel},
               {"theta_canonical", canonical}};
  summary["final_loss"] = out.final_loss ? json(*out.final_loss) : json(nullptr);
  summary["iou_vs_reference"] = out.iou_vs_reference ? json(*out.iou_vs_reference) : json(nullptr);
  write_json_file(run_dir / "summary.json", summary);
  return out;
}

inline std::vector<MaskField> load_frozen_masks(const RunManifest& m, const Scene& scene) {
  std::vector<MaskField> frozen;
  for (const auto& p : m.frozen_masks) frozen.push_back(load_frozen_mask(p, scene.frame));
  return frozen;
}

inline OptimizeOutcome cmd_optimize(const RunManifest& m, const RunHooks& hooks = {}) {
  validate(m);
  const Scene scene = load_scene(m.background, m.config.train.resolution);
  OracleBundle bundle = make_oracle(m, m.config, scene);
  return optimize_scene(m, scene, bundle, load_frozen_masks(m, scene), m.out_dir, hooks);
}

// ---- Placement ------------------------------------------------------------

inline Image8 request_inpaint(const std::string& endpoint, const Image8& image,
                              const BinaryMask& mask, const std::string& prompt,
                              std::uint64_t seed, int steps, const RetryPolicy& retry) {
  if (set_count(mask) == 0) throw ValidationError("empty mask: refusing to call /inpaint");
  if (mask.width() != image.width || mask.height() != image.height) {
    throw ValidationError("inpaint mask and image sizes differ");
  }
  const InpaintClient client(endpoint, retry);
  return client.inpaint({image, to_image8(mask), prompt, seed, steps});
}

struct PlaceOutcome {
  std::vector<OptimizeOutcome> runs;
  std::optional<Image8> placed;
};

using OracleFactory =
    std::function<OracleBundle(int person, const RunConfig& cfg, const Scene& scene)>;

/// Overlap weight used for the second and later persons when the config
/// leaves it at zero.
inline constexpr double kSequentialOverlapWeight = 0.1;

/// Optimizes one mask per prompt. Every mask after the first sees all earlier
/// inpainting masks as frozen masks under the overlap penalty. When
/// `inpaint` is set, persons are then painted in one after another, each
/// call starting from the previous output. Run directories are
/// out_dir/person_{i} when there is more than one prompt.
inline PlaceOutcome place_sequential(const RunManifest& base, const std::vector<std::string>& prompts,
                                     const OracleFactory& factory, bool inpaint) {
  if (prompts.empty()) throw ValidationError("at least one prompt is required");
  validate(base);
  const Scene scene = load_scene(base.background, base.config.train.resolution);
  std::vector<MaskField> frozen = load_frozen_masks(base, scene);

  PlaceOutcome out;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    RunManifest m = base;
    m.prompt = prompts[i];
    if (m.prompt.empty()) throw ValidationError("prompt must not be empty");
    if (i > 0 && m.config.train.overlap_weight == 0.0) {
      m.config.train.overlap_weight = kSequentialOverlapWeight;
    }
    const fs::path dir =
        prompts.size() == 1 ? base.out_dir : base.out_dir / ("person_" + std::to_string(i + 1));
    OracleBundle bundle = factory(static_cast<int>(i), m.config, scene);
    out.runs.push_back(optimize_scene(m, scene, bundle, frozen, dir));
    if (!out.runs.back().ok()) return out;
    frozen.push_back(to_field(out.runs.back().inpaint_mask));
  }

  if (!inpaint) return out;
  Image8 current = scene.original;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    RunManifest m = base;
    m.prompt = prompts[i];
    current = request_inpaint(base.endpoint, current, out.runs[i].output_mask, inpaint_prompt(m),
                              base.config.train.base_seed + i, base.inpaint_steps, base.retry);
  }
  write_png(base.out_dir / "placed.png", current);
  out.placed = std::move(current);
  return out;
}

inline OracleFactory manifest_oracle_factory(const RunManifest& m) {
  return [m](int, const RunConfig& cfg, const Scene& scene) { return make_oracle(m, cfg, scene); };
}

/// Optimize, post-process and inpaint the subject into the background.
inline PlaceOutcome cmd_place(const RunManifest& m, std::vector<std::string> prompts = {}) {
  if (m.endpoint.empty()) throw ValidationError("place needs --endpoint for /inpaint");
  if (prompts.empty()) prompts.push_back(m.prompt);
  return place_sequential(m, prompts, manifest_oracle_factory(m), true);
}

// ---- Scene hallucination --------------------------------------------------

struct HallucinateOutcome {
  BinaryMask subject;   // dilated subject mask
  BinaryMask repaint;   // its complement, sent to /inpaint
  Image8 image;
};

/// Keeps the subject region and repaints everything else from the prompt.
inline HallucinateOutcome cmd_hallucinate_scene(const RunManifest& m, const fs::path& subject_mask) {
  if (!fs::is_regular_file(m.background)) {
    throw ValidationError("background not found: " + m.background.string());
  }
  if (m.prompt.empty()) throw ValidationError("prompt must not be empty");
  if (m.endpoint.empty()) throw ValidationError("hallucinate-scene needs --endpoint");
  const Image8 background = read_png(m.background, 3);
  const BinaryMask mask = load_binary_mask(subject_mask);
  if (mask.width() != background.width || mask.height() != background.height) {
    throw ValidationError("subject mask and background sizes differ");
  }
  if (set_count(mask) == 0) throw ValidationError("empty mask: nothing to keep");

  HallucinateOutcome out;
  out.subject = dilate(mask, scaled_dilation_kernel(mask.grid(), m.config.post.dilation));
  if (set_count(out.subject) == mask.size()) {
    throw ValidationError("full mask: nothing left to repaint");
  }
  out.repaint = complement(out.subject);
  if (complement(out.repaint) != out.subject) throw std::logic_error("mask complement is not an involution");
  out.image = request_inpaint(m.endpoint, background, out.repaint, inpaint_prompt(m),
                              m.config.train.base_seed, m.inpaint_steps, m.retry);
  fs::create_directories(m.out_dir);
  write_png(m.out_dir / "subject_mask.png", to_image8(out.subject));
  write_png(m.out_dir / "scene.png", out.image);
  return out;
}

// ---- Contact sheets -------------------------------------------------------

inline Image8 as_rgb(const Image8& img) {
  if (img.channels == 3) return img;
  Image8 out{img.width, img.height, 3, std::vector<std::uint8_t>(img.pixels.size() * 3)};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = img.pixels[i];
  }
  return out;
}

/// Tiles equally sized images row-major into `rows` x `cols` cells.
inline Image8 tile_grid(const std::vector<Image8>& tiles, int rows, int cols) {
  if (tiles.empty()) throw ValidationError("nothing to tile");
  const int tw = tiles.front().width;
  const int th = tiles.front().height;
  Image8 sheet{tw * cols, th * rows, 3,
               std::vector<std::uint8_t>(static_cast<std::size_t>(tw) * cols * th * rows * 3, 0)};
  for (std::size_t n = 0; n < tiles.size(); ++n) {
    const Image8 t = as_rgb(tiles[n]);
    if (t.width != tw || t.height != th) throw ValidationError("tiles differ in size");
    const int r = static_cast<int>(n) / cols;
    const int c = static_cast<int>(n) % cols;
    for (int y = 0; y < th; ++y) {
      const auto* src = t.pixels.data() + static_cast<std::size_t>(y) * tw * 3;
      auto* dst = sheet.pixels.data() +
                  ((static_cast<std::size_t>(r) * th + y) * sheet.width + static_cast<std::size_t>(c) * tw) * 3;
      std::copy(src, src + tw * 3, dst);
    }
  }
  return sheet;
}

/// Snapshot steps found in a run directory, ascending.
inline std::vector<int> snapshot_steps(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ValidationError("run directory not found: " + run_dir.string());
  static const std::regex pattern(R"(step_(\d+)_mask\.png)");
  std::vector<int> steps;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, match, pattern) &&
        fs::is_regular_file(snapshot_path(run_dir, std::stoi(match[1]), "composite"))) {
      steps.push_back(std::stoi(match[1]));
    }
  }
  std::sort(steps.begin(), steps.end());
  return steps;
}

/// Training progression sheet: masks on the top row, composites below, one
/// column per snapshot in step order.
inline Image8 cmd_progression(const fs::path& run_dir, const std::optional<fs::path>& output = {}) {
  const auto steps = snapshot_steps(run_dir);
  if (steps.empty()) throw ValidationError("no snapshots in " + run_dir.string());
  std::vector<Image8> tiles;
  for (const int s : steps) tiles.push_back(read_png(snapshot_path(run_dir, s, "mask"), 1));
  for (const int s : steps) tiles.push_back(read_png(snapshot_path(run_dir, s, "composite"), 3));
  Image8 sheet = tile_grid(tiles, 2, static_cast<int>(steps.size()));
  write_png(output.value_or(run_dir / "progression.png"), sheet);
  return sheet;
}

// ---- Ablation sweeps ------------------------------------------------------

enum class SweepAxis { scale, blobs, dilation };

inline SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "scale") return SweepAxis::scale;
  if (name == "blobs") return SweepAxis::blobs;
  if (name == "dilation") return SweepAxis::dilation;
  throw ValidationError("unknown sweep axis '" + name + "' (scale, blobs, dilation)");
}

/// Scale paired with each blob count in the blob-count ablation.
inline double paired_scale(int blobs) {
  static const std::map<int, double> table{{1, 3.0}, {3, 1.0}, {5, 0.6}, {7, 0.43}};
  const auto it = table.find(blobs);
  if (it == table.end()) {
    throw ValidationError("blob sweep supports 1, 3, 5 or 7 blobs, got " + std::to_string(blobs));
  }
  return it->second;
}

/// Config for one sweep point. The blob axis also swaps in the paired scale.
inline RunConfig sweep_config(const RunConfig& base, SweepAxis axis, double value) {
  RunConfig cfg = base;
  switch (axis) {
    case SweepAxis::scale:
      if (!(value > 0.0)) throw ValidationError("scale values must be > 0");
      cfg.blob.s = value;
      break;
    case SweepAxis::blobs: {
      const int k = static_cast<int>(value);
      if (k != value) throw ValidationError("blob counts must be integers");
      const double s = paired_scale(k);
      cfg.blob = make_chain(k, base.blob.x1, s);
      cfg.blob.a = base.blob.a;
      cfg.blob.r = base.blob.r;
      cfg.blob.c = base.blob.c;
      break;
    }
    case SweepAxis::dilation: {
      const int kern = static_cast<int>(value);
      if (kern != value || kern < 1 || kern % 2 == 0) {
        throw ValidationError("dilation values must be odd integers >= 1");
      }
      cfg.post.dilation = kern;
      break;
    }
  }
  validate(cfg);
  return cfg;
}

struct SweepRow {
  double value = 0.0;
  int blobs = 0;
  double scale = 0.0;
  int dilation = 0;
  std::optional<double> final_loss;
  double area_fraction = 0.0;
  double inpaint_area_fraction = 0.0;
  std::optional<double> iou_vs_reference;
  std::string status;
};

struct SweepOutcome {
  std::vector<SweepRow> rows;
  Image8 sheet;
};

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// One optimization per value. Mock-recovery targets are derived from the
/// base config, so every point chases the same target. Writes
/// out_dir/<axis>_<value>/ run directories, sweep.csv and sweep_sheet.png
/// (binary masks on top, composites below).
inline SweepOutcome cmd_sweep(const RunManifest& base, const std::string& axis_name,
                              const std::vector<double>& values) {
  const SweepAxis axis = parse_sweep_axis(axis_name);
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  validate(base);
  std::vector<RunConfig> configs;
  for (const double v : values) configs.push_back(sweep_config(base.config, axis, v));

  RunConfig target_source = base.config;
  if (!target_source.mock.target) target_source.mock.target = default_mock_target(base.config.blob);

  const Scene scene = load_scene(base.background, base.config.train.resolution);
  const auto frozen = load_frozen_masks(base, scene);
  SweepOutcome out;
  std::vector<Image8> masks;
  std::vector<Image8> composites;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunManifest m = base;
    m.config = configs[i];
    m.config.mock.target = target_source.mock.target;
    OracleBundle bundle = make_oracle(m, m.config, scene);
    const fs::path dir = base.out_dir / (axis_name + "_" + format_value(values[i]));
    const OptimizeOutcome run = optimize_scene(m, scene, bundle, frozen, dir, {nullptr, false});
    SweepRow row;
    row.value = values[i];
    row.blobs = m.config.blob.k;
    row.scale = m.config.blob.s;
    row.dilation = m.config.post.dilation;
    row.final_loss = run.final_loss;
    row.area_fraction = run.area_fraction;
    row.inpaint_area_fraction = run.inpaint_area_fraction;
    row.iou_vs_reference = run.iou_vs_reference;
    row.status = to_string(run.result.status);
    out.rows.push_back(row);
    masks.push_back(to_image8(run.inpaint_mask));
    composites.push_back(
        to_image8(composite(run.result.mask, run.result.foreground, scene.working)));
  }

  std::ofstream csv(base.out_dir / "sweep.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write sweep.csv");
  csv << "axis,value,blobs,scale,dilation,final_loss,area_fraction,inpaint_area_fraction,"
         "iou_vs_reference,status\n";
  char buf[512];
  for (const auto& r : out.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%d,%.17g,%d,", axis_name.c_str(), r.value, r.blobs,
                  r.scale, r.dilation);
    csv << buf;
    if (r.final_loss) csv << format_value(*r.final_loss);
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,", r.area_fraction, r.inpaint_area_fraction);
    csv << buf;
    if (r.iou_vs_reference) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.iou_vs_reference);
      csv << buf;
    }
    csv << ',' << r.status << '\n';
  }

  std::vector<Image8> tiles = masks;
  tiles.insert(tiles.end(), composites.begin(), composites.end());
  out.sheet = tile_grid(tiles, 2, static_cast<int>(values.size()));
  write_png(base.out_dir / "sweep_sheet.png", out.sheet);
  return out;
}

// ---- Exit codes -----------------------------------------------------------

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitTransport = 3;
inline constexpr int kExitNumeric = 4;

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return kExitValidation;
    case ErrorKind::transport:
    case ErrorKind::protocol: return kExitTransport;
    case ErrorKind::numeric: return kExitNumeric;
    case ErrorKind::io: return kExitFailure;
  }
  return kExitFailure;
}

inline int exit_code(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return kExitOk;
    case RunStatus::transport_error:
    case RunStatus::protocol_error: return kExitTransport;
    case RunStatus::numeric_error: return kExitNumeric;
  }
  return kExitFailure;
}

}  // namespace blobmask
