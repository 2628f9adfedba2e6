// Command-line front end: optimize, place, hallucinate-scene, sweep,
// progression.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blobmask/pipeline.hpp"

namespace {

using namespace blobmask;

struct CommonOptions {
  std::string config_file;
  std::string background;
  std::vector<std::string> prompts;
  std::string subject_token;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<int> blobs;
  std::optional<double> scale;
  std::optional<double> aspect;
  std::optional<double> spacing;
  std::optional<double> sharpness;
  std::optional<double> threshold;
  std::optional<int> dilate;
  std::string oracle = "mock-recovery";
  std::string endpoint;
  std::optional<double> guidance_scale;
  std::vector<std::string> frozen_masks;
  std::optional<double> overlap_weight;
  std::optional<double> lr_fg;
  std::optional<double> lr_blob;
  std::optional<int> resolution;
  std::optional<int> snapshot_every;
  std::string target_image;
  int inpaint_steps = 50;
};

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("--config", o.config_file, "JSON config file; flags override it");
  app.add_option("--background", o.background, "Background PNG");
  app.add_option("--prompt", o.prompts, "Action prompt (repeat on `place` for several persons)");
  app.add_option("--subject-token", o.subject_token, "Token substituted for {subject} in inpaint prompts");
  app.add_option("--out", o.out, "Output directory")->required();
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--iters", o.iters, "Optimization iterations");
  app.add_option("--blobs", o.blobs, "Number of blobs k");
  app.add_option("--scale", o.scale, "Blob scale s");
  app.add_option("--aspect", o.aspect, "Blob aspect ratio a");
  app.add_option("--spacing", o.spacing, "Distance r between consecutive centers");
  app.add_option("--sharpness", o.sharpness, "Sharpness constant c");
  app.add_option("--threshold", o.threshold, "Binarization threshold");
  app.add_option("--dilate", o.dilate, "Dilation kernel at 512 px");
  app.add_option("--oracle", o.oracle, "mock-target | mock-recovery | remote");
  app.add_option("--endpoint", o.endpoint, "Service base URL, e.g. http://127.0.0.1:8000");
  app.add_option("--guidance-scale", o.guidance_scale, "Classifier-free guidance scale");
  app.add_option("--frozen-mask", o.frozen_masks, "Binary mask of an already placed person (repeatable)");
  app.add_option("--overlap-weight", o.overlap_weight, "Weight of the overlap penalty");
  app.add_option("--lr-fg", o.lr_fg, "Peak learning rate of the foreground image");
  app.add_option("--lr-blob", o.lr_blob, "Peak learning rate of the blob parameters");
  app.add_option("--resolution", o.resolution, "Square working resolution");
  app.add_option("--snapshot-every", o.snapshot_every, "Snapshot interval in steps");
  app.add_option("--target-image", o.target_image, "Target image for the mock-target oracle");
  app.add_option("--inpaint-steps", o.inpaint_steps, "Denoising steps requested from /inpaint");
}

RunManifest build_manifest(const CommonOptions& o) {
  RunManifest m;
  RunConfig cfg;
  if (!o.config_file.empty()) cfg = run_config_from_json(read_json_file(o.config_file));
  if (o.blobs && *o.blobs != cfg.blob.k) {
    if (*o.blobs < 1) throw ValidationError("--blobs must be >= 1");
    BlobParams fresh = make_chain(*o.blobs, cfg.blob.x1, cfg.blob.s);
    fresh.a = cfg.blob.a;
    fresh.r = cfg.blob.r;
    fresh.c = cfg.blob.c;
    cfg.blob = fresh;
  }
  if (o.scale) cfg.blob.s = *o.scale;
  if (o.aspect) cfg.blob.a = *o.aspect;
  if (o.spacing) cfg.blob.r = *o.spacing;
  if (o.sharpness) cfg.blob.c = *o.sharpness;
  if (o.seed) cfg.train.base_seed = *o.seed;
  if (o.iters) cfg.train.iterations = *o.iters;
  if (o.threshold) cfg.post.threshold = *o.threshold;
  if (o.dilate) cfg.post.dilation = *o.dilate;
  if (o.guidance_scale) cfg.train.guidance_scale = *o.guidance_scale;
  if (o.overlap_weight) cfg.train.overlap_weight = *o.overlap_weight;
  if (o.lr_fg) cfg.train.lr_fg = *o.lr_fg;
  if (o.lr_blob) cfg.train.lr_blob = *o.lr_blob;
  if (o.resolution) cfg.train.resolution = {*o.resolution, *o.resolution};
  if (o.snapshot_every) cfg.train.snapshot_every = *o.snapshot_every;
  validate(cfg);

  m.config = std::move(cfg);
  m.background = o.background;
  m.prompt = o.prompts.empty() ? std::string() : o.prompts.front();
  if (!o.subject_token.empty()) m.subject_token = o.subject_token;
  m.out_dir = o.out;
  m.oracle = parse_oracle_kind(o.oracle);
  m.endpoint = o.endpoint;
  if (!o.target_image.empty()) m.target_image = o.target_image;
  for (const auto& f : o.frozen_masks) m.frozen_masks.emplace_back(f);
  m.inpaint_steps = o.inpaint_steps;
  return m;
}

void print_outcome(const OptimizeOutcome& run) {
  std::printf("run_dir=%s status=%s steps=%d", run.run_dir.string().c_str(),
              to_string(run.result.status), run.result.steps_completed);
  if (run.final_loss) std::printf(" final_loss=%.6g", *run.final_loss);
  std::printf(" area_fraction=%.4f inpaint_area_fraction=%.4f", run.area_fraction,
              run.inpaint_area_fraction);
  if (run.iou_vs_reference) std::printf(" iou=%.4f", *run.iou_vs_reference);
  std::printf("\n");
  if (!run.ok()) std::fprintf(stderr, "error: %s\n", run.result.error.c_str());
}

RunHooks progress_hooks(int iterations) {
  RunHooks hooks;
  const int every = std::max(1, iterations / 10);
  hooks.on_step = [every](const TraceRow& row) {
    if (row.step % every == 0) {
      std::fprintf(stderr, "step %d lr_blob=%.4g", row.step, row.lr_blob);
      if (row.loss) std::fprintf(stderr, " loss=%.6g", *row.loss);
      std::fprintf(stderr, "\n");
    }
  };
  return hooks;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("cannot parse sweep value '" + item + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blob-chain semantic mask optimization and placement"};
  app.require_subcommand(1);

  CommonOptions optimize_opts;
  auto* optimize = app.add_subcommand("optimize", "Optimize a semantic mask for one background");
  add_common(*optimize, optimize_opts);

  CommonOptions place_opts;
  auto* place = app.add_subcommand("place", "Optimize, post-process and inpaint via the service");
  add_common(*place, place_opts);

  CommonOptions scene_opts;
  std::string subject_mask;
  auto* scene = app.add_subcommand("hallucinate-scene", "Repaint everything outside a subject mask");
  add_common(*scene, scene_opts);
  scene->add_option("--mask", subject_mask, "Subject mask PNG (nonzero = subject)")->required();

  CommonOptions sweep_opts;
  std::string axis;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "Ablation sweep over scale, blobs or dilation");
  add_common(*sweep, sweep_opts);
  sweep->add_option("--axis", axis, "scale | blobs | dilation")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();

  std::string run_dir;
  std::string sheet_out;
  auto* progression = app.add_subcommand("progression", "Tile a run's snapshots into a sheet");
  progression->add_option("--run-dir", run_dir, "Run directory")->required();
  progression->add_option("--out", sheet_out, "Output PNG (default <run-dir>/progression.png)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*optimize) {
      const RunManifest m = build_manifest(optimize_opts);
      const OptimizeOutcome run = cmd_optimize(m, progress_hooks(m.config.train.iterations));
      print_outcome(run);
      return exit_code(run.result.status);
    }
    if (*place) {
      const RunManifest m = build_manifest(place_opts);
      const PlaceOutcome out = cmd_place(m, place_opts.prompts);
      for (const auto& run : out.runs) print_outcome(run);
      if (!out.runs.empty() && !out.runs.back().ok()) return exit_code(out.runs.back().result.status);
      std::printf("placed=%s\n", (m.out_dir / "placed.png").string().c_str());
      return kExitOk;
    }
    if (*scene) {
      const RunManifest m = build_manifest(scene_opts);
      cmd_hallucinate_scene(m, subject_mask);
      std::printf("scene=%s\n", (m.out_dir / "scene.png").string().c_str());
      return kExitOk;
    }
    if (*sweep) {
      const RunManifest m = build_manifest(sweep_opts);
      const SweepOutcome out = cmd_sweep(m, axis, parse_values(values));
      for (const auto& row : out.rows) {
        std::printf("%s=%g blobs=%d scale=%g dilation=%d area_fraction=%.4f", axis.c_str(),
                    row.value, row.blobs, row.scale, row.dilation, row.area_fraction);
        if (row.iou_vs_reference) std::printf(" iou=%.4f", *row.iou_vs_reference);
        std::printf(" status=%s\n", row.status.c_str());
      }
      return kExitOk;
    }
    if (*progression) {
      std::optional<std::filesystem::path> out;
      if (!sheet_out.empty()) out = sheet_out;
      const Image8 sheet = cmd_progression(run_dir, out);
      std::printf("sheet=%dx%d\n", sheet.width, sheet.height);
      return kExitOk;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "%s error: %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
