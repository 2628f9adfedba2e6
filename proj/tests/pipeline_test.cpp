#include "blobmask/pipeline.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "support/fake_service.hpp"

namespace blobmask {
namespace {

namespace fs = std::filesystem;
using testing::FakeService;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("blobmask_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes a W x H gradient background and returns its path.
fs::path write_background(const fs::path& dir, int w, int h) {
  Image8 img{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* px = img.pixels.data() + (static_cast<std::size_t>(y) * w + x) * 3;
      px[0] = static_cast<std::uint8_t>(50 + 120 * x / std::max(1, w - 1));
      px[1] = 80;
      px[2] = static_cast<std::uint8_t>(130 - 70 * y / std::max(1, h - 1));
    }
  }
  const fs::path path = dir / "background.png";
  write_png(path, img);
  return path;
}

RunManifest mock_manifest(const fs::path& dir, int resolution, int iterations) {
  RunManifest m;
  m.background = write_background(dir, resolution, resolution);
  m.prompt = "A person sitting on a sofa";
  m.out_dir = dir / "run";
  m.oracle = OracleKind::mock_recovery;
  m.config.train.iterations = iterations;
  m.config.train.resolution = {resolution, resolution};
  m.config.train.lr_fg = 0.01;
  m.config.train.snapshot_every = std::max(1, iterations / 4);
  m.retry = testing::fast_retry();
  return m;
}

struct CliResult {
  int code = -1;
  std::string output;
};

std::string blobplace_bin() {
  const char* env = std::getenv("BLOBPLACE_BIN");
  return env ? env : BLOBPLACE_BIN_PATH;
}

CliResult run_cli(const std::string& args) {
  const std::string cmd = blobplace_bin() + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path data_dir() {
  const char* env = std::getenv("BLOBMASK_DATA");
  return env ? fs::path(env) : fs::path(BLOBMASK_DATA_DIR);
}

TEST(Manifest, Validation) {
  const fs::path dir = fresh_dir("manifest");
  RunManifest m = mock_manifest(dir, 16, 5);
  EXPECT_NO_THROW(validate(m));
  RunManifest missing = m;
  missing.background = dir / "nope.png";
  try {
    validate(missing);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("background not found"), std::string::npos);
  }
  RunManifest no_prompt = m;
  no_prompt.prompt.clear();
  EXPECT_THROW(validate(no_prompt), ValidationError);
  RunManifest remote = m;
  remote.oracle = OracleKind::remote;
  EXPECT_THROW(validate(remote), ValidationError);
  RunManifest zero = m;
  zero.config.train.iterations = 0;
  EXPECT_THROW(validate(zero), ValidationError);
}

TEST(Manifest, SubjectTokenSubstitution) {
  RunManifest m;
  m.prompt = "A {subject} person sitting on a sofa";
  EXPECT_EQ(inpaint_prompt(m), m.prompt);
  m.subject_token = "<sks>";
  EXPECT_EQ(inpaint_prompt(m), "A <sks> person sitting on a sofa");
}

TEST(OracleKind, Parse) {
  EXPECT_EQ(parse_oracle_kind("mock-target"), OracleKind::mock_target);
  EXPECT_EQ(parse_oracle_kind("mock-recovery"), OracleKind::mock_recovery);
  EXPECT_EQ(parse_oracle_kind("remote"), OracleKind::remote);
  EXPECT_THROW(parse_oracle_kind("sds"), ValidationError);
}

TEST(CmdOptimize, MockRecoveryWritesRunDirectory) {
  const fs::path dir = fresh_dir("optimize");
  const RunManifest m = mock_manifest(dir, 64, 500);
  const OptimizeOutcome run = cmd_optimize(m);
  ASSERT_TRUE(run.ok()) << run.result.error;
  ASSERT_TRUE(run.iou_vs_reference.has_value());
  EXPECT_GE(*run.iou_vs_reference, 0.9);
  for (const char* name : {"config.json", "trace.csv", "params.json", "summary.json", "mask_soft.mskf",
                           "mask_soft.png", "mask_binary.png", "foreground.png", "composite.png",
                           "step_0_mask.png", "step_0_composite.png", "step_500_mask.png"}) {
    EXPECT_TRUE(fs::is_regular_file(m.out_dir / name)) << name;
  }
  const json params = read_json_file(m.out_dir / "params.json");
  EXPECT_EQ(params.at("k"), 5);
  EXPECT_EQ(params.at("s"), 0.6);
  const auto dump = read_file(m.out_dir / "mask_soft.mskf");
  EXPECT_EQ(decode_mask_dump(dump).grid(), (GridSpec{64, 64}));
  const auto trace = slurp(m.out_dir / "trace.csv");
  EXPECT_EQ(trace.rfind("step,lr_blob,lr_fg,loss\n", 0), 0u);
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 501);
  const json echo = read_json_file(m.out_dir / "config.json");
  EXPECT_EQ(echo.at("train").at("iterations"), 500);
  EXPECT_EQ(echo.at("manifest").at("prompt"), m.prompt);
}

TEST(CmdOptimize, BinaryMaskIsInBackgroundFrame) {
  const fs::path dir = fresh_dir("frame");
  RunManifest m = mock_manifest(dir, 32, 10);
  Image8 wide{80, 40, 3, std::vector<std::uint8_t>(80 * 40 * 3, 120)};
  write_png(m.background, wide);
  const OptimizeOutcome run = cmd_optimize(m);
  ASSERT_TRUE(run.ok());
  EXPECT_EQ(run.output_mask.grid(), (GridSpec{80, 40}));
  const Image8 written = read_png(m.out_dir / "mask_binary.png", 1);
  EXPECT_EQ(written.width, 80);
  EXPECT_EQ(written.height, 40);
  EXPECT_EQ(to_binary_mask(written), run.output_mask);
}

TEST(CmdOptimize, MissingBackground) {
  const fs::path dir = fresh_dir("missing");
  RunManifest m = mock_manifest(dir, 16, 5);
  m.background = dir / "absent.png";
  EXPECT_THROW(cmd_optimize(m), ValidationError);
}

TEST(CmdOptimize, EchoServerRunsAreIdentical) {
  FakeService service;
  service.set_sds_handler([](const wire::SdsRequest& req) {
    wire::SdsResponse resp{req.image, 0.0};
    double total = 0.0;
    for (float& v : resp.grad.data) {
      total += 0.5 * static_cast<double>(v) * v;
      v = -v;
    }
    resp.loss = total / resp.grad.data.size() + static_cast<double>(req.seed % 7);
    return resp;
  });
  const fs::path dir = fresh_dir("echo");
  RunManifest m = mock_manifest(dir, 24, 20);
  m.oracle = OracleKind::remote;
  m.endpoint = service.url();
  m.config.train.base_seed = 1234;
  m.out_dir = dir / "a";
  ASSERT_TRUE(cmd_optimize(m).ok());
  m.out_dir = dir / "b";
  ASSERT_TRUE(cmd_optimize(m).ok());
  const std::string a = slurp(dir / "a" / "trace.csv");
  EXPECT_EQ(a, slurp(dir / "b" / "trace.csv"));
  EXPECT_EQ(slurp(dir / "a" / "mask_soft.mskf"), slurp(dir / "b" / "mask_soft.mskf"));
  EXPECT_EQ(service.sds_calls(), 40);
  const auto reqs = service.sds_requests();
  EXPECT_EQ(reqs[5].seed, 1234u ^ 5u);
  EXPECT_EQ(reqs[5].guidance_scale, 200.0);
}

TEST(CmdPlace, EchoInpaintReturnsBackground) {
  FakeService service;
  const fs::path dir = fresh_dir("place");
  RunManifest m = mock_manifest(dir, 32, 30);
  Image8 bg{48, 32, 3, std::vector<std::uint8_t>(48 * 32 * 3)};
  for (std::size_t i = 0; i < bg.pixels.size(); ++i) bg.pixels[i] = static_cast<std::uint8_t>(i * 7);
  write_png(m.background, bg);
  const std::string before = slurp(m.background);
  m.endpoint = service.url();
  m.prompt = "A {subject} person sitting on a sofa";
  m.subject_token = "sks";
  const PlaceOutcome out = cmd_place(m);
  ASSERT_EQ(out.runs.size(), 1u);
  ASSERT_TRUE(out.placed.has_value());
  EXPECT_EQ(*out.placed, bg);
  EXPECT_EQ(read_png(m.out_dir / "placed.png"), bg);
  EXPECT_EQ(slurp(m.background), before);
  const auto reqs = service.inpaint_requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0].prompt, "A sks person sitting on a sofa");
  EXPECT_EQ(reqs[0].image, bg);
  EXPECT_EQ(to_binary_mask(reqs[0].mask), out.runs[0].output_mask);
}

TEST(CmdPlace, RequiresEndpoint) {
  const fs::path dir = fresh_dir("place_noendpoint");
  const RunManifest m = mock_manifest(dir, 16, 5);
  EXPECT_THROW(cmd_place(m), ValidationError);
}

TEST(CmdPlace, EmptyMaskIsNotSent) {
  FakeService service;
  BinaryMask empty({4, 4});
  Image8 img{4, 4, 3, std::vector<std::uint8_t>(48, 0)};
  try {
    request_inpaint(service.url(), img, empty, "p", 0, 10, testing::fast_retry());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("empty mask"), std::string::npos);
  }
  EXPECT_EQ(service.inpaint_calls(), 0);
}

TEST(CmdPlace, ServiceDownKeepsArtifacts) {
  const int port = testing::unused_port();
  const fs::path dir = fresh_dir("place_down");
  RunManifest m = mock_manifest(dir, 16, 5);
  m.endpoint = "http://127.0.0.1:" + std::to_string(port);
  EXPECT_THROW(cmd_place(m), TransportError);
  EXPECT_TRUE(fs::is_regular_file(m.out_dir / "mask_binary.png"));
}

OracleFactory disjoint_targets(const RunConfig& base) {
  return [base](int person, const RunConfig& cfg, const Scene& scene) {
    BlobParams target = base.blob;
    target.x1 = person == 0 ? Vec2{0.3, 0.35} : Vec2{0.7, 0.35};
    OracleBundle b;
    b.reference_mask = render_mask(target, cfg.train.resolution);
    b.oracle = std::make_unique<MaskRecoveryOracle>(*b.reference_mask, scene.working, cfg.mock.fill);
    return b;
  };
}

TEST(PlaceSequential, TwoPersonsDoNotOverlap) {
  FakeService service;
  const fs::path dir = fresh_dir("two");
  RunManifest m = mock_manifest(dir, 64, 400);
  m.endpoint = service.url();
  const std::vector<std::string> prompts{"A person sitting on a sofa", "A person standing in a room"};
  const PlaceOutcome out = place_sequential(m, prompts, disjoint_targets(m.config), true);
  ASSERT_EQ(out.runs.size(), 2u);
  ASSERT_TRUE(out.runs[1].ok());
  EXPECT_LE(iou(out.runs[0].binary, out.runs[1].binary), 0.05);
  for (const auto& run : out.runs) EXPECT_GE(run.iou_vs_reference.value_or(0.0), 0.9);
  EXPECT_TRUE(fs::is_directory(m.out_dir / "person_1"));
  EXPECT_TRUE(fs::is_directory(m.out_dir / "person_2"));
  const json echo = read_json_file(m.out_dir / "person_2" / "config.json");
  EXPECT_EQ(echo.at("manifest").at("frozen_masks"), 1);
  EXPECT_EQ(echo.at("train").at("overlap_weight"), kSequentialOverlapWeight);
  EXPECT_EQ(service.inpaint_calls(), 2);
}

TEST(PlaceSequential, SecondRunSeesFirstMaskAsFrozen) {
  const fs::path dir = fresh_dir("frozen");
  RunManifest m = mock_manifest(dir, 32, 5);
  std::vector<int> frozen_seen;
  int calls = 0;
  OracleFactory factory = [&](int, const RunConfig& cfg, const Scene&) {
    ++calls;
    OracleBundle b;
    b.oracle = std::make_unique<ZeroOracle>();
    frozen_seen.push_back(cfg.train.overlap_weight > 0.0);
    return b;
  };
  const PlaceOutcome out = place_sequential(m, {"a", "b", "c"}, factory, false);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(frozen_seen, (std::vector<int>{0, 1, 1}));
  EXPECT_FALSE(out.placed.has_value());
  const json third = read_json_file(m.out_dir / "person_3" / "config.json");
  EXPECT_EQ(third.at("manifest").at("frozen_masks"), 2);
}

TEST(CmdHallucinateScene, KeepsSubjectRegion) {
  FakeService service;
  service.set_inpaint_handler([](const wire::InpaintRequest& req) {
    Image8 out = req.image;
    for (std::size_t i = 0; i < req.mask.pixels.size(); ++i) {
      if (req.mask.pixels[i]) out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = 7;
    }
    return out;
  });
  const fs::path dir = fresh_dir("scene");
  RunManifest m = mock_manifest(dir, 40, 5);
  m.endpoint = service.url();
  m.config.post.dilation = 1;
  BinaryMask subject({40, 40});
  for (int y = 10; y < 30; ++y) {
    for (int x = 15; x < 25; ++x) subject(x, y) = 1;
  }
  write_png(dir / "subject.png", to_image8(subject));
  const HallucinateOutcome out = cmd_hallucinate_scene(m, dir / "subject.png");
  const Image8 bg = read_png(m.background);
  EXPECT_EQ(out.subject, subject);
  EXPECT_EQ(out.repaint, complement(subject));
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * 40 + x) * 3;
      if (subject(x, y)) {
        ASSERT_EQ(out.image.pixels[i], bg.pixels[i]);
        ASSERT_EQ(out.image.pixels[i + 2], bg.pixels[i + 2]);
      } else {
        ASSERT_EQ(out.image.pixels[i], 7);
      }
    }
  }
  EXPECT_TRUE(fs::is_regular_file(m.out_dir / "scene.png"));
}

TEST(CmdHallucinateScene, RejectsFullAndEmptyMasks) {
  FakeService service;
  const fs::path dir = fresh_dir("scene_guard");
  RunManifest m = mock_manifest(dir, 16, 5);
  m.endpoint = service.url();
  BinaryMask full({16, 16});
  full.fill(1);
  write_png(dir / "full.png", to_image8(full));
  EXPECT_THROW(cmd_hallucinate_scene(m, dir / "full.png"), ValidationError);
  write_png(dir / "empty.png", to_image8(BinaryMask({16, 16})));
  EXPECT_THROW(cmd_hallucinate_scene(m, dir / "empty.png"), ValidationError);
  EXPECT_EQ(service.inpaint_calls(), 0);
}

TEST(CmdSweep, BlobAxisUsesPairedScales) {
  const fs::path dir = fresh_dir("sweep_blobs");
  RunManifest m = mock_manifest(dir, 24, 5);
  const SweepOutcome out = cmd_sweep(m, "blobs", {1, 3, 5, 7});
  ASSERT_EQ(out.rows.size(), 4u);
  const double scales[] = {3.0, 1.0, 0.6, 0.43};
  const int blobs[] = {1, 3, 5, 7};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(out.rows[i].blobs, blobs[i]);
    EXPECT_EQ(out.rows[i].scale, scales[i]);
    EXPECT_EQ(out.rows[i].status, "completed");
  }
  EXPECT_TRUE(fs::is_regular_file(m.out_dir / "sweep.csv"));
  EXPECT_TRUE(fs::is_directory(m.out_dir / "blobs_7"));
  const Image8 sheet = read_png(m.out_dir / "sweep_sheet.png");
  EXPECT_EQ(sheet.width, 4 * 24);
  EXPECT_EQ(sheet.height, 2 * 24);
  EXPECT_THROW(cmd_sweep(m, "blobs", {2}), ValidationError);
}

TEST(CmdSweep, RejectsEmptyValuesAndUnknownAxis) {
  const fs::path dir = fresh_dir("sweep_bad");
  const RunManifest m = mock_manifest(dir, 16, 5);
  EXPECT_THROW(cmd_sweep(m, "scale", {}), ValidationError);
  EXPECT_THROW(cmd_sweep(m, "aspect", {1.0}), ValidationError);
  EXPECT_THROW(cmd_sweep(m, "dilation", {4}), ValidationError);
}

TEST(CmdSweep, DilationAxisGrowsInpaintArea) {
  const fs::path dir = fresh_dir("sweep_dilation");
  RunManifest m = mock_manifest(dir, 64, 60);
  const SweepOutcome out = cmd_sweep(m, "dilation", {15, 45, 95});
  ASSERT_EQ(out.rows.size(), 3u);
  EXPECT_EQ(out.rows[0].area_fraction, out.rows[2].area_fraction);
  EXPECT_LE(out.rows[0].inpaint_area_fraction, out.rows[1].inpaint_area_fraction);
  EXPECT_LT(out.rows[1].inpaint_area_fraction, out.rows[2].inpaint_area_fraction);
}

TEST(CmdProgression, FiveSnapshotsMakeTwoByFive) {
  const fs::path dir = fresh_dir("progression");
  RunManifest m = mock_manifest(dir, 20, 40);
  m.config.train.snapshot_every = 10;
  ASSERT_TRUE(cmd_optimize(m).ok());
  EXPECT_EQ(snapshot_steps(m.out_dir), (std::vector<int>{0, 10, 20, 30, 40}));
  const Image8 sheet = cmd_progression(m.out_dir);
  EXPECT_EQ(sheet.width, 5 * 20);
  EXPECT_EQ(sheet.height, 2 * 20);
  EXPECT_TRUE(fs::is_regular_file(m.out_dir / "progression.png"));
  // Column order follows the step number: column 4 of the top row is step 40's mask.
  const Image8 last = as_rgb(read_png(m.out_dir / "step_40_mask.png", 1));
  const Image8 first_comp = read_png(m.out_dir / "step_0_composite.png", 3);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) {
      const std::size_t s = ((static_cast<std::size_t>(y)) * sheet.width + 80 + x) * 3;
      ASSERT_EQ(sheet.pixels[s], last.pixels[(y * 20 + x) * 3]);
      const std::size_t c = ((static_cast<std::size_t>(y) + 20) * sheet.width + x) * 3;
      ASSERT_EQ(sheet.pixels[c + 1], first_comp.pixels[(y * 20 + x) * 3 + 1]);
    }
  }
}

TEST(CmdProgression, NoSnapshotsIsAnError) {
  const fs::path dir = fresh_dir("progression_empty");
  EXPECT_THROW(cmd_progression(dir), ValidationError);
  EXPECT_THROW(cmd_progression(dir / "missing"), ValidationError);
}

TEST(TileGrid, RowMajorLayout) {
  std::vector<Image8> tiles;
  for (std::uint8_t v = 1; v <= 4; ++v) tiles.push_back(Image8{1, 1, 1, {v}});
  const Image8 sheet = tile_grid(tiles, 2, 2);
  EXPECT_EQ(sheet.pixels, (std::vector<std::uint8_t>{1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4}));
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ErrorKind::validation), 2);
  EXPECT_EQ(exit_code(ErrorKind::transport), 3);
  EXPECT_EQ(exit_code(ErrorKind::protocol), 3);
  EXPECT_EQ(exit_code(ErrorKind::numeric), 4);
  EXPECT_EQ(exit_code(ErrorKind::io), 1);
  EXPECT_EQ(exit_code(RunStatus::completed), 0);
  EXPECT_EQ(exit_code(RunStatus::transport_error), 3);
  EXPECT_EQ(exit_code(RunStatus::numeric_error), 4);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!fs::is_regular_file(blobplace_bin())) GTEST_SKIP() << "blobplace binary not found";
  }
};

TEST_F(Cli, MockRecoveryRunPrintsIou) {
  const fs::path dir = fresh_dir("cli_ok");
  const auto r = run_cli("optimize --config " + (data_dir() / "mock_recovery.json").string() +
                         " --background " + write_background(dir, 64, 64).string() +
                         " --prompt \"A person sitting on a sofa\" --out " + (dir / "run").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto pos = r.output.find("iou=");
  ASSERT_NE(pos, std::string::npos) << r.output;
  EXPECT_GE(std::stod(r.output.substr(pos + 4)), 0.9) << r.output;
}

TEST_F(Cli, MissingBackgroundExitsWithValidationCode) {
  const fs::path dir = fresh_dir("cli_missing");
  const auto r = run_cli("optimize --background " + (dir / "none.png").string() + " --prompt p --out " +
                         (dir / "run").string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("background not found"), std::string::npos) << r.output;
}

TEST_F(Cli, ZeroIterationsRejected) {
  const fs::path dir = fresh_dir("cli_iters");
  const auto r = run_cli("optimize --iters 0 --background " + write_background(dir, 8, 8).string() +
                         " --prompt p --out " + (dir / "run").string());
  EXPECT_EQ(r.code, 2) << r.output;
}

TEST_F(Cli, UnknownFlagAndAxis) {
  const fs::path dir = fresh_dir("cli_axis");
  EXPECT_EQ(run_cli("optimize --bogus 1 --out x").code, 2);
  const auto r = run_cli("sweep --axis aspect --values 1,2 --background " + write_background(dir, 8, 8).string() +
                         " --prompt p --out " + (dir / "run").string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("unknown sweep axis"), std::string::npos);
}

TEST_F(Cli, DeadEndpointExitsWithTransportCode) {
  const int port = testing::unused_port();
  const fs::path dir = fresh_dir("cli_dead");
  const auto r = run_cli("optimize --oracle remote --endpoint http://127.0.0.1:" + std::to_string(port) +
                         " --iters 2 --resolution 8 --background " + write_background(dir, 8, 8).string() +
                         " --prompt p --out " + (dir / "run").string());
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST_F(Cli, ProgressionWithoutSnapshots) {
  const fs::path dir = fresh_dir("cli_progression");
  EXPECT_EQ(run_cli("progression --run-dir " + dir.string()).code, 2);
}

}  // namespace
}  // namespace blobmask
