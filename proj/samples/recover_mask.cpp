// Recovers a known blob-chain mask with the synthetic mask-recovery oracle and
// prints the loss trend and final IoU.
//
//   ./recover_mask [iterations]

#include <cstdio>
#include <cstdlib>

#include "blobmask/optimizer.hpp"
#include "blobmask/postprocess.hpp"

int main(int argc, char** argv) {
  using namespace blobmask;
  const int iterations = argc > 1 ? std::atoi(argv[1]) : 500;

  const GridSpec grid{64, 64};
  ImageBuffer bg(grid);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      bg(x, y, 0) = 0.2 + 0.3 * x / (grid.width - 1);
      bg(x, y, 1) = 0.3;
      bg(x, y, 2) = 0.5 - 0.3 * y / (grid.height - 1);
    }
  }

  BlobParams target = make_chain(5, {0.45, 0.35});
  for (double& t : target.theta) t = 0.3;
  const MaskField target_mask = render_mask(target, grid);
  MaskRecoveryOracle oracle(target_mask, bg, {1.0, 0.1, 0.1});

  BlobParams init = make_chain(5, {0.53, 0.41});

  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.resolution = grid;
  cfg.lr_fg = 0.01;
  cfg.snapshot_every = iterations;

  RunHooks hooks;
  hooks.on_step = [&](const TraceRow& row) {
    if (row.step % 50 == 0) std::printf("step %4d  loss %.6g\n", row.step, *row.loss);
  };
  const OptimizationResult result = run_optimization(bg, init, oracle, cfg, hooks);
  if (!result.ok()) {
    std::fprintf(stderr, "run stopped: %s\n", result.error.c_str());
    return 1;
  }

  const double score = iou(binarize(result.mask, kDefaultThreshold),
                           binarize(target_mask, kDefaultThreshold));
  std::printf("x1 = (%.4f, %.4f), target (%.4f, %.4f)\n", result.params.x1.x, result.params.x1.y,
              target.x1.x, target.x1.y);
  std::printf("binarized IoU vs target: %.4f\n", score);
  return 0;
}
