#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blobmask/compositor.hpp"
#include "blobmask/errors.hpp"
#include "blobmask/guidance.hpp"
#include "blobmask/renderer.hpp"

namespace blobmask {

struct TrainConfig {
  int iterations = 1000;
  double lr_fg = 0.2;
  double lr_blob = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double guidance_scale = 200.0;
  GridSpec resolution{512, 512};
  int snapshot_every = 100;
  std::uint64_t base_seed = 0;
  double overlap_weight = 0.0;
  std::vector<MaskField> frozen_masks;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.iterations < 1) throw ValidationError("iterations must be >= 1");
  if (!(cfg.lr_fg > 0.0) || !(cfg.lr_blob > 0.0)) throw ValidationError("learning rates must be > 0");
  if (!(cfg.overlap_weight >= 0.0)) throw ValidationError("overlap weight must be >= 0");
  if (cfg.snapshot_every < 1) throw ValidationError("snapshot_every must be >= 1");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw ValidationError("betas must lie in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw ValidationError("eps must be > 0");
  if (!(cfg.weight_decay >= 0.0)) throw ValidationError("weight decay must be >= 0");
  validate(cfg.resolution);
  for (const auto& f : cfg.frozen_masks) {
    if (f.grid() != cfg.resolution) {
      throw ValidationError("frozen mask is " + describe(f.grid()) + ", run resolution is " +
                            describe(cfg.resolution));
    }
  }
}

/// Half-cosine decay from lr_max at step 0 towards 0 at total_steps.
inline double cosine_lr(int step, int total_steps, double lr_max) {
  if (total_steps < 1 || step < 0 || step >= total_steps) {
    throw ValidationError("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                          std::to_string(total_steps) + ")");
  }
  // 0.5 (1 + cos 2u) = cos^2 u; the sine branch avoids cancellation near the end.
  if (2 * step <= total_steps) {
    const double c = std::cos(std::numbers::pi * step / (2.0 * total_steps));
    return lr_max * c * c;
  }
  const double s = std::sin(std::numbers::pi * (total_steps - step) / (2.0 * total_steps));
  return lr_max * s * s;
}

/// Decoupled-weight-decay Adam over one flat parameter group.
class AdamW {
 public:
  AdamW(std::size_t size, double beta1, double beta2, double eps, double weight_decay)
      : m_(size, 0.0), v_(size, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {}

  /// Applies one update in place. `names`, when given, labels each element in
  /// the diagnostic raised for a non-finite gradient.
  void step(std::span<double> params, std::span<const double> grads, double lr,
            std::string_view group, std::span<const std::string> names = {}) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
      throw ValidationError("adamw: group '" + std::string(group) + "' expects " +
                            std::to_string(m_.size()) + " values");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!std::isfinite(grads[i])) {
        std::string where = std::string(group);
        where += names.empty() ? "[" + std::to_string(i) + "]" : "." + names[i];
        throw NumericError("non-finite gradient for parameter " + where);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grads[i];
      if (wd_ != 0.0) params[i] -= lr * wd_ * params[i];
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

  std::int64_t steps() const { return t_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  double beta1_;
  double beta2_;
  double eps_;
  double wd_;
  std::int64_t t_ = 0;
};

struct OverlapPenalty {
  double loss = 0.0;
  MaskField grad;
};

/// lambda * sum_f mean(current * f), pushing the current mask away from masks
/// that are already placed.
inline OverlapPenalty overlap_penalty(const MaskField& current, std::span<const MaskField> frozen,
                                      double weight) {
  if (!(weight >= 0.0)) throw ValidationError("overlap weight must be >= 0");
  OverlapPenalty out{0.0, MaskField(current.grid())};
  const double n = static_cast<double>(current.size());
  for (const auto& f : frozen) {
    require_same_grid(current, f, "overlap_penalty");
    out.loss += weight * dot(current, f) / n;
    for (std::size_t i = 0; i < f.size(); ++i) out.grad[i] += weight * f[i] / n;
  }
  return out;
}

struct TrainState {
  BlobParams params;
  ImageBuffer foreground;
  AdamW fg_opt;
  AdamW blob_opt;
  int step = 0;

  TrainState(BlobParams init, ImageBuffer fg, const TrainConfig& cfg)
      : params(std::move(init)),
        foreground(std::move(fg)),
        fg_opt(foreground.size(), cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay),
        blob_opt(pack_learnable(params).size(), cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay) {}
};

struct Snapshot {
  int step = 0;
  MaskField mask;
  ImageBuffer composite;
};

struct TraceRow {
  int step = 0;
  double lr_blob = 0.0;
  double lr_fg = 0.0;
  std::optional<double> loss;
};

enum class RunStatus { completed, transport_error, protocol_error, numeric_error };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::transport_error: return "transport_error";
    case RunStatus::protocol_error: return "protocol_error";
    case RunStatus::numeric_error: return "numeric_error";
  }
  return "unknown";
}

struct OptimizationResult {
  BlobParams params;
  ImageBuffer foreground;
  MaskField mask;
  std::vector<TraceRow> trace;
  std::vector<Snapshot> snapshots;
  RunStatus status = RunStatus::completed;
  std::string error;
  int steps_completed = 0;

  bool ok() const { return status == RunStatus::completed; }
  bool partial() const { return !ok(); }
};

struct RunHooks {
  std::function<void(const TraceRow&)> on_step;
  bool keep_snapshots = true;
};

namespace detail {

inline bool same_fixed_params(const BlobParams& a, const BlobParams& b) {
  auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
  return a.k == b.k && bits(a.s) == bits(b.s) && bits(a.a) == bits(b.a) && bits(a.r) == bits(b.r) &&
         bits(a.c) == bits(b.c);
}

}  // namespace detail

/// Joint optimization of the blob chain and the foreground image.
///
/// Each iteration renders the mask, composites the foreground over `bg`,
/// queries the oracle once, backpropagates through the compositor (plus the
/// overlap penalty) and the renderer, then takes one AdamW step on both
/// parameter groups with cosine-decayed learning rates. Oracle failures and
/// non-finite values stop the loop; the state reached so far is returned with
/// the failure recorded in `status`.
inline OptimizationResult run_optimization(const ImageBuffer& bg, const BlobParams& init,
                                           GuidanceOracle& oracle, const TrainConfig& cfg,
                                           const RunHooks& hooks = {}) {
  validate(cfg);
  validate(init);
  if (bg.grid() != cfg.resolution) {
    throw ValidationError("background is " + describe(bg.grid()) + " but the run expects " +
                          describe(cfg.resolution));
  }

  const GridSpec grid = cfg.resolution;
  TrainState state(init, bg, cfg);
  const auto blob_names = learnable_names(init);
  OptimizationResult result;

  auto take_snapshot = [&](int step, const MaskField& mask, const ImageBuffer& comp) {
    if (!detail::same_fixed_params(state.params, init)) {
      throw std::logic_error("fixed blob parameters changed during optimization");
    }
    if (hooks.keep_snapshots) result.snapshots.push_back({step, mask, comp});
  };

  auto fail = [&](RunStatus status, const std::string& msg) {
    result.status = status;
    result.error = msg;
  };

  for (int t = 0; t < cfg.iterations; ++t) {
    const MaskField mask = render_mask(state.params, grid);
    const ImageBuffer comp = composite(mask, state.foreground, bg);
    if (t % cfg.snapshot_every == 0) take_snapshot(t, mask, comp);

    GuidanceOutput guidance;
    try {
      guidance = oracle.evaluate(comp, t, cfg.base_seed);
    } catch (const TransportError& e) {
      fail(RunStatus::transport_error, e.what());
      break;
    } catch (const ProtocolError& e) {
      fail(RunStatus::protocol_error, e.what());
      break;
    }
    if (guidance.grad.grid() != grid) {
      fail(RunStatus::protocol_error, "oracle gradient is " + describe(guidance.grad.grid()) +
                                          ", expected " + describe(grid));
      break;
    }
    if (!all_finite(guidance.grad)) {
      fail(RunStatus::numeric_error, "oracle returned a non-finite gradient at step " +
                                         std::to_string(t));
      break;
    }

    CompositeGradients cg = composite_backward(mask, state.foreground, bg, guidance.grad);
    std::optional<double> loss = guidance.loss;
    if (!cfg.frozen_masks.empty() && cfg.overlap_weight > 0.0) {
      const OverlapPenalty pen = overlap_penalty(mask, cfg.frozen_masks, cfg.overlap_weight);
      for (std::size_t i = 0; i < pen.grad.size(); ++i) cg.grad_mask[i] += pen.grad[i];
      if (loss) *loss += pen.loss;
    }
    if (loss && !std::isfinite(*loss)) {
      fail(RunStatus::numeric_error, "non-finite loss at step " + std::to_string(t));
      break;
    }

    const auto blob_grad = mask_backward(state.params, grid, cg.grad_mask).flatten();
    const double lr_blob = cosine_lr(t, cfg.iterations, cfg.lr_blob);
    const double lr_fg = cosine_lr(t, cfg.iterations, cfg.lr_fg);
    try {
      auto learnable = pack_learnable(state.params);
      state.blob_opt.step(learnable, blob_grad, lr_blob, "blob", blob_names);
      state.fg_opt.step(state.foreground.values(), cg.grad_fg.values(), lr_fg, "foreground");
      unpack_learnable(state.params, learnable);
    } catch (const NumericError& e) {
      fail(RunStatus::numeric_error, std::string(e.what()) + " at step " + std::to_string(t));
      break;
    }
    state.step = t + 1;

    const TraceRow row{t, lr_blob, lr_fg, loss};
    result.trace.push_back(row);
    if (hooks.on_step) hooks.on_step(row);
  }

  result.steps_completed = state.step;
  result.mask = render_mask(state.params, grid);
  if (result.ok()) {
    take_snapshot(cfg.iterations, result.mask, composite(result.mask, state.foreground, bg));
  }
  result.params = std::move(state.params);
  result.foreground = std::move(state.foreground);
  return result;
}

}  // namespace blobmask
