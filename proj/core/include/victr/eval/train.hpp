#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "victr/data/bundle.hpp"
#include "victr/head/config.hpp"
#include "victr/head/params.hpp"

namespace victr {

struct TrainConfig {
  std::size_t steps = 300;
  std::size_t batch_size = 32;
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  double weight_decay = 0.01;
  double aux_weight = 0.1;
  std::uint64_t seed = 0;
  // Held-out evaluation every `eval_every` steps (0 = only at the end).
  std::size_t eval_every = 0;
  // Videos processed concurrently within a batch. Results do not depend on it.
  std::size_t threads = 1;

  // Throws ConfigError.
  void validate() const;
};

struct EvalPoint {
  std::size_t step = 0;
  double metric = 0.0;
};

struct TrainResult {
  HeadParams params;
  // Mean batch loss of every step, in order.
  std::vector<double> loss_trace;
  std::vector<EvalPoint> eval_trace;
};

// Called with (step, params) at each eval point; returns the metric.
using EvalHook = std::function<double(std::size_t step, const HeadParams&)>;

/// Seeded AdamW training with a cosine schedule. Batches are drawn from a
/// per-epoch shuffle. The temperature is clamped to [0.01, 100] after each step.
/// Throws DivergenceError if a loss or gradient becomes non-finite.
TrainResult train(const HeadConfig& config, HeadParams init, const BundleCollection& data,
                  const TrainConfig& cfg, const EvalHook& eval = {});

// Same, starting from init_head_params(config, Rng(cfg.seed)).
TrainResult train(const HeadConfig& config, const BundleCollection& data, const TrainConfig& cfg,
                  const EvalHook& eval = {});

// Thread count from VICTR_THREADS, else 1.
std::size_t default_thread_count();

}  // namespace victr
