#include "victr/eval/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>

#include "victr/errors.hpp"
#include "victr/head/head.hpp"
#include "victr/numerics/optim.hpp"
#include "victr/numerics/rng.hpp"
#include "victr/util/parse.hpp"

namespace victr {

namespace {

constexpr double kMinTemperature = 1e-2;

void add_into(HeadParams& total, HeadParams& part) {
  std::vector<Tensor*> dst;
  visit_params(total, [&](const std::string&, Tensor& t) { dst.push_back(&t); });
  std::size_t i = 0;
  visit_params(part, [&](const std::string&, Tensor& t) {
    auto out = dst[i++]->values();
    auto in = t.values();
    for (std::size_t j = 0; j < in.size(); ++j) out[j] += in[j];
    t.fill(0.0);
  });
}

void scale_all(HeadParams& p, double s) {
  visit_params(p, [&](const std::string&, Tensor& t) {
    for (auto& v : t.values()) v *= s;
  });
}

void check_grads(const HeadParams& g, std::size_t step) {
  visit_params(g, [&](const std::string& name, const Tensor& t) {
    try {
      t.check_finite(name);
    } catch (const NonFiniteError& e) {
      throw DivergenceError("step " + std::to_string(step) + ": gradient " + e.what());
    }
  });
}

// Deterministic batch stream: a fresh shuffle of all indices per epoch.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, Rng rng) : rng_(rng), order_(n) {}

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (pos_ == order_.size()) refill();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void refill() {
    std::iota(order_.begin(), order_.end(), 0);
    Rng epoch = rng_.fork(epoch_++);
    epoch.shuffle(std::span<std::size_t>(order_));
    pos_ = 0;
  }

  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::uint64_t epoch_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(lr_min > 0.0) || !(lr_max >= lr_min)) throw ConfigError("need train.lr_max >= train.lr_min > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (!(aux_weight >= 0.0)) throw ConfigError("train.aux_weight must be >= 0");
  if (threads == 0) throw ConfigError("train.threads must be positive");
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("VICTR_THREADS")) {
    const auto n = parse_size(env, "VICTR_THREADS");
    return n == 0 ? 1 : n;
  }
  return 1;
}

TrainResult train(const HeadConfig& config, HeadParams init, const BundleCollection& data,
                  const TrainConfig& cfg, const EvalHook& eval) {
  cfg.validate();
  config.validate();
  data.validate();
  if (data.items.empty()) throw ShapeError("training set is empty");
  for (const auto& b : data.items) check_inputs(config, *b.text, b.frames);

  TrainResult result;
  result.params = std::move(init);
  if (cfg.steps == 0) {
    if (eval) result.eval_trace.push_back({0, eval(0, result.params)});
    return result;
  }

  HeadParams grads = zeros_like(result.params);
  auto refs = param_refs(result.params, grads);
  AdamWConfig opt_cfg;
  opt_cfg.lr_max = cfg.lr_max;
  opt_cfg.lr_min = cfg.lr_min;
  opt_cfg.total_steps = cfg.steps;
  opt_cfg.weight_decay = cfg.weight_decay;
  auto state = make_optimizer_state(refs, opt_cfg);

  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, cfg.batch_size));
  std::vector<HeadParams> slots(workers, zeros_like(result.params));
  std::vector<double> slot_loss(workers, 0.0);
  BatchSampler sampler(data.items.size(), Rng(cfg.seed).fork(7));
  result.loss_trace.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto batch = sampler.next(cfg.batch_size);
    double loss_sum = 0.0;
    // Items are processed in waves of `workers`; each lands in its own slot
    // and slots are summed in item order, so the result is independent of
    // the worker count.
    for (std::size_t begin = 0; begin < batch.size(); begin += workers) {
      const std::size_t count = std::min(workers, batch.size() - begin);
      auto run = [&](std::size_t w) {
        const auto& video = data.items[batch[begin + w]];
        slot_loss[w] = loss_and_grad(config, result.params, video, data.mode, cfg.aux_weight, slots[w]).loss;
      };
      try {
        if (count == 1) {
          run(0);
        } else {
          std::vector<std::jthread> pool;
          std::vector<std::exception_ptr> errors(count);
          for (std::size_t w = 0; w < count; ++w) {
            pool.emplace_back([&, w] {
              try {
                run(w);
              } catch (...) {
                errors[w] = std::current_exception();
              }
            });
          }
          pool.clear();
          for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
          }
        }
      } catch (const NonFiniteError& e) {
        throw DivergenceError("step " + std::to_string(step) + ": " + e.what());
      }
      for (std::size_t w = 0; w < count; ++w) {
        loss_sum += slot_loss[w];
        add_into(grads, slots[w]);
      }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    const double loss = loss_sum * inv;
    if (!std::isfinite(loss)) throw DivergenceError("step " + std::to_string(step) + ": loss is not finite");
    result.loss_trace.push_back(loss);
    scale_all(grads, inv);
    check_grads(grads, step);
    adam_step(refs, state);
    visit_params(grads, [](const std::string&, Tensor& t) { t.fill(0.0); });
    auto& tau = result.params.temperature[0];
    tau = std::clamp(tau, kMinTemperature, kMaxTemperature);

    const bool last = step + 1 == cfg.steps;
    if (eval && (last || (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0))) {
      result.eval_trace.push_back({step + 1, eval(step + 1, result.params)});
    }
  }
  return result;
}

TrainResult train(const HeadConfig& config, const BundleCollection& data, const TrainConfig& cfg,
                  const EvalHook& eval) {
  return train(config, init_head_params(config, Rng(cfg.seed)), data, cfg, eval);
}

}  // namespace victr
