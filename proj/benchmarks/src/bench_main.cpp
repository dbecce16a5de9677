#include <benchmark/benchmark.h>

#include "victr/data/bundle_file.hpp"
#include "victr/data/synthetic.hpp"
#include "victr/head/flops.hpp"
#include "victr/head/head.hpp"
#include "victr/numerics/nn.hpp"

namespace {

using namespace victr;

struct Desk {
  BundleCollection data;
  HeadConfig config;
  HeadParams params;
};

Desk desk(std::size_t layers, AttentionMode attention) {
  Desk d;
  d.data = generate_synthetic(SyntheticSpec{});
  HeadConfig h;
  h.embed_dim = 32;
  h.num_layers = layers;
  h.num_heads = 4;
  h.proj_dim = 32;
  h.attention_mode = attention;
  d.config = config_for_bank(h, *d.data.text);
  d.params = init_head_params(d.config, Rng(0));
  return d;
}

void BM_Predict(benchmark::State& state) {
  const auto d = desk(static_cast<std::size_t>(state.range(0)), AttentionMode::divided);
  const auto& video = d.data.items.front();
  for (auto _ : state) benchmark::DoNotOptimize(predict(d.config, d.params, video));
}
BENCHMARK(BM_Predict)->Arg(0)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_LossAndGrad(benchmark::State& state) {
  const auto d = desk(2, state.range(0) ? AttentionMode::joint : AttentionMode::divided);
  const auto& video = d.data.items.front();
  auto grads = zeros_like(d.params);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_grad(d.config, d.params, video, d.data.mode, 0.1, grads));
  }
  state.SetLabel(state.range(0) ? "joint" : "divided");
}
BENCHMARK(BM_LossAndGrad)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SelfAttention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor x({n, 32});
  for (auto& v : x.values()) v = rng.normal();
  const auto w = identity_attention(32);
  for (auto _ : state) benchmark::DoNotOptimize(multi_head_self_attention(x, w, 4));
}
BENCHMARK(BM_SelfAttention)->RangeMultiplier(4)->Range(4, 256);

void BM_BundleRoundTrip(benchmark::State& state) {
  const auto data = generate_synthetic(SyntheticSpec{});
  std::size_t bytes = 0;
  for (auto _ : state) {
    const auto encoded = encode_bundles(data);
    bytes += encoded.size();
    benchmark::DoNotOptimize(decode_bundles(encoded));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_BundleRoundTrip)->Unit(benchmark::kMillisecond);

void BM_HeadFlops(benchmark::State& state) {
  HeadConfig c;
  c.embed_dim = 512;
  c.num_heads = 8;
  c.num_layers = 4;
  c.proj_dim = 256;
  c.n_classes = 157;
  c.n_aux = 97;
  c.n_categories = 4;
  for (auto _ : state) benchmark::DoNotOptimize(head_flops(c, 16, FlopScope::full_video));
}
BENCHMARK(BM_HeadFlops);

}  // namespace

BENCHMARK_MAIN();
