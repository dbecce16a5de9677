#include "victr/head/flops.hpp"

namespace victr {

std::uint64_t FlopReport::flops(const FlopItem& item) const {
  return convention == FlopConvention::mac_as_two ? 2 * item.macs : item.macs;
}

std::uint64_t FlopReport::total_macs() const {
  std::uint64_t sum = 0;
  for (const auto& i : items) sum += i.macs;
  return sum;
}

std::uint64_t FlopReport::total_flops() const {
  return convention == FlopConvention::mac_as_two ? 2 * total_macs() : total_macs();
}

std::uint64_t FlopReport::macs_with_prefix(const std::string& prefix) const {
  std::uint64_t sum = 0;
  for (const auto& i : items) {
    if (i.block.starts_with(prefix)) sum += i.macs;
  }
  return sum;
}

FlopReport head_flops(const HeadConfig& config, std::uint64_t frames, FlopScope scope,
                      FlopConvention convention) {
  const std::uint64_t T = frames;
  const std::uint64_t D = config.embed_dim;
  const std::uint64_t P = config.proj_dim;
  const bool per_pair = scope == FlopScope::single_logit;
  const std::uint64_t n = per_pair ? 1 : config.n_classes;
  const std::uint64_t m = (per_pair || !config.aux_active()) ? 0 : config.n_aux;
  const std::uint64_t k = m > 0 ? config.n_categories : 0;
  const std::uint64_t M = n + m;
  const std::uint64_t S = 1 + M;
  const std::uint64_t N = T * S;
  const bool weighted = config.weighting_mode != WeightingMode::none;

  FlopReport r;
  r.convention = convention;
  auto add = [&](std::string name, std::uint64_t macs) {
    r.items.push_back({std::move(name), macs});
  };

  add("boost", weighted ? T * M * 4 * D : 0);
  for (std::uint64_t l = 0; l < config.num_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    if (config.attention_mode == AttentionMode::divided) {
      add(pre + "cross_attention.norm", 2 * N * D);
      add(pre + "cross_attention.projections", 4 * N * D * D);
      add(pre + "cross_attention.mixing", 2 * D * T * S * S);
      add(pre + "temporal_attention.norm", 2 * N * D);
      add(pre + "temporal_attention.projections", 4 * N * D * D);
      add(pre + "temporal_attention.mixing", 2 * D * S * T * T);
    } else {
      add(pre + "joint_attention.norm", 2 * N * D);
      add(pre + "joint_attention.projections", 4 * N * D * D);
      add(pre + "joint_attention.mixing", 2 * D * N * N);
    }
    add(pre + "reweight", weighted ? M * T * D + T * M * 4 * D : 0);
    add(pre + "mlp.norm", 2 * N * D);
    add(pre + "mlp", 2 * N * D * 4 * D);
  }
  add("projection", (1 + n + k) * D * P);
  add("logit", 3 * P);
  return r;
}

}  // namespace victr
