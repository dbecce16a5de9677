#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "victr/head/config.hpp"

namespace victr {

// Which tokens are counted.
enum class FlopScope : std::uint8_t {
  // Cost of one video-text logit: the visual token and a single class token
  // per frame, no auxiliary tokens. This is the per-pair convention used when
  // comparing video-language heads.
  single_logit,
  // Every class and auxiliary token of the configuration.
  full_video,
};

// How a multiply-accumulate is converted to FLOPs.
enum class FlopConvention : std::uint8_t {
  mac_as_one,  // one fused multiply-add counts as one FLOP (fvcore-style)
  mac_as_two,  // a multiply and an add counted separately
};

struct FlopItem {
  std::string block;  // e.g. "layer.cross_attention.projections"
  std::uint64_t macs = 0;
};

struct FlopReport {
  std::vector<FlopItem> items;
  FlopConvention convention = FlopConvention::mac_as_one;

  [[nodiscard]] std::uint64_t total_macs() const;
  [[nodiscard]] std::uint64_t total_flops() const;
  [[nodiscard]] std::uint64_t flops(const FlopItem& item) const;
  // Sum of items whose block name starts with `prefix`.
  [[nodiscard]] std::uint64_t macs_with_prefix(const std::string& prefix) const;
};

/// Analytic multiply-accumulate count of one forward pass over `frames`
/// frames. Per sub-block, with N = T*S tokens, S = 1 + n + m tokens per frame,
/// M = n + m text tokens, D width, P projection width:
///   boost                 T*M*(3D + D)        cosine (dot + two norms) and scaling
///   norm (each LN)        2*N*D
///   attention projections 4*N*D^2             Q, K, V, output
///   attention mixing      2*D*sum_g |g|^2     Q K^T and P V; groups are the T
///                                              timesteps (S tokens), the S token
///                                              indices (T steps), or one joint group
///   reweight              M*T*D + T*M*4D      temporal mean, cosine and scaling
///   mlp                   8*N*D^2             D -> 4D -> D
///   projection            (1 + n + k)*D*P
///   logit                 3*P                 one cosine
FlopReport head_flops(const HeadConfig& config, std::uint64_t frames,
                      FlopScope scope = FlopScope::single_logit,
                      FlopConvention convention = FlopConvention::mac_as_one);

}  // namespace victr
