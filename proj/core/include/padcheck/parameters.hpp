// SPDX-License-Identifier: Apache-2.0
/**
 * @file   parameters.hpp
 * @brief  Encoder configuration and named, seeded parameter sets.
 */

#pragma once

#include "padcheck/tensor.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace padcheck {

struct ConformerConfig {
  std::size_t num_layers = 2;
  std::size_t d_model = 16;
  std::size_t num_heads = 2;
  std::size_t ffn_dim = 32;
  std::size_t depthwise_kernel = 7;
  std::size_t pointwise_kernel = 1;
  double dropout_p = 0.1;
  std::size_t frontend_kernel = 3;
  std::size_t frontend_stride = 2;
  std::size_t frontend_pad = 1;

  /// 2 layers, d_model 16, 2 heads, ffn 32, depthwise kernel 7.
  static ConformerConfig desk();
  /// 12 layers, d_model 512, 8 heads, ffn 2048, depthwise kernel 31.
  static ConformerConfig full_size();

  std::size_t head_dim() const { return d_model / num_heads; }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

struct ParamSpec {
  std::string path;
  Shape shape;
};

/// Required parameters of the encoder (frontend + layers), sorted by path.
///
///   frontend.conv{1,2}.{weight [D, D, K_f], bias [D]}
///   layer<i>.ffn{1,2}.norm.{gain,bias} [D]
///   layer<i>.ffn{1,2}.linear1.{weight [F, D], bias [F]}
///   layer<i>.ffn{1,2}.linear2.{weight [D, F], bias [D]}
///   layer<i>.mhsa.norm.{gain,bias} [D]
///   layer<i>.mhsa.{query,key,value,out}.{weight [D, D], bias [D]}
///   layer<i>.mhsa.pos.weight [D, D]        (positional query projection)
///   layer<i>.conv.norm.{gain,bias} [D]
///   layer<i>.conv.pointwise1.{weight [2D, D, K_p], bias [2D]}
///   layer<i>.conv.depthwise.{weight [D, K_d], bias [D]}
///   layer<i>.conv.bn.{gain,bias,running_mean,running_var} [D]
///   layer<i>.conv.pointwise2.{weight [D, D, K_p], bias [D]}
///   layer<i>.final_norm.{gain,bias} [D]
std::vector<ParamSpec> conformer_manifest(const ConformerConfig &cfg);

/// causal.{query,key,value,out}.{weight [D, D], bias [D]}
std::vector<ParamSpec> causal_attention_manifest(std::size_t d_model);

/// ctc.weight [V + 1, D], ctc.bias [V + 1]; blank is the last row.
std::vector<ParamSpec> ctc_head_manifest(std::size_t d_model,
                                         std::size_t vocab_size);

class ParameterSet {
public:
  ParameterSet() = default;

  /**
   * Draws every tensor of the manifest from its own SplitMix64 stream seeded
   * by derive_seed(seed, path). Norm gains are N(1, 0.02), running variances
   * 1 + |N(0, 0.02)|, everything else N(0, 0.02).
   */
  static ParameterSet initialize(const std::vector<ParamSpec> &manifest,
                                 std::uint64_t seed);

  const Tensor &get(std::string_view path) const;
  Tensor &get(std::string_view path);
  bool contains(std::string_view path) const;
  void set(const std::string &path, Tensor value);

  /// Adds every tensor of `other` (paths must not collide).
  void merge(const ParameterSet &other);

  /// Throws unless every manifest entry is present with the right shape.
  void check_complete(const std::vector<ParamSpec> &manifest) const;

  const std::map<std::string, Tensor, std::less<>> &tensors() const {
    return tensors_;
  }
  std::uint64_t seed() const { return seed_; }

  /// One "path d0xd1x..." line per tensor, sorted by path.
  std::string manifest_text() const;

  /// Writes manifest.txt plus <path>.pgt per tensor into `dir`.
  void save(const std::string &dir) const;
  static ParameterSet load(const std::string &dir);

private:
  std::map<std::string, Tensor, std::less<>> tensors_;
  std::uint64_t seed_ = 0;
};

} // namespace padcheck
