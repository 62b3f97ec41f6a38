// SPDX-License-Identifier: Apache-2.0
/**
 * @file   conformer.hpp
 * @brief  Padding-aware Conformer encoder: convolution module, strided
 *         subsampling frontend, encoder layer and the full stack.
 *
 * Masking discipline: input is masked before any kernel that spans time, and
 * every convolution and every sublayer output is masked. Under this rule the
 * valid region of any output depends only on the valid region of the same
 * sample, bit for bit, in eval mode.
 */

#pragma once

#include "padcheck/attention.hpp"
#include "padcheck/batch.hpp"
#include "padcheck/layers.hpp"
#include "padcheck/parameters.hpp"

#include <functional>
#include <memory>
#include <string_view>

namespace padcheck {

/// layer norm -> pointwise conv (2D) -> GLU -> depthwise conv -> batch norm ->
/// swish -> pointwise conv -> dropout, plus the residual. Output is masked.
SequenceBatch conv_module(const SequenceBatch &x, const ParameterSet &params,
                          std::string_view prefix,
                          const ForwardOptions &opts = {});

/// Per-sample length after one frontend convolution.
std::size_t frontend_conv_length(const ConformerConfig &cfg, std::size_t length);
/// Per-sample length after the whole frontend (two convolutions).
std::size_t frontend_output_length(const ConformerConfig &cfg,
                                   std::size_t length);

/// conv -> ReLU -> mask -> conv -> ReLU -> mask, with lengths recomputed after
/// each strided convolution.
SequenceBatch subsampling_frontend(const SequenceBatch &x,
                                   const ParameterSet &params,
                                   const ConformerConfig &cfg);

using ConvModuleFn = std::function<SequenceBatch(
    const SequenceBatch &, const ParameterSet &, std::string_view,
    const ForwardOptions &)>;
using FrontendFn = std::function<SequenceBatch(
    const SequenceBatch &, const ParameterSet &, const ConformerConfig &)>;

/// The replaceable stages of the encoder. Defaults are the correct modules.
struct EncoderStages {
  FrontendFn frontend = subsampling_frontend;
  ConvModuleFn conv_module = padcheck::conv_module;
  PositionalLogitsFn positional_logits = relative_position_logits;
};

/// x + 1/2 ffn1 -> + rel_mhsa -> conv module -> + 1/2 ffn2 -> final norm.
/// Each sublayer applies its own pre-norm; every stage output is masked.
SequenceBatch encoder_layer(const SequenceBatch &x, const ParameterSet &params,
                            std::string_view prefix, std::size_t num_heads,
                            const ForwardOptions &opts = {},
                            const EncoderStages &stages = {});

class Encoder {
public:
  Encoder(ConformerConfig cfg, std::shared_ptr<const ParameterSet> params,
          EncoderStages stages = {});

  /// Frontend followed by cfg.num_layers encoder layers. In train mode
  /// `rng` drives dropout and must be non-null when dropout_p > 0.
  SequenceBatch forward(const SequenceBatch &x, Mode mode = Mode::eval,
                        Rng *rng = nullptr) const;

  std::size_t output_length(std::size_t input_length) const {
    return frontend_output_length(cfg_, input_length);
  }

  const ConformerConfig &config() const { return cfg_; }
  const ParameterSet &params() const { return *params_; }
  std::shared_ptr<const ParameterSet> shared_params() const { return params_; }

private:
  ConformerConfig cfg_;
  std::shared_ptr<const ParameterSet> params_;
  EncoderStages stages_;
};

/// Fresh parameters for `cfg` drawn from `seed`.
std::shared_ptr<const ParameterSet> make_conformer_params(const ConformerConfig &cfg,
                                                          std::uint64_t seed);

} // namespace padcheck
