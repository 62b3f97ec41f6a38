// SPDX-License-Identifier: Apache-2.0

#include "padcheck/conformer.hpp"

#include "padcheck/conv.hpp"

#include <stdexcept>
#include <string>

namespace padcheck {

namespace {

std::string join(std::string_view prefix, std::string_view leaf) {
  std::string out(prefix);
  out += '.';
  out += leaf;
  return out;
}

// x + scale * y, keeping the lengths of x.
SequenceBatch add_scaled(const SequenceBatch &x, const SequenceBatch &y,
                         double scale) {
  Tensor out = x.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += scale * y.data()[i];
  return with_data(x, std::move(out));
}

SequenceBatch pointwise(const SequenceBatch &x, const ParameterSet &params,
                        std::string_view prefix) {
  const Tensor &w = params.get(join(prefix, "weight"));
  const std::size_t pad = (w.dim(2) - 1) / 2;
  return with_data(x, conv1d_batched(x, w, params.get(join(prefix, "bias")),
                                     /*stride=*/1, pad));
}

} // namespace

SequenceBatch conv_module(const SequenceBatch &x, const ParameterSet &params,
                          std::string_view prefix, const ForwardOptions &opts) {
  SequenceBatch y = apply_mask(layer_norm(x, params, join(prefix, "norm")));
  y = apply_mask(pointwise(y, params, join(prefix, "pointwise1")));
  y = apply_mask(with_data(y, glu(y.data())));
  y = apply_mask(with_data(
      y, depthwise_conv1d_batched(y, params.get(join(prefix, "depthwise.weight")),
                                  params.get(join(prefix, "depthwise.bias")))));
  y = apply_mask(batch_norm(y, params, join(prefix, "bn"), opts.mode));
  y = with_data(y, swish(y.data()));
  y = apply_mask(pointwise(y, params, join(prefix, "pointwise2")));
  y = with_data(y, dropout(y.data(), opts.dropout_p, opts.mode, opts.rng));
  return apply_mask(add_scaled(x, y, 1.0));
}

std::size_t frontend_conv_length(const ConformerConfig &cfg,
                                 std::size_t length) {
  return conv1d_output_length(length, cfg.frontend_kernel, cfg.frontend_stride,
                              cfg.frontend_pad);
}

std::size_t frontend_output_length(const ConformerConfig &cfg,
                                   std::size_t length) {
  return frontend_conv_length(cfg, frontend_conv_length(cfg, length));
}

SequenceBatch subsampling_frontend(const SequenceBatch &x,
                                   const ParameterSet &params,
                                   const ConformerConfig &cfg) {
  SequenceBatch y = x;
  for (const char *conv : {"frontend.conv1", "frontend.conv2"}) {
    Lengths lengths;
    for (auto len : y.lengths()) {
      const std::size_t out = frontend_conv_length(cfg, len);
      if (out < 1)
        throw std::invalid_argument("frontend: sample of length " +
                                    std::to_string(len) +
                                    " vanishes after subsampling");
      lengths.push_back(out);
    }
    Tensor h = relu(conv1d_batched(y, params.get(join(conv, "weight")),
                                   params.get(join(conv, "bias")),
                                   cfg.frontend_stride, cfg.frontend_pad));
    y = apply_mask(SequenceBatch(std::move(h), std::move(lengths)));
  }
  return y;
}

SequenceBatch encoder_layer(const SequenceBatch &x, const ParameterSet &params,
                            std::string_view prefix, std::size_t num_heads,
                            const ForwardOptions &opts,
                            const EncoderStages &stages) {
  auto normed = [&](const SequenceBatch &in, const char *name) {
    return apply_mask(layer_norm(in, params, join(prefix, name)));
  };

  SequenceBatch h = apply_mask(add_scaled(
      x, ffn(normed(x, "ffn1.norm"), params, join(prefix, "ffn1"), opts), 0.5));
  h = apply_mask(add_scaled(h,
                            rel_mhsa(normed(h, "mhsa.norm"), params,
                                     join(prefix, "mhsa"), num_heads,
                                     stages.positional_logits),
                            1.0));
  h = apply_mask(stages.conv_module(h, params, join(prefix, "conv"), opts));
  h = apply_mask(add_scaled(
      h, ffn(normed(h, "ffn2.norm"), params, join(prefix, "ffn2"), opts), 0.5));
  return normed(h, "final_norm");
}

Encoder::Encoder(ConformerConfig cfg, std::shared_ptr<const ParameterSet> params,
                 EncoderStages stages)
    : cfg_(cfg), params_(std::move(params)), stages_(std::move(stages)) {
  cfg_.validate();
  if (!params_)
    throw std::invalid_argument("Encoder: null parameter set");
  params_->check_complete(conformer_manifest(cfg_));
}

SequenceBatch Encoder::forward(const SequenceBatch &x, Mode mode,
                               Rng *rng) const {
  if (x.feature_dim() != cfg_.d_model)
    throw std::invalid_argument("Encoder: input feature size " +
                                std::to_string(x.feature_dim()) +
                                " does not match d_model " +
                                std::to_string(cfg_.d_model));
  const ForwardOptions opts{mode, mode == Mode::train ? cfg_.dropout_p : 0.0,
                            rng};
  SequenceBatch h = stages_.frontend(x, *params_, cfg_);
  for (std::size_t l = 0; l < cfg_.num_layers; ++l)
    h = encoder_layer(h, *params_, "layer" + std::to_string(l), cfg_.num_heads,
                      opts, stages_);
  return h;
}

std::shared_ptr<const ParameterSet> make_conformer_params(const ConformerConfig &cfg,
                                                          std::uint64_t seed) {
  return std::make_shared<const ParameterSet>(
      ParameterSet::initialize(conformer_manifest(cfg), seed));
}

} // namespace padcheck
