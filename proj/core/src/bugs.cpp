// SPDX-License-Identifier: Apache-2.0

#include "padcheck/bugs.hpp"

#include "padcheck/conv.hpp"

#include <cmath>
#include <string>

namespace padcheck {

namespace {

std::string join(std::string_view prefix, std::string_view leaf) {
  std::string out(prefix);
  out += '.';
  out += leaf;
  return out;
}

// Batch norm whose train-mode statistics run over the padded tensor.
SequenceBatch unmasked_batch_norm(const SequenceBatch &x,
                                  const ParameterSet &params,
                                  std::string_view prefix, Mode mode) {
  if (mode == Mode::eval)
    return batch_norm(x, params, prefix, mode);
  const ChannelStats stats = channel_statistics(x, /*include_padding=*/true);
  const Tensor &gain = params.get(join(prefix, "gain"));
  const Tensor &bias = params.get(join(prefix, "bias"));
  Tensor out = x.data();
  const std::size_t d = x.feature_dim();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t c = i % d;
    out[i] = (out[i] - stats.mean[c]) / std::sqrt(stats.var[c] + kNormEpsilon) *
                 gain[c] +
             bias[c];
  }
  return with_data(x, std::move(out));
}

} // namespace

std::string BugSet::name() const {
  if (empty())
    return "correct";
  if (*this == all())
    return "all";
  std::string out;
  for (auto [flag, label] : {std::pair{b1, "b1"}, {b2, "b2"}, {b3, "b3"}}) {
    if (!has(flag))
      continue;
    if (!out.empty())
      out += '+';
    out += label;
  }
  return out;
}

std::optional<BugSet> BugSet::parse(std::string_view name) {
  if (name == "correct")
    return BugSet{};
  if (name == "b1")
    return BugSet{b1};
  if (name == "b2")
    return BugSet{b2};
  if (name == "b3")
    return BugSet{b3};
  if (name == "all")
    return all();
  return std::nullopt;
}

SequenceBatch bug_b1_conv_module(const SequenceBatch &x,
                                 const ParameterSet &params,
                                 std::string_view prefix,
                                 const ForwardOptions &opts) {
  SequenceBatch y = layer_norm(x, params, join(prefix, "norm"));
  const Tensor &pw1 = params.get(join(prefix, "pointwise1.weight"));
  y = with_data(y, conv1d_batched(y, pw1,
                                  params.get(join(prefix, "pointwise1.bias")), 1,
                                  (pw1.dim(2) - 1) / 2));
  y = with_data(y, glu(y.data()));
  y = with_data(
      y, depthwise_conv1d_batched(y, params.get(join(prefix, "depthwise.weight")),
                                  params.get(join(prefix, "depthwise.bias"))));
  y = unmasked_batch_norm(y, params, join(prefix, "bn"), opts.mode);
  y = with_data(y, swish(y.data()));
  const Tensor &pw2 = params.get(join(prefix, "pointwise2.weight"));
  y = with_data(y, conv1d_batched(y, pw2,
                                  params.get(join(prefix, "pointwise2.bias")), 1,
                                  (pw2.dim(2) - 1) / 2));
  y = with_data(y, dropout(y.data(), opts.dropout_p, opts.mode, opts.rng));
  Tensor out = x.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += y.data()[i];
  return with_data(x, std::move(out));
}

SequenceBatch bug_b2_frontend(const SequenceBatch &x, const ParameterSet &params,
                              const ConformerConfig &cfg) {
  SequenceBatch y = x;
  for (const char *conv : {"frontend.conv1", "frontend.conv2"}) {
    Lengths lengths;
    for (auto len : y.lengths())
      lengths.push_back(frontend_conv_length(cfg, len));
    Tensor h = relu(conv1d_batched(y, params.get(join(conv, "weight")),
                                   params.get(join(conv, "bias")),
                                   cfg.frontend_stride, cfg.frontend_pad));
    y = SequenceBatch(std::move(h), std::move(lengths));
  }
  return y;
}

Tensor bug_b3_relative_logits(const Tensor &queries, const Lengths &lengths) {
  return shifted_positional_logits(
      queries, lengths,
      [](const Tensor &padded_pre, std::size_t) { return relative_shift(padded_pre); });
}

EncoderStages stages_for(BugSet bugs) {
  EncoderStages stages;
  if (bugs.has(BugSet::b1))
    stages.conv_module = bug_b1_conv_module;
  if (bugs.has(BugSet::b2))
    stages.frontend = bug_b2_frontend;
  if (bugs.has(BugSet::b3))
    stages.positional_logits = bug_b3_relative_logits;
  return stages;
}

Encoder build_encoder_with_bugs(const ConformerConfig &cfg,
                                std::shared_ptr<const ParameterSet> params,
                                BugSet bugs) {
  return Encoder(cfg, std::move(params), stages_for(bugs));
}

} // namespace padcheck
