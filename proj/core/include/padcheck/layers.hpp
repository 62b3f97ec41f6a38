// SPDX-License-Identifier: Apache-2.0
/**
 * @file   layers.hpp
 * @brief  Position-wise building blocks: linear maps, activations,
 *         normalization and dropout.
 *
 * Functions taking a Tensor operate row-wise over the last dimension and
 * never look across positions. Functions taking a SequenceBatch keep its
 * lengths; whether padded rows are re-zeroed is stated per function.
 */

#pragma once

#include "padcheck/batch.hpp"
#include "padcheck/parameters.hpp"
#include "padcheck/rng.hpp"
#include "padcheck/tensor.hpp"

#include <string_view>

namespace padcheck {

enum class Mode { eval, train };

struct ForwardOptions {
  Mode mode = Mode::eval;
  double dropout_p = 0.0;
  /// Required when mode == train and dropout_p > 0.
  Rng *rng = nullptr;
};

inline constexpr double kNormEpsilon = 1e-5;

double sigmoid(double x);

/// x [..., in] -> [..., out] with w [out, in], b [out].
Tensor linear(const Tensor &x, const Tensor &weight, const Tensor &bias);
/// Same as linear() without a bias term.
Tensor linear_no_bias(const Tensor &x, const Tensor &weight);

Tensor relu(Tensor t);
Tensor swish(Tensor t);
/// Splits the last dimension into halves a | b and returns a * sigmoid(b).
Tensor glu(const Tensor &t);
Tensor layer_norm(const Tensor &t, const Tensor &gain, const Tensor &bias);

/// Inverted dropout. Identity in eval mode or when p == 0.
Tensor dropout(Tensor t, double p, Mode mode, Rng *rng);

/// New batch with `data` and the lengths of `like`.
SequenceBatch with_data(const SequenceBatch &like, Tensor data);

SequenceBatch layer_norm(const SequenceBatch &x, const ParameterSet &params,
                         std::string_view prefix);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> var;
};

/// Per-channel mean and (biased) variance over valid positions, or over every
/// position of the padded tensor when `include_padding` is set.
ChannelStats channel_statistics(const SequenceBatch &x, bool include_padding);

/**
 * Batch normalization over channels.
 *
 * eval:  (x - running_mean) / sqrt(running_var + eps) * gain + bias, applied
 *        at every position (padded rows included; callers mask).
 * train: statistics over valid positions of the whole batch; padded rows are
 *        re-zeroed. Throws if the batch has no valid position.
 */
SequenceBatch batch_norm(const SequenceBatch &x, const ParameterSet &params,
                         std::string_view prefix, Mode mode);

/// Position-wise feed-forward: linear1 -> swish -> dropout -> linear2, masked.
/// The caller applies the pre-norm and the half-step residual.
SequenceBatch ffn(const SequenceBatch &x, const ParameterSet &params,
                  std::string_view prefix, const ForwardOptions &opts = {});

} // namespace padcheck
