// SPDX-License-Identifier: Apache-2.0
/**
 * @file   attention.hpp
 * @brief  Relative-position multi-head self-attention and a causal
 *         single-head attention layer.
 *
 * Relative positions use the distance d = i - j between query i and key j.
 * The pre-shift matrix of a sample with valid length L has L rows and
 * 2L - 1 columns, column k holding distance (L - 1) - k. Embedded in a padded
 * [T, 2T - 1] buffer it occupies the top-left block and everything else is
 * zero. Shifting recovers out[i, j] = pre[i, j - i + L - 1].
 */

#pragma once

#include "padcheck/batch.hpp"
#include "padcheck/parameters.hpp"
#include "padcheck/tensor.hpp"

#include <functional>
#include <string_view>
#include <vector>

namespace padcheck {

/// pe[2i] = sin(d / 10000^(2i/dim)), pe[2i+1] = cos(same); dim must be even.
std::vector<double> sinusoidal_pe(long distance, std::size_t dim);

/// Reshape-based relative shift of an [R, 2R - 1] matrix: prepend a zero
/// column, view as [2R, R], drop the first row, view as [R, 2R - 1] and keep
/// the first R columns. Result: out[i, j] = pre[i, j - i + R - 1].
Tensor relative_shift(const Tensor &pre);

/// Relative shift restricted to the valid block of a padded pre-shift
/// matrix: shifts the top-left [L, 2L - 1] block and embeds the [L, L]
/// result into a zero [T, T] matrix.
Tensor relative_shift_valid(const Tensor &padded_pre, std::size_t length);

/// Padded pre-shift matrix [T, 2T - 1] for one sample and head:
/// pre[i, k] = q_i . pe((L - 1) - k) inside the valid band, zero elsewhere.
/// `queries` is [T, d_h].
Tensor positional_pre_shift(const Tensor &queries, std::size_t length);

using ShiftFn =
    std::function<Tensor(const Tensor &padded_pre, std::size_t length)>;

/// Builds each (sample, head) pre-shift matrix from `queries` [B, H, T, d_h]
/// and turns it into [T, T] logits with `shift`.
Tensor shifted_positional_logits(const Tensor &queries, const Lengths &lengths,
                                 const ShiftFn &shift);

/// queries [B, H, T, d_h] -> [B, H, T, T] with
/// out[b, h, i, j] = q[b, h, i] . pe(i - j) for i, j < lengths[b], else 0.
Tensor relative_position_logits(const Tensor &queries, const Lengths &lengths);

using PositionalLogitsFn =
    std::function<Tensor(const Tensor &queries, const Lengths &lengths)>;

/**
 * Multi-head self-attention with relative positional logits.
 *
 * logits = (q_h . k_h) / sqrt(d_h) + positional(p_h), where p = x W_pos is the
 * positional query. Keys at padded positions are excluded from the softmax;
 * the output projection is masked. Parameters live under `prefix`
 * (query, key, value, out, pos).
 */
SequenceBatch rel_mhsa(const SequenceBatch &x, const ParameterSet &params,
                       std::string_view prefix, std::size_t num_heads,
                       const PositionalLogitsFn &positional =
                           PositionalLogitsFn(relative_position_logits));

/// Single-head attention where query i only sees keys j <= i.
SequenceBatch causal_attention_layer(const SequenceBatch &x,
                                     const ParameterSet &params,
                                     std::string_view prefix = "causal");

} // namespace padcheck
