// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "padcheck/batch.hpp"
#include "padcheck/tensor.hpp"

#include <cstddef>

namespace padcheck {

/// Output length of a 1D convolution: floor((T + 2 pad - K) / stride) + 1.
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel,
                                 std::size_t stride, std::size_t pad);

/**
 * Zero-padded 1D convolution over time.
 *
 * input [T, C_in], weights [C_out, C_in, K], bias [C_out] -> [T_out, C_out].
 * out[t, o] = bias[o] + sum_{k, i} w[o, i, k] * in[t * stride + k - pad, i],
 * with out-of-range input rows contributing nothing.
 */
Tensor conv1d(const Tensor &input, const Tensor &weights, const Tensor &bias,
              std::size_t stride, std::size_t pad);

/// Per-channel convolution with same-length output; K must be odd and
/// pad is (K - 1) / 2. input [T, C], weights [C, K], bias [C].
Tensor depthwise_conv1d(const Tensor &input, const Tensor &weights,
                        const Tensor &bias);

// Batched forms run the kernel over each sample's full padded extent, reading
// whatever the padding holds. Lengths are left to the caller.
Tensor conv1d_batched(const SequenceBatch &batch, const Tensor &weights,
                      const Tensor &bias, std::size_t stride, std::size_t pad);
Tensor depthwise_conv1d_batched(const SequenceBatch &batch,
                                const Tensor &weights, const Tensor &bias);

} // namespace padcheck
