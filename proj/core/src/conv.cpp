// SPDX-License-Identifier: Apache-2.0

#include "padcheck/conv.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace padcheck {

namespace {

Tensor sample_matrix(const SequenceBatch &batch, std::size_t b) {
  const std::size_t t = batch.max_length();
  const std::size_t d = batch.feature_dim();
  const double *src = batch.data().row(b, 0).data();
  return Tensor({t, d}, std::vector<double>(src, src + t * d));
}

Tensor stack(const std::vector<Tensor> &rows) {
  const std::size_t t = rows.front().dim(0);
  const std::size_t c = rows.front().dim(1);
  Tensor out({rows.size(), t, c});
  for (std::size_t b = 0; b < rows.size(); ++b)
    std::copy(rows[b].data().begin(), rows[b].data().end(),
              out.row(b, 0).data());
  return out;
}

} // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel,
                                 std::size_t stride, std::size_t pad) {
  if (kernel < 1 || stride < 1)
    throw std::invalid_argument("conv1d: kernel and stride must be >= 1");
  if (length + 2 * pad < kernel)
    throw std::invalid_argument("conv1d: input length " +
                                std::to_string(length) + " with pad " +
                                std::to_string(pad) +
                                " is shorter than kernel " +
                                std::to_string(kernel));
  return (length + 2 * pad - kernel) / stride + 1;
}

Tensor conv1d(const Tensor &input, const Tensor &weights, const Tensor &bias,
              std::size_t stride, std::size_t pad) {
  if (input.rank() != 2 || weights.rank() != 3 || bias.rank() != 1)
    throw std::invalid_argument("conv1d: expected input [T, C_in], weights "
                                "[C_out, C_in, K], bias [C_out]");
  const std::size_t t_in = input.dim(0);
  const std::size_t c_in = input.dim(1);
  const std::size_t c_out = weights.dim(0);
  const std::size_t k_size = weights.dim(2);
  if (weights.dim(1) != c_in || bias.dim(0) != c_out)
    throw std::invalid_argument(
        "conv1d: shape mismatch, input " + shape_to_string(input.shape()) +
        " weights " + shape_to_string(weights.shape()) + " bias " +
        shape_to_string(bias.shape()));
  const std::size_t t_out = conv1d_output_length(t_in, k_size, stride, pad);

  Tensor out({t_out, c_out});
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t o = 0; o < c_out; ++o) {
      double acc = bias[o];
      for (std::size_t k = 0; k < k_size; ++k) {
        const std::size_t pos = t * stride + k;
        if (pos < pad || pos - pad >= t_in)
          continue;
        const auto x = input.row(pos - pad);
        for (std::size_t i = 0; i < c_in; ++i)
          acc += weights.at(o, i, k) * x[i];
      }
      out.at(t, o) = acc;
    }
  }
  return out;
}

Tensor depthwise_conv1d(const Tensor &input, const Tensor &weights,
                        const Tensor &bias) {
  if (input.rank() != 2 || weights.rank() != 2 || bias.rank() != 1)
    throw std::invalid_argument(
        "depthwise_conv1d: expected input [T, C], weights [C, K], bias [C]");
  const std::size_t t_len = input.dim(0);
  const std::size_t channels = input.dim(1);
  const std::size_t k_size = weights.dim(1);
  if (k_size % 2 == 0)
    throw std::invalid_argument("depthwise_conv1d: kernel size " +
                                std::to_string(k_size) + " must be odd");
  if (weights.dim(0) != channels || bias.dim(0) != channels)
    throw std::invalid_argument("depthwise_conv1d: channel mismatch");
  const std::size_t pad = (k_size - 1) / 2;

  Tensor out({t_len, channels});
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = bias[c];
      for (std::size_t k = 0; k < k_size; ++k) {
        const std::size_t pos = t + k;
        if (pos < pad || pos - pad >= t_len)
          continue;
        acc += weights.at(c, k) * input.at(pos - pad, c);
      }
      out.at(t, c) = acc;
    }
  }
  return out;
}

Tensor conv1d_batched(const SequenceBatch &batch, const Tensor &weights,
                      const Tensor &bias, std::size_t stride,
                      std::size_t pad) {
  std::vector<Tensor> rows;
  rows.reserve(batch.batch_size());
  for (std::size_t b = 0; b < batch.batch_size(); ++b)
    rows.push_back(conv1d(sample_matrix(batch, b), weights, bias, stride, pad));
  return stack(rows);
}

Tensor depthwise_conv1d_batched(const SequenceBatch &batch,
                                const Tensor &weights, const Tensor &bias) {
  std::vector<Tensor> rows;
  rows.reserve(batch.batch_size());
  for (std::size_t b = 0; b < batch.batch_size(); ++b)
    rows.push_back(depthwise_conv1d(sample_matrix(batch, b), weights, bias));
  return stack(rows);
}

} // namespace padcheck
