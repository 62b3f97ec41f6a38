// SPDX-License-Identifier: Apache-2.0
/**
 * @file   batch.hpp
 * @brief  Padded sequence batches and their validity masks.
 *
 * A SequenceBatch stores B sequences of feature vectors in a [B, T, D]
 * tensor where T is the longest valid length. Positions t >= lengths[b]
 * are padding. The constructor does not require padding to be zero, since
 * buggy modules legitimately produce unmasked output; apply_mask() restores
 * the zero-padding invariant and is_masked() tests it.
 */

#pragma once

#include "padcheck/tensor.hpp"

#include <cstddef>
#include <vector>

namespace padcheck {

using Lengths = std::vector<std::size_t>;

class SequenceBatch {
public:
  SequenceBatch() = default;
  /// Requires rank-3 data, one length per sample, 1 <= lengths[b] <= T and
  /// max(lengths) == T.
  SequenceBatch(Tensor data, Lengths lengths);

  const Tensor &data() const { return data_; }
  Tensor &data() { return data_; }
  const Lengths &lengths() const { return lengths_; }

  std::size_t batch_size() const { return data_.dim(0); }
  std::size_t max_length() const { return data_.dim(1); }
  std::size_t feature_dim() const { return data_.dim(2); }

  bool is_masked() const;

private:
  Tensor data_;
  Lengths lengths_;
};

class PaddingMask {
public:
  PaddingMask(const Lengths &lengths, std::size_t max_length);
  explicit PaddingMask(const SequenceBatch &batch)
      : PaddingMask(batch.lengths(), batch.max_length()) {}

  bool valid(std::size_t b, std::size_t t) const {
    return valid_[b * max_length_ + t] != 0;
  }
  std::size_t batch_size() const { return batch_size_; }
  std::size_t max_length() const { return max_length_; }

private:
  std::size_t batch_size_;
  std::size_t max_length_;
  std::vector<unsigned char> valid_;
};

/// Pads [T_i, D] matrices to a common length with zeros.
SequenceBatch make_batch(const std::vector<Tensor> &sequences);

/// Valid rows of each sample as separate [T_i, D] matrices.
std::vector<Tensor> unbatch(const SequenceBatch &batch);

/// Zeroes every padded position.
SequenceBatch apply_mask(SequenceBatch batch);

} // namespace padcheck
