// SPDX-License-Identifier: Apache-2.0

#include "padcheck/batch.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace padcheck {

SequenceBatch::SequenceBatch(Tensor data, Lengths lengths)
    : data_(std::move(data)), lengths_(std::move(lengths)) {
  if (data_.rank() != 3)
    throw std::invalid_argument("SequenceBatch: data must be [B, T, D], got " +
                                shape_to_string(data_.shape()));
  if (lengths_.size() != data_.dim(0))
    throw std::invalid_argument("SequenceBatch: " +
                                std::to_string(lengths_.size()) +
                                " lengths for batch of " +
                                std::to_string(data_.dim(0)));
  if (lengths_.empty())
    throw std::invalid_argument("SequenceBatch: empty batch");
  const std::size_t t = data_.dim(1);
  for (auto len : lengths_)
    if (len < 1 || len > t)
      throw std::invalid_argument("SequenceBatch: length " +
                                  std::to_string(len) + " outside [1, " +
                                  std::to_string(t) + "]");
  if (*std::max_element(lengths_.begin(), lengths_.end()) != t)
    throw std::invalid_argument("SequenceBatch: padded length " +
                                std::to_string(t) +
                                " exceeds the longest sample");
}

bool SequenceBatch::is_masked() const {
  for (std::size_t b = 0; b < batch_size(); ++b)
    for (std::size_t t = lengths_[b]; t < max_length(); ++t)
      for (double v : data_.row(b, t))
        if (v != 0.0)
          return false;
  return true;
}

PaddingMask::PaddingMask(const Lengths &lengths, std::size_t max_length)
    : batch_size_(lengths.size()), max_length_(max_length),
      valid_(lengths.size() * max_length, 0) {
  for (std::size_t b = 0; b < batch_size_; ++b)
    for (std::size_t t = 0; t < std::min(lengths[b], max_length); ++t)
      valid_[b * max_length + t] = 1;
}

SequenceBatch make_batch(const std::vector<Tensor> &sequences) {
  if (sequences.empty())
    throw std::invalid_argument("make_batch: no sequences");
  const std::size_t d = sequences.front().rank() == 2
                            ? sequences.front().dim(1)
                            : 0;
  std::size_t t_max = 0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto &s = sequences[i];
    if (s.rank() != 2)
      throw std::invalid_argument("make_batch: sequence " + std::to_string(i) +
                                  " is not a [T, D] matrix");
    if (s.dim(0) == 0)
      throw std::invalid_argument("make_batch: sequence " + std::to_string(i) +
                                  " is empty");
    if (s.dim(1) != d)
      throw std::invalid_argument(
          "make_batch: sequence " + std::to_string(i) + " has feature size " +
          std::to_string(s.dim(1)) + ", expected " + std::to_string(d));
    t_max = std::max(t_max, s.dim(0));
  }
  Tensor data({sequences.size(), t_max, d});
  Lengths lengths(sequences.size());
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    const auto src = sequences[b].data();
    std::copy(src.begin(), src.end(), data.row(b, 0).data());
    lengths[b] = sequences[b].dim(0);
  }
  return {std::move(data), std::move(lengths)};
}

std::vector<Tensor> unbatch(const SequenceBatch &batch) {
  std::vector<Tensor> out;
  out.reserve(batch.batch_size());
  const std::size_t d = batch.feature_dim();
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    const std::size_t len = batch.lengths()[b];
    Tensor m({len, d});
    const double *src = batch.data().row(b, 0).data();
    std::copy(src, src + len * d, m.data().begin());
    out.push_back(std::move(m));
  }
  return out;
}

SequenceBatch apply_mask(SequenceBatch batch) {
  auto &data = batch.data();
  for (std::size_t b = 0; b < batch.batch_size(); ++b)
    for (std::size_t t = batch.lengths()[b]; t < batch.max_length(); ++t)
      std::fill_n(data.row(b, t).data(), batch.feature_dim(), 0.0);
  return batch;
}

} // namespace padcheck
