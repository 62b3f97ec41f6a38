// SPDX-License-Identifier: Apache-2.0

#include "padcheck/ctc.hpp"

#include "padcheck/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace padcheck {

void CtcDistribution::validate() const {
  if (probs.rank() != 3 || lengths.size() != probs.dim(0))
    throw std::invalid_argument("CtcDistribution: probs must be [B, T, V + 1] "
                                "with one length per sample");
  for (std::size_t b = 0; b < probs.dim(0); ++b) {
    if (lengths[b] > probs.dim(1))
      throw std::invalid_argument("CtcDistribution: length exceeds T");
    for (std::size_t t = 0; t < probs.dim(1); ++t) {
      double sum = 0.0;
      for (double p : probs.row(b, t)) {
        if (p < 0.0)
          throw std::invalid_argument("CtcDistribution: negative probability");
        sum += p;
      }
      const bool valid = t < lengths[b];
      if (valid && std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("CtcDistribution: row does not sum to 1");
      if (!valid && sum != 0.0)
        throw std::invalid_argument("CtcDistribution: padded row is not zero");
    }
  }
}

CtcDistribution ctc_project(const SequenceBatch &x, const ParameterSet &params,
                            std::string_view prefix) {
  const std::string p(prefix);
  Tensor logits =
      linear(x.data(), params.get(p + ".weight"), params.get(p + ".bias"));
  const std::size_t v = logits.dim(2);
  Tensor probs(logits.shape());
  for (std::size_t b = 0; b < x.batch_size(); ++b) {
    for (std::size_t t = 0; t < x.lengths()[b]; ++t) {
      const auto in = logits.row(b, t);
      auto out = probs.row(b, t);
      const double mx = *std::max_element(in.begin(), in.end());
      double sum = 0.0;
      for (std::size_t k = 0; k < v; ++k) {
        out[k] = std::exp(in[k] - mx);
        sum += out[k];
      }
      for (auto &o : out)
        o /= sum;
    }
  }
  return {std::move(probs), x.lengths()};
}

std::vector<std::vector<std::size_t>> ctc_argmax(const CtcDistribution &dist) {
  std::vector<std::vector<std::size_t>> labels(dist.lengths.size());
  for (std::size_t b = 0; b < dist.lengths.size(); ++b) {
    labels[b].reserve(dist.lengths[b]);
    for (std::size_t t = 0; t < dist.lengths[b]; ++t) {
      const auto row = dist.probs.row(b, t);
      // max_element returns the first maximum, i.e. the lowest index.
      labels[b].push_back(static_cast<std::size_t>(
          std::max_element(row.begin(), row.end()) - row.begin()));
    }
  }
  return labels;
}

SequenceBatch ctc_compress(const SequenceBatch &x, const CtcDistribution &dist) {
  if (x.lengths() != dist.lengths)
    throw std::invalid_argument("ctc_compress: batch and distribution lengths "
                                "differ");
  if (dist.probs.dim(0) != x.batch_size() || dist.probs.dim(1) != x.max_length())
    throw std::invalid_argument("ctc_compress: distribution shape mismatch");
  const auto labels = ctc_argmax(dist);
  const std::size_t d = x.feature_dim();

  std::vector<Tensor> compressed;
  compressed.reserve(x.batch_size());
  for (std::size_t b = 0; b < x.batch_size(); ++b) {
    const auto &lab = labels[b];
    if (lab.empty())
      throw std::invalid_argument("ctc_compress: zero-length sample " +
                                  std::to_string(b));
    std::vector<double> rows;
    std::size_t start = 0;
    while (start < lab.size()) {
      std::size_t end = start + 1;
      while (end < lab.size() && lab[end] == lab[start])
        ++end;
      std::vector<double> mean(d, 0.0);
      for (std::size_t t = start; t < end; ++t) {
        const auto frame = x.data().row(b, t);
        for (std::size_t c = 0; c < d; ++c)
          mean[c] += frame[c];
      }
      for (auto &m : mean)
        m /= static_cast<double>(end - start);
      rows.insert(rows.end(), mean.begin(), mean.end());
      start = end;
    }
    const std::size_t runs = rows.size() / d;
    compressed.emplace_back(Shape{runs, d}, std::move(rows));
  }
  return apply_mask(make_batch(compressed));
}

std::vector<Run> run_length_oracle(const std::vector<std::size_t> &labels) {
  if (labels.empty())
    throw std::invalid_argument("run_length_oracle: empty label sequence");
  std::vector<Run> runs;
  for (auto label : labels) {
    if (!runs.empty() && runs.back().label == label)
      ++runs.back().length;
    else
      runs.push_back({label, 1});
  }
  return runs;
}

} // namespace padcheck
