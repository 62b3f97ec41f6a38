// SPDX-License-Identifier: Apache-2.0
/**
 * @file   ctc.hpp
 * @brief  CTC projection head and CTC compression.
 *
 * Compression labels every valid frame with its most likely CTC symbol
 * (blank included, ties to the lowest index) and replaces each maximal run
 * of equal labels with the mean of its frames. Blank runs are kept.
 */

#pragma once

#include "padcheck/batch.hpp"
#include "padcheck/parameters.hpp"
#include "padcheck/tensor.hpp"

#include <string_view>
#include <vector>

namespace padcheck {

struct CtcDistribution {
  /// [B, T, V + 1]; index V is blank. Valid rows sum to 1, padded rows are 0.
  Tensor probs;
  Lengths lengths;

  std::size_t num_symbols() const { return probs.dim(2); }
  std::size_t blank() const { return probs.dim(2) - 1; }
  /// Throws if the invariants above do not hold (row sums within 1e-12).
  void validate() const;
};

/// Position-wise linear d_model -> V + 1 followed by a softmax on valid rows.
CtcDistribution ctc_project(const SequenceBatch &x, const ParameterSet &params,
                            std::string_view prefix = "ctc");

/// Most likely label per valid frame, lowest index on ties.
std::vector<std::vector<std::size_t>> ctc_argmax(const CtcDistribution &dist);

/// Collapses runs of equal argmax labels into their mean frame.
SequenceBatch ctc_compress(const SequenceBatch &x, const CtcDistribution &dist);

struct Run {
  std::size_t label;
  std::size_t length;
  bool operator==(const Run &) const = default;
};

/// Maximal-run decomposition by a linear scan. Throws on empty input.
std::vector<Run> run_length_oracle(const std::vector<std::size_t> &labels);

} // namespace padcheck
