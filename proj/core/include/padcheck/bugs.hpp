// SPDX-License-Identifier: Apache-2.0
/**
 * @file   bugs.hpp
 * @brief  Deliberately wrong padding handling, as drop-in encoder stages.
 *
 *  B1  convolution module ignores padding: no masking anywhere inside it,
 *      train-mode batch statistics include padded positions, and the module
 *      output is not re-masked.
 *  B2  subsampling frontend never masks, so the second strided convolution
 *      reads non-zero values past the end of shorter samples.
 *  B3  relative shift applied to the whole padded pre-shift matrix, which
 *      moves padding-band entries into the valid region.
 *
 * Every variant reduces to the correct module when no sample is padded.
 */

#pragma once

#include "padcheck/conformer.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace padcheck {

class BugSet {
public:
  enum Flag : unsigned { b1 = 1u, b2 = 2u, b3 = 4u };

  BugSet() = default;
  BugSet(std::initializer_list<Flag> flags) {
    for (auto f : flags)
      bits_ |= f;
  }

  static BugSet all() { return {b1, b2, b3}; }

  bool has(Flag f) const { return (bits_ & f) != 0; }
  bool empty() const { return bits_ == 0; }
  unsigned bits() const { return bits_; }

  /// "correct", "b1", "b2", "b3", "all", or a '+'-joined list otherwise.
  std::string name() const;
  /// Inverse of name() for the CLI variant names; nullopt if unknown.
  static std::optional<BugSet> parse(std::string_view name);

  bool operator==(const BugSet &) const = default;

private:
  unsigned bits_ = 0;
};

SequenceBatch bug_b1_conv_module(const SequenceBatch &x,
                                 const ParameterSet &params,
                                 std::string_view prefix,
                                 const ForwardOptions &opts = {});

SequenceBatch bug_b2_frontend(const SequenceBatch &x, const ParameterSet &params,
                              const ConformerConfig &cfg);

/// out[b, h, i, j] = pre[i, j - i + T - 1] on the padded pre-shift matrix.
Tensor bug_b3_relative_logits(const Tensor &queries, const Lengths &lengths);

EncoderStages stages_for(BugSet bugs);

/// Encoder sharing `params` whose stages carry the selected bugs.
Encoder build_encoder_with_bugs(const ConformerConfig &cfg,
                                std::shared_ptr<const ParameterSet> params,
                                BugSet bugs);

} // namespace padcheck
