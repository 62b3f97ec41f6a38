// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "padcheck/bugs.hpp"
#include "padcheck/conformer.hpp"
#include "padcheck/harness.hpp"

#include <memory>

namespace padcheck {

// Adapters wrapping library modules as harness subjects. Each captures its
// parameters by shared pointer, so subjects stay valid after the caller's
// handles go away.

ModuleUnderTest encoder_subject(const Encoder &encoder, std::string name);

ModuleUnderTest conv_module_subject(std::shared_ptr<const ParameterSet> params,
                                    std::string prefix, bool with_b1_bug = false);

/// Bidirectional relative-position attention ("noncausal").
ModuleUnderTest rel_mhsa_subject(std::shared_ptr<const ParameterSet> params,
                                 std::string prefix, std::size_t num_heads);

/// Causal single-head attention ("causal").
ModuleUnderTest causal_attention_subject(std::shared_ptr<const ParameterSet> params);

/// Encoder -> CTC head -> CTC compression ("ctc-compress"). Output lengths
/// depend on the data, so no length transfer is declared.
ModuleUnderTest ctc_compress_subject(const Encoder &encoder,
                                     std::shared_ptr<const ParameterSet> ctc_params);

} // namespace padcheck
