// SPDX-License-Identifier: Apache-2.0

#include "padcheck/subjects.hpp"

#include "padcheck/attention.hpp"
#include "padcheck/ctc.hpp"

namespace padcheck {

namespace {

std::size_t identity_length(std::size_t len) { return len; }

} // namespace

ModuleUnderTest encoder_subject(const Encoder &encoder, std::string name) {
  ModuleUnderTest m;
  m.name = std::move(name);
  m.forward = [encoder](const SequenceBatch &x) { return encoder.forward(x); };
  m.length_transfer = [encoder](std::size_t len) {
    return encoder.output_length(len);
  };
  return m;
}

ModuleUnderTest conv_module_subject(std::shared_ptr<const ParameterSet> params,
                                    std::string prefix, bool with_b1_bug) {
  ModuleUnderTest m;
  m.name = with_b1_bug ? "b1_conv_module" : "conv_module";
  m.forward = [params, prefix, with_b1_bug](const SequenceBatch &x) {
    return with_b1_bug ? bug_b1_conv_module(x, *params, prefix)
                       : conv_module(x, *params, prefix);
  };
  m.length_transfer = identity_length;
  return m;
}

ModuleUnderTest rel_mhsa_subject(std::shared_ptr<const ParameterSet> params,
                                 std::string prefix, std::size_t num_heads) {
  ModuleUnderTest m;
  m.name = "noncausal";
  m.forward = [params, prefix, num_heads](const SequenceBatch &x) {
    return rel_mhsa(x, *params, prefix, num_heads);
  };
  m.length_transfer = identity_length;
  return m;
}

ModuleUnderTest causal_attention_subject(std::shared_ptr<const ParameterSet> params) {
  ModuleUnderTest m;
  m.name = "causal";
  m.forward = [params](const SequenceBatch &x) {
    return causal_attention_layer(x, *params);
  };
  m.length_transfer = identity_length;
  return m;
}

ModuleUnderTest ctc_compress_subject(const Encoder &encoder,
                                     std::shared_ptr<const ParameterSet> ctc_params) {
  ModuleUnderTest m;
  m.name = "ctc-compress";
  m.forward = [encoder, ctc_params](const SequenceBatch &x) {
    const SequenceBatch h = encoder.forward(x);
    return ctc_compress(h, ctc_project(h, *ctc_params));
  };
  return m;
}

} // namespace padcheck
