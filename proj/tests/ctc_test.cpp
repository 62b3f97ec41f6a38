// SPDX-License-Identifier: Apache-2.0

#include "padcheck/conformer.hpp"
#include "padcheck/ctc.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace padcheck {
namespace {

using testing::random_sequences;
using Runs = std::vector<padcheck::Run>;

// One-hot distribution for the given per-sample labels over `symbols`
// outputs (blank included).
CtcDistribution one_hot(const std::vector<std::vector<std::size_t>> &labels,
                        std::size_t symbols) {
  Lengths lengths;
  std::size_t t_max = 0;
  for (const auto &l : labels) {
    lengths.push_back(l.size());
    t_max = std::max(t_max, l.size());
  }
  Tensor probs({labels.size(), t_max, symbols});
  for (std::size_t b = 0; b < labels.size(); ++b)
    for (std::size_t t = 0; t < labels[b].size(); ++t)
      probs.at(b, t, labels[b][t]) = 1.0;
  return {probs, lengths};
}

TEST(RunLengthOracle, Examples) {
  EXPECT_EQ(run_length_oracle({0, 0, 2, 1, 1, 1}),
            (Runs{{0, 2}, {2, 1}, {1, 3}}));
  EXPECT_EQ(run_length_oracle({4}), (Runs{{4, 1}}));
  EXPECT_EQ(run_length_oracle({1, 1, 1}), (Runs{{1, 3}}));
  EXPECT_EQ(run_length_oracle({0, 1, 0, 1}),
            (Runs{{0, 1}, {1, 1}, {0, 1}, {1, 1}}));
  EXPECT_THROW(run_length_oracle({}), std::invalid_argument);
}

TEST(CtcArgmax, TiesGoToLowestIndex) {
  CtcDistribution dist{Tensor({1, 2, 3}, {0.4, 0.4, 0.2, 0.2, 0.4, 0.4}), {2}};
  EXPECT_EQ(ctc_argmax(dist)[0], (std::vector<std::size_t>{0, 1}));
}

TEST(CtcCompress, RunsOfSymbolsAndBlanks) {
  // a a _ b b b with a = 0, b = 1, blank = 2.
  Rng rng(1);
  const Tensor x = testing::random_matrix(rng, 6, 3);
  const SequenceBatch out =
      ctc_compress(make_batch({x}), one_hot({{0, 0, 2, 1, 1, 1}}, 3));
  ASSERT_EQ(out.lengths(), (Lengths{3}));
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(out.data().at(0, 0, c), (x.at(0, c) + x.at(1, c)) / 2, 1e-15);
    EXPECT_EQ(out.data().at(0, 1, c), x.at(2, c));
    EXPECT_NEAR(out.data().at(0, 2, c), (x.at(3, c) + x.at(4, c) + x.at(5, c)) / 3,
                1e-15);
  }
}

TEST(CtcCompress, AlternatingLabelsAreIdentity) {
  Rng rng(2);
  const Tensor x = testing::random_matrix(rng, 7, 4);
  const SequenceBatch out =
      ctc_compress(make_batch({x}), one_hot({{0, 1, 0, 1, 0, 1, 0}}, 3));
  EXPECT_EQ(out.lengths()[0], 7u);
  EXPECT_EQ(out.data(), make_batch({x}).data());
}

TEST(CtcCompress, BatchLengthsAndConservation) {
  Rng rng(3);
  const std::vector<std::vector<std::size_t>> labels = {
      {2, 2, 0, 0, 0, 1, 2}, {1, 1}, {0, 2, 2, 2, 1}};
  const auto seqs = random_sequences(rng, {7, 2, 5}, 3);
  const SequenceBatch out = ctc_compress(make_batch(seqs), one_hot(labels, 3));
  EXPECT_TRUE(out.is_masked());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const auto runs = run_length_oracle(labels[b]);
    ASSERT_EQ(out.lengths()[b], runs.size());
    // length-weighted run means add back up to the frame sum.
    for (std::size_t c = 0; c < 3; ++c) {
      double frames = 0.0, weighted = 0.0;
      for (std::size_t t = 0; t < seqs[b].dim(0); ++t)
        frames += seqs[b].at(t, c);
      for (std::size_t r = 0; r < runs.size(); ++r)
        weighted += static_cast<double>(runs[r].length) * out.data().at(b, r, c);
      EXPECT_NEAR(weighted, frames, 1e-12);
    }
  }
}

TEST(CtcCompress, RejectsMismatchedLengths) {
  Rng rng(4);
  const SequenceBatch x = make_batch(random_sequences(rng, {3, 2}, 2));
  EXPECT_THROW(ctc_compress(x, one_hot({{0, 0, 0}, {1}}, 2)), std::invalid_argument);
}

TEST(CtcProject, ValidRowsAreDistributionsPaddedRowsZero) {
  Rng rng(5);
  const ParameterSet head = ParameterSet::initialize(ctc_head_manifest(6, 4), 5);
  EXPECT_EQ(head.get("ctc.weight").shape(), (Shape{5, 6}));
  const SequenceBatch x = make_batch(random_sequences(rng, {9, 3}, 6));
  const CtcDistribution dist = ctc_project(x, head);
  EXPECT_EQ(dist.blank(), 4u);
  EXPECT_NO_THROW(dist.validate());
  for (std::size_t t = 3; t < 9; ++t)
    for (double v : dist.probs.row(1, t))
      EXPECT_EQ(v, 0.0);
}

TEST(CtcDistributionTest, ValidateRejectsBadRows) {
  CtcDistribution bad{Tensor({1, 1, 2}, {0.5, 0.6}), {1}};
  EXPECT_ANY_THROW(bad.validate());
  CtcDistribution dirty{Tensor({1, 2, 2}, {0.5, 0.5, 0.1, 0.0}), {1}};
  EXPECT_ANY_THROW(dirty.validate());
}

TEST(RunLengthOracle, MoreExamples) {
  EXPECT_EQ(run_length_oracle({1, 1, 2}), (Runs{{1, 2}, {2, 1}}));
  EXPECT_EQ(run_length_oracle({5}), (Runs{{5, 1}}));
  EXPECT_EQ(run_length_oracle({0, 0, 0, 1, 0}), (Runs{{0, 3}, {1, 1}, {0, 1}}));
}

TEST(CtcCompress, SingleLabelGivesOverallMean) {
  Rng rng(7);
  const Tensor x = testing::random_matrix(rng, 5, 2);
  const SequenceBatch out = ctc_compress(make_batch({x}), one_hot({{1, 1, 1, 1, 1}}, 3));
  ASSERT_EQ(out.lengths()[0], 1u);
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < 5; ++t)
      sum += x.at(t, c);
    EXPECT_EQ(out.data().at(0, 0, c), sum / 5.0);
  }
}

TEST(CtcCompress, NeverLengthensSequences) {
  Rng rng(8);
  const auto seqs = random_sequences(rng, {12, 30, 7}, 3);
  std::vector<std::vector<std::size_t>> labels;
  for (const auto &s : seqs) {
    labels.emplace_back();
    for (std::size_t t = 0; t < s.dim(0); ++t)
      labels.back().push_back(rng.uniform_int(0, 2));
  }
  const SequenceBatch x = make_batch(seqs);
  const SequenceBatch out = ctc_compress(x, one_hot(labels, 3));
  EXPECT_LE(out.max_length(), x.max_length());
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    EXPECT_GE(out.lengths()[b], 1u);
    EXPECT_LE(out.lengths()[b], x.lengths()[b]);
  }
}

TEST(CtcProject, ZeroHeadGivesUniformRows) {
  ParameterSet head;
  head.set("ctc.weight", Tensor({5, 3}));
  head.set("ctc.bias", Tensor({5}));
  Rng rng(9);
  const CtcDistribution dist =
      ctc_project(make_batch(random_sequences(rng, {4, 2}, 3)), head);
  for (std::size_t t = 0; t < 4; ++t)
    for (double v : dist.probs.row(0, t))
      EXPECT_EQ(v, 0.2);
}

TEST(CtcProject, BatchedEqualsUnbatched) {
  Rng rng(10);
  const ParameterSet head = ParameterSet::initialize(ctc_head_manifest(4, 3), 10);
  const auto seqs = random_sequences(rng, {6, 2, 9}, 4);
  const CtcDistribution all = ctc_project(make_batch(seqs), head);
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    const CtcDistribution one = ctc_project(make_batch({seqs[b]}), head);
    for (std::size_t t = 0; t < seqs[b].dim(0); ++t)
      for (std::size_t k = 0; k < 4; ++k)
        EXPECT_EQ(all.probs.at(b, t, k), one.probs.at(0, t, k));
  }
}

TEST(CtcCompress, PipelineBatchedEqualsUnbatchedOnEncoderOutput) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const Encoder enc(cfg, make_conformer_params(cfg, 6));
  ParameterSet head = ParameterSet::initialize(ctc_head_manifest(cfg.d_model, 4), 6);
  for (auto &v : head.get("ctc.weight").data())
    v *= 100.0;
  Rng rng(6);
  const auto seqs = random_sequences(rng, {20, 64, 33}, cfg.d_model);
  auto run = [&](const std::vector<Tensor> &s) {
    const SequenceBatch h = enc.forward(make_batch(s));
    return ctc_compress(h, ctc_project(h, head));
  };
  const SequenceBatch out = run(seqs);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const SequenceBatch solo = run({seqs[i]});
    EXPECT_EQ(out.lengths()[i], solo.lengths()[0]);
    EXPECT_EQ(testing::valid_region_diff(out, i, solo), 0.0);
  }
}

} // namespace
} // namespace padcheck
