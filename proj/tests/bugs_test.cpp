// SPDX-License-Identifier: Apache-2.0

#include "padcheck/bugs.hpp"
#include "padcheck/harness.hpp"
#include "padcheck/subjects.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace padcheck {
namespace {

using testing::random_sequences;

const std::vector<BugSet> kVariants = {BugSet{BugSet::b1}, BugSet{BugSet::b2},
                                       BugSet{BugSet::b3}, BugSet::all()};

double pe_dot(const double *q, long distance, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    const double angle =
        static_cast<double>(distance) /
        std::pow(10000.0, static_cast<double>(2 * (c / 2)) / static_cast<double>(dim));
    acc += q[c] * (c % 2 == 0 ? std::sin(angle) : std::cos(angle));
  }
  return acc;
}

TEST(BugSetTest, NamesRoundTrip) {
  EXPECT_EQ(BugSet().name(), "correct");
  EXPECT_EQ(BugSet::all().name(), "all");
  EXPECT_EQ((BugSet{BugSet::b1, BugSet::b3}).name(), "b1+b3");
  for (const char *n : {"correct", "b1", "b2", "b3", "all"}) {
    const auto parsed = BugSet::parse(n);
    ASSERT_TRUE(parsed.has_value()) << n;
    EXPECT_EQ(parsed->name(), n);
  }
  EXPECT_FALSE(BugSet::parse("b4").has_value());
  EXPECT_FALSE(BugSet::parse("").has_value());
}

TEST(BugB3, GathersFromTheWholePaddedBuffer) {
  const std::size_t dh = 4;
  Rng rng(1);
  for (std::size_t len = 1; len <= 6; ++len) {
    for (std::size_t t = len; t <= len + 3; ++t) {
      Tensor q = testing::random_tensor(rng, {1, 1, t, dh});
      for (std::size_t i = len; i < t; ++i)
        for (std::size_t c = 0; c < dh; ++c)
          q[i * dh + c] = 0.0;
      const Tensor out = bug_b3_relative_logits(q, {len});
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < len; ++j) {
          // Column j - i + T - 1 of a buffer whose valid band spans 2L - 1
          // columns holding distance (L - 1) - k.
          const std::size_t k = j + t - 1 - i;
          const double expected =
              k < 2 * len - 1
                  ? pe_dot(q.data().data() + i * dh,
                           static_cast<long>(len) - 1 - static_cast<long>(k), dh)
                  : 0.0;
          ASSERT_EQ(out[i * t + j], expected)
              << "L=" << len << " T=" << t << " i=" << i << " j=" << j;
        }
    }
  }
}

TEST(BugB3, UnpaddedMatchesCorrectLogits) {
  Rng rng(2);
  const Tensor q = testing::random_tensor(rng, {2, 2, 7, 4});
  EXPECT_EQ(bug_b3_relative_logits(q, {7, 7}), relative_position_logits(q, {7, 7}));
}

TEST(Variants, ReduceToCorrectWithoutPadding) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const auto params = make_conformer_params(cfg, 3);
  const Encoder good(cfg, params);
  Rng rng(3);
  const SequenceBatch x = make_batch(random_sequences(rng, {24, 24, 24}, cfg.d_model));
  const SequenceBatch ref = good.forward(x);
  for (const BugSet &bugs : kVariants)
    EXPECT_EQ(build_encoder_with_bugs(cfg, params, bugs).forward(x).data(), ref.data())
        << bugs.name();
}

TEST(Variants, ShareParametersWithTheCorrectEncoder) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const auto params = make_conformer_params(cfg, 4);
  const Encoder bad = build_encoder_with_bugs(cfg, params, BugSet::all());
  EXPECT_EQ(bad.shared_params(), params);
}

TEST(Variants, EveryVariantBreaksPaddingInvariance) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const auto params = make_conformer_params(cfg, 5);
  Rng rng(5);
  const auto seqs = random_sequences(rng, {9, 64, 30}, cfg.d_model);
  for (const BugSet &bugs : kVariants) {
    const Encoder enc = build_encoder_with_bugs(cfg, params, bugs);
    const SequenceBatch out = enc.forward(make_batch(seqs));
    double worst = 0.0;
    for (std::size_t i = 0; i < seqs.size(); ++i)
      worst = std::max(worst, testing::valid_region_diff(
                                  out, i, enc.forward(make_batch({seqs[i]}))));
    EXPECT_GT(worst, 1e-9) << bugs.name();
  }
}

TEST(Variants, CorrectEncoderPassesHarnessAndBugsFail) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const auto params = make_conformer_params(cfg, 0);
  CheckConfig check;
  check.num_cases = 6;
  check.batch_sizes = {1, 4};
  const CheckReport good =
      padding_invariance_check(encoder_subject(Encoder(cfg, params), "correct"), check);
  EXPECT_TRUE(good.overall_pass);
  EXPECT_EQ(good.max_divergence(), 0.0);
  for (const BugSet &bugs : kVariants) {
    const CheckReport r = padding_invariance_check(
        encoder_subject(build_encoder_with_bugs(cfg, params, bugs), bugs.name()),
        check);
    EXPECT_FALSE(r.overall_pass) << bugs.name();
  }
}

TEST(BugB1, ConvModuleLeaksPaddingButNotWhenUnpadded) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const auto params = make_conformer_params(cfg, 6);
  Rng rng(6);
  const auto seqs = random_sequences(rng, {5, 12}, cfg.d_model);
  const SequenceBatch x = make_batch(seqs);
  const SequenceBatch bad = bug_b1_conv_module(x, *params, "layer0.conv");
  EXPECT_FALSE(bad.is_masked());
  const SequenceBatch single = make_batch({seqs[1]});
  EXPECT_EQ(bug_b1_conv_module(single, *params, "layer0.conv").data(),
            conv_module(single, *params, "layer0.conv").data());
}

TEST(BugB2, FrontendReadsPastShortSamples) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const auto params = make_conformer_params(cfg, 7);
  Rng rng(7);
  const auto seqs = random_sequences(rng, {9, 40}, cfg.d_model);
  const SequenceBatch bad = bug_b2_frontend(make_batch(seqs), *params, cfg);
  const SequenceBatch solo = bug_b2_frontend(make_batch({seqs[0]}), *params, cfg);
  EXPECT_EQ(bad.lengths()[0], frontend_output_length(cfg, 9));
  EXPECT_GT(testing::valid_region_diff(bad, 0, solo), 0.0);
}

TEST(BugB1, InteriorPositionsMatchInEvalMode) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const auto params = make_conformer_params(cfg, 8);
  Rng rng(8);
  const SequenceBatch x = make_batch(random_sequences(rng, {20, 40}, cfg.d_model));
  const SequenceBatch bad = bug_b1_conv_module(x, *params, "layer0.conv");
  const SequenceBatch good = conv_module(x, *params, "layer0.conv");
  const std::size_t reach = (cfg.depthwise_kernel - 1) / 2;
  for (std::size_t t = 0; t + reach < 20; ++t)
    for (std::size_t c = 0; c < cfg.d_model; ++c)
      ASSERT_EQ(bad.data().at(0, t, c), good.data().at(0, t, c)) << t;
  double boundary = 0.0;
  for (std::size_t t = 20 - reach; t < 20; ++t)
    for (std::size_t c = 0; c < cfg.d_model; ++c)
      boundary = std::max(boundary,
                          std::abs(bad.data().at(0, t, c) - good.data().at(0, t, c)));
  EXPECT_GT(boundary, 0.0);
}

TEST(BugB2, FirstFramesMatchLastFramesDiffer) {
  const ConformerConfig cfg = ConformerConfig::desk();
  const auto params = make_conformer_params(cfg, 9);
  Rng rng(9);
  const SequenceBatch x = make_batch(random_sequences(rng, {13, 50}, cfg.d_model));
  const SequenceBatch bad = bug_b2_frontend(x, *params, cfg);
  const SequenceBatch good = subsampling_frontend(x, *params, cfg);
  ASSERT_EQ(bad.lengths(), good.lengths());
  const std::size_t last = good.lengths()[0] - 1;
  double first = 0.0, tail = 0.0;
  for (std::size_t c = 0; c < cfg.d_model; ++c) {
    first = std::max(first, std::abs(bad.data().at(0, 0, c) - good.data().at(0, 0, c)));
    tail = std::max(tail, std::abs(bad.data().at(0, last, c) - good.data().at(0, last, c)));
  }
  EXPECT_EQ(first, 0.0);
  EXPECT_GT(tail, 0.0);
}

// Mean over seeds 0..4 of the per-seed max divergence on the padding suite.
double mean_of_max(BugSet bugs, std::size_t lo, std::size_t hi,
                   std::vector<std::size_t> batch_sizes) {
  const ConformerConfig cfg = ConformerConfig::desk();
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CheckConfig cc;
    cc.seed = seed;
    cc.batch_sizes = batch_sizes;
    cc.length_min = lo;
    cc.length_max = hi;
    cc.feature_dim = cfg.d_model;
    const Encoder enc =
        build_encoder_with_bugs(cfg, make_conformer_params(cfg, seed), bugs);
    total += padding_invariance_check(encoder_subject(enc, bugs.name()), cc)
                 .max_divergence();
  }
  return total / 5.0;
}

TEST(Variants, CombinedDivergesAtLeastAsMuchAsEachBug) {
  double singles = 0.0;
  for (const BugSet &bugs : {BugSet{BugSet::b1}, BugSet{BugSet::b2}, BugSet{BugSet::b3}}) {
    const double m = mean_of_max(bugs, 8, 64, {1, 4, 16});
    EXPECT_GT(m, 1e-6) << bugs.name();
    singles = std::max(singles, m);
  }
  EXPECT_GE(mean_of_max(BugSet::all(), 8, 64, {1, 4, 16}), singles);
}

TEST(Variants, CombinedDivergenceGrowsWithLengthSpread) {
  const double narrow = mean_of_max(BugSet::all(), 32, 64, {4, 16});
  const double wide = mean_of_max(BugSet::all(), 8, 64, {4, 16});
  EXPECT_GE(wide, narrow);
}

} // namespace
} // namespace padcheck
