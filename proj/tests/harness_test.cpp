// SPDX-License-Identifier: Apache-2.0

#include "padcheck/harness.hpp"
#include "padcheck/rng.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <set>

namespace padcheck {
namespace {

std::size_t same_length(std::size_t len) { return len; }

ModuleUnderTest make_module(std::string name,
                            std::function<SequenceBatch(const SequenceBatch &)> fn) {
  return {std::move(name), std::move(fn), same_length};
}

ModuleUnderTest identity() {
  return make_module("identity", [](const SequenceBatch &x) { return x; });
}

// Adds `scale * (T - L)` to every valid entry: divergence is known exactly.
ModuleUnderTest padding_offset(double scale) {
  return make_module("offset", [scale](const SequenceBatch &x) {
    Tensor y = x.data();
    for (std::size_t b = 0; b < x.batch_size(); ++b) {
      const double shift =
          scale * static_cast<double>(x.max_length() - x.lengths()[b]);
      for (std::size_t t = 0; t < x.lengths()[b]; ++t)
        for (auto &v : y.row(b, t))
          v += shift;
    }
    return SequenceBatch(std::move(y), x.lengths());
  });
}

// out[t] = sum of x[0..t] (causal) or x[t..L-1] (anti-causal).
ModuleUnderTest running_sum(bool forward_in_time) {
  return make_module(forward_in_time ? "prefix_sum" : "suffix_sum",
                     [forward_in_time](const SequenceBatch &x) {
                       Tensor y(x.data().shape());
                       for (std::size_t b = 0; b < x.batch_size(); ++b) {
                         const std::size_t len = x.lengths()[b];
                         for (std::size_t k = 0; k < len; ++k) {
                           const std::size_t t = forward_in_time ? k : len - 1 - k;
                           const std::size_t prev = forward_in_time ? t - 1 : t + 1;
                           for (std::size_t d = 0; d < x.feature_dim(); ++d)
                             y.at(b, t, d) = x.data().at(b, t, d) +
                                             (k == 0 ? 0.0 : y.at(b, prev, d));
                         }
                       }
                       return SequenceBatch(std::move(y), x.lengths());
                     });
}

CheckConfig small_config() {
  CheckConfig cfg;
  cfg.num_cases = 6;
  cfg.batch_sizes = {1, 3, 8};
  cfg.length_min = 4;
  cfg.length_max = 20;
  cfg.feature_dim = 3;
  cfg.pool_size = 16;
  return cfg;
}

TEST(SampleSequences, LengthsInRangeAndSpread) {
  CheckConfig cfg = small_config();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto seqs = sample_sequences(seed, 2, cfg);
    ASSERT_EQ(seqs.size(), 2u);
    EXPECT_NE(seqs[0].dim(0), seqs[1].dim(0));
    for (const auto &s : seqs) {
      EXPECT_GE(s.dim(0), cfg.length_min);
      EXPECT_LE(s.dim(0), cfg.length_max);
      EXPECT_EQ(s.dim(1), cfg.feature_dim);
    }
  }
  const auto a = sample_sequences(9, 5, cfg);
  const auto b = sample_sequences(9, 5, cfg);
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_EQ(a[i], b[i]);
  cfg.length_min = cfg.length_max = 7;
  for (const auto &s : sample_sequences(1, 4, cfg))
    EXPECT_EQ(s.dim(0), 7u);
}

TEST(PaddingInvariance, IdentityPassesWithZeroDivergence) {
  const CheckReport r = padding_invariance_check(identity(), small_config());
  EXPECT_TRUE(r.overall_pass);
  ASSERT_EQ(r.cases.size(), 6u);
  for (std::size_t i = 0; i < r.cases.size(); ++i) {
    EXPECT_EQ(r.cases[i].batch_size, small_config().batch_sizes[i % 3]);
    EXPECT_EQ(r.cases[i].lengths.size(), r.cases[i].batch_size);
    EXPECT_EQ(r.cases[i].case_seed, derive_seed(0, "case" + std::to_string(i)));
    EXPECT_EQ(r.cases[i].max_abs_divergence, 0.0);
  }
}

TEST(PaddingInvariance, ReportsExactInjectedDivergence) {
  const double scale = 1e-3;
  const CheckReport r = padding_invariance_check(padding_offset(scale), small_config());
  EXPECT_FALSE(r.overall_pass);
  for (const auto &c : r.cases) {
    std::size_t t_max = 0, l_min = SIZE_MAX;
    for (auto l : c.lengths) {
      t_max = std::max(t_max, l);
      l_min = std::min(l_min, l);
    }
    const double expected = scale * static_cast<double>(t_max - l_min);
    EXPECT_NEAR(c.max_abs_divergence, expected, 1e-12);
    EXPECT_EQ(c.pass, c.batch_size == 1);
    if (c.batch_size > 1) {
      EXPECT_EQ(c.failure, FailureKind::divergence);
      EXPECT_EQ(c.lengths[c.worst_position[0]], l_min);
    }
  }
}

TEST(PaddingInvariance, ToleranceBoundary) {
  CheckConfig cfg = small_config();
  cfg.tolerance = 1.0; // offsets are at most 16e-3 here
  EXPECT_TRUE(padding_invariance_check(padding_offset(1e-3), cfg).overall_pass);
  cfg.tolerance = 0.0;
  const CheckReport strict = padding_invariance_check(padding_offset(1e-3), cfg);
  EXPECT_FALSE(strict.overall_pass);
  // The bound is inclusive.
  cfg.tolerance = strict.max_divergence();
  EXPECT_TRUE(padding_invariance_check(padding_offset(1e-3), cfg).overall_pass);
  cfg.tolerance = std::nextafter(strict.max_divergence(), 0.0);
  EXPECT_FALSE(padding_invariance_check(padding_offset(1e-3), cfg).overall_pass);
}

TEST(PaddingInvariance, LengthMismatchIsAFailureKind) {
  ModuleUnderTest liar = identity();
  liar.name = "liar";
  liar.length_transfer = [](std::size_t len) { return len + 1; };
  const CheckReport r = padding_invariance_check(liar, small_config());
  EXPECT_FALSE(r.overall_pass);
  for (const auto &c : r.cases)
    EXPECT_EQ(c.failure, FailureKind::length_mismatch);
  EXPECT_NE(to_json(r).find("\"failure\": \"length_mismatch\""), std::string::npos);
}

TEST(PaddingInvariance, ModuleWithoutForwardRejected) {
  ModuleUnderTest empty;
  empty.name = "empty";
  EXPECT_THROW(padding_invariance_check(empty, small_config()), std::invalid_argument);
}

TEST(BatchSizeSweep, OneCasePerSizeOverOnePool) {
  const CheckConfig cfg = small_config();
  const CheckReport ok = batch_size_sweep(identity(), cfg);
  EXPECT_TRUE(ok.overall_pass);
  ASSERT_EQ(ok.cases.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ok.cases[i].batch_size, cfg.batch_sizes[i]);
    EXPECT_EQ(ok.cases[i].lengths.size(), cfg.pool_size);
    EXPECT_EQ(ok.cases[i].lengths, ok.cases[0].lengths);
  }
  const CheckReport bad = batch_size_sweep(padding_offset(1e-3), cfg);
  EXPECT_TRUE(bad.cases[0].pass);
  EXPECT_FALSE(bad.cases[1].pass);
  EXPECT_FALSE(bad.cases[2].pass);
}

TEST(BatchSizeSweep, PoolSmallerThanLargestBatchRejected) {
  CheckConfig cfg = small_config();
  cfg.pool_size = 5;
  EXPECT_THROW(batch_size_sweep(identity(), cfg), std::invalid_argument);
}

TEST(Causality, PrefixSumPassesSuffixSumFails) {
  const CheckConfig cfg = small_config();
  const CheckReport causal = causality_check(running_sum(true), cfg);
  EXPECT_TRUE(causal.overall_pass);
  EXPECT_EQ(causal.max_divergence(), 0.0);
  const CheckReport anti = causality_check(running_sum(false), cfg);
  EXPECT_FALSE(anti.overall_pass);
  for (const auto &c : anti.cases)
    EXPECT_GT(c.max_abs_divergence, 0.0);
}

TEST(Causality, RequiresLengthPreservingModule) {
  ModuleUnderTest m = identity();
  m.length_transfer = nullptr;
  EXPECT_THROW(causality_check(m, small_config()), std::invalid_argument);
  m.length_transfer = [](std::size_t len) { return (len + 1) / 2; };
  EXPECT_THROW(causality_check(m, small_config()), std::invalid_argument);
}

TEST(MaskPreservation, DetectsNonZeroPadding) {
  const CheckConfig cfg = small_config();
  EXPECT_TRUE(mask_preservation_check(identity(), cfg).overall_pass);
  const ModuleUnderTest shift = make_module("shift", [](const SequenceBatch &x) {
    Tensor y = x.data();
    for (auto &v : y.data())
      v += 0.5;
    return SequenceBatch(std::move(y), x.lengths());
  });
  const CheckReport r = mask_preservation_check(shift, cfg);
  EXPECT_FALSE(r.overall_pass);
  for (const auto &c : r.cases)
    EXPECT_EQ(c.max_abs_divergence, c.batch_size == 1 ? 0.0 : 0.5);
}

TEST(CheckConfigTest, Validation) {
  CheckConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.length_min = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = CheckConfig();
  cfg.length_max = 4;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = CheckConfig();
  cfg.batch_sizes = {};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = CheckConfig();
  cfg.tolerance = std::nan("");
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ReportJson, SchemaAndValues) {
  const CheckReport r = padding_invariance_check(padding_offset(1e-3), small_config());
  const auto j = nlohmann::json::parse(to_json(r));
  const std::vector<std::string> keys = {"report_version", "check_name",
                                         "module_name",    "seed",
                                         "tolerance",      "batch_sizes",
                                         "cases",          "overall_pass"};
  std::set<std::string> present;
  for (const auto &[k, v] : j.items())
    present.insert(k);
  EXPECT_EQ(present, std::set<std::string>(keys.begin(), keys.end()));
  EXPECT_EQ(j["report_version"], 1);
  EXPECT_EQ(j["check_name"], "padding_invariance");
  EXPECT_EQ(j["module_name"], "offset");
  EXPECT_EQ(j["tolerance"].get<double>(), 1e-9);
  EXPECT_EQ(j["overall_pass"], false);
  ASSERT_EQ(j["cases"].size(), r.cases.size());
  for (std::size_t i = 0; i < r.cases.size(); ++i) {
    const auto &c = j["cases"][i];
    EXPECT_EQ(c["case_seed"].get<std::uint64_t>(), r.cases[i].case_seed);
    EXPECT_EQ(c["lengths"].get<std::vector<std::size_t>>(), r.cases[i].lengths);
    // %.17g round-trips doubles exactly.
    EXPECT_EQ(c["max_abs_divergence"].get<double>(), r.cases[i].max_abs_divergence);
    EXPECT_EQ(c["worst_position"].size(), 3u);
    EXPECT_EQ(c["pass"].get<bool>(), r.cases[i].pass);
    EXPECT_FALSE(c.contains("failure"));
  }
}

TEST(ReportJson, DeterministicAndArrayForm) {
  const CheckConfig cfg = small_config();
  const std::string a = to_json(padding_invariance_check(padding_offset(1e-3), cfg));
  const std::string b = to_json(padding_invariance_check(padding_offset(1e-3), cfg));
  EXPECT_EQ(a, b);
  const std::vector<CheckReport> both = {padding_invariance_check(identity(), cfg),
                                         mask_preservation_check(identity(), cfg)};
  const auto arr = nlohmann::json::parse(to_json(both));
  ASSERT_TRUE(arr.is_array());
  EXPECT_EQ(arr.size(), 2u);
  EXPECT_EQ(arr[1]["check_name"], "mask_preservation");
  EXPECT_TRUE(nlohmann::json::parse(to_json(std::vector<CheckReport>{})).empty());
}

TEST(ReportJson, EscapesNames) {
  CheckReport r;
  r.module_name = "a\"b\\c\n";
  EXPECT_EQ(nlohmann::json::parse(to_json(r))["module_name"], "a\"b\\c\n");
}

} // namespace
} // namespace padcheck
