// SPDX-License-Identifier: Apache-2.0
/**
 * @file   harness.hpp
 * @brief  Property checks for sequence modules: padding invariance,
 *         batch-size sweep, causality and mask preservation.
 *
 * A module under test maps a padded SequenceBatch to a padded SequenceBatch
 * and declares the per-sample output length for a given input length. All
 * randomness comes from the check seed, so a (module, config) pair always
 * produces the same report.
 */

#pragma once

#include "padcheck/batch.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace padcheck {

struct ModuleUnderTest {
  std::string name;
  /// Deterministic, eval-mode forward pass.
  std::function<SequenceBatch(const SequenceBatch &)> forward;
  /// Output length for an input length. Leave empty for data-dependent
  /// lengths; the solo run is then the only length reference.
  std::function<std::size_t(std::size_t)> length_transfer;
};

struct CheckConfig {
  std::uint64_t seed = 0;
  std::size_t num_cases = 20;
  std::vector<std::size_t> batch_sizes = {1, 10, 100};
  std::size_t length_min = 8;
  std::size_t length_max = 64;
  std::size_t feature_dim = 16;
  double tolerance = 1e-9;
  /// Number of sequences grouped by batch_size_sweep.
  std::size_t pool_size = 100;
  /// Cut points sampled per causality case.
  std::size_t cuts_per_case = 4;

  void validate() const;
};

enum class FailureKind { none, divergence, length_mismatch };

struct CaseResult {
  std::uint64_t case_seed = 0;
  Lengths lengths;
  std::size_t batch_size = 0;
  double max_abs_divergence = 0.0;
  /// (b, t, d) of the largest divergence.
  std::array<std::size_t, 3> worst_position{0, 0, 0};
  bool pass = true;
  FailureKind failure = FailureKind::none;
};

struct CheckReport {
  std::string check_name;
  std::string module_name;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  std::vector<std::size_t> batch_sizes;
  std::vector<CaseResult> cases;
  bool overall_pass = true;

  double max_divergence() const;
};

inline constexpr int kReportVersion = 1;

/// Stable JSON rendering; keys in schema order, doubles with %.17g.
std::string to_json(const CheckReport &report);
/// A JSON array of reports, one per line group.
std::string to_json(const std::vector<CheckReport> &reports);

/// Solo run of each sequence vs. the same sequences in one padded batch.
CheckReport padding_invariance_check(const ModuleUnderTest &module,
                                     const CheckConfig &cfg);

/// One pool of sequences regrouped at each batch size; one case per size.
CheckReport batch_size_sweep(const ModuleUnderTest &module,
                             const CheckConfig &cfg);

/// Perturbs every position after a cut and requires earlier outputs to stay
/// put. The module must preserve lengths.
CheckReport causality_check(const ModuleUnderTest &module,
                            const CheckConfig &cfg);

/// Requires every padded output position to be exactly zero.
CheckReport mask_preservation_check(const ModuleUnderTest &module,
                                    const CheckConfig &cfg);

/// Random [L, D] standard-normal sequences with lengths in
/// [length_min, length_max]; at least two distinct lengths when count > 1
/// and the range allows it.
std::vector<Tensor> sample_sequences(std::uint64_t seed, std::size_t count,
                                     const CheckConfig &cfg);

} // namespace padcheck
