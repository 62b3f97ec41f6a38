// SPDX-License-Identifier: Apache-2.0

#include "padcheck/harness.hpp"

#include "padcheck/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace padcheck {

namespace {

struct Divergence {
  double value = 0.0;
  std::size_t t = 0;
  std::size_t d = 0;
};

// Largest |candidate[b, t, :] - reference[0, t, :]| over t < length.
Divergence compare_sample(const SequenceBatch &candidate, std::size_t b,
                          const SequenceBatch &reference, std::size_t length) {
  Divergence div;
  for (std::size_t t = 0; t < length; ++t) {
    const auto c = candidate.data().row(b, t);
    const auto r = reference.data().row(0, t);
    for (std::size_t d = 0; d < c.size(); ++d) {
      const double diff = std::abs(c[d] - r[d]);
      if (diff > div.value)
        div = {diff, t, d};
    }
  }
  return div;
}

std::uint64_t case_seed(std::uint64_t seed, std::size_t index) {
  return derive_seed(seed, "case" + std::to_string(index));
}

SequenceBatch solo(const ModuleUnderTest &module, const Tensor &sequence) {
  return module.forward(make_batch({sequence}));
}

bool length_ok(const ModuleUnderTest &module, std::size_t input_length,
               std::size_t output_length) {
  return !module.length_transfer ||
         module.length_transfer(input_length) == output_length;
}

void finish(CheckReport &report) {
  report.overall_pass = std::all_of(report.cases.begin(), report.cases.end(),
                                    [](const CaseResult &c) { return c.pass; });
}

CheckReport start_report(const char *check, const ModuleUnderTest &module,
                         const CheckConfig &cfg) {
  cfg.validate();
  if (!module.forward)
    throw std::invalid_argument("module '" + module.name +
                                "' has no forward function");
  CheckReport report;
  report.check_name = check;
  report.module_name = module.name;
  report.seed = cfg.seed;
  report.tolerance = cfg.tolerance;
  report.batch_sizes = cfg.batch_sizes;
  return report;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_string(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
    case '"':
      out += "\\\"";
      break;
    case '\\':
      out += "\\\\";
      break;
    case '\n':
      out += "\\n";
      break;
    default:
      if (static_cast<unsigned char>(c) < 0x20) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\u%04x", c);
        out += buf;
      } else {
        out += c;
      }
    }
  }
  return out + "\"";
}

template <typename Seq> std::string json_uint_array(const Seq &values) {
  std::string out = "[";
  bool first = true;
  for (auto v : values) {
    if (!first)
      out += ", ";
    out += std::to_string(v);
    first = false;
  }
  return out + "]";
}

} // namespace

void CheckConfig::validate() const {
  if (length_min < 1)
    throw std::invalid_argument("check config: length_min must be >= 1");
  if (length_max < length_min)
    throw std::invalid_argument("check config: length_max < length_min");
  if (!(tolerance >= 0.0))
    throw std::invalid_argument("check config: tolerance must be >= 0");
  if (batch_sizes.empty())
    throw std::invalid_argument("check config: batch_sizes is empty");
  for (auto s : batch_sizes)
    if (s == 0)
      throw std::invalid_argument("check config: batch size 0");
  if (feature_dim == 0)
    throw std::invalid_argument("check config: feature_dim must be positive");
}

double CheckReport::max_divergence() const {
  double m = 0.0;
  for (const auto &c : cases)
    m = std::max(m, c.max_abs_divergence);
  return m;
}

std::vector<Tensor> sample_sequences(std::uint64_t seed, std::size_t count,
                                     const CheckConfig &cfg) {
  Rng rng(seed);
  Lengths lengths(count);
  const bool need_spread = count > 1 && cfg.length_max > cfg.length_min;
  do {
    for (auto &len : lengths)
      len = rng.uniform_int(cfg.length_min, cfg.length_max);
  } while (need_spread &&
           std::all_of(lengths.begin(), lengths.end(),
                       [&](std::size_t l) { return l == lengths.front(); }));
  std::vector<Tensor> out;
  out.reserve(count);
  for (auto len : lengths)
    out.emplace_back(Shape{len, cfg.feature_dim},
                     rng_gaussian(rng, len * cfg.feature_dim, 0.0, 1.0));
  return out;
}

CheckReport padding_invariance_check(const ModuleUnderTest &module,
                                     const CheckConfig &cfg) {
  CheckReport report = start_report("padding_invariance", module, cfg);
  for (std::size_t i = 0; i < cfg.num_cases; ++i) {
    CaseResult res;
    res.case_seed = case_seed(cfg.seed, i);
    res.batch_size = cfg.batch_sizes[i % cfg.batch_sizes.size()];
    const auto sequences = sample_sequences(res.case_seed, res.batch_size, cfg);
    for (const auto &s : sequences)
      res.lengths.push_back(s.dim(0));

    const SequenceBatch candidate = module.forward(make_batch(sequences));
    for (std::size_t b = 0; b < sequences.size(); ++b) {
      const SequenceBatch reference = solo(module, sequences[b]);
      const std::size_t out_len = reference.lengths()[0];
      if (candidate.lengths()[b] != out_len ||
          !length_ok(module, res.lengths[b], out_len) ||
          !length_ok(module, res.lengths[b], candidate.lengths()[b])) {
        res.failure = FailureKind::length_mismatch;
        continue;
      }
      const Divergence div = compare_sample(candidate, b, reference, out_len);
      if (div.value > res.max_abs_divergence) {
        res.max_abs_divergence = div.value;
        res.worst_position = {b, div.t, div.d};
      }
    }
    if (res.failure == FailureKind::none &&
        !(res.max_abs_divergence <= cfg.tolerance))
      res.failure = FailureKind::divergence;
    res.pass = res.failure == FailureKind::none;
    report.cases.push_back(std::move(res));
  }
  finish(report);
  return report;
}

CheckReport batch_size_sweep(const ModuleUnderTest &module,
                             const CheckConfig &cfg) {
  CheckReport report = start_report("batch_size_sweep", module, cfg);
  const std::size_t largest =
      *std::max_element(cfg.batch_sizes.begin(), cfg.batch_sizes.end());
  if (cfg.pool_size < largest)
    throw std::invalid_argument(
        "batch_size_sweep: pool of " + std::to_string(cfg.pool_size) +
        " sequences is smaller than batch size " + std::to_string(largest));

  const std::uint64_t pool_seed = case_seed(cfg.seed, 0);
  const auto pool = sample_sequences(pool_seed, cfg.pool_size, cfg);
  Lengths pool_lengths;
  std::vector<SequenceBatch> references;
  for (const auto &s : pool) {
    pool_lengths.push_back(s.dim(0));
    references.push_back(solo(module, s));
  }

  for (auto size : cfg.batch_sizes) {
    CaseResult res;
    res.case_seed = pool_seed;
    res.lengths = pool_lengths;
    res.batch_size = size;
    for (std::size_t start = 0; start < pool.size(); start += size) {
      const std::size_t end = std::min(pool.size(), start + size);
      const std::vector<Tensor> group(pool.begin() + start, pool.begin() + end);
      const SequenceBatch out = module.forward(make_batch(group));
      for (std::size_t b = 0; b < group.size(); ++b) {
        const std::size_t idx = start + b;
        const std::size_t out_len = references[idx].lengths()[0];
        if (out.lengths()[b] != out_len ||
            !length_ok(module, pool_lengths[idx], out_len)) {
          res.failure = FailureKind::length_mismatch;
          continue;
        }
        const Divergence div = compare_sample(out, b, references[idx], out_len);
        if (div.value > res.max_abs_divergence) {
          res.max_abs_divergence = div.value;
          res.worst_position = {idx, div.t, div.d};
        }
      }
    }
    if (res.failure == FailureKind::none &&
        !(res.max_abs_divergence <= cfg.tolerance))
      res.failure = FailureKind::divergence;
    res.pass = res.failure == FailureKind::none;
    report.cases.push_back(std::move(res));
  }
  finish(report);
  return report;
}

CheckReport causality_check(const ModuleUnderTest &module,
                            const CheckConfig &cfg) {
  CheckReport report = start_report("causality", module, cfg);
  if (!module.length_transfer)
    throw std::invalid_argument(
        "causality_check: module '" + module.name +
        "' declares no length transfer; causality is only defined for "
        "length-preserving modules");
  for (std::size_t len = cfg.length_min; len <= cfg.length_max; ++len)
    if (module.length_transfer(len) != len)
      throw std::invalid_argument(
          "causality_check: module '" + module.name + "' maps length " +
          std::to_string(len) + " to " +
          std::to_string(module.length_transfer(len)) +
          "; causality is only defined for length-preserving modules");

  for (std::size_t i = 0; i < cfg.num_cases; ++i) {
    CaseResult res;
    res.case_seed = case_seed(cfg.seed, i);
    res.batch_size = 1;
    Rng rng(res.case_seed);
    const std::size_t len = rng.uniform_int(cfg.length_min, cfg.length_max);
    res.lengths = {len};
    const Tensor input({len, cfg.feature_dim},
                       rng_gaussian(rng, len * cfg.feature_dim, 0.0, 1.0));
    const SequenceBatch base = solo(module, input);

    const std::size_t cuts = len > 1 ? cfg.cuts_per_case : 0;
    for (std::size_t c = 0; c < cuts; ++c) {
      const std::size_t cut = rng.uniform_int(1, len - 1);
      Tensor perturbed = input;
      for (std::size_t t = cut + 1; t < len; ++t)
        for (auto &v : perturbed.row(t))
          v += rng.gaussian(0.0, 1.0);
      const SequenceBatch out = solo(module, perturbed);
      const Divergence div = compare_sample(out, 0, base, cut + 1);
      if (div.value > res.max_abs_divergence) {
        res.max_abs_divergence = div.value;
        res.worst_position = {0, div.t, div.d};
      }
    }
    res.pass = res.max_abs_divergence <= cfg.tolerance;
    res.failure = res.pass ? FailureKind::none : FailureKind::divergence;
    report.cases.push_back(std::move(res));
  }
  finish(report);
  return report;
}

CheckReport mask_preservation_check(const ModuleUnderTest &module,
                                    const CheckConfig &cfg) {
  CheckReport report = start_report("mask_preservation", module, cfg);
  for (std::size_t i = 0; i < cfg.num_cases; ++i) {
    CaseResult res;
    res.case_seed = case_seed(cfg.seed, i);
    res.batch_size = cfg.batch_sizes[i % cfg.batch_sizes.size()];
    const auto sequences = sample_sequences(res.case_seed, res.batch_size, cfg);
    for (const auto &s : sequences)
      res.lengths.push_back(s.dim(0));

    const SequenceBatch out = module.forward(make_batch(sequences));
    for (std::size_t b = 0; b < out.batch_size(); ++b) {
      const std::size_t out_len = out.lengths()[b];
      if (!length_ok(module, res.lengths[b], out_len))
        res.failure = FailureKind::length_mismatch;
      for (std::size_t t = out_len; t < out.max_length(); ++t) {
        const auto row = out.data().row(b, t);
        for (std::size_t d = 0; d < row.size(); ++d)
          if (std::abs(row[d]) > res.max_abs_divergence) {
            res.max_abs_divergence = std::abs(row[d]);
            res.worst_position = {b, t, d};
          }
      }
    }
    if (res.failure == FailureKind::none && res.max_abs_divergence != 0.0)
      res.failure = FailureKind::divergence;
    res.pass = res.failure == FailureKind::none;
    report.cases.push_back(std::move(res));
  }
  finish(report);
  return report;
}

std::string to_json(const CheckReport &r) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"report_version\": " << kReportVersion << ",\n";
  os << "  \"check_name\": " << json_string(r.check_name) << ",\n";
  os << "  \"module_name\": " << json_string(r.module_name) << ",\n";
  os << "  \"seed\": " << r.seed << ",\n";
  os << "  \"tolerance\": " << fmt_double(r.tolerance) << ",\n";
  os << "  \"batch_sizes\": " << json_uint_array(r.batch_sizes) << ",\n";
  os << "  \"cases\": [";
  for (std::size_t i = 0; i < r.cases.size(); ++i) {
    const auto &c = r.cases[i];
    os << (i ? ",\n" : "\n") << "    {\"case_seed\": " << c.case_seed
       << ", \"lengths\": " << json_uint_array(c.lengths)
       << ", \"batch_size\": " << c.batch_size
       << ", \"max_abs_divergence\": " << fmt_double(c.max_abs_divergence)
       << ", \"worst_position\": " << json_uint_array(c.worst_position)
       << ", \"pass\": " << (c.pass ? "true" : "false");
    if (c.failure == FailureKind::length_mismatch)
      os << ", \"failure\": \"length_mismatch\"";
    os << '}';
  }
  os << (r.cases.empty() ? "],\n" : "\n  ],\n");
  os << "  \"overall_pass\": " << (r.overall_pass ? "true" : "false") << "\n";
  os << "}";
  return os.str();
}

std::string to_json(const std::vector<CheckReport> &reports) {
  std::string out = "[";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out += i ? ",\n" : "\n";
    out += to_json(reports[i]);
  }
  out += reports.empty() ? "]\n" : "\n]\n";
  return out;
}

} // namespace padcheck
