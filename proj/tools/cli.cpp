// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "padcheck/padcheck.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace padcheck::cli {

namespace {

struct Options {
  std::string module = "correct";
  std::uint64_t seed = 0;
  double tolerance = 1e-9;
  std::vector<std::size_t> batch_sizes = {1, 10, 100};
  std::size_t min_len = 8;
  std::size_t max_len = 64;
  std::string preset = "desk";
  std::string json_path;
  std::vector<std::string> checks;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kModules = {"correct", "b1",     "b2",
                                           "b3",      "all",    "causal",
                                           "noncausal", "ctc-compress"};
const std::vector<std::string> kEncoderVariants = {"correct", "b1", "b2", "b3",
                                                   "all"};
const std::vector<std::string> kChecks = {"padding", "sweep", "causality",
                                          "mask"};
constexpr std::size_t kCtcVocab = 10;
constexpr std::size_t kSweepPool = 100;
constexpr std::size_t kCtcDemoBatches = 5;
constexpr std::size_t kCtcDemoBatchSize = 10;

ConformerConfig preset_config(const Options &o, std::ostream &err) {
  if (o.preset == "paper") {
    err << "warning: preset 'paper' (12 layers, d_model 512) holds about "
           "78M parameters; checks on it take a long time\n";
    return ConformerConfig::full_size();
  }
  return ConformerConfig::desk();
}

CheckConfig check_config(const Options &o, const ConformerConfig &model) {
  CheckConfig cc;
  cc.seed = o.seed;
  cc.tolerance = o.tolerance;
  cc.batch_sizes = o.batch_sizes;
  cc.length_min = o.min_len;
  cc.length_max = o.max_len;
  cc.feature_dim = model.d_model;
  if (!o.batch_sizes.empty())
    cc.pool_size = std::max(
        kSweepPool, *std::max_element(o.batch_sizes.begin(), o.batch_sizes.end()));
  try {
    cc.validate();
  } catch (const std::invalid_argument &e) {
    throw UsageError(e.what());
  }
  return cc;
}

std::shared_ptr<const ParameterSet> init_params(const std::vector<ParamSpec> &m,
                                                std::uint64_t seed) {
  return std::make_shared<const ParameterSet>(ParameterSet::initialize(m, seed));
}

// Default init (std 0.02) makes the argmax nearly constant, so every sample
// collapses to one run. Rescale the projection to std 1/sqrt(d_model).
std::shared_ptr<const ParameterSet> ctc_head(std::size_t d_model,
                                             std::uint64_t seed) {
  ParameterSet head =
      ParameterSet::initialize(ctc_head_manifest(d_model, kCtcVocab), seed);
  const double scale = 1.0 / (0.02 * std::sqrt(static_cast<double>(d_model)));
  for (auto &v : head.get("ctc.weight").data())
    v *= scale;
  return std::make_shared<const ParameterSet>(std::move(head));
}

ModuleUnderTest build_subject(const std::string &module,
                              const ConformerConfig &model, std::uint64_t seed) {
  if (const auto bugs = BugSet::parse(module))
    return encoder_subject(
        build_encoder_with_bugs(model, make_conformer_params(model, seed), *bugs),
        module);
  if (module == "causal")
    return causal_attention_subject(
        init_params(causal_attention_manifest(model.d_model), seed));
  if (module == "noncausal") {
    std::vector<ParamSpec> mhsa;
    for (auto &spec : conformer_manifest(model))
      if (spec.path.starts_with("layer0.mhsa."))
        mhsa.push_back(std::move(spec));
    return rel_mhsa_subject(init_params(mhsa, seed), "layer0.mhsa",
                            model.num_heads);
  }
  if (module == "ctc-compress")
    return ctc_compress_subject(
        Encoder(model, make_conformer_params(model, seed)),
        ctc_head(model.d_model, seed));
  throw UsageError("unknown module '" + module + "'");
}

bool preserves_length(const std::string &module) {
  return module == "causal" || module == "noncausal";
}

std::vector<std::string> default_checks(const std::string &module) {
  if (preserves_length(module))
    return kChecks;
  return {"padding", "sweep", "mask"};
}

CheckReport run_check(const std::string &check, const ModuleUnderTest &subject,
                      const CheckConfig &cc) {
  if (check == "padding")
    return padding_invariance_check(subject, cc);
  if (check == "sweep")
    return batch_size_sweep(subject, cc);
  if (check == "causality")
    return causality_check(subject, cc);
  return mask_preservation_check(subject, cc);
}

void print_table(const Options &o, const std::vector<CheckReport> &reports,
                 std::ostream &out) {
  out << fmt::format("module {}  preset {}  seed {}  tolerance {:.2e}\n",
                     o.module, o.preset, o.seed, o.tolerance);
  out << fmt::format("{:<20} {:>6} {:>7} {:>15}  {}\n", "check", "cases",
                     "failed", "max divergence", "result");
  for (const auto &r : reports) {
    const auto failed = std::count_if(r.cases.begin(), r.cases.end(),
                                      [](const CaseResult &c) { return !c.pass; });
    const bool length_issue =
        std::any_of(r.cases.begin(), r.cases.end(), [](const CaseResult &c) {
          return c.failure == FailureKind::length_mismatch;
        });
    out << fmt::format("{:<20} {:>6} {:>7} {:>15.2e}  {}{}\n", r.check_name,
                       r.cases.size(), failed, r.max_divergence(),
                       r.overall_pass ? "pass" : "FAIL",
                       length_issue ? " (length mismatch)" : "");
  }
}

void write_json(const std::string &path, const std::string &json,
                std::ostream &out) {
  if (path == "-") {
    out << json;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  file << json;
  if (!file)
    throw std::runtime_error("cannot write JSON report to '" + path + "'");
}

int cmd_verify(Options o, std::ostream &out, std::ostream &err) {
  if (o.checks.empty())
    o.checks = default_checks(o.module);
  for (const auto &c : o.checks)
    if (c == "causality" && !preserves_length(o.module))
      throw UsageError("causality check needs a length-preserving module "
                       "(causal or noncausal), not '" + o.module + "'");
  const ConformerConfig model = preset_config(o, err);
  const CheckConfig cc = check_config(o, model);
  const ModuleUnderTest subject = build_subject(o.module, model, o.seed);

  std::vector<CheckReport> reports;
  for (const auto &c : o.checks)
    reports.push_back(run_check(c, subject, cc));
  const bool pass = std::all_of(reports.begin(), reports.end(),
                                [](const CheckReport &r) { return r.overall_pass; });

  if (o.json_path != "-") {
    print_table(o, reports, out);
    out << "overall: " << (pass ? "PASS" : "FAIL") << "\n";
  }
  if (!o.json_path.empty())
    write_json(o.json_path, to_json(reports), out);
  return pass ? kExitPass : kExitFail;
}

int cmd_demo_bugs(const Options &o, std::ostream &out, std::ostream &err) {
  const ConformerConfig model = preset_config(o, err);
  const CheckConfig cc = check_config(o, model);
  out << fmt::format("batch-size sweep: max |batched - solo| over a pool of {} "
                     "sequences, seed {}\n",
                     cc.pool_size, o.seed);
  out << fmt::format("{:<10}", "variant");
  for (auto size : cc.batch_sizes)
    out << fmt::format(" {:>10}", size);
  out << "\n";
  const auto params = make_conformer_params(model, o.seed);
  for (const auto &variant : kEncoderVariants) {
    const Encoder enc = build_encoder_with_bugs(model, params, *BugSet::parse(variant));
    const CheckReport r = batch_size_sweep(encoder_subject(enc, variant), cc);
    out << fmt::format("{:<10}", variant);
    for (const auto &c : r.cases)
      out << fmt::format(" {:>10.2e}", c.max_abs_divergence);
    out << "\n";
  }
  return kExitPass;
}

struct CompressionAudit {
  std::size_t frames = 0;
  std::size_t runs = 0;
  double residual = 0.0;
  bool oracle_match = true;
};

// Rebuilds each run mean from the run-length oracle and compares it with the
// compressed batch; also measures the weighted-sum conservation residual.
CompressionAudit audit_compression(const SequenceBatch &x,
                                   const CtcDistribution &dist,
                                   const SequenceBatch &compressed) {
  CompressionAudit a;
  const auto labels = ctc_argmax(dist);
  const std::size_t d = x.feature_dim();
  for (std::size_t b = 0; b < x.batch_size(); ++b) {
    const auto runs = run_length_oracle(labels[b]);
    a.frames += x.lengths()[b];
    a.runs += runs.size();
    if (compressed.lengths()[b] != runs.size()) {
      a.oracle_match = false;
      continue;
    }
    std::size_t start = 0;
    std::vector<double> weighted(d, 0.0), direct(d, 0.0);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (std::size_t t = start; t < start + runs[r].length; ++t)
          sum += x.data().at(b, t, c);
        const double mean = sum / static_cast<double>(runs[r].length);
        if (compressed.data().at(b, r, c) != mean)
          a.oracle_match = false;
        weighted[c] +=
            static_cast<double>(runs[r].length) * compressed.data().at(b, r, c);
      }
      start += runs[r].length;
    }
    for (std::size_t t = 0; t < x.lengths()[b]; ++t)
      for (std::size_t c = 0; c < d; ++c)
        direct[c] += x.data().at(b, t, c);
    for (std::size_t c = 0; c < d; ++c)
      a.residual = std::max(a.residual, std::abs(weighted[c] - direct[c]));
  }
  return a;
}

int cmd_ctc_demo(const Options &o, std::ostream &out, std::ostream &err) {
  const ConformerConfig model = preset_config(o, err);
  CheckConfig cc = check_config(o, model);
  const Encoder enc(model, make_conformer_params(model, o.seed));
  const auto head = ctc_head(model.d_model, o.seed);

  bool ok = true;
  out << fmt::format("{:<6} {:>12} {:>12} {:>8} {:>14}  {}\n", "batch",
                     "mean frames", "mean runs", "ratio", "max residual",
                     "oracle");
  for (std::size_t i = 0; i < kCtcDemoBatches; ++i) {
    const auto seqs = sample_sequences(derive_seed(o.seed, "ctc-demo" + std::to_string(i)),
                                       kCtcDemoBatchSize, cc);
    const SequenceBatch h = enc.forward(make_batch(seqs));
    const CtcDistribution dist = ctc_project(h, *head);
    dist.validate();
    const SequenceBatch compressed = ctc_compress(h, dist);
    const CompressionAudit a = audit_compression(h, dist, compressed);
    const double n = static_cast<double>(seqs.size());
    ok = ok && a.oracle_match && a.residual <= 1e-12 && a.runs <= a.frames;
    out << fmt::format("{:<6} {:>12.2f} {:>12.2f} {:>8.3f} {:>14.2e}  {}\n", i,
                       a.frames / n, a.runs / n,
                       static_cast<double>(a.runs) / static_cast<double>(a.frames),
                       a.residual, a.oracle_match ? "match" : "MISMATCH");
  }

  // Alternating labels leave nothing to merge.
  const std::size_t frames = 16;
  Rng rng(derive_seed(o.seed, "ctc-demo-alternating"));
  const Tensor x({frames, model.d_model},
                 rng_gaussian(rng, frames * model.d_model, 0.0, 1.0));
  Tensor probs({1, frames, kCtcVocab + 1});
  for (std::size_t t = 0; t < frames; ++t)
    probs.at(0, t, t % 2) = 1.0;
  const SequenceBatch input = make_batch({x});
  const SequenceBatch alt = ctc_compress(input, {probs, {frames}});
  const double ratio =
      static_cast<double>(alt.lengths()[0]) / static_cast<double>(frames);
  ok = ok && ratio == 1.0 && alt.data() == input.data();
  out << fmt::format("alternating-label fixture: compression ratio {:.3f}\n", ratio);
  out << "overall: " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitPass : kExitFail;
}

void add_common(CLI::App *cmd, Options &o) {
  cmd->add_option("--seed", o.seed, "Seed for parameters and test data")
      ->capture_default_str();
  cmd->add_option("--batch-sizes", o.batch_sizes, "Comma-separated batch sizes")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--min-len", o.min_len, "Shortest sampled sequence")
      ->capture_default_str();
  cmd->add_option("--max-len", o.max_len, "Longest sampled sequence")
      ->capture_default_str();
  cmd->add_option("--preset", o.preset, "Encoder size")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Padding and batching property checks for sequence encoders",
               "padcheck"};
  app.require_subcommand(1);
  Options o;

  CLI::App *verify = app.add_subcommand("verify", "Run property checks on a module");
  verify->add_option("--module", o.module, "Module variant")
      ->check(CLI::IsMember(kModules))
      ->capture_default_str();
  verify->add_option("--tol", o.tolerance, "Divergence tolerance")
      ->capture_default_str();
  verify->add_option("--json", o.json_path, "Write the JSON report here ('-' for stdout)");
  verify->add_option("--checks", o.checks,
                     "Comma-separated subset of padding,sweep,causality,mask")
      ->delimiter(',')
      ->check(CLI::IsMember(kChecks));
  add_common(verify, o);

  CLI::App *demo = app.add_subcommand(
      "demo-bugs", "Divergence of every encoder variant per batch size");
  add_common(demo, o);

  CLI::App *ctc = app.add_subcommand(
      "ctc-demo", "CTC compression statistics and oracle checks");
  add_common(ctc, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0)
      return app.exit(e, out, err);
    err << "error: " << e.what() << "\n\n";
    const CLI::App *sub = app.get_subcommands().empty() ? &app
                                                        : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (verify->parsed())
      return cmd_verify(o, out, err);
    if (demo->parsed())
      return cmd_demo_bugs(o, out, err);
    return cmd_ctc_demo(o, out, err);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

} // namespace padcheck::cli
