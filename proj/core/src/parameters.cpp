// SPDX-License-Identifier: Apache-2.0

#include "padcheck/parameters.hpp"

#include "padcheck/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace padcheck {

namespace {

constexpr double kInitStd = 0.02;

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

std::string shape_token(const Shape &shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

Shape parse_shape_token(const std::string &token) {
  Shape shape;
  std::istringstream is(token);
  std::string part;
  while (std::getline(is, part, 'x')) {
    if (part.empty() ||
        part.find_first_not_of("0123456789") != std::string::npos)
      throw std::runtime_error("bad shape token '" + token + "'");
    shape.push_back(std::stoull(part));
  }
  return shape;
}

void add_norm(std::vector<ParamSpec> &m, const std::string &prefix,
              std::size_t d) {
  m.push_back({prefix + ".gain", {d}});
  m.push_back({prefix + ".bias", {d}});
}

void add_linear(std::vector<ParamSpec> &m, const std::string &prefix,
                std::size_t out, std::size_t in) {
  m.push_back({prefix + ".weight", {out, in}});
  m.push_back({prefix + ".bias", {out}});
}

void sort_manifest(std::vector<ParamSpec> &m) {
  std::sort(m.begin(), m.end(),
            [](const ParamSpec &a, const ParamSpec &b) { return a.path < b.path; });
}

} // namespace

ConformerConfig ConformerConfig::desk() { return {}; }

ConformerConfig ConformerConfig::full_size() {
  ConformerConfig cfg;
  cfg.num_layers = 12;
  cfg.d_model = 512;
  cfg.num_heads = 8;
  cfg.ffn_dim = 2048;
  cfg.depthwise_kernel = 31;
  return cfg;
}

void ConformerConfig::validate() const {
  if (d_model == 0 || num_heads == 0 || d_model % num_heads != 0)
    throw std::invalid_argument("config: d_model must be a positive multiple "
                                "of num_heads");
  if (head_dim() % 2 != 0)
    throw std::invalid_argument("config: head dimension must be even for "
                                "sinusoidal encodings");
  if (ffn_dim == 0)
    throw std::invalid_argument("config: ffn_dim must be positive");
  if (depthwise_kernel % 2 == 0)
    throw std::invalid_argument("config: depthwise_kernel must be odd");
  if (pointwise_kernel % 2 == 0)
    throw std::invalid_argument("config: pointwise_kernel must be odd");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw std::invalid_argument("config: dropout_p must lie in [0, 1)");
  if (frontend_kernel == 0 || frontend_stride == 0)
    throw std::invalid_argument("config: frontend kernel/stride must be >= 1");
}

std::vector<ParamSpec> conformer_manifest(const ConformerConfig &cfg) {
  cfg.validate();
  const std::size_t d = cfg.d_model;
  std::vector<ParamSpec> m;
  for (const char *conv : {"frontend.conv1", "frontend.conv2"}) {
    m.push_back({std::string(conv) + ".weight", {d, d, cfg.frontend_kernel}});
    m.push_back({std::string(conv) + ".bias", {d}});
  }
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const std::string p = "layer" + std::to_string(l);
    for (const char *ffn : {".ffn1", ".ffn2"}) {
      add_norm(m, p + ffn + ".norm", d);
      add_linear(m, p + ffn + ".linear1", cfg.ffn_dim, d);
      add_linear(m, p + ffn + ".linear2", d, cfg.ffn_dim);
    }
    add_norm(m, p + ".mhsa.norm", d);
    for (const char *proj : {".query", ".key", ".value", ".out"})
      add_linear(m, p + ".mhsa" + proj, d, d);
    m.push_back({p + ".mhsa.pos.weight", {d, d}});
    add_norm(m, p + ".conv.norm", d);
    m.push_back({p + ".conv.pointwise1.weight", {2 * d, d, cfg.pointwise_kernel}});
    m.push_back({p + ".conv.pointwise1.bias", {2 * d}});
    m.push_back({p + ".conv.depthwise.weight", {d, cfg.depthwise_kernel}});
    m.push_back({p + ".conv.depthwise.bias", {d}});
    for (const char *bn : {".gain", ".bias", ".running_mean", ".running_var"})
      m.push_back({p + ".conv.bn" + bn, {d}});
    m.push_back({p + ".conv.pointwise2.weight", {d, d, cfg.pointwise_kernel}});
    m.push_back({p + ".conv.pointwise2.bias", {d}});
    add_norm(m, p + ".final_norm", d);
  }
  sort_manifest(m);
  return m;
}

std::vector<ParamSpec> causal_attention_manifest(std::size_t d_model) {
  std::vector<ParamSpec> m;
  for (const char *proj : {"causal.query", "causal.key", "causal.value",
                           "causal.out"})
    add_linear(m, proj, d_model, d_model);
  sort_manifest(m);
  return m;
}

std::vector<ParamSpec> ctc_head_manifest(std::size_t d_model,
                                         std::size_t vocab_size) {
  std::vector<ParamSpec> m;
  add_linear(m, "ctc", vocab_size + 1, d_model);
  sort_manifest(m);
  return m;
}

ParameterSet ParameterSet::initialize(const std::vector<ParamSpec> &manifest,
                                      std::uint64_t seed) {
  ParameterSet set;
  set.seed_ = seed;
  for (const auto &spec : manifest) {
    Rng rng(derive_seed(seed, spec.path));
    const std::size_t n = shape_numel(spec.shape);
    std::vector<double> values;
    if (ends_with(spec.path, ".gain")) {
      values = rng_gaussian(rng, n, 1.0, kInitStd);
    } else if (ends_with(spec.path, ".running_var")) {
      values = rng_gaussian(rng, n, 0.0, kInitStd);
      for (auto &v : values)
        v = 1.0 + std::abs(v);
    } else {
      values = rng_gaussian(rng, n, 0.0, kInitStd);
    }
    set.tensors_.emplace(spec.path, Tensor(spec.shape, std::move(values)));
  }
  return set;
}

const Tensor &ParameterSet::get(std::string_view path) const {
  auto it = tensors_.find(path);
  if (it == tensors_.end())
    throw std::out_of_range("missing parameter '" + std::string(path) + "'");
  return it->second;
}

Tensor &ParameterSet::get(std::string_view path) {
  auto it = tensors_.find(path);
  if (it == tensors_.end())
    throw std::out_of_range("missing parameter '" + std::string(path) + "'");
  return it->second;
}

bool ParameterSet::contains(std::string_view path) const {
  return tensors_.find(path) != tensors_.end();
}

void ParameterSet::set(const std::string &path, Tensor value) {
  value.check_finite();
  tensors_.insert_or_assign(path, std::move(value));
}

void ParameterSet::merge(const ParameterSet &other) {
  for (const auto &[path, t] : other.tensors_)
    if (!tensors_.emplace(path, t).second)
      throw std::invalid_argument("merge: duplicate parameter '" + path + "'");
}

void ParameterSet::check_complete(const std::vector<ParamSpec> &manifest) const {
  for (const auto &spec : manifest) {
    const Tensor &t = get(spec.path);
    if (t.shape() != spec.shape)
      throw std::invalid_argument("parameter '" + spec.path + "' has shape " +
                                  shape_to_string(t.shape()) + ", expected " +
                                  shape_to_string(spec.shape));
  }
}

std::string ParameterSet::manifest_text() const {
  std::string out;
  for (const auto &[path, t] : tensors_)
    out += path + ' ' + shape_token(t.shape()) + '\n';
  return out;
}

void ParameterSet::save(const std::string &dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream manifest(fs::path(dir) / "manifest.txt");
    manifest << manifest_text();
    std::ofstream seed(fs::path(dir) / "seed.txt");
    seed << seed_ << '\n';
    if (!manifest || !seed)
      throw std::runtime_error("failed writing parameter manifest to " + dir);
  }
  for (const auto &[path, t] : tensors_)
    save_tensor((fs::path(dir) / (path + ".pgt")).string(), t);
}

ParameterSet ParameterSet::load(const std::string &dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest)
    throw std::runtime_error("no manifest.txt in " + dir);
  ParameterSet set;
  std::ifstream seed(fs::path(dir) / "seed.txt");
  if (seed)
    seed >> set.seed_;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty())
      continue;
    std::istringstream is(line);
    std::string path, shape;
    if (!(is >> path >> shape))
      throw std::runtime_error("bad manifest line '" + line + "'");
    Tensor t = load_tensor((fs::path(dir) / (path + ".pgt")).string());
    if (t.shape() != parse_shape_token(shape))
      throw std::runtime_error("tensor file for '" + path +
                               "' disagrees with manifest shape " + shape);
    set.tensors_.emplace(path, std::move(t));
  }
  return set;
}

} // namespace padcheck
