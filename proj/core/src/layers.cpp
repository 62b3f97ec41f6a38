// SPDX-License-Identifier: Apache-2.0

#include "padcheck/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace padcheck {

namespace {

std::string join(std::string_view prefix, std::string_view leaf) {
  std::string out(prefix);
  out += '.';
  out += leaf;
  return out;
}

Shape with_last(const Shape &shape, std::size_t last) {
  Shape out = shape;
  out.back() = last;
  return out;
}

} // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor linear(const Tensor &x, const Tensor &weight, const Tensor &bias) {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weight.dim(0))
    throw std::invalid_argument("linear: weight [out, in] and bias [out] "
                                "expected");
  const std::size_t in = weight.dim(1);
  const std::size_t out = weight.dim(0);
  if (x.rank() == 0 || x.shape().back() != in)
    throw std::invalid_argument("linear: input feature size mismatch, got " +
                                shape_to_string(x.shape()) + " for weight " +
                                shape_to_string(weight.shape()));
  const std::size_t rows = x.size() / in;
  Tensor y(with_last(x.shape(), out));
  for (std::size_t r = 0; r < rows; ++r) {
    const double *xr = x.data().data() + r * in;
    double *yr = y.data().data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      double acc = bias[o];
      const double *wr = weight.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i)
        acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
  return y;
}

Tensor linear_no_bias(const Tensor &x, const Tensor &weight) {
  return linear(x, weight, Tensor({weight.dim(0)}));
}

Tensor relu(Tensor t) {
  for (auto &v : t.data())
    v = v > 0.0 ? v : 0.0;
  return t;
}

Tensor swish(Tensor t) {
  for (auto &v : t.data())
    v = v * sigmoid(v);
  return t;
}

Tensor glu(const Tensor &t) {
  if (t.rank() == 0 || t.shape().back() % 2 != 0)
    throw std::invalid_argument("glu: last dimension must be even, got " +
                                shape_to_string(t.shape()));
  const std::size_t width = t.shape().back();
  const std::size_t half = width / 2;
  const std::size_t rows = width == 0 ? 0 : t.size() / width;
  Tensor out(with_last(t.shape(), half));
  for (std::size_t r = 0; r < rows; ++r) {
    const double *src = t.data().data() + r * width;
    double *dst = out.data().data() + r * half;
    for (std::size_t c = 0; c < half; ++c)
      dst[c] = src[c] * sigmoid(src[half + c]);
  }
  return out;
}

Tensor layer_norm(const Tensor &t, const Tensor &gain, const Tensor &bias) {
  const std::size_t d = t.shape().back();
  if (gain.size() != d || bias.size() != d)
    throw std::invalid_argument("layer_norm: gain/bias size mismatch");
  const std::size_t rows = t.size() / d;
  Tensor out(t.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double *src = t.data().data() + r * d;
    double *dst = out.data().data() + r * d;
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c)
      mean += src[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c)
      var += (src[c] - mean) * (src[c] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kNormEpsilon);
    for (std::size_t c = 0; c < d; ++c)
      dst[c] = (src[c] - mean) * inv * gain[c] + bias[c];
  }
  return out;
}

Tensor dropout(Tensor t, double p, Mode mode, Rng *rng) {
  if (!(p >= 0.0 && p < 1.0))
    throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (mode == Mode::eval || p == 0.0)
    return t;
  if (rng == nullptr)
    throw std::invalid_argument("dropout: train mode requires an Rng");
  const double scale = 1.0 / (1.0 - p);
  for (auto &v : t.data())
    v = rng->uniform() < p ? 0.0 : v * scale;
  return t;
}

SequenceBatch with_data(const SequenceBatch &like, Tensor data) {
  return {std::move(data), like.lengths()};
}

SequenceBatch layer_norm(const SequenceBatch &x, const ParameterSet &params,
                         std::string_view prefix) {
  return with_data(x, layer_norm(x.data(), params.get(join(prefix, "gain")),
                                 params.get(join(prefix, "bias"))));
}

ChannelStats channel_statistics(const SequenceBatch &x, bool include_padding) {
  const std::size_t d = x.feature_dim();
  ChannelStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::size_t count = 0;
  for (std::size_t b = 0; b < x.batch_size(); ++b) {
    const std::size_t end = include_padding ? x.max_length() : x.lengths()[b];
    for (std::size_t t = 0; t < end; ++t) {
      const auto row = x.data().row(b, t);
      for (std::size_t c = 0; c < d; ++c)
        s.mean[c] += row[c];
      ++count;
    }
  }
  if (count == 0)
    throw std::invalid_argument("batch_norm: no positions to gather "
                                "statistics from");
  for (auto &m : s.mean)
    m /= static_cast<double>(count);
  for (std::size_t b = 0; b < x.batch_size(); ++b) {
    const std::size_t end = include_padding ? x.max_length() : x.lengths()[b];
    for (std::size_t t = 0; t < end; ++t) {
      const auto row = x.data().row(b, t);
      for (std::size_t c = 0; c < d; ++c)
        s.var[c] += (row[c] - s.mean[c]) * (row[c] - s.mean[c]);
    }
  }
  for (auto &v : s.var)
    v /= static_cast<double>(count);
  return s;
}

SequenceBatch batch_norm(const SequenceBatch &x, const ParameterSet &params,
                         std::string_view prefix, Mode mode) {
  const Tensor &gain = params.get(join(prefix, "gain"));
  const Tensor &bias = params.get(join(prefix, "bias"));
  const std::size_t d = x.feature_dim();
  ChannelStats stats;
  if (mode == Mode::eval) {
    const Tensor &rm = params.get(join(prefix, "running_mean"));
    const Tensor &rv = params.get(join(prefix, "running_var"));
    stats.mean.assign(rm.data().begin(), rm.data().end());
    stats.var.assign(rv.data().begin(), rv.data().end());
  } else {
    stats = channel_statistics(x, /*include_padding=*/false);
  }
  if (stats.mean.size() != d || gain.size() != d || bias.size() != d)
    throw std::invalid_argument("batch_norm: channel count mismatch");

  Tensor out(x.data().shape());
  for (std::size_t b = 0; b < x.batch_size(); ++b) {
    for (std::size_t t = 0; t < x.max_length(); ++t) {
      const auto src = x.data().row(b, t);
      auto dst = out.row(b, t);
      for (std::size_t c = 0; c < d; ++c)
        dst[c] = (src[c] - stats.mean[c]) /
                     std::sqrt(stats.var[c] + kNormEpsilon) * gain[c] +
                 bias[c];
    }
  }
  SequenceBatch y = with_data(x, std::move(out));
  return mode == Mode::eval ? y : apply_mask(std::move(y));
}

SequenceBatch ffn(const SequenceBatch &x, const ParameterSet &params,
                  std::string_view prefix, const ForwardOptions &opts) {
  Tensor h = linear(x.data(), params.get(join(prefix, "linear1.weight")),
                    params.get(join(prefix, "linear1.bias")));
  h = dropout(swish(std::move(h)), opts.dropout_p, opts.mode, opts.rng);
  Tensor y = linear(h, params.get(join(prefix, "linear2.weight")),
                    params.get(join(prefix, "linear2.bias")));
  return apply_mask(with_data(x, std::move(y)));
}

} // namespace padcheck
