// SPDX-License-Identifier: Apache-2.0

#include "padcheck/attention.hpp"

#include "padcheck/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
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

double dot(const double *a, const double *b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += a[i] * b[i];
  return acc;
}

// Softmax over the first `count` entries of `logits`, written to `probs`.
void softmax_prefix(const std::vector<double> &logits, std::size_t count,
                    std::vector<double> &probs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < count; ++j)
    mx = std::max(mx, logits[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    probs[j] = std::exp(logits[j] - mx);
    sum += probs[j];
  }
  for (std::size_t j = 0; j < count; ++j)
    probs[j] /= sum;
}

// [B, T, D] -> [B, H, T, D / H]
Tensor split_heads(const Tensor &x, std::size_t heads) {
  const std::size_t bsz = x.dim(0), t_len = x.dim(1), d = x.dim(2);
  const std::size_t dh = d / heads;
  Tensor out({bsz, heads, t_len, dh});
  auto dst = out.data();
  for (std::size_t b = 0; b < bsz; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t t = 0; t < t_len; ++t) {
        const auto src = x.row(b, t);
        std::copy_n(src.data() + h * dh, dh,
                    dst.data() + ((b * heads + h) * t_len + t) * dh);
      }
  return out;
}

} // namespace

std::vector<double> sinusoidal_pe(long distance, std::size_t dim) {
  if (dim % 2 != 0)
    throw std::invalid_argument("sinusoidal_pe: dimension " +
                                std::to_string(dim) + " must be even");
  std::vector<double> pe(dim);
  const double d = static_cast<double>(distance);
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double freq =
        std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
    pe[2 * i] = std::sin(d / freq);
    pe[2 * i + 1] = std::cos(d / freq);
  }
  return pe;
}

Tensor relative_shift(const Tensor &pre) {
  if (pre.rank() != 2 || pre.dim(1) + 1 != 2 * pre.dim(0))
    throw std::invalid_argument("relative_shift: expected [R, 2R - 1], got " +
                                shape_to_string(pre.shape()));
  const std::size_t r = pre.dim(0);
  const std::size_t w = pre.dim(1);
  // Prepend a zero column: [R, 2R].
  std::vector<double> flat(r * (w + 1), 0.0);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(pre.row(i).data(), w, flat.data() + i * (w + 1) + 1);
  // View as [2R, R], drop the first row, view the rest as [R, 2R - 1].
  const double *shifted = flat.data() + r;
  Tensor out({r, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j)
      out.at(i, j) = shifted[i * w + j];
  return out;
}

Tensor relative_shift_valid(const Tensor &padded_pre, std::size_t length) {
  const std::size_t t_len = padded_pre.dim(0);
  if (length < 1 || length > t_len)
    throw std::invalid_argument("relative_shift_valid: bad length");
  const std::size_t w = 2 * length - 1;
  Tensor block({length, w});
  for (std::size_t i = 0; i < length; ++i)
    std::copy_n(padded_pre.row(i).data(), w, block.row(i).data());
  const Tensor shifted = relative_shift(block);
  Tensor out({t_len, t_len});
  for (std::size_t i = 0; i < length; ++i)
    std::copy_n(shifted.row(i).data(), length, out.row(i).data());
  return out;
}

Tensor positional_pre_shift(const Tensor &queries, std::size_t length) {
  const std::size_t t_len = queries.dim(0);
  const std::size_t dh = queries.dim(1);
  if (length < 1 || length > t_len)
    throw std::invalid_argument("positional_pre_shift: bad length");
  const std::size_t w = 2 * length - 1;
  std::vector<std::vector<double>> table(w);
  for (std::size_t k = 0; k < w; ++k)
    table[k] = sinusoidal_pe(static_cast<long>(length) - 1 - static_cast<long>(k),
                             dh);
  Tensor pre({t_len, 2 * t_len - 1});
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t k = 0; k < w; ++k)
      pre.at(i, k) = dot(queries.row(i).data(), table[k].data(), dh);
  return pre;
}

Tensor shifted_positional_logits(const Tensor &queries, const Lengths &lengths,
                                 const ShiftFn &shift) {
  if (queries.rank() != 4 || lengths.size() != queries.dim(0))
    throw std::invalid_argument("positional logits: expected queries "
                                "[B, H, T, d_h] and one length per sample");
  const std::size_t bsz = queries.dim(0), heads = queries.dim(1),
                    t_len = queries.dim(2), dh = queries.dim(3);
  Tensor out({bsz, heads, t_len, t_len});
  for (std::size_t b = 0; b < bsz; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      const double *src = queries.data().data() + (b * heads + h) * t_len * dh;
      Tensor q({t_len, dh}, std::vector<double>(src, src + t_len * dh));
      const Tensor shifted =
          shift(positional_pre_shift(q, lengths[b]), lengths[b]);
      std::copy(shifted.data().begin(), shifted.data().end(),
                out.data().data() + (b * heads + h) * t_len * t_len);
    }
  }
  return out;
}

Tensor relative_position_logits(const Tensor &queries, const Lengths &lengths) {
  return shifted_positional_logits(queries, lengths, relative_shift_valid);
}

SequenceBatch rel_mhsa(const SequenceBatch &x, const ParameterSet &params,
                       std::string_view prefix, std::size_t num_heads,
                       const PositionalLogitsFn &positional) {
  const std::size_t bsz = x.batch_size(), t_len = x.max_length(),
                    d = x.feature_dim();
  if (num_heads == 0 || d % num_heads != 0)
    throw std::invalid_argument("rel_mhsa: d_model not divisible by heads");
  const std::size_t dh = d / num_heads;

  auto project = [&](const char *name) {
    return apply_mask(with_data(
        x, linear(x.data(), params.get(join(prefix, std::string(name) + ".weight")),
                  params.get(join(prefix, std::string(name) + ".bias")))));
  };
  const Tensor q = split_heads(project("query").data(), num_heads);
  const Tensor k = split_heads(project("key").data(), num_heads);
  const Tensor v = split_heads(project("value").data(), num_heads);
  const SequenceBatch pos_q = apply_mask(
      with_data(x, linear_no_bias(x.data(), params.get(join(prefix, "pos.weight")))));
  const Tensor pos = positional(split_heads(pos_q.data(), num_heads), x.lengths());

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor context({bsz, t_len, d});
  std::vector<double> logits(t_len), probs(t_len);
  for (std::size_t b = 0; b < bsz; ++b) {
    const std::size_t len = x.lengths()[b];
    for (std::size_t h = 0; h < num_heads; ++h) {
      const std::size_t base = (b * num_heads + h) * t_len;
      for (std::size_t i = 0; i < len; ++i) {
        const double *qi = q.data().data() + (base + i) * dh;
        for (std::size_t j = 0; j < len; ++j)
          logits[j] = dot(qi, k.data().data() + (base + j) * dh, dh) * scale +
                      pos[(base + i) * t_len + j];
        softmax_prefix(logits, len, probs);
        double *ctx = context.row(b, i).data() + h * dh;
        for (std::size_t j = 0; j < len; ++j) {
          const double *vj = v.data().data() + (base + j) * dh;
          for (std::size_t c = 0; c < dh; ++c)
            ctx[c] += probs[j] * vj[c];
        }
      }
    }
  }
  Tensor out = linear(context, params.get(join(prefix, "out.weight")),
                      params.get(join(prefix, "out.bias")));
  return apply_mask(with_data(x, std::move(out)));
}

SequenceBatch causal_attention_layer(const SequenceBatch &x,
                                     const ParameterSet &params,
                                     std::string_view prefix) {
  const std::size_t bsz = x.batch_size(), t_len = x.max_length(),
                    d = x.feature_dim();
  auto project = [&](const char *name) {
    return linear(x.data(), params.get(join(prefix, std::string(name) + ".weight")),
                  params.get(join(prefix, std::string(name) + ".bias")));
  };
  const Tensor q = project("query");
  const Tensor k = project("key");
  const Tensor v = project("value");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Tensor context({bsz, t_len, d});
  std::vector<double> logits(t_len), probs(t_len);
  for (std::size_t b = 0; b < bsz; ++b) {
    const std::size_t len = x.lengths()[b];
    for (std::size_t i = 0; i < len; ++i) {
      for (std::size_t j = 0; j <= i; ++j)
        logits[j] = dot(q.row(b, i).data(), k.row(b, j).data(), d) * scale;
      softmax_prefix(logits, i + 1, probs);
      auto ctx = context.row(b, i);
      for (std::size_t j = 0; j <= i; ++j) {
        const auto vj = v.row(b, j);
        for (std::size_t c = 0; c < d; ++c)
          ctx[c] += probs[j] * vj[c];
      }
    }
  }
  Tensor out = linear(context, params.get(join(prefix, "out.weight")),
                      params.get(join(prefix, "out.bias")));
  return apply_mask(with_data(x, std::move(out)));
}

} // namespace padcheck
