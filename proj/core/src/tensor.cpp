// SPDX-License-Identifier: Apache-2.0

#include "padcheck/tensor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace padcheck {

namespace {

constexpr std::array<char, 4> kMagic = {'P', 'G', 'T', '1'};
constexpr std::uint64_t kMaxRank = 16;

void put_u64(std::ostream &out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i)
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream &in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char *>(bytes.data()), bytes.size());
  if (!in)
    throw std::runtime_error("tensor stream truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

} // namespace

std::size_t shape_numel(const Shape &shape) {
  std::size_t n = 1;
  for (auto d : shape)
    n *= d;
  return n;
}

std::string shape_to_string(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size())
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " +
                                shape_to_string(shape_));
  check_finite();
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  t.check_finite();
  return t;
}

std::span<const double> Tensor::row(std::size_t i) const {
  const std::size_t w = shape_.back();
  return {data_.data() + i * w, w};
}

std::span<double> Tensor::row(std::size_t i) {
  const std::size_t w = shape_.back();
  return {data_.data() + i * w, w};
}

std::span<const double> Tensor::row(std::size_t i, std::size_t j) const {
  const std::size_t w = shape_[2];
  return {data_.data() + (i * shape_[1] + j) * w, w};
}

std::span<double> Tensor::row(std::size_t i, std::size_t j) {
  const std::size_t w = shape_[2];
  return {data_.data() + (i * shape_[1] + j) * w, w};
}

void Tensor::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw std::invalid_argument("non-finite tensor value at flat index " +
                                  std::to_string(i));
}

double max_abs_diff(const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("max_abs_diff: shape mismatch " +
                                shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void write_tensor(std::ostream &out, const Tensor &t) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, t.rank());
  for (auto d : t.shape())
    put_u64(out, d);
  for (double v : t.data())
    put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out)
    throw std::runtime_error("failed writing tensor");
}

Tensor read_tensor(std::istream &in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic)
    throw std::runtime_error("bad tensor magic (expected PGT1)");
  const std::uint64_t rank = get_u64(in);
  if (rank > kMaxRank)
    throw std::runtime_error("tensor rank " + std::to_string(rank) +
                             " exceeds limit");
  Shape shape(rank);
  for (auto &d : shape)
    d = get_u64(in);
  std::vector<double> data(shape_numel(shape));
  for (auto &v : data)
    v = std::bit_cast<double>(get_u64(in));
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::string &path, const Tensor &t) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path + " for writing");
  write_tensor(out, t);
}

Tensor load_tensor(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return read_tensor(in);
}

} // namespace padcheck
