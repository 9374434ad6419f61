#include "dau/nn.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "dau/binary_io.hpp"
#include "dau/errors.hpp"

namespace dau::nn {

using io::read_le;
using io::write_le;

namespace {

using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const RowVector>;
using RowMap = Eigen::Map<RowVector>;

void require_finite(const Matrix& x) {
  if (!x.allFinite()) throw InvalidArgument("network input contains non-finite values");
}

void check_cache(const void* self, const ForwardCache& cache, std::size_t expected_tensors,
                 const Matrix& dy, std::size_t out_dim) {
  if (cache.owner != self || cache.tensors.size() != expected_tensors)
    throw InvalidArgument("forward cache does not belong to this function");
  if (static_cast<std::size_t>(dy.cols()) != out_dim ||
      dy.rows() != cache.tensors.front().rows())
    throw InvalidArgument("output cotangent shape does not match the cached forward pass");
}

constexpr std::array<char, 8> kMlpMagic{'D', 'A', 'U', 'M', 'L', 'P', '0', '1'};

// Contrast of two affine outputs sharing weights `w` and bias `b`.
Matrix affine_contrast_to_column(const Matrix& features, const ConstMatrixMap& w,
                                 const ConstRowMap& b, std::size_t ref) {
  const auto r = static_cast<Eigen::Index>(ref);
  Matrix dw = w.rowwise() - w.row(r);
  RowVector db = b.array() - b(r);
  Matrix out = features * dw.transpose();
  out.rowwise() += db;
  return out;
}

}  // namespace

Matrix Function::contrast_to_column(const ForwardCache& cache, std::size_t ref) const {
  if (cache.tensors.empty()) throw InvalidArgument("empty forward cache");
  if (ref >= output_dim()) throw InvalidArgument("reference column out of range");
  Matrix y = forward(cache.tensors.front());
  const Matrix ref_col = y.col(static_cast<Eigen::Index>(ref));
  for (Eigen::Index j = 0; j < y.cols(); ++j) y.col(j) -= ref_col;
  return y;
}

Vector Function::paired_contrast(const ForwardCache& a, const ForwardCache& b) const {
  if (a.tensors.empty() || b.tensors.empty()) throw InvalidArgument("empty forward cache");
  if (output_dim() != 1) throw InvalidArgument("paired contrast needs a single-output function");
  return forward(a.tensors.front()).col(0) - forward(b.tensors.front()).col(0);
}

std::size_t Mlp::count_params(const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += sizes[l] * sizes[l + 1] + sizes[l + 1];
    if (l + 2 < sizes.size()) n += 2 * sizes[l + 1];
  }
  return n;
}

Mlp::Mlp(std::vector<std::size_t> sizes, Head head) : sizes_(std::move(sizes)), head_(head) {
  if (sizes_.size() < 2) throw InvalidArgument("an MLP needs at least input and output sizes");
  for (std::size_t s : sizes_)
    if (s == 0) throw InvalidArgument("layer sizes must be positive");
  build_layout();
  params_.assign(count_params(sizes_), 0.0);
}

Mlp::Mlp(std::vector<std::size_t> sizes, Head head, std::uint64_t seed)
    : Mlp(std::move(sizes), head) {
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < layout_.size(); ++l) {
    const auto& ly = layout_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(ly.in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < ly.in * ly.out; ++i) params_[ly.weight + i] = u(rng);
    if (l + 1 < layout_.size())
      for (std::size_t i = 0; i < ly.out; ++i) params_[ly.gain + i] = 1.0;
  }
}

void Mlp::build_layout() {
  layout_.clear();
  std::size_t offset = 0;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    LayerLayout ly{};
    ly.in = sizes_[l];
    ly.out = sizes_[l + 1];
    ly.weight = offset;
    offset += ly.in * ly.out;
    ly.bias = offset;
    offset += ly.out;
    if (l + 1 < layers) {
      ly.gain = offset;
      offset += ly.out;
      ly.shift = offset;
      offset += ly.out;
    }
    layout_.push_back(ly);
  }
}

// Cache layout: [x, (xhat, inv_std, normed, activation) per hidden layer, y].
Matrix Mlp::forward(const Matrix& x, ForwardCache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim())
    throw InvalidArgument("input dimension mismatch: got " + std::to_string(x.cols()) +
                          ", expected " + std::to_string(input_dim()));
  require_finite(x);
  if (cache) {
    cache->owner = this;
    cache->tensors.clear();
    cache->tensors.reserve(2 + 4 * (layout_.size() - 1));
    cache->tensors.push_back(x);
  }

  Matrix h = x;
  for (std::size_t l = 0; l < layout_.size(); ++l) {
    const auto& ly = layout_[l];
    ConstMatrixMap w(params_.data() + ly.weight, ly.out, ly.in);
    ConstRowMap b(params_.data() + ly.bias, ly.out);
    Matrix z = h * w.transpose();
    z.rowwise() += b;

    if (l + 1 == layout_.size()) {
      if (head_ == Head::tanh) z = z.array().tanh().matrix();
      if (cache) cache->tensors.push_back(z);
      return z;
    }

    const Vector mean = z.rowwise().mean();
    z.colwise() -= mean;
    const Vector var = z.array().square().rowwise().mean().matrix();
    const Vector inv_std = (var.array() + kLayerNormEps).rsqrt().matrix();
    Matrix xhat = (z.array().colwise() * inv_std.array()).matrix();
    ConstRowMap gain(params_.data() + ly.gain, ly.out);
    ConstRowMap shift(params_.data() + ly.shift, ly.out);
    Matrix normed = ((xhat.array().rowwise() * gain.array()).rowwise() + shift.array()).matrix();
    h = normed.cwiseMax(0.0);
    if (cache) {
      cache->tensors.push_back(std::move(xhat));
      cache->tensors.push_back(inv_std);
      cache->tensors.push_back(std::move(normed));
      cache->tensors.push_back(h);
    }
  }
  return h;  // unreachable: the loop returns at the last layer
}

Gradients Mlp::backward(const ForwardCache& cache, const Matrix& dy) const {
  const std::size_t layers = layout_.size();
  check_cache(this, cache, 2 + 4 * (layers - 1), dy, output_dim());

  Gradients g;
  g.params = Vector::Zero(static_cast<Eigen::Index>(params_.size()));
  Matrix d = dy;
  if (head_ == Head::tanh) {
    const Matrix& y = cache.tensors.back();
    d = (d.array() * (1.0 - y.array().square())).matrix();
  }

  for (std::size_t l = layers; l-- > 0;) {
    const auto& ly = layout_[l];
    const Matrix& h_in = l == 0 ? cache.tensors[0] : cache.tensors[1 + 4 * (l - 1) + 3];
    ConstMatrixMap w(params_.data() + ly.weight, ly.out, ly.in);
    MatrixMap dw(g.params.data() + ly.weight, ly.out, ly.in);
    RowMap db(g.params.data() + ly.bias, ly.out);
    dw.noalias() = d.transpose() * h_in;
    db = d.colwise().sum();
    Matrix dh = d * w;
    if (l == 0) {
      g.input = std::move(dh);
      break;
    }

    const auto& prev = layout_[l - 1];
    const std::size_t base = 1 + 4 * (l - 1);
    const Matrix& xhat = cache.tensors[base];
    const Matrix& inv_std = cache.tensors[base + 1];
    const Matrix& normed = cache.tensors[base + 2];
    const Matrix d_normed = (dh.array() * (normed.array() > 0.0).cast<double>()).matrix();

    ConstRowMap gain(params_.data() + prev.gain, prev.out);
    RowMap dgain(g.params.data() + prev.gain, prev.out);
    RowMap dshift(g.params.data() + prev.shift, prev.out);
    dgain = (d_normed.array() * xhat.array()).colwise().sum().matrix();
    dshift = d_normed.colwise().sum();

    const double n = static_cast<double>(prev.out);
    const Eigen::ArrayXXd dxhat = (d_normed.array().rowwise() * gain.array());
    const Eigen::ArrayXd sum_dxhat = dxhat.rowwise().sum();
    const Eigen::ArrayXd sum_dxhat_xhat = (dxhat * xhat.array()).rowwise().sum();
    Eigen::ArrayXXd dz = n * dxhat;
    dz.colwise() -= sum_dxhat;
    dz -= xhat.array().colwise() * sum_dxhat_xhat;
    dz.colwise() *= inv_std.col(0).array() / n;
    d = dz.matrix();
  }
  return g;
}

const Matrix& Mlp::output_features(const ForwardCache& cache) const {
  if (cache.owner != this || cache.tensors.size() != 2 + 4 * (layout_.size() - 1))
    throw InvalidArgument("forward cache does not belong to this function");
  return layout_.size() == 1 ? cache.tensors[0] : cache.tensors[cache.tensors.size() - 2];
}

Matrix Mlp::contrast_to_column(const ForwardCache& cache, std::size_t ref) const {
  if (head_ != Head::identity) return Function::contrast_to_column(cache, ref);
  if (ref >= output_dim()) throw InvalidArgument("reference column out of range");
  const auto& ly = layout_.back();
  return affine_contrast_to_column(output_features(cache),
                                   ConstMatrixMap(params_.data() + ly.weight, ly.out, ly.in),
                                   ConstRowMap(params_.data() + ly.bias, ly.out), ref);
}

Vector Mlp::paired_contrast(const ForwardCache& a, const ForwardCache& b) const {
  if (output_dim() != 1) throw InvalidArgument("paired contrast needs a single-output function");
  if (head_ != Head::identity) return Function::paired_contrast(a, b);
  const Matrix& ha = output_features(a);
  const Matrix& hb = output_features(b);
  if (ha.rows() != hb.rows()) throw InvalidArgument("paired contrast batch sizes differ");
  const auto& ly = layout_.back();
  ConstMatrixMap w(params_.data() + ly.weight, ly.out, ly.in);
  return (ha - hb) * w.row(0).transpose();
}

void Mlp::save(std::ostream& out) const {
  out.write(kMlpMagic.data(), kMlpMagic.size());
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(head_));
  write_le<std::uint64_t>(out, sizes_.size());
  for (std::size_t s : sizes_) write_le<std::uint64_t>(out, s);
  write_le<std::uint64_t>(out, params_.size());
  for (double p : params_) write_le<double>(out, p);
  if (!out) throw IoError("failed writing network parameters");
}

Mlp Mlp::load(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMlpMagic) throw IoError("not a network parameter stream");
  const auto head = read_le<std::uint32_t>(in);
  if (head > 1) throw IoError("unknown output head in network stream");
  const auto n_sizes = read_le<std::uint64_t>(in);
  if (n_sizes < 2 || n_sizes > 64) throw IoError("implausible layer count in network stream");
  std::vector<std::size_t> sizes(n_sizes);
  for (auto& s : sizes) s = read_le<std::uint64_t>(in);
  Mlp net(std::move(sizes), static_cast<Head>(head));
  const auto n_params = read_le<std::uint64_t>(in);
  if (n_params != net.params_.size()) throw IoError("parameter count does not match layer sizes");
  for (double& p : net.params_) p = read_le<double>(in);
  return net;
}

Linear::Linear(std::size_t in, std::size_t out, bool bias)
    : in_(in), out_(out), bias_(bias), params_(in * out + (bias ? out : 0), 0.0) {
  if (in == 0 || out == 0) throw InvalidArgument("linear map sizes must be positive");
}

Matrix Linear::forward(const Matrix& x, ForwardCache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != in_) throw InvalidArgument("input dimension mismatch");
  require_finite(x);
  ConstMatrixMap w(params_.data(), out_, in_);
  Matrix y = x * w.transpose();
  if (bias_) y.rowwise() += ConstRowMap(params_.data() + in_ * out_, out_);
  if (cache) {
    cache->owner = this;
    cache->tensors = {x};
  }
  return y;
}

Gradients Linear::backward(const ForwardCache& cache, const Matrix& dy) const {
  check_cache(this, cache, 1, dy, out_);
  Gradients g;
  g.params = Vector::Zero(static_cast<Eigen::Index>(params_.size()));
  MatrixMap(g.params.data(), out_, in_).noalias() = dy.transpose() * cache.tensors[0];
  if (bias_) RowMap(g.params.data() + in_ * out_, out_) = dy.colwise().sum();
  g.input = dy * ConstMatrixMap(params_.data(), out_, in_);
  return g;
}

Matrix Linear::contrast_to_column(const ForwardCache& cache, std::size_t ref) const {
  if (cache.owner != this || cache.tensors.size() != 1)
    throw InvalidArgument("forward cache does not belong to this function");
  if (ref >= out_) throw InvalidArgument("reference column out of range");
  ConstMatrixMap w(params_.data(), out_, in_);
  if (bias_)
    return affine_contrast_to_column(cache.tensors[0], w,
                                     ConstRowMap(params_.data() + in_ * out_, out_), ref);
  Matrix dw = w.rowwise() - w.row(static_cast<Eigen::Index>(ref));
  return cache.tensors[0] * dw.transpose();
}

Vector Linear::paired_contrast(const ForwardCache& a, const ForwardCache& b) const {
  if (out_ != 1) throw InvalidArgument("paired contrast needs a single-output function");
  if (a.owner != this || b.owner != this) throw InvalidArgument("foreign forward cache");
  if (a.tensors[0].rows() != b.tensors[0].rows())
    throw InvalidArgument("paired contrast batch sizes differ");
  ConstMatrixMap w(params_.data(), out_, in_);
  return (a.tensors[0] - b.tensors[0]) * w.row(0).transpose();
}

RmsProp::RmsProp(std::size_t size, double decay) : v_(size, 0.0), decay_(decay) {
  if (!(decay >= 0.0 && decay < 1.0)) throw InvalidArgument("RMSProp decay must lie in [0, 1)");
}

void RmsProp::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != v_.size() || grads.size() != v_.size())
    throw InvalidArgument("RMSProp shape mismatch");
  for (std::size_t i = 0; i < v_.size(); ++i) {
    const double g = grads[i];
    v_[i] = decay_ * v_[i] + (1.0 - decay_) * g * g;
    params[i] -= lr * g / (std::sqrt(v_[i]) + kEps);
  }
}

InputNormalizer::InputNormalizer(std::size_t dim)
    : mean_(Vector::Zero(static_cast<Eigen::Index>(dim))),
      m2_(Vector::Zero(static_cast<Eigen::Index>(dim))) {}

void InputNormalizer::observe(std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(mean_.size()))
    throw InvalidArgument("normalizer dimension mismatch");
  ++count_;
  for (Eigen::Index i = 0; i < mean_.size(); ++i) {
    const double delta = x[i] - mean_[i];
    mean_[i] += delta / static_cast<double>(count_);
    m2_[i] += delta * (x[i] - mean_[i]);
  }
}

void InputNormalizer::restore(std::size_t count, Vector mean, Vector m2) {
  if (mean.size() != mean_.size() || m2.size() != m2_.size())
    throw InvalidArgument("normalizer dimension mismatch");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

Vector InputNormalizer::stddev() const {
  if (count_ < 2) return Vector::Ones(mean_.size());
  return (m2_ / static_cast<double>(count_)).cwiseSqrt();
}

Matrix InputNormalizer::apply(const Matrix& x) const {
  if (x.cols() != mean_.size()) throw InvalidArgument("normalizer dimension mismatch");
  const Eigen::ArrayXd scale = 1.0 / (stddev().array() + 1e-8);
  Matrix out = x;
  out.rowwise() -= mean_.transpose();
  out.array().rowwise() *= scale.transpose();
  return out;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace dau::nn
