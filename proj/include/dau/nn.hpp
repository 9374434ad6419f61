#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dau::nn {

/// Batch-major matrix: one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Intermediates recorded by a forward pass and consumed by backward.
struct ForwardCache {
  const void* owner = nullptr;
  std::vector<Matrix> tensors;
};

struct Gradients {
  Vector params;  ///< d<dy, y>/dparams, summed over the batch
  Matrix input;   ///< d<dy, y>/dx, one row per sample
};

/// A differentiable map R^in -> R^out with a flat parameter vector.
class Function {
 public:
  virtual ~Function() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual std::span<double> params() = 0;
  virtual std::span<const double> params() const = 0;

  /// Rows of `x` are samples. Fills `cache` when non-null.
  virtual Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const = 0;
  /// Gradients of sum_ij dy_ij * y_ij. Throws if `cache` came from another
  /// function or does not match dy's shape.
  virtual Gradients backward(const ForwardCache& cache, const Matrix& dy) const = 0;
  virtual std::unique_ptr<Function> clone() const = 0;

  /// Column j holds y_j - y_ref for the cached batch. Implementations with an
  /// affine output layer evaluate (W_j - W_ref) h + (b_j - b_ref), so a
  /// constant added to every output bias cancels exactly.
  virtual Matrix contrast_to_column(const ForwardCache& cache, std::size_t ref) const;
  /// y(x_a) - y(x_b) per sample for a single-output function, from two cached
  /// forward passes of equal batch size. Bias terms cancel exactly.
  virtual Vector paired_contrast(const ForwardCache& a, const ForwardCache& b) const;

  std::size_t param_count() const { return params().size(); }
};

enum class Head : std::uint32_t { identity = 0, tanh = 1 };

/// Linear -> LayerNorm -> ReLU blocks for every hidden size, then a final
/// Linear and the output head.
class Mlp final : public Function {
 public:
  static constexpr double kLayerNormEps = 1e-5;

  Mlp(std::vector<std::size_t> sizes, Head head, std::uint64_t seed);
  /// Zero parameters; used by load().
  Mlp(std::vector<std::size_t> sizes, Head head);

  std::size_t input_dim() const override { return sizes_.front(); }
  std::size_t output_dim() const override { return sizes_.back(); }
  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }
  Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const override;
  Gradients backward(const ForwardCache& cache, const Matrix& dy) const override;
  std::unique_ptr<Function> clone() const override { return std::make_unique<Mlp>(*this); }
  Matrix contrast_to_column(const ForwardCache& cache, std::size_t ref) const override;
  Vector paired_contrast(const ForwardCache& a, const ForwardCache& b) const override;

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  Head head() const noexcept { return head_; }

  /// Expected parameter count for a layer-size list.
  static std::size_t count_params(const std::vector<std::size_t>& sizes);

  // Offsets into the flat vector, for tests and inspection.
  std::size_t weight_offset(std::size_t layer) const { return layout_[layer].weight; }
  std::size_t bias_offset(std::size_t layer) const { return layout_[layer].bias; }
  std::size_t norm_gain_offset(std::size_t layer) const { return layout_[layer].gain; }
  std::size_t norm_bias_offset(std::size_t layer) const { return layout_[layer].shift; }

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

 private:
  struct LayerLayout {
    std::size_t in, out, weight, bias, gain, shift;
  };
  void build_layout();
  const Matrix& output_features(const ForwardCache& cache) const;

  std::vector<std::size_t> sizes_;
  Head head_;
  std::vector<LayerLayout> layout_;
  std::vector<double> params_;
};

/// y = W x (+ b). No hidden layers, no normalization.
class Linear final : public Function {
 public:
  Linear(std::size_t in, std::size_t out, bool bias);

  std::size_t input_dim() const override { return in_; }
  std::size_t output_dim() const override { return out_; }
  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }
  Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const override;
  Gradients backward(const ForwardCache& cache, const Matrix& dy) const override;
  std::unique_ptr<Function> clone() const override { return std::make_unique<Linear>(*this); }
  Matrix contrast_to_column(const ForwardCache& cache, std::size_t ref) const override;
  Vector paired_contrast(const ForwardCache& a, const ForwardCache& b) const override;

 private:
  std::size_t in_, out_;
  bool bias_;
  std::vector<double> params_;
};

/// Per-parameter RMSProp without momentum:
///   v <- decay * v + (1 - decay) * g^2;  p <- p - lr * g / (sqrt(v) + eps)
class RmsProp {
 public:
  static constexpr double kEps = 1e-8;

  RmsProp(std::size_t size, double decay);

  void step(std::span<double> params, std::span<const double> grads, double lr);

  double decay() const noexcept { return decay_; }
  std::span<const double> second_moment() const noexcept { return v_; }
  std::span<double> second_moment() noexcept { return v_; }

 private:
  std::vector<double> v_;
  double decay_;
};

/// Running per-feature mean/std over every sample seen so far.
class InputNormalizer {
 public:
  explicit InputNormalizer(std::size_t dim);

  void observe(std::span<const double> x);
  Matrix apply(const Matrix& x) const;
  std::size_t count() const noexcept { return count_; }
  const Vector& mean() const noexcept { return mean_; }
  const Vector& sum_sq_dev() const noexcept { return m2_; }
  Vector stddev() const;
  void restore(std::size_t count, Vector mean, Vector m2);

 private:
  std::size_t count_ = 0;
  Vector mean_, m2_;
};

double l2_norm(std::span<const double> v);

}  // namespace dau::nn
