#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sugarl::nn {

/// Storage for anything handed to Eigen. Vectorized kernels pick their
/// peeling from the data address, so buffers share one fixed alignment to
/// keep results independent of where the heap placed them.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

/// Named view onto one parameter array and its gradient accumulator.
template <typename T>
struct ParamRef {
  std::string name;
  std::span<T> value;
  std::span<T> grad;
};

/// Strides describing where sample n, channel c of a 4D activation lives.
/// Network inputs are NCHW; conv activations are kept CNHW so that the GEMM
/// output needs no transposition.
struct ActivationLayout {
  std::size_t sample_stride;
  std::size_t channel_stride;

  static ActivationLayout nchw(int channels, int h, int w) {
    return {static_cast<std::size_t>(channels) * h * w, static_cast<std::size_t>(h) * w};
  }
  static ActivationLayout cnhw(int batch, int h, int w) {
    return {static_cast<std::size_t>(h) * w, static_cast<std::size_t>(batch) * h * w};
  }
};

template <typename T, typename Rng>
void fill_fan_in_uniform(std::span<T> w, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : w) v = static_cast<T>(dist(rng));
}

/// Valid (unpadded) 2D convolution with optional fused rectifier.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, bool relu = true)
      : in_channels_(in_channels),
        out_channels_(out_channels),
        kernel_(kernel),
        stride_(stride),
        relu_(relu),
        weight_(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel, T{0}),
        bias_(out_channels, T{0}),
        weight_grad_(weight_.size(), T{0}),
        bias_grad_(bias_.size(), T{0}) {
    if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || stride <= 0)
      throw std::invalid_argument("Conv2d: dimensions must be positive");
  }

  int out_size(int in) const {
    if (in < kernel_) return 0;
    return (in - kernel_) / stride_ + 1;
  }
  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }
  int kernel() const { return kernel_; }
  int stride() const { return stride_; }
  int patch_size() const { return in_channels_ * kernel_ * kernel_; }

  template <typename Rng>
  void init(Rng& rng) {
    fill_fan_in_uniform<T>(weight_, patch_size(), rng);
    std::fill(bias_.begin(), bias_.end(), T{0});
  }

  /// Output is written CNHW: out_channels x (batch * out_h * out_w).
  const AlignedVector<T>& forward(const T* x, ActivationLayout layout, int batch, int h, int w) {
    in_h_ = h;
    in_w_ = w;
    batch_ = batch;
    in_layout_ = layout;
    out_h_ = out_size(h);
    out_w_ = out_size(w);
    if (out_h_ <= 0 || out_w_ <= 0)
      throw std::invalid_argument("Conv2d: input " + std::to_string(h) + "x" + std::to_string(w) +
                                  " smaller than kernel " + std::to_string(kernel_));
    const std::size_t spatial = static_cast<std::size_t>(out_h_) * out_w_;
    const std::size_t columns = spatial * batch;
    cols_.resize(static_cast<std::size_t>(patch_size()) * columns);
    im2col(x, columns);

    out_.resize(static_cast<std::size_t>(out_channels_) * columns);
    MatrixMap<T> y(out_.data(), out_channels_, static_cast<Eigen::Index>(columns));
    ConstMatrixMap<T> wm(weight_.data(), out_channels_, patch_size());
    ConstMatrixMap<T> cm(cols_.data(), patch_size(), static_cast<Eigen::Index>(columns));
    y.noalias() = wm * cm;
    for (int oc = 0; oc < out_channels_; ++oc) {
      T* row = out_.data() + oc * columns;
      const T b = bias_[oc];
      if (relu_) {
        for (std::size_t i = 0; i < columns; ++i) row[i] = std::max(row[i] + b, T{0});
      } else {
        for (std::size_t i = 0; i < columns; ++i) row[i] += b;
      }
    }
    has_cache_ = true;
    return out_;
  }

  /// Accumulates parameter gradients; writes the input gradient when dx is
  /// non-null (same layout as the forward input).
  void backward(std::span<const T> dy, T* dx) {
    if (!has_cache_) throw std::logic_error("Conv2d::backward without forward cache");
    const std::size_t columns = static_cast<std::size_t>(out_h_) * out_w_ * batch_;
    if (dy.size() != out_.size()) throw std::invalid_argument("Conv2d::backward: gradient shape mismatch");
    dy_.assign(dy.begin(), dy.end());
    if (relu_) {
      for (std::size_t i = 0; i < dy_.size(); ++i)
        if (out_[i] <= T{0}) dy_[i] = T{0};
    }
    ConstMatrixMap<T> g(dy_.data(), out_channels_, static_cast<Eigen::Index>(columns));
    ConstMatrixMap<T> cm(cols_.data(), patch_size(), static_cast<Eigen::Index>(columns));
    MatrixMap<T> gw(weight_grad_.data(), out_channels_, patch_size());
    gw.noalias() += g * cm.transpose();
    for (int oc = 0; oc < out_channels_; ++oc) bias_grad_[oc] += g.row(oc).sum();
    if (dx != nullptr) {
      dcols_.resize(cols_.size());
      MatrixMap<T> dc(dcols_.data(), patch_size(), static_cast<Eigen::Index>(columns));
      ConstMatrixMap<T> wm(weight_.data(), out_channels_, patch_size());
      dc.noalias() = wm.transpose() * g;
      col2im(dx, columns);
    }
  }

  int out_h() const { return out_h_; }
  int out_w() const { return out_w_; }

  std::vector<ParamRef<T>> params(const std::string& prefix) {
    return {{prefix + ".weight", weight_, weight_grad_}, {prefix + ".bias", bias_, bias_grad_}};
  }

  AlignedVector<T>& weight() { return weight_; }
  AlignedVector<T>& bias() { return bias_; }

  /// Appends which rectified outputs of the last forward are active.
  void append_active(std::vector<bool>& mask) const {
    if (relu_)
      for (const T& v : out_) mask.push_back(v > T{0});
  }

 private:
  void im2col(const T* x, std::size_t columns) {
    const std::size_t spatial = static_cast<std::size_t>(out_h_) * out_w_;
    for (int c = 0; c < in_channels_; ++c)
      for (int ki = 0; ki < kernel_; ++ki)
        for (int kj = 0; kj < kernel_; ++kj) {
          T* dst = cols_.data() + ((static_cast<std::size_t>(c) * kernel_ + ki) * kernel_ + kj) * columns;
          for (int n = 0; n < batch_; ++n) {
            const T* plane = x + n * in_layout_.sample_stride + c * in_layout_.channel_stride;
            T* d = dst + n * spatial;
            for (int oy = 0; oy < out_h_; ++oy) {
              const T* src = plane + static_cast<std::size_t>(oy * stride_ + ki) * in_w_ + kj;
              for (int ox = 0; ox < out_w_; ++ox) *d++ = src[ox * stride_];
            }
          }
        }
  }

  void col2im(T* dx, std::size_t columns) const {
    const std::size_t spatial = static_cast<std::size_t>(out_h_) * out_w_;
    for (int n = 0; n < batch_; ++n)
      for (int c = 0; c < in_channels_; ++c) {
        T* plane = dx + n * in_layout_.sample_stride + c * in_layout_.channel_stride;
        std::fill(plane, plane + static_cast<std::size_t>(in_h_) * in_w_, T{0});
      }
    for (int c = 0; c < in_channels_; ++c)
      for (int ki = 0; ki < kernel_; ++ki)
        for (int kj = 0; kj < kernel_; ++kj) {
          const T* src = dcols_.data() + ((static_cast<std::size_t>(c) * kernel_ + ki) * kernel_ + kj) * columns;
          for (int n = 0; n < batch_; ++n) {
            T* plane = dx + n * in_layout_.sample_stride + c * in_layout_.channel_stride;
            const T* s = src + n * spatial;
            for (int oy = 0; oy < out_h_; ++oy) {
              T* row = plane + static_cast<std::size_t>(oy * stride_ + ki) * in_w_ + kj;
              for (int ox = 0; ox < out_w_; ++ox) row[ox * stride_] += *s++;
            }
          }
        }
  }

  int in_channels_ = 0, out_channels_ = 0, kernel_ = 1, stride_ = 1;
  bool relu_ = true;
  AlignedVector<T> weight_, bias_, weight_grad_, bias_grad_;

  int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0, batch_ = 0;
  ActivationLayout in_layout_{0, 0};
  AlignedVector<T> cols_, dcols_, out_, dy_;
  bool has_cache_ = false;
};

/// Fully connected layer over row-major (batch x features) activations.
template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(int in_features, int out_features, bool relu)
      : in_(in_features),
        out_(out_features),
        relu_(relu),
        weight_(static_cast<std::size_t>(out_features) * in_features, T{0}),
        bias_(out_features, T{0}),
        weight_grad_(weight_.size(), T{0}),
        bias_grad_(bias_.size(), T{0}) {
    if (in_features <= 0 || out_features <= 0) throw std::invalid_argument("Dense: dimensions must be positive");
  }

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  template <typename Rng>
  void init(Rng& rng) {
    fill_fan_in_uniform<T>(weight_, in_, rng);
    std::fill(bias_.begin(), bias_.end(), T{0});
  }

  const AlignedVector<T>& forward(const T* x, int batch) {
    batch_ = batch;
    input_.assign(x, x + static_cast<std::size_t>(batch) * in_);
    output_.resize(static_cast<std::size_t>(batch) * out_);
    ConstMatrixMap<T> xm(input_.data(), batch, in_);
    ConstMatrixMap<T> wm(weight_.data(), out_, in_);
    MatrixMap<T> y(output_.data(), batch, out_);
    y.noalias() = xm * wm.transpose();
    for (int n = 0; n < batch; ++n) {
      T* row = output_.data() + static_cast<std::size_t>(n) * out_;
      for (int o = 0; o < out_; ++o) {
        row[o] += bias_[o];
        if (relu_ && row[o] < T{0}) row[o] = T{0};
      }
    }
    has_cache_ = true;
    return output_;
  }

  void backward(std::span<const T> dy, T* dx) {
    if (!has_cache_) throw std::logic_error("Dense::backward without forward cache");
    if (dy.size() != output_.size()) throw std::invalid_argument("Dense::backward: gradient shape mismatch");
    dy_.assign(dy.begin(), dy.end());
    if (relu_) {
      for (std::size_t i = 0; i < dy_.size(); ++i)
        if (output_[i] <= T{0}) dy_[i] = T{0};
    }
    ConstMatrixMap<T> g(dy_.data(), batch_, out_);
    ConstMatrixMap<T> xm(input_.data(), batch_, in_);
    MatrixMap<T> gw(weight_grad_.data(), out_, in_);
    gw.noalias() += g.transpose() * xm;
    for (int o = 0; o < out_; ++o) bias_grad_[o] += g.col(o).sum();
    if (dx != nullptr) {
      dx_.resize(input_.size());
      MatrixMap<T> dxm(dx_.data(), batch_, in_);
      ConstMatrixMap<T> wm(weight_.data(), out_, in_);
      dxm.noalias() = g * wm;
      std::copy(dx_.begin(), dx_.end(), dx);
    }
  }

  std::vector<ParamRef<T>> params(const std::string& prefix) {
    return {{prefix + ".weight", weight_, weight_grad_}, {prefix + ".bias", bias_, bias_grad_}};
  }

  AlignedVector<T>& weight() { return weight_; }
  AlignedVector<T>& bias() { return bias_; }

  /// Appends which rectified outputs of the last forward are active.
  void append_active(std::vector<bool>& mask) const {
    if (relu_)
      for (const T& v : output_) mask.push_back(v > T{0});
  }

 private:
  int in_ = 0, out_ = 0;
  bool relu_ = false;
  AlignedVector<T> weight_, bias_, weight_grad_, bias_grad_;
  int batch_ = 0;
  AlignedVector<T> input_, output_, dy_, dx_;
  bool has_cache_ = false;
};

}  // namespace sugarl::nn
