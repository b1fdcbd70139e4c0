#pragma once

#include "sugarl/nn/layers.hpp"

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace sugarl::nn {

struct ConvSpec {
  int out_channels;
  int kernel;
  int stride;
};

/// Conv stem layout. The default is the three-layer DQN encoder followed by
/// a 512-unit dense layer; `identity` replaces the whole stem with a
/// pass-through so heads see the flattened input (tabular experiments).
struct EncoderSpec {
  int in_channels = 4;
  int input_size = 84;
  bool identity = false;
  std::vector<ConvSpec> convs{{32, 8, 4}, {64, 4, 2}, {64, 3, 1}};
  int hidden = 512;

  static EncoderSpec dqn(int in_channels, int input_size) {
    EncoderSpec s;
    s.in_channels = in_channels;
    s.input_size = input_size;
    return s;
  }
  static EncoderSpec passthrough(int in_channels, int input_size) {
    EncoderSpec s;
    s.in_channels = in_channels;
    s.input_size = input_size;
    s.identity = true;
    s.convs.clear();
    s.hidden = 0;
    return s;
  }

  int input_length() const { return in_channels * input_size * input_size; }

  /// Spatial side after each conv, using floor((n - k) / s) + 1.
  std::vector<int> spatial_sizes() const {
    std::vector<int> sizes;
    int n = input_size;
    for (const auto& c : convs) {
      n = n < c.kernel ? 0 : (n - c.kernel) / c.stride + 1;
      sizes.push_back(n);
    }
    return sizes;
  }

  int feature_length() const {
    if (identity) return input_length();
    return hidden;
  }

  void validate() const {
    if (in_channels <= 0 || input_size <= 0) throw std::invalid_argument("EncoderSpec: non-positive input shape");
    if (identity) return;
    for (int s : spatial_sizes())
      if (s <= 0)
        throw std::invalid_argument("EncoderSpec: input " + std::to_string(input_size) +
                                    " too small for the conv stack");
    if (hidden <= 0) throw std::invalid_argument("EncoderSpec: hidden width must be positive");
  }

  std::string describe() const {
    std::ostringstream os;
    os << "in=" << in_channels << "x" << input_size << "x" << input_size;
    if (identity) {
      os << ";identity";
      return os.str();
    }
    for (const auto& c : convs) os << ";conv" << c.out_channels << "/" << c.kernel << "/" << c.stride;
    os << ";dense" << hidden;
    return os.str();
  }
};

template <typename T>
class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(EncoderSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.identity) return;
    int channels = spec_.in_channels;
    for (const auto& c : spec_.convs) {
      convs_.emplace_back(channels, c.out_channels, c.kernel, c.stride, true);
      channels = c.out_channels;
    }
    const int side = spec_.spatial_sizes().back();
    flat_ = channels * side * side;
    dense_ = Dense<T>(flat_, spec_.hidden, true);
  }

  const EncoderSpec& spec() const { return spec_; }
  int feature_length() const { return spec_.feature_length(); }

  template <typename Rng>
  void init(Rng& rng) {
    for (auto& c : convs_) c.init(rng);
    if (!spec_.identity) dense_.init(rng);
  }

  /// `input` is NCHW, batch x in_channels x input_size x input_size.
  const AlignedVector<T>& forward(std::span<const T> input, int batch) {
    const int side = spec_.input_size;
    if (input.size() != static_cast<std::size_t>(batch) * spec_.input_length())
      throw std::invalid_argument("Encoder::forward: expected " +
                                  std::to_string(static_cast<std::size_t>(batch) * spec_.input_length()) +
                                  " values, got " + std::to_string(input.size()));
    batch_ = batch;
    if (spec_.identity) {
      features_.assign(input.begin(), input.end());
      return features_;
    }
    const T* x = input.data();
    ActivationLayout layout = ActivationLayout::nchw(spec_.in_channels, side, side);
    int h = side;
    for (auto& conv : convs_) {
      const auto& y = conv.forward(x, layout, batch, h, h);
      x = y.data();
      h = conv.out_h();
      layout = ActivationLayout::cnhw(batch, h, h);
    }
    // CNHW -> batch x (C*H*W) for the dense layer
    const int channels = convs_.back().out_channels();
    const std::size_t spatial = static_cast<std::size_t>(h) * h;
    flat_buffer_.resize(static_cast<std::size_t>(batch) * flat_);
    for (int c = 0; c < channels; ++c)
      for (int n = 0; n < batch; ++n) {
        const T* src = x + (static_cast<std::size_t>(c) * batch + n) * spatial;
        T* dst = flat_buffer_.data() + static_cast<std::size_t>(n) * flat_ + c * spatial;
        std::copy(src, src + spatial, dst);
      }
    return dense_.forward(flat_buffer_.data(), batch);
  }

  /// `dfeatures` is batch x feature_length.
  void backward(std::span<const T> dfeatures) {
    if (spec_.identity) return;
    dflat_.resize(static_cast<std::size_t>(batch_) * flat_);
    dense_.backward(dfeatures, dflat_.data());
    const int h = convs_.back().out_h();
    const int channels = convs_.back().out_channels();
    const std::size_t spatial = static_cast<std::size_t>(h) * h;
    dact_.resize(dflat_.size());
    for (int c = 0; c < channels; ++c)
      for (int n = 0; n < batch_; ++n) {
        const T* src = dflat_.data() + static_cast<std::size_t>(n) * flat_ + c * spatial;
        T* dst = dact_.data() + (static_cast<std::size_t>(c) * batch_ + n) * spatial;
        std::copy(src, src + spatial, dst);
      }
    for (std::size_t i = convs_.size(); i-- > 0;) {
      if (i == 0) {
        convs_[i].backward(dact_, nullptr);
      } else {
        dprev_.resize(static_cast<std::size_t>(convs_[i - 1].out_channels()) * batch_ * convs_[i - 1].out_h() *
                      convs_[i - 1].out_w());
        convs_[i].backward(dact_, dprev_.data());
        std::swap(dact_, dprev_);
      }
    }
  }

  void append_params(std::vector<ParamRef<T>>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < convs_.size(); ++i)
      for (auto& p : convs_[i].params(prefix + ".conv" + std::to_string(i))) out.push_back(p);
    if (!spec_.identity)
      for (auto& p : dense_.params(prefix + ".dense")) out.push_back(p);
  }

  const std::vector<Conv2d<T>>& convs() const { return convs_; }

  void append_active(std::vector<bool>& mask) const {
    for (const auto& c : convs_) c.append_active(mask);
    if (!spec_.identity) dense_.append_active(mask);
  }

 private:
  EncoderSpec spec_;
  std::vector<Conv2d<T>> convs_;
  Dense<T> dense_;
  int flat_ = 0;
  int batch_ = 0;
  AlignedVector<T> features_, flat_buffer_, dflat_, dact_, dprev_;
};

/// Shared encoder stem with one or more linear heads reading the same
/// features. Q-networks use {n_motor, n_sensory}; the single-policy variant
/// uses {n_motor * n_sensory}; the reward module uses {n_motor} over a
/// channel-concatenated observation pair.
template <typename T>
class HeadedNet {
 public:
  HeadedNet() = default;
  HeadedNet(EncoderSpec spec, std::vector<int> head_sizes) : encoder_(std::move(spec)), head_sizes_(head_sizes) {
    if (head_sizes_.empty()) throw std::invalid_argument("HeadedNet: at least one head required");
    for (int n : head_sizes_) heads_.emplace_back(encoder_.feature_length(), n, false);
  }

  template <typename Rng>
  void init(Rng& rng) {
    encoder_.init(rng);
    for (auto& h : heads_) h.init(rng);
  }

  const EncoderSpec& encoder_spec() const { return encoder_.spec(); }
  const std::vector<int>& head_sizes() const { return head_sizes_; }
  std::size_t num_heads() const { return heads_.size(); }
  int input_length() const { return encoder_.spec().input_length(); }

  /// Returns one (batch x head_size) row-major block per head.
  const std::vector<std::vector<T>>& forward(std::span<const T> input, int batch) {
    const auto& features = encoder_.forward(input, batch);
    outputs_.resize(heads_.size());
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      const auto& y = heads_[h].forward(features.data(), batch);
      outputs_[h].assign(y.begin(), y.end());
    }
    batch_ = batch;
    has_cache_ = true;
    return outputs_;
  }

  /// Accumulates gradients into every parameter. `head_grads[h]` must be
  /// batch x head_size; consumed in place.
  void backward(std::vector<std::vector<T>>& head_grads) {
    if (!has_cache_) throw std::logic_error("HeadedNet::backward called without a forward cache");
    if (head_grads.size() != heads_.size()) throw std::invalid_argument("HeadedNet::backward: head count mismatch");
    dfeatures_.assign(static_cast<std::size_t>(batch_) * encoder_.feature_length(), T{0});
    scratch_.resize(dfeatures_.size());
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      heads_[h].backward(head_grads[h], scratch_.data());
      for (std::size_t i = 0; i < dfeatures_.size(); ++i) dfeatures_[i] += scratch_[i];
    }
    encoder_.backward(dfeatures_);
    has_cache_ = false;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    encoder_.append_params(out, "encoder");
    for (std::size_t h = 0; h < heads_.size(); ++h)
      for (auto& p : heads_[h].params("head" + std::to_string(h))) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto& p : params()) std::fill(p.grad.begin(), p.grad.end(), T{0});
  }

  /// On/off state of every rectifier in the last forward pass. Finite
  /// differences are only meaningful while this pattern stays fixed.
  std::vector<bool> activation_pattern() const {
    std::vector<bool> mask;
    encoder_.append_active(mask);
    for (const auto& h : heads_) h.append_active(mask);
    return mask;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto& p : params()) n += p.value.size();
    return n;
  }

  /// Copies parameter values (not caches or gradients) from another net of
  /// identical architecture.
  void copy_parameters_from(HeadedNet& other) {
    auto dst = params();
    auto src = other.params();
    if (dst.size() != src.size()) throw std::invalid_argument("copy_parameters_from: architecture mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i].value.size() != src[i].value.size())
        throw std::invalid_argument("copy_parameters_from: shape mismatch at " + dst[i].name);
      std::copy(src[i].value.begin(), src[i].value.end(), dst[i].value.begin());
    }
  }

  std::string describe() const {
    std::ostringstream os;
    os << encoder_.spec().describe() << ";heads";
    for (int n : head_sizes_) os << "," << n;
    return os.str();
  }

 private:
  Encoder<T> encoder_;
  std::vector<int> head_sizes_;
  std::vector<Dense<T>> heads_;
  std::vector<std::vector<T>> outputs_;
  std::vector<T> dfeatures_, scratch_;
  int batch_ = 0;
  bool has_cache_ = false;
};

/// FNV-1a over raw bytes; used for parameter checksums, config hashes and
/// architecture hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ULL) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

template <typename T>
std::uint64_t parameter_checksum(HeadedNet<T>& net) {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto& p : net.params()) h = fnv1a(p.value.data(), p.value.size_bytes(), h);
  return h;
}

}  // namespace sugarl::nn
