#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace sugarl::agent {

inline constexpr int kMaxFrameStack = 8;
inline constexpr std::int64_t kZeroFrame = -1;

/// One step of experience. Observations are stored as frame ids into the
/// shared frame store: obs_t is frames[0..stack), obs_{t+1} is
/// frames[1..stack]. Consecutive transitions share frames.
struct Transition {
  std::array<std::int64_t, kMaxFrameStack + 1> frames{};
  int motor = 0;
  int sensory = 0;
  float reward = 0.0f;
  bool done = false;
};

/// A sampled minibatch with observations expanded to float network inputs.
struct Batch {
  int size = 0;
  int input_length = 0;
  std::vector<float> obs;       // size x input_length
  std::vector<float> next_obs;  // size x input_length
  std::vector<int> motor;
  std::vector<int> sensory;
  std::vector<float> reward;
  std::vector<std::uint8_t> done;
  std::vector<std::size_t> indices;

  /// obs_t and obs_{t+1} concatenated along channels, per sample; the
  /// reward module's input.
  std::vector<float> pair_input() const {
    std::vector<float> out(static_cast<std::size_t>(size) * input_length * 2);
    for (int n = 0; n < size; ++n) {
      const auto off = static_cast<std::size_t>(n) * input_length;
      std::copy(obs.begin() + off, obs.begin() + off + input_length, out.begin() + 2 * off);
      std::copy(next_obs.begin() + off, next_obs.begin() + off + input_length, out.begin() + 2 * off + input_length);
    }
    return out;
  }
};

/// Uniform experience replay over a ring of transitions backed by a ring of
/// 8-bit agent-facing frames.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t frame_length, int stack)
      : capacity_(capacity),
        frame_length_(frame_length),
        stack_(stack),
        frame_capacity_(capacity + capacity / 2 + 2 * static_cast<std::size_t>(kMaxFrameStack) + 2) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    if (stack <= 0 || stack > kMaxFrameStack) throw std::invalid_argument("ReplayBuffer: bad frame stack");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return transitions_.size(); }
  int stack() const { return stack_; }
  std::size_t frame_length() const { return frame_length_; }
  std::size_t input_length() const { return frame_length_ * stack_; }

  std::int64_t add_frame(std::span<const std::uint8_t> frame) {
    if (frame.size() != frame_length_) throw std::invalid_argument("ReplayBuffer::add_frame: wrong frame length");
    const std::int64_t id = next_frame_++;
    const std::size_t slot = static_cast<std::size_t>(id) % frame_capacity_;
    if (frames_.size() < (slot + 1) * frame_length_) frames_.resize((slot + 1) * frame_length_);
    std::copy(frame.begin(), frame.end(), frames_.begin() + slot * frame_length_);
    // transitions that referenced the overwritten frame become unusable
    const std::int64_t oldest_valid = next_frame_ - static_cast<std::int64_t>(frame_capacity_);
    while (!transitions_.empty() && min_frame(transitions_.front()) != kZeroFrame &&
           min_frame(transitions_.front()) < oldest_valid)
      transitions_.pop_front();
    return id;
  }

  std::span<const std::uint8_t> frame(std::int64_t id) const {
    if (id < next_frame_ - static_cast<std::int64_t>(frame_capacity_) || id >= next_frame_ || id < 0)
      throw std::out_of_range("ReplayBuffer::frame: id no longer stored");
    const std::size_t slot = static_cast<std::size_t>(id) % frame_capacity_;
    return {frames_.data() + slot * frame_length_, frame_length_};
  }

  void add(const Transition& t) {
    transitions_.push_back(t);
    if (transitions_.size() > capacity_) transitions_.pop_front();
  }

  const Transition& at(std::size_t i) const { return transitions_.at(i); }

  /// Writes the float observation for frame ids [first, first + stack).
  void expand(const std::int64_t* ids, float* out) const {
    for (int k = 0; k < stack_; ++k) {
      float* dst = out + static_cast<std::size_t>(k) * frame_length_;
      if (ids[k] == kZeroFrame) {
        std::fill(dst, dst + frame_length_, 0.0f);
        continue;
      }
      const auto f = frame(ids[k]);
      for (std::size_t i = 0; i < frame_length_; ++i) dst[i] = static_cast<float>(f[i]) * (1.0f / 255.0f);
    }
  }

  template <typename Rng>
  std::size_t sample_index(Rng& rng) const {
    if (transitions_.empty()) throw std::logic_error("ReplayBuffer: sampling from an empty buffer");
    return std::uniform_int_distribution<std::size_t>(0, transitions_.size() - 1)(rng);
  }

  template <typename Rng>
  Batch sample(int batch_size, Rng& rng) const {
    if (batch_size < 1) throw std::invalid_argument("ReplayBuffer::sample: batch size must be >= 1");
    Batch b;
    b.size = batch_size;
    b.input_length = static_cast<int>(input_length());
    b.obs.resize(static_cast<std::size_t>(batch_size) * b.input_length);
    b.next_obs.resize(b.obs.size());
    for (int n = 0; n < batch_size; ++n) {
      const std::size_t idx = sample_index(rng);
      const Transition& t = transitions_[idx];
      expand(t.frames.data(), b.obs.data() + static_cast<std::size_t>(n) * b.input_length);
      expand(t.frames.data() + 1, b.next_obs.data() + static_cast<std::size_t>(n) * b.input_length);
      b.motor.push_back(t.motor);
      b.sensory.push_back(t.sensory);
      b.reward.push_back(t.reward);
      b.done.push_back(t.done ? 1 : 0);
      b.indices.push_back(idx);
    }
    return b;
  }

 private:
  std::int64_t min_frame(const Transition& t) const {
    std::int64_t m = kZeroFrame;
    for (int k = 0; k <= stack_; ++k)
      if (t.frames[k] != kZeroFrame && (m == kZeroFrame || t.frames[k] < m)) m = t.frames[k];
    return m;
  }

  std::size_t capacity_;
  std::size_t frame_length_;
  int stack_;
  std::size_t frame_capacity_;
  std::vector<std::uint8_t> frames_;
  std::int64_t next_frame_ = 0;
  std::deque<Transition> transitions_;
};

/// Sliding window of the last `stack` frame ids of the current episode,
/// zero-padded at the start of an episode.
class FrameHistory {
 public:
  explicit FrameHistory(int stack) : stack_(stack) { clear(); }

  void clear() { ids_.fill(kZeroFrame); }
  void push(std::int64_t id) {
    for (int k = 0; k + 1 < stack_; ++k) ids_[k] = ids_[k + 1];
    ids_[stack_ - 1] = id;
  }
  const std::int64_t* data() const { return ids_.data(); }
  std::int64_t operator[](int k) const { return ids_[k]; }
  int stack() const { return stack_; }

 private:
  int stack_;
  std::array<std::int64_t, kMaxFrameStack> ids_{};
};

}  // namespace sugarl::agent
