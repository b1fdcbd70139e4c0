#pragma once

#include "sugarl/envkit/active_env.hpp"
#include "sugarl/envkit/image.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sugarl::pvm {

using envkit::Image;
using envkit::Rect;

enum class PvmKind { stitch, stack, off };

struct PvmRecord {
  Image image;
  Rect rect;
};

/// Persistence-of-vision memory: the last `capacity` partial observations,
/// oldest first.
class PvmBuffer {
 public:
  PvmBuffer(int capacity, int frame_h, int frame_w) : capacity_(capacity), frame_h_(frame_h), frame_w_(frame_w) {
    if (capacity <= 0) throw std::invalid_argument("PvmBuffer: capacity must be positive");
    if (frame_h <= 0 || frame_w <= 0) throw std::invalid_argument("PvmBuffer: frame size must be positive");
  }

  int capacity() const { return capacity_; }
  int frame_h() const { return frame_h_; }
  int frame_w() const { return frame_w_; }
  const std::deque<PvmRecord>& records() const { return records_; }
  const std::optional<Image>& peripheral() const { return peripheral_; }

  void push(PvmRecord record) {
    records_.push_back(std::move(record));
    while (static_cast<int>(records_.size()) > capacity_) records_.pop_front();
  }

  /// Latest peripheral view; painted beneath the foveal records.
  void set_peripheral(Image img) { peripheral_ = std::move(img); }

  void clear() {
    records_.clear();
    peripheral_.reset();
  }

  /// Paints records oldest to newest into a zero canvas so that every pixel
  /// holds the newest covering record, or 0 if none covers it.
  Image stitch() const {
    Image canvas(frame_h_, frame_w_, 0.0f);
    if (peripheral_) canvas = envkit::interp(*peripheral_, frame_h_, frame_w_);
    for (const auto& r : records_) {
      for (int i = 0; i < r.rect.h; ++i) {
        const float* src = r.image.pixels.data() + static_cast<std::size_t>(i) * r.rect.w;
        std::copy(src, src + r.rect.w, canvas.pixels.data() + static_cast<std::size_t>(r.rect.x + i) * frame_w_ + r.rect.y);
      }
    }
    return canvas;
  }

  /// Channel stack of the stored images, oldest first, zero-padded at the
  /// front to exactly `capacity` channels.
  std::vector<Image> stack() const {
    std::vector<Image> channels;
    if (records_.empty()) return channels;
    const int h = records_.back().image.height, w = records_.back().image.width;
    for (int k = static_cast<int>(records_.size()); k < capacity_; ++k) channels.emplace_back(h, w, 0.0f);
    for (const auto& r : records_) channels.push_back(r.image);
    return channels;
  }

 private:
  int capacity_;
  int frame_h_, frame_w_;
  std::deque<PvmRecord> records_;
  std::optional<Image> peripheral_;
};

/// Adds a native-scale foveal crop at `rect` and returns the rebuilt canvas.
inline Image pvm_push_stitch(PvmBuffer& buf, Image obs, Rect rect) {
  if (!rect.inside(buf.frame_h(), buf.frame_w()))
    throw std::invalid_argument("pvm_push_stitch: location (" + std::to_string(rect.x) + ", " +
                                std::to_string(rect.y) + ") size " + std::to_string(rect.h) + "x" +
                                std::to_string(rect.w) + " outside the frame");
  if (obs.height != rect.h || obs.width != rect.w)
    throw std::invalid_argument("pvm_push_stitch: observation dims do not match the fovea size");
  buf.push({std::move(obs), rect});
  return buf.stitch();
}

inline std::vector<Image> pvm_push_stack(PvmBuffer& buf, Image obs) {
  if (!buf.records().empty()) {
    const auto& last = buf.records().back().image;
    if (last.height != obs.height || last.width != obs.width)
      throw std::invalid_argument("pvm_push_stack: resolution mismatch with stored observations");
  }
  buf.push({std::move(obs), Rect{}});
  return buf.stack();
}

inline void pvm_reset(PvmBuffer& buf) { buf.clear(); }

/// Turns observation packets into the per-step agent-facing planes: PVM
/// composition, resize to the network input side, 8-bit quantization.
/// Frame stacking happens downstream.
class ObservationPipeline {
 public:
  ObservationPipeline(PvmKind kind, int steps, int frame_h, int frame_w, int input_size, bool peripheral = false)
      : kind_(kind),
        buffer_(kind == PvmKind::off ? 1 : steps, frame_h, frame_w),
        input_size_(input_size),
        peripheral_(peripheral) {
    if (input_size <= 0) throw std::invalid_argument("ObservationPipeline: input size must be positive");
  }

  PvmKind kind() const { return kind_; }
  int input_size() const { return input_size_; }
  int planes() const { return kind_ == PvmKind::stack ? buffer_.capacity() : 1; }
  std::size_t plane_length() const { return static_cast<std::size_t>(input_size_) * input_size_; }
  std::size_t frame_length() const { return plane_length() * planes(); }

  void reset() { pvm_reset(buffer_); }

  /// Returns planes() * input_size^2 quantized values.
  std::vector<std::uint8_t> push(const envkit::ObservationPacket& packet) {
    std::vector<Image> planes_out;
    Image native = packet.foveal;
    if (native.height != packet.h || native.width != packet.w) native = envkit::interp(native, packet.h, packet.w);
    switch (kind_) {
      case PvmKind::stitch: {
        if (peripheral_) buffer_.set_peripheral(packet.peripheral);
        planes_out.push_back(pvm_push_stitch(buffer_, std::move(native), packet.rect()));
        break;
      }
      case PvmKind::stack:
        planes_out = pvm_push_stack(buffer_, packet.foveal);
        break;
      case PvmKind::off:
        planes_out.push_back(packet.foveal);
        break;
    }
    std::vector<std::uint8_t> out;
    out.reserve(frame_length());
    for (const auto& p : planes_out) {
      const Image resized = envkit::interp(p, input_size_, input_size_);
      for (float v : resized.pixels) out.push_back(envkit::quantize(v));
    }
    return out;
  }

  const PvmBuffer& buffer() const { return buffer_; }

 private:
  PvmKind kind_;
  PvmBuffer buffer_;
  int input_size_;
  bool peripheral_;
};

inline PvmKind parse_pvm_kind(const std::string& s) {
  if (s == "stitch") return PvmKind::stitch;
  if (s == "stack") return PvmKind::stack;
  if (s == "off") return PvmKind::off;
  throw std::invalid_argument("unknown pvm kind '" + s + "' (expected stitch, stack or off)");
}

inline std::string to_string(PvmKind k) {
  switch (k) {
    case PvmKind::stitch: return "stitch";
    case PvmKind::stack: return "stack";
    case PvmKind::off: return "off";
  }
  return "?";
}

}  // namespace sugarl::pvm
