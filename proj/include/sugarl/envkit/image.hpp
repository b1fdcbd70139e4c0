#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sugarl::envkit {

/// Row-major grayscale image with values in [0, 1]. Row index first: pixel
/// (i, j) is row i, column j.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw std::invalid_argument("Image: negative dimensions");
  }

  float& at(int i, int j) { return pixels[static_cast<std::size_t>(i) * width + j]; }
  float at(int i, int j) const { return pixels[static_cast<std::size_t>(i) * width + j]; }
  bool empty() const { return pixels.empty(); }
  std::size_t size() const { return pixels.size(); }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Axis-aligned rectangle in frame coordinates: top-left (x = row, y = col),
/// extent (h rows, w cols).
struct Rect {
  int x = 0;
  int y = 0;
  int h = 0;
  int w = 0;

  bool contains(int i, int j) const { return i >= x && i < x + h && j >= y && j < y + w; }
  bool inside(int frame_h, int frame_w) const {
    return x >= 0 && y >= 0 && h >= 0 && w >= 0 && x + h <= frame_h && y + w <= frame_w;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// output[i][j] = frame[x + i][y + j].
inline Image crop(const Image& frame, const Rect& r) {
  if (!r.inside(frame.height, frame.width))
    throw std::invalid_argument("crop: rectangle outside " + std::to_string(frame.height) + "x" +
                                std::to_string(frame.width) + " frame");
  Image out(r.h, r.w);
  for (int i = 0; i < r.h; ++i) {
    const float* src = frame.pixels.data() + static_cast<std::size_t>(r.x + i) * frame.width + r.y;
    std::copy(src, src + r.w, out.pixels.data() + static_cast<std::size_t>(i) * r.w);
  }
  return out;
}

/// Source coordinate sampled by output index `i` under corner-aligned
/// resampling from `src` to `dst` samples.
inline double corner_aligned_coord(int i, int src, int dst) {
  if (dst <= 1 || src <= 1) return 0.0;
  return static_cast<double>(i) * static_cast<double>(src - 1) / static_cast<double>(dst - 1);
}

/// Bilinear resampling with corner-aligned sampling: output corners coincide
/// with input corners. Outputs are convex combinations of inputs.
inline Image interp(const Image& src, int target_h, int target_w) {
  if (target_h <= 0 || target_w <= 0)
    throw std::invalid_argument("interp: target size must be positive, got " + std::to_string(target_h) + "x" +
                                std::to_string(target_w));
  if (src.height <= 0 || src.width <= 0) throw std::invalid_argument("interp: empty source image");
  if (target_h == src.height && target_w == src.width) return src;
  Image out(target_h, target_w);
  std::vector<int> j0(target_w), j1(target_w);
  std::vector<float> fj(target_w);
  for (int j = 0; j < target_w; ++j) {
    const double c = corner_aligned_coord(j, src.width, target_w);
    j0[j] = std::min(static_cast<int>(c), src.width - 1);
    j1[j] = std::min(j0[j] + 1, src.width - 1);
    fj[j] = static_cast<float>(c - j0[j]);
  }
  for (int i = 0; i < target_h; ++i) {
    const double r = corner_aligned_coord(i, src.height, target_h);
    const int i0 = std::min(static_cast<int>(r), src.height - 1);
    const int i1 = std::min(i0 + 1, src.height - 1);
    const float fi = static_cast<float>(r - i0);
    for (int j = 0; j < target_w; ++j) {
      const float top = src.at(i0, j0[j]) * (1.0f - fj[j]) + src.at(i0, j1[j]) * fj[j];
      const float bottom = src.at(i1, j0[j]) * (1.0f - fj[j]) + src.at(i1, j1[j]) * fj[j];
      out.at(i, j) = std::clamp(top * (1.0f - fi) + bottom * fi, 0.0f, 1.0f);
    }
  }
  return out;
}

/// Maps [0, 1] to 8-bit levels with rounding.
inline std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
}

}  // namespace sugarl::envkit
