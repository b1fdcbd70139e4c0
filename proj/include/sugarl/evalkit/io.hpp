#pragma once

#include "sugarl/evalkit/eval.hpp"
#include "sugarl/evalkit/stats.hpp"

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sugarl::evalkit {

/// Quotes a CSV field when it contains a delimiter, quote or line break.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Binary PGM (P5), linearly scaled so the maximum count maps to 255.
inline std::string heatmap_pgm(const CountMap& m) {
  std::string out = "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n";
  const std::uint32_t peak = m.max();
  for (auto c : m.counts)
    out.push_back(static_cast<char>(peak == 0 ? 0 : static_cast<std::uint8_t>((static_cast<std::uint64_t>(c) * 255 + peak / 2) / peak)));
  return out;
}

/// Binary PGM of an image in [0, 1].
inline std::string image_pgm(const envkit::Image& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (float v : img.pixels) out.push_back(static_cast<char>(envkit::quantize(v)));
  return out;
}

struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

inline PgmImage parse_pgm(const std::string& bytes) {
  std::istringstream is(bytes);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("parse_pgm: not an 8-bit P5 image");
  is.get();
  PgmImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
  is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (is.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw std::runtime_error("parse_pgm: truncated");
  return img;
}

inline std::string histogram_csv(std::span<const std::uint64_t> h) {
  std::uint64_t total = 0;
  for (auto c : h) total += c;
  std::string out = "anchor,count,fraction\n";
  for (std::size_t i = 0; i < h.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(h[i]) + "," +
           csv_number(total ? static_cast<double>(h[i]) / static_cast<double>(total) : 0.0) + "\n";
  return out;
}

inline std::string eval_report_csv(const EvalReport& r) {
  std::string out = "seed,episode,return,length\n";
  for (std::size_t i = 0; i < r.returns.size(); ++i)
    out += std::to_string(r.seeds[i]) + "," + std::to_string(r.episode_index[i]) + "," + csv_number(r.returns[i]) + "," +
           std::to_string(r.lengths[i]) + "\n";
  return out;
}

inline std::string eval_summary_csv(const EvalReport& r) {
  std::string out = "episodes,mean_return,iqm_return,normalized_score,config_hash\n";
  out += std::to_string(r.returns.size()) + "," + csv_number(r.mean_return()) + "," +
         (r.iqm_return ? csv_number(*r.iqm_return) : "") + "," + (r.normalized ? csv_number(*r.normalized) : "") + "," +
         csv_field(r.config_hash) + "\n";
  return out;
}

/// Trace as CSV: one row per step with the fovea rectangle and action.
inline std::string trace_csv(const SensoryTrace& t) {
  std::string out = "frame_h,frame_w,n_actions\n" + std::to_string(t.frame_h) + "," + std::to_string(t.frame_w) + "," +
                    std::to_string(t.n_actions) + "\nx,y,h,w,action\n";
  for (std::size_t i = 0; i < t.rects.size(); ++i) {
    const auto& r = t.rects[i];
    out += std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.h) + "," + std::to_string(r.w) + "," +
           std::to_string(t.actions[i]) + "\n";
  }
  return out;
}

inline SensoryTrace parse_trace_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(is, line)) throw std::runtime_error(std::string("trace file: missing ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  auto split = [](const std::string& s) {
    std::vector<long> v;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stol(cell));
    return v;
  };
  next("header");
  if (line != "frame_h,frame_w,n_actions") throw std::runtime_error("trace file: bad header");
  next("dimensions");
  const auto dims = split(line);
  if (dims.size() != 3) throw std::runtime_error("trace file: bad dimensions row");
  SensoryTrace t;
  t.frame_h = static_cast<int>(dims[0]);
  t.frame_w = static_cast<int>(dims[1]);
  t.n_actions = static_cast<int>(dims[2]);
  next("column header");
  if (line != "x,y,h,w,action") throw std::runtime_error("trace file: bad column header");
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto v = split(line);
    if (v.size() != 5) throw std::runtime_error("trace file: bad row '" + line + "'");
    t.add({static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])},
          static_cast<int>(v[4]));
  }
  return t;
}

}  // namespace sugarl::evalkit
