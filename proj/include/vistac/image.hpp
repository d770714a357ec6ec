#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vistac/common.hpp"

namespace vistac {

// Row-major HWC float image, values in [0, 1]. Rendered images are
// quantized to 8-bit levels (k/255) so disk round-trips are lossless.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<float> px;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        px(std::size_t(h) * std::size_t(w) * std::size_t(c), fill) {}

  float& at(int r, int c, int ch = 0) {
    return px[(std::size_t(r) * width + c) * channels + ch];
  }
  float at(int r, int c, int ch = 0) const {
    return px[(std::size_t(r) * width + c) * channels + ch];
  }
  std::size_t size() const { return px.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

inline float quantize8(float v) {
  const float q = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
  return q / 255.0f;
}

inline void quantize8(Image& img) {
  for (auto& v : img.px) v = quantize8(v);
}

// Bilinear sample at fractional pixel coords (r, c); out-of-bounds reads
// use the per-channel border value.
inline float bilinear(const Image& img, double r, double c, int ch,
                      float border) {
  const int r0 = int(std::floor(r)), c0 = int(std::floor(c));
  const double fr = r - r0, fc = c - c0;
  auto fetch = [&](int rr, int cc) -> float {
    if (rr < 0 || rr >= img.height || cc < 0 || cc >= img.width) return border;
    return img.at(rr, cc, ch);
  };
  const float v00 = fetch(r0, c0), v01 = fetch(r0, c0 + 1);
  const float v10 = fetch(r0 + 1, c0), v11 = fetch(r0 + 1, c0 + 1);
  const float top = float(v00 * (1.0 - fc) + v01 * fc);
  const float bot = float(v10 * (1.0 - fc) + v11 * fc);
  return float(top * (1.0 - fr) + bot * fr);
}

// Patch-frame convention shared by the renderers: pixel (r, c) maps to
// u = +right, v = +up, with row 0 at the top.
inline Vec2 pixel_to_patch(int r, int c, int height, int width,
                           double side_len) {
  const double sx = side_len / width;
  const double sy = side_len / height;
  return {(c + 0.5) * sx - side_len / 2.0, side_len / 2.0 - (r + 0.5) * sy};
}

// Rotate image content by `angle` about the center, matching the pose
// convention: rotate(render(pose, 0), theta) == render(pose, theta).
// Output pixel at patch coord u samples the input at R(-angle)... i.e.
// input coord R(angle) * u in the shared patch frame.
inline Image rotate_image(const Image& img, double angle,
                          const std::vector<float>& border) {
  Image out(img.height, img.width, img.channels);
  const double c = std::cos(angle), s = std::sin(angle);
  const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
  for (int r = 0; r < img.height; ++r) {
    for (int col = 0; col < img.width; ++col) {
      // patch frame: u right, v up (v flips row axis)
      const double u = col - cx, v = cy - r;
      const double su = c * u - s * v;
      const double sv = s * u + c * v;
      const double sr = cy - sv, sc = su + cx;
      for (int ch = 0; ch < img.channels; ++ch)
        out.at(r, col, ch) = bilinear(img, sr, sc, ch, border[std::size_t(ch)]);
    }
  }
  return out;
}

inline Image resize_bilinear(const Image& img, int new_h, int new_w) {
  Image out(new_h, new_w, img.channels);
  const double sr = double(img.height) / new_h;
  const double sc = double(img.width) / new_w;
  for (int r = 0; r < new_h; ++r)
    for (int c = 0; c < new_w; ++c) {
      const double src_r = (r + 0.5) * sr - 0.5;
      const double src_c = (c + 0.5) * sc - 0.5;
      for (int ch = 0; ch < img.channels; ++ch) {
        const double rr = std::clamp(src_r, 0.0, double(img.height - 1));
        const double cc = std::clamp(src_c, 0.0, double(img.width - 1));
        out.at(r, c, ch) = bilinear(img, rr, cc, ch, 0.0f);
      }
    }
  return out;
}

inline Image flip_horizontal(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch)
        out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
  return out;
}

inline Image flip_vertical(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < img.channels; ++ch)
        out.at(r, c, ch) = img.at(img.height - 1 - r, c, ch);
  return out;
}

// Mean abs diff between `direct` and rotate(reference, theta), restricted
// to pixels whose source sample lies inside the reference support (the
// rotated corners have no counterpart and are excluded).
inline double rotation_equivariance_error(const Image& direct,
                                          const Image& reference, double theta) {
  if (!direct.same_shape(reference))
    throw std::invalid_argument("rotation_equivariance_error: shape mismatch");
  const double c = std::cos(theta), s = std::sin(theta);
  const double cx = (reference.width - 1) / 2.0;
  const double cy = (reference.height - 1) / 2.0;
  double acc = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < direct.height; ++r)
    for (int col = 0; col < direct.width; ++col) {
      const double u = col - cx, v = cy - r;
      const double su = c * u - s * v;
      const double sv = s * u + c * v;
      const double sr = cy - sv, sc = su + cx;
      if (sr < 0.0 || sr > reference.height - 1.0 || sc < 0.0 ||
          sc > reference.width - 1.0)
        continue;
      for (int ch = 0; ch < direct.channels; ++ch) {
        acc += std::abs(double(direct.at(r, col, ch)) -
                        double(bilinear(reference, sr, sc, ch, 0.0f)));
        ++count;
      }
    }
  return count == 0 ? 0.0 : acc / double(count);
}

inline double mean_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mean_abs_diff: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.px.size(); ++i)
    acc += std::abs(double(a.px[i]) - double(b.px[i]));
  return a.px.empty() ? 0.0 : acc / double(a.px.size());
}

inline double l2_pixel_distance(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("l2_pixel_distance: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    const double d = double(a.px[i]) - double(b.px[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

// ---- PGM (P5, grayscale) / PPM (P6, rgb), 8-bit binary ----

inline void write_pnm(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_pnm: expected 1 or 3 channels");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pnm: cannot open " + path);
  f << (img.channels == 1 ? "P5" : "P6") << "\n"
    << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> buf(img.px.size());
  for (std::size_t i = 0; i < img.px.size(); ++i)
    buf[i] = (unsigned char)std::lround(std::clamp(img.px[i], 0.0f, 1.0f) * 255.0f);
  f.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!f) throw std::runtime_error("write_pnm: short write to " + path);
}

inline Image read_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_pnm: cannot open " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5" && magic != "P6")
    throw std::runtime_error("read_pnm: bad magic in " + path);
  auto next_int = [&]() {
    int v;
    f >> std::ws;
    while (f.peek() == '#') {
      std::string line;
      std::getline(f, line);
      f >> std::ws;
    }
    f >> v;
    return v;
  };
  const int w = next_int(), h = next_int(), maxv = next_int();
  if (maxv != 255) throw std::runtime_error("read_pnm: only 8-bit supported");
  f.get();  // single whitespace after header
  Image img(h, w, magic == "P5" ? 1 : 3);
  std::vector<unsigned char> buf(img.px.size());
  f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (!f) throw std::runtime_error("read_pnm: truncated file " + path);
  for (std::size_t i = 0; i < buf.size(); ++i) img.px[i] = float(buf[i]) / 255.0f;
  return img;
}

// ---- Minimal .npy I/O for float32 2-D arrays (scene export) ----

inline void write_npy_f32(const std::string& path, const std::vector<float>& data,
                          std::size_t rows, std::size_t cols) {
  if (data.size() != rows * cols)
    throw std::invalid_argument("write_npy_f32: size mismatch");
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(rows) + ", " + std::to_string(cols) + "), }";
  // pad so that 10-byte prefix + header is a multiple of 64
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_npy_f32: cannot open " + path);
  const unsigned char magic[8] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  f.write(reinterpret_cast<const char*>(magic), 8);
  const std::uint16_t hlen = std::uint16_t(header.size());
  f.write(reinterpret_cast<const char*>(&hlen), 2);
  f.write(header.data(), std::streamsize(header.size()));
  f.write(reinterpret_cast<const char*>(data.data()),
          std::streamsize(data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("write_npy_f32: short write to " + path);
}

inline std::vector<float> read_npy_f32(const std::string& path,
                                       std::size_t& rows, std::size_t& cols) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_npy_f32: cannot open " + path);
  unsigned char magic[8];
  f.read(reinterpret_cast<char*>(magic), 8);
  std::uint16_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 2);
  std::string header(hlen, '\0');
  f.read(header.data(), hlen);
  if (header.find("'<f4'") == std::string::npos)
    throw std::runtime_error("read_npy_f32: expected float32 array");
  const auto lp = header.find('(');
  const auto comma = header.find(',', lp);
  const auto rp = header.find(')', lp);
  rows = std::size_t(std::stoull(header.substr(lp + 1, comma - lp - 1)));
  cols = std::size_t(std::stoull(header.substr(comma + 1, rp - comma - 1)));
  std::vector<float> data(rows * cols);
  f.read(reinterpret_cast<char*>(data.data()),
         std::streamsize(data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("read_npy_f32: truncated file " + path);
  return data;
}

}  // namespace vistac
