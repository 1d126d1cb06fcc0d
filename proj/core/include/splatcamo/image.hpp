#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatcamo/common.hpp"

namespace splatcamo {

/// Planar-free RGB raster, row-major, channel-interleaved, linear values.
/// In-memory pixels are doubles; PNG I/O quantizes to 8-bit with clamping.
class Image {
 public:
  Image() = default;
  Image(int width, int height, const Vec3& fill = Vec3::Zero());

  int width() const { return width_; }
  int height() const { return height_; }

  double* pixel(int x, int y) { return data_.data() + 3 * (static_cast<size_t>(y) * width_ + x); }
  const double* pixel(int x, int y) const {
    return data_.data() + 3 * (static_cast<size_t>(y) * width_ + x);
  }

  Vec3 rgb(int x, int y) const {
    const double* p = pixel(x, y);
    return {p[0], p[1], p[2]};
  }
  void set_rgb(int x, int y, const Vec3& c) {
    double* p = pixel(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_dims(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  /// Exact sample-wise equality (used by the poisoning idempotence checks).
  bool bit_equal(const Image& other) const {
    return same_dims(other) && data_ == other.data_;
  }

  /// Largest per-channel absolute difference.
  double max_abs_diff(const Image& other) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// 8-bit RGB PNG. Values are clamped to [0,1] and quantized with round().
void write_png(const Image& image, const std::string& path);
Image read_png(const std::string& path);

/// Quantizes exactly like write_png; round-trip helper for bit-exactness tests.
uint8_t quantize_channel(double v);

}  // namespace splatcamo
