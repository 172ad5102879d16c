#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sedic/byte_io.h"
#include "sedic/error.h"

namespace sedic {

// Interleaved RGB, samples in [0, 1].
class Image {
 public:
  Image() = default;
  Image(std::uint32_t width, std::uint32_t height, float fill = 0.0f)
      : width_(width), height_(height), samples_(std::size_t{width} * height * 3, fill) {}

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  bool empty() const { return samples_.empty(); }

  float& at(std::uint32_t x, std::uint32_t y, int c) { return samples_[(std::size_t{y} * width_ + x) * 3 + c]; }
  float at(std::uint32_t x, std::uint32_t y, int c) const {
    return samples_[(std::size_t{y} * width_ + x) * 3 + c];
  }

  std::vector<float>& samples() { return samples_; }
  const std::vector<float>& samples() const { return samples_; }

  // All samples finite and within [0, 1].
  bool valid() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<float> samples_;
};

double psnr(const Image& a, const Image& b);
double max_abs_error(const Image& a, const Image& b);

class ImageIoError : public Error {
 public:
  using Error::Error;
};

// 8-bit RGB PNG (via libpng) and binary PPM (P6, maxval 255).
Image read_image(const std::filesystem::path& path);  // dispatches on signature
Image decode_png(ByteView bytes);
Image decode_ppm(ByteView bytes);
Bytes encode_png(const Image& image);
Bytes encode_ppm(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView bytes);

}  // namespace sedic
