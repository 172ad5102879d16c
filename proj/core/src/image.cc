#include "sedic/image.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace sedic {

bool Image::valid() const {
  if (samples_.size() != std::size_t{width_} * height_ * 3) return false;
  return std::all_of(samples_.begin(), samples_.end(),
                     [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

double psnr(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw Error("psnr: dimension mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    const double d = double{a.samples()[i]} - b.samples()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.samples().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double max_abs_error(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw Error("max_abs_error: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    m = std::max(m, std::abs(double{a.samples()[i]} - b.samples()[i]));
  }
  return m;
}

namespace {

std::uint8_t to_u8(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

}  // namespace

Image decode_png(ByteView bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw ImageIoError(std::string("cannot read PNG: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw ImageIoError(std::string("cannot decode PNG: ") + img.message);
  }
  Image out(img.width, img.height);
  std::transform(buf.begin(), buf.end(), out.samples().begin(), [](std::uint8_t v) { return v / 255.0f; });
  return out;
}

Bytes encode_png(const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = image.width();
  img.height = image.height();
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(image.samples().size());
  std::transform(image.samples().begin(), image.samples().end(), buf.begin(), to_u8);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, buf.data(), 0, nullptr)) {
    throw ImageIoError(std::string("cannot size PNG: ") + img.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, buf.data(), 0, nullptr)) {
    throw ImageIoError(std::string("cannot encode PNG: ") + img.message);
  }
  out.resize(size);
  return out;
}

Image decode_ppm(ByteView bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::uint32_t {
    skip_space();
    std::uint64_t v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && v < (1u << 30)) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw ImageIoError("malformed PPM header");
    return static_cast<std::uint32_t>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw ImageIoError("not a binary PPM (P6)");
  pos = 2;
  const std::uint32_t w = number();
  const std::uint32_t h = number();
  const std::uint32_t maxval = number();
  if (maxval != 255) throw ImageIoError("only 8-bit PPM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ImageIoError("malformed PPM header");
  ++pos;
  const std::uint64_t need = std::uint64_t{w} * h * 3;
  if (w == 0 || h == 0 || bytes.size() - pos < need) throw ImageIoError("truncated PPM raster");
  Image out(w, h);
  for (std::size_t i = 0; i < need; ++i) out.samples()[i] = bytes[pos + i] / 255.0f;
  return out;
}

Bytes encode_ppm(const Image& image) {
  std::string header = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  for (float v : image.samples()) out.push_back(to_u8(v));
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("short write to " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  Bytes bytes = read_file(path);
  static constexpr std::uint8_t kPngSig[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(std::begin(kPngSig), std::end(kPngSig), bytes.begin())) {
    return decode_png(bytes);
  }
  return decode_ppm(bytes);
}

void write_png(const std::filesystem::path& path, const Image& image) { write_file(path, encode_png(image)); }

}  // namespace sedic
