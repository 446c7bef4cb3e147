#include "uwsu/imaging/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "json.hpp"

#include "uwsu/common/error.hpp"

namespace uwsu::imaging {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_handler(png_structp png, png_const_charp message) {
  auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
  if (msg) *msg = message;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

PngRaster read_png_raster(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  std::array<unsigned char, 8> sig{};
  if (std::fread(sig.data(), 1, sig.size(), file.get()) != sig.size() ||
      png_sig_cmp(sig.data(), 0, sig.size()) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                           png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }

  PngRaster raster;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("decoding " + path.string() + " failed: " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
  }
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  raster.width = static_cast<int>(png_get_image_width(png, info));
  raster.height = static_cast<int>(png_get_image_height(png, info));
  raster.channels = png_get_channels(png, info);
  raster.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * raster.height);
  rows.resize(raster.height);
  for (int y = 0; y < raster.height; ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = static_cast<std::size_t>(raster.width) * raster.height * raster.channels;
  raster.samples.resize(count);
  if (raster.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      raster.samples[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) raster.samples[i] = buffer[i];
  }
  return raster;
}

void write_png_raster(const std::filesystem::path& path, const PngRaster& raster) {
  if (raster.bit_depth != 8 && raster.bit_depth != 16) {
    throw ValidationError("PNG bit depth must be 8 or 16");
  }
  if (raster.channels != 1 && raster.channels != 3) {
    throw ValidationError("PNG output supports 1 or 3 channels");
  }
  FilePtr file = open_file(path, "wb");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                            png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  const std::size_t bytes = raster.bit_depth / 8;
  const std::size_t stride = static_cast<std::size_t>(raster.width) * raster.channels * bytes;
  std::vector<unsigned char> buffer(stride * raster.height);
  for (std::size_t i = 0; i < raster.samples.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<unsigned char>(raster.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(raster.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<unsigned char>(raster.samples[i]);
    }
  }
  std::vector<png_bytep> rows(raster.height);
  for (int y = 0; y < raster.height; ++y) rows[y] = buffer.data() + y * stride;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("encoding " + path.string() + " failed: " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, raster.width, raster.height, raster.bit_depth,
               raster.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RgbImage read_rgb_png(const std::filesystem::path& path, int* bit_depth) {
  const PngRaster raster = read_png_raster(path);
  const double max_level = raster.bit_depth == 16 ? 65535.0 : 255.0;
  RgbImage image(raster.height, raster.width);
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      const std::size_t base = (static_cast<std::size_t>(y) * raster.width + x) * raster.channels;
      for (int c = 0; c < 3; ++c) {
        const std::size_t src = raster.channels == 1 ? base : base + c;
        image.at(y, x, c) = raster.samples[src] / max_level;
      }
    }
  }
  if (bit_depth) *bit_depth = raster.bit_depth;
  return image;
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image, int bit_depth) {
  PngRaster raster{image.height(), image.width(), 3, bit_depth, {}};
  const double max_level = bit_depth == 16 ? 65535.0 : 255.0;
  raster.samples.reserve(image.values().size());
  for (double v : image.values()) {
    raster.samples.push_back(
        static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * max_level)));
  }
  write_png_raster(path, raster);
}

std::filesystem::path depth_sidecar_path(const std::filesystem::path& png_path) {
  return std::filesystem::path(png_path.string() + ".json");
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double scale) {
  if (!(scale > 0.0)) throw ValidationError("depth scale must be positive");
  depth.validate();
  PngRaster raster{depth.height(), depth.width(), 1, 16, {}};
  for (double z : depth.values()) {
    const double level = std::round(z / scale);
    if (level > 65535.0) throw ValidationError("depth exceeds 16-bit range at the given scale");
    raster.samples.push_back(static_cast<std::uint16_t>(level));
  }
  write_png_raster(path, raster);
  std::ofstream sidecar(depth_sidecar_path(path));
  if (!sidecar) throw IoError("cannot write " + depth_sidecar_path(path).string());
  sidecar << nlohmann::json{{"scale", scale}}.dump() << "\n";
}

namespace {

constexpr std::array<char, 4> kRawMagic{'U', 'W', 'D', 'M'};

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

std::uint16_t get_u16(const unsigned char* b) {
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

DepthMap read_depth_png(const std::filesystem::path& path) {
  const PngRaster raster = read_png_raster(path);
  if (raster.channels != 1 || raster.bit_depth != 16) {
    throw IoError(path.string() + ": depth PNG must be 16-bit single channel");
  }
  const auto sidecar_path = depth_sidecar_path(path);
  std::ifstream sidecar(sidecar_path);
  if (!sidecar) throw IoError("missing depth sidecar " + sidecar_path.string());
  double scale = 0.0;
  try {
    const auto j = nlohmann::json::parse(sidecar);
    scale = j.at("scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(sidecar_path.string() + ": " + e.what());
  }
  DepthMap depth(raster.height, raster.width, 0.0, scale);
  std::transform(raster.samples.begin(), raster.samples.end(), depth.values().begin(),
                 [scale](std::uint16_t v) { return v * scale; });
  return depth;
}

}  // namespace

void write_depth_raw(const std::filesystem::path& path, const DepthMap& depth) {
  if (depth.height() > 65535 || depth.width() > 65535) {
    throw ValidationError("raw depth format is limited to 65535 pixels per side");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out.write(kRawMagic.data(), kRawMagic.size());
  put_u16(out, static_cast<std::uint16_t>(depth.height()));
  put_u16(out, static_cast<std::uint16_t>(depth.width()));
  for (double z : depth.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(z));
    const char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                       static_cast<char>((bits >> 16) & 0xff), static_cast<char>(bits >> 24)};
    out.write(b, 4);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

DepthMap read_depth_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || !std::equal(kRawMagic.begin(), kRawMagic.end(), bytes.begin(),
                                      [](char a, unsigned char b) { return a == static_cast<char>(b); })) {
    throw IoError(path.string() + ": missing UWDM header");
  }
  const int h = get_u16(bytes.data() + 4), w = get_u16(bytes.data() + 6);
  const std::size_t expected = 8 + 4 * static_cast<std::size_t>(h) * w;
  if (bytes.size() != expected) {
    throw IoError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                  std::to_string(bytes.size()));
  }
  DepthMap depth(h, w);
  auto values = depth.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const unsigned char* b = bytes.data() + 8 + 4 * i;
    const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    values[i] = std::bit_cast<float>(bits);
  }
  depth.validate();
  return depth;
}

DepthMap read_depth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  if (in.gcount() == 4 && head == kRawMagic) return read_depth_raw(path);
  return read_depth_png(path);
}

}  // namespace uwsu::imaging
