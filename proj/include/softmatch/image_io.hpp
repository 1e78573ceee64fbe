#pragma once

// Frame and mask files: PNG (via libpng) and binary PGM/PPM.
//   masks              8-bit single channel, value = label
//   probability maps   16-bit single channel, value = round(p * 65535)
//   frames             8-bit RGB (grey and alpha are expanded / dropped)

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "softmatch/core.hpp"

namespace softmatch {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}

  std::uint8_t* pixel(std::size_t x, std::size_t y) { return rgb.data() + 3 * (y * width + x); }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return rgb.data() + 3 * (y * width + x);
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Decoded raster before interpretation.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;   // 1 = grey, 2 = grey+alpha, 3 = RGB, 4 = RGBA
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

namespace detail {

inline std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

inline bool is_pnm(const std::filesystem::path& p) {
  const auto e = lower_ext(p);
  return e == ".pgm" || e == ".ppm" || e == ".pnm";
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// All C++ objects touched after setjmp are declared before it, so a libpng
// longjmp never skips a destructor.
inline RawImage read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open image " + path.string());

  RawImage img;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  char error_text[256] = {0};

  png_structp png = png_create_read_struct(
      PNG_LIBPNG_VER_STRING, error_text,
      [](png_structp p, png_const_charp msg) {
        auto* text = static_cast<char*>(png_get_error_ptr(p));
        std::snprintf(text, 256, "%s", msg);
        png_longjmp(p, 1);
      },
      [](png_structp, png_const_charp) {});
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(FormatError::Kind::unsupported_image,
                      path.string() + ": invalid PNG (" + error_text + ")");
  }

  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * img.height);
  rows.resize(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = img.width * img.height * static_cast<std::size_t>(img.channels);
  img.samples.resize(n);
  if (img.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i)
      img.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
  } else {
    for (std::size_t i = 0; i < n; ++i) img.samples[i] = buffer[i];
  }
  return img;
}

inline void write_png(const std::filesystem::path& path, const RawImage& img) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot create image " + path.string());

  const std::size_t bytes_per_sample = img.bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes = img.width * static_cast<std::size_t>(img.channels) * bytes_per_sample;
  std::vector<png_byte> buffer(rowbytes * img.height);
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (bytes_per_sample == 2) {
      buffer[2 * i] = static_cast<png_byte>(img.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(img.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(img.samples[i]);
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  char error_text[256] = {0};

  png_structp png = png_create_write_struct(
      PNG_LIBPNG_VER_STRING, error_text,
      [](png_structp p, png_const_charp msg) {
        auto* text = static_cast<char*>(png_get_error_ptr(p));
        std::snprintf(text, 256, "%s", msg);
        png_longjmp(p, 1);
      },
      [](png_structp, png_const_charp) {});
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path.string() + ": PNG write failed (" + error_text + ")");
  }
  png_init_io(png, file.get());
  const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               img.bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline RawImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  auto token = [&]() {
    std::string t;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(static_cast<char>(ch));
    }
    return t;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P6")
    throw FormatError(FormatError::Kind::unsupported_image,
                      path.string() + ": only binary PGM (P5) and PPM (P6) are supported");
  RawImage img;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    const unsigned long maxval = std::stoul(token());
    if (maxval == 0 || maxval > 65535) throw std::out_of_range("maxval");
    img.bit_depth = maxval > 255 ? 16 : 8;
  } catch (const std::logic_error&) {
    throw FormatError(FormatError::Kind::unsupported_image, path.string() + ": malformed PNM header");
  }
  img.channels = magic == "P5" ? 1 : 3;
  const std::size_t n = img.width * img.height * static_cast<std::size_t>(img.channels);
  const std::size_t bps = img.bit_depth == 16 ? 2 : 1;
  std::vector<unsigned char> buf(n * bps);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size())
    throw FormatError(FormatError::Kind::truncated, path.string() + ": truncated PNM payload");
  img.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    img.samples[i] = bps == 2 ? static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]) : buf[i];
  return img;
}

inline void write_pnm(const std::filesystem::path& path, const RawImage& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create image " + path.string());
  out << (img.channels == 1 ? "P5" : "P6") << '\n'
      << img.width << ' ' << img.height << '\n'
      << (img.bit_depth == 16 ? 65535 : 255) << '\n';
  for (std::uint16_t s : img.samples) {
    if (img.bit_depth == 16) out.put(static_cast<char>(s >> 8));
    out.put(static_cast<char>(s & 0xff));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

inline RawImage read_image(const std::filesystem::path& path) {
  return detail::is_pnm(path) ? detail::read_pnm(path) : detail::read_png(path);
}

inline void write_image(const std::filesystem::path& path, const RawImage& img) {
  detail::require(img.channels == 1 || img.channels == 3, "write_image: 1 or 3 channels only");
  detail::require(img.bit_depth == 8 || img.bit_depth == 16, "write_image: 8 or 16 bits only");
  if (detail::is_pnm(path))
    detail::write_pnm(path, img);
  else
    detail::write_png(path, img);
}

/// Loads an RGB frame; grey images are replicated, alpha is dropped.
inline RgbImage load_frame(const std::filesystem::path& path) {
  const RawImage raw = read_image(path);
  if (raw.bit_depth != 8)
    throw FormatError(FormatError::Kind::unsupported_image,
                      path.string() + ": frames must be 8-bit, got " + std::to_string(raw.bit_depth));
  RgbImage img(raw.width, raw.height);
  const auto ch = static_cast<std::size_t>(raw.channels);
  for (std::size_t i = 0; i < raw.width * raw.height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t src = ch >= 3 ? c : 0;
      img.rgb[3 * i + c] = static_cast<std::uint8_t>(raw.samples[i * ch + src]);
    }
  }
  return img;
}

inline void save_frame(const RgbImage& img, const std::filesystem::path& path) {
  RawImage raw{img.width, img.height, 3, 8, {img.rgb.begin(), img.rgb.end()}};
  write_image(path, raw);
}

/// Loads an 8-bit single-channel label image; N is the largest label present.
inline LabelMask load_mask(const std::filesystem::path& path) {
  const RawImage raw = read_image(path);
  if (raw.channels != 1 || raw.bit_depth != 8)
    throw FormatError(FormatError::Kind::unsupported_image,
                      path.string() + ": masks must be 8-bit single-channel (got " +
                          std::to_string(raw.channels) + " channel(s), " +
                          std::to_string(raw.bit_depth) + " bit)");
  return LabelMask::from_labels(raw.width, raw.height, {raw.samples.begin(), raw.samples.end()});
}

inline void save_mask(const LabelMask& mask, const std::filesystem::path& path) {
  RawImage raw{mask.width(), mask.height(), 1, 8, {mask.labels().begin(), mask.labels().end()}};
  write_image(path, raw);
}

inline void save_probability(const ProbabilityMap& p, const std::filesystem::path& path) {
  RawImage raw{p.width(), p.height(), 1, 16, std::vector<std::uint16_t>(p.size())};
  for (std::size_t i = 0; i < p.size(); ++i)
    raw.samples[i] = static_cast<std::uint16_t>(std::lround(double{p[i]} * 65535.0));
  write_image(path, raw);
}

inline ProbabilityMap load_probability(const std::filesystem::path& path) {
  const RawImage raw = read_image(path);
  if (raw.channels != 1 || raw.bit_depth != 16)
    throw FormatError(FormatError::Kind::unsupported_image,
                      path.string() + ": probability maps must be 16-bit single-channel");
  std::vector<float> v(raw.samples.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<float>(raw.samples[i] / 65535.0);
  return ProbabilityMap(raw.width, raw.height, std::move(v));
}

/// PASCAL-VOC style colour for object k (k >= 1).
inline std::array<std::uint8_t, 3> object_color(int k) {
  std::array<std::uint8_t, 3> c{0, 0, 0};
  for (int shift = 7, id = k; id > 0; --shift, id >>= 3) {
    c[0] |= static_cast<std::uint8_t>(((id >> 0) & 1) << shift);
    c[1] |= static_cast<std::uint8_t>(((id >> 1) & 1) << shift);
    c[2] |= static_cast<std::uint8_t>(((id >> 2) & 1) << shift);
  }
  return c;
}

/// Alpha-blends each object's colour onto the frame; background untouched.
inline RgbImage overlay(const RgbImage& frame, const LabelMask& mask, double alpha = 0.5) {
  detail::require(frame.width == mask.width() && frame.height == mask.height(),
                  "overlay: frame and mask shapes differ");
  detail::require(alpha >= 0.0 && alpha <= 1.0, "overlay: alpha must lie in [0,1]");
  RgbImage out = frame;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0) continue;
    const auto color = object_color(mask[i]);
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = (1.0 - alpha) * frame.rgb[3 * i + c] + alpha * color[c];
      out.rgb[3 * i + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

inline void save_overlay(const RgbImage& frame, const LabelMask& mask,
                         const std::filesystem::path& path, double alpha = 0.5) {
  save_frame(overlay(frame, mask, alpha), path);
}

}  // namespace softmatch
