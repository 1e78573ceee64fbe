#pragma once

// "VMF1" feature interchange files:
//   magic "VMF1" | u32 h | u32 w | u32 c | u32 s | h*w*c float32, all little-endian.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "softmatch/core.hpp"

namespace softmatch {

namespace vmf {

inline constexpr char kMagic[4] = {'V', 'M', 'F', '1'};
inline constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

namespace detail {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

inline std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

}  // namespace detail

/// Decodes a feature map from an in-memory VMF1 image.
inline FeatureMap decode(const std::vector<unsigned char>& bytes) {
  using Kind = FormatError::Kind;
  if (bytes.size() < 4) throw FormatError(Kind::truncated, bytes.size(), "file shorter than magic");
  if (std::memcmp(bytes.data(), kMagic, 3) != 0)
    throw FormatError(Kind::bad_magic, 0, "bad magic bytes, expected 'VMF1'");
  if (bytes[3] != '1')
    throw FormatError(Kind::version_mismatch, 3,
                      std::string("unsupported format version '") +
                          static_cast<char>(bytes[3]) + "'");
  if (bytes.size() < kHeaderBytes)
    throw FormatError(Kind::truncated, bytes.size(), "header truncated");

  const unsigned char* p = bytes.data() + 4;
  const std::uint32_t h = detail::load_u32(p);
  const std::uint32_t w = detail::load_u32(p + 4);
  const std::uint32_t c = detail::load_u32(p + 8);
  const std::uint32_t s = detail::load_u32(p + 12);
  if (h == 0 || w == 0 || c == 0 || s == 0)
    throw FormatError(Kind::bad_header, 4, "header declares a zero dimension or stride");

  const std::uint64_t count = std::uint64_t{h} * w * c;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (count > payload / 4)
    throw FormatError(Kind::truncated, bytes.size(),
                      "payload holds " + std::to_string(payload / 4) + " scalars, header declares " +
                          std::to_string(count));
  if (payload != count * 4)
    throw FormatError(Kind::trailing_data, kHeaderBytes + count * 4,
                      "unexpected bytes after payload");

  std::vector<float> data(count);
  const unsigned char* q = bytes.data() + kHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t bits = detail::load_u32(q + 4 * i);
    const float v = std::bit_cast<float>(bits);
    if (!std::isfinite(v))
      throw FormatError(Kind::non_finite, kHeaderBytes + 4 * i, "non-finite scalar");
    data[i] = v;
  }
  return FeatureMap(h, w, c, s, std::move(data));
}

inline std::vector<unsigned char> encode(const FeatureMap& map) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  softmatch::detail::require(map.height() <= kMax && map.width() <= kMax &&
                                 map.channels() <= kMax && map.stride() <= kMax,
                             "feature map dimension exceeds u32");
  std::vector<unsigned char> out;
  out.reserve(kHeaderBytes + 4 * map.data().size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  detail::store_u32(out, static_cast<std::uint32_t>(map.height()));
  detail::store_u32(out, static_cast<std::uint32_t>(map.width()));
  detail::store_u32(out, static_cast<std::uint32_t>(map.channels()));
  detail::store_u32(out, static_cast<std::uint32_t>(map.stride()));
  for (float v : map.data()) detail::store_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

}  // namespace vmf

inline FeatureMap read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    return vmf::decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": ", e);
  }
}

inline void write_feature_file(const FeatureMap& map, const std::filesystem::path& path) {
  const auto bytes = vmf::encode(map);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create feature file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace softmatch
