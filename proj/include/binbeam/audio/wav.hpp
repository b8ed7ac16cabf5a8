#pragma once

// RIFF/WAVE reader and writer: PCM 16/24-bit and IEEE float32, any channel
// count. Samples are normalized to [-1, 1]; integer formats use a 2^(bits-1)
// scale on both sides so written values read back exactly.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "binbeam/audio/buffer.hpp"
#include "binbeam/error.hpp"

namespace binbeam::audio {

enum class WavFormat { pcm16, pcm24, float32 };

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_wav: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) {
    return DataError("read_wav: " + path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = detail::read_u32le(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a truncated data chunk length only for the data chunk itself.
      if (std::memcmp(hdr, "data", 4) != 0) throw fail("chunk overruns file");
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw fail("fmt chunk too short");
      const unsigned char* f = bytes.data() + body;
      format = detail::read_u16le(f);
      channels = detail::read_u16le(f + 2);
      rate = detail::read_u32le(f + 4);
      bits = detail::read_u16le(f + 14);
      if (format == detail::kFormatExtensible) {
        if (size < 40) throw fail("extensible fmt chunk too short");
        format = detail::read_u16le(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
      if (data_size != size) throw fail("data chunk truncated");
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (!data) throw fail("missing data chunk");
  if (channels == 0) throw fail("zero channels");
  if (rate == 0) throw fail("zero sample rate");

  std::size_t width = 0;
  if (format == detail::kFormatPcm && (bits == 16 || bits == 24)) {
    width = bits / 8;
  } else if (format == detail::kFormatFloat && bits == 32) {
    width = 4;
  } else {
    throw fail("unsupported codec (format " + std::to_string(format) + ", " +
               std::to_string(bits) + " bits)");
  }
  const std::size_t frame_bytes = width * channels;
  if (data_size % frame_bytes != 0) throw fail("data size not a whole number of frames");
  const std::size_t length = data_size / frame_bytes;

  AudioBuffer buf(channels, length, static_cast<double>(rate));
  const unsigned char* p = data;
  for (std::size_t n = 0; n < length; ++n) {
    for (std::size_t c = 0; c < channels; ++c, p += width) {
      double v = 0.0;
      if (width == 2) {
        v = static_cast<std::int16_t>(detail::read_u16le(p)) / 32768.0;
      } else if (width == 3) {
        std::int32_t s = std::int32_t(p[0]) | (std::int32_t(p[1]) << 8) |
                         (std::int32_t(p[2]) << 16);
        if (s & 0x800000) s -= 0x1000000;
        v = s / 8388608.0;
      } else {
        v = std::bit_cast<float>(detail::read_u32le(p));
      }
      buf(c, n) = v;
    }
  }
  if (!buf.all_finite()) throw fail("non-finite samples");
  return buf;
}

inline void write_wav(const AudioBuffer& buf, const std::filesystem::path& path,
                      WavFormat fmt = WavFormat::float32) {
  if (buf.channels() == 0) throw DataError("write_wav: buffer has no channels");
  for (double v : buf.data()) {
    if (!std::isfinite(v)) throw DataError("write_wav: non-finite sample");
    if (v > 1.0 || v < -1.0)
      throw DataError("write_wav: sample " + std::to_string(v) +
                      " outside [-1, 1] for " + path.string());
  }
  const std::size_t width = fmt == WavFormat::pcm16 ? 2 : fmt == WavFormat::pcm24 ? 3 : 4;
  const std::uint16_t tag = fmt == WavFormat::float32 ? detail::kFormatFloat : detail::kFormatPcm;
  const std::size_t data_size = width * buf.channels() * buf.length();
  if (data_size > 0xFFFFFFFFull - 64) throw DataError("write_wav: data exceeds RIFF limit");
  const auto rate = static_cast<std::uint32_t>(std::lround(buf.sample_rate()));

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  const auto tag4 = [&](const char* s) { out.insert(out.end(), s, s + 4); };
  tag4("RIFF");
  detail::put_u32le(out, static_cast<std::uint32_t>(36 + data_size));
  tag4("WAVE");
  tag4("fmt ");
  detail::put_u32le(out, 16);
  detail::put_u16le(out, tag);
  detail::put_u16le(out, static_cast<std::uint16_t>(buf.channels()));
  detail::put_u32le(out, rate);
  detail::put_u32le(out, static_cast<std::uint32_t>(rate * width * buf.channels()));
  detail::put_u16le(out, static_cast<std::uint16_t>(width * buf.channels()));
  detail::put_u16le(out, static_cast<std::uint16_t>(width * 8));
  tag4("data");
  detail::put_u32le(out, static_cast<std::uint32_t>(data_size));

  for (std::size_t n = 0; n < buf.length(); ++n) {
    for (std::size_t c = 0; c < buf.channels(); ++c) {
      const double v = buf(c, n);
      if (fmt == WavFormat::float32) {
        detail::put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      } else {
        const double scale = fmt == WavFormat::pcm16 ? 32768.0 : 8388608.0;
        const double top = scale - 1.0;
        const auto s = static_cast<std::int32_t>(std::min(std::round(v * scale), top));
        const auto u = static_cast<std::uint32_t>(s);
        for (std::size_t b = 0; b < width; ++b)
          out.push_back(static_cast<unsigned char>(u >> (8 * b)));
      }
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("write_wav: cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw DataError("write_wav: write failed for " + path.string());
}

}  // namespace binbeam::audio
