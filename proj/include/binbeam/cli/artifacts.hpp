#pragma once

// On-disk artifact formats: CSV tables, the binary ground-truth track, and
// JSON documents.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "binbeam/error.hpp"
#include "binbeam/metrics/bands.hpp"
#include "binbeam/scene/render.hpp"

namespace binbeam::cli {

namespace fs = std::filesystem;

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Rows are buffered and written in one go, so a failed run never leaves a
// half-written table behind.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) { line(header); }

  CsvWriter& row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("CsvWriter: row width does not match header");
    line(cells);
    return *this;
  }

  const std::string& str() const { return out_; }

  void save(const fs::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f << out_;
    if (!f) throw DataError("write failed for " + path.string());
  }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
  }
  std::size_t width_;
  std::string out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError("CSV has no column '" + name + "'");
  }
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size())
        throw DataError(path.string() + ": row width does not match header");
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw DataError(path.string() + ": empty CSV");
  return t;
}

inline double parse_num(const std::string& s, const fs::path& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(where.string() + ": not a number: '" + s + "'");
  }
}

inline CsvWriter snr_gain_csv(const metrics::SnrGainCurve& c) {
  CsvWriter w({"band_hz", "input_snr_db", "output_snr_db", "gain_db", "speed_rev_s"});
  for (const auto& p : c.points)
    w.row({fmt_num(p.band_hz), fmt_num(p.input_snr_db), fmt_num(p.output_snr_db), fmt_num(p.gain_db),
           fmt_num(c.speed_rev_s)});
  return w;
}

inline metrics::SnrGainCurve read_snr_gain_csv(const fs::path& path) {
  const auto t = read_csv(path);
  const auto cb = t.column("band_hz"), ci = t.column("input_snr_db"), co = t.column("output_snr_db"),
             cg = t.column("gain_db"), cs = t.column("speed_rev_s");
  if (t.rows.empty()) throw DataError(path.string() + ": no bands");
  metrics::SnrGainCurve c;
  c.speed_rev_s = parse_num(t.rows[0][cs], path);
  for (const auto& r : t.rows) {
    metrics::SnrGainPoint p;
    p.band_hz = parse_num(r[cb], path);
    p.input_snr_db = parse_num(r[ci], path);
    p.output_snr_db = parse_num(r[co], path);
    p.gain_db = parse_num(r[cg], path);
    // Bands without noise carry the +inf sentinel and are kept out of means.
    p.flagged = p.input_snr_db >= metrics::kPosInfDb || p.output_snr_db >= metrics::kPosInfDb;
    c.points.push_back(p);
  }
  return c;
}

// Ground-truth track: "BBTF", u32 version, u64 frames, bins, frame_len, hop,
// fft_len, f64 sample_rate, then frames*bins*2 complex values (re, im) as
// little-endian f64.
inline constexpr char kTrackMagic[4] = {'B', 'B', 'T', 'F'};
inline constexpr std::uint32_t kTrackVersion = 1;

namespace detail {
static_assert(std::endian::native == std::endian::little, "artifact I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& o, T v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T take(std::istream& i, const fs::path& p) {
  T v{};
  if (!i.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError(p.string() + ": truncated track file");
  return v;
}
}  // namespace detail

inline void write_track(const scene::TransferFunctionTrack& t, const fs::path& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw DataError("cannot write " + path.string());
  o.write(kTrackMagic, 4);
  detail::put<std::uint32_t>(o, kTrackVersion);
  for (std::uint64_t v : {std::uint64_t(t.frames), std::uint64_t(t.bins), std::uint64_t(t.params.frame_len),
                          std::uint64_t(t.params.hop), std::uint64_t(t.params.fft_len)})
    detail::put(o, v);
  detail::put(o, t.sample_rate);
  for (const auto& z : t.a) {
    detail::put(o, z.real());
    detail::put(o, z.imag());
  }
  if (!o) throw DataError("write failed for " + path.string());
}

inline scene::TransferFunctionTrack read_track(const fs::path& path) {
  std::ifstream i(path, std::ios::binary);
  if (!i) throw DataError("cannot open " + path.string());
  char magic[4];
  if (!i.read(magic, 4) || std::memcmp(magic, kTrackMagic, 4) != 0)
    throw DataError(path.string() + ": not a ground-truth track file");
  if (detail::take<std::uint32_t>(i, path) != kTrackVersion)
    throw DataError(path.string() + ": unsupported track version");
  scene::TransferFunctionTrack t;
  t.frames = detail::take<std::uint64_t>(i, path);
  t.bins = detail::take<std::uint64_t>(i, path);
  t.params.frame_len = detail::take<std::uint64_t>(i, path);
  t.params.hop = detail::take<std::uint64_t>(i, path);
  t.params.fft_len = detail::take<std::uint64_t>(i, path);
  t.sample_rate = detail::take<double>(i, path);
  if (t.bins != t.params.bins()) throw DataError(path.string() + ": bin count inconsistent with fft_len");
  t.a.resize(t.frames * t.bins * 2);
  for (auto& z : t.a) {
    const double re = detail::take<double>(i, path);
    const double im = detail::take<double>(i, path);
    z = {re, im};
  }
  if (i.peek() != std::char_traits<char>::eof()) throw DataError(path.string() + ": trailing bytes");
  return t;
}

inline void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw DataError("cannot write " + path.string());
  o << j.dump(2) << '\n';
  if (!o) throw DataError("write failed for " + path.string());
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream i(path);
  if (!i) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(i);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace binbeam::cli
