#pragma once
/**
 * @file raster.hpp
 * @brief Export of real node fields as CSV, raw f64 with a JSON sidecar, or
 *        16-bit PGM.
 */

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lwi/formats.hpp"

namespace lwi {

enum class RasterFormat { csv, f64_binary, pgm16 };

inline RasterFormat parse_raster_format(std::string_view s) {
  if (s == "csv") return RasterFormat::csv;
  if (s == "f64-binary" || s == "bin") return RasterFormat::f64_binary;
  if (s == "pgm16") return RasterFormat::pgm16;
  throw ConfigError("unknown raster format '" + std::string(s) + "'");
}

inline std::string shortest_decimal(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// One line per depth row, nx comma-separated values in shortest round-trip form.
inline std::string raster_csv(const RVec& field, Index nx, Index nz) {
  require_shape(field.size() == nx * nz, "raster: field length does not match shape");
  std::string out;
  for (Index iz = 0; iz < nz; ++iz) {
    for (Index ix = 0; ix < nx; ++ix) {
      if (ix) out += ',';
      out += shortest_decimal(field[iz * nx + ix]);
    }
    out += '\n';
  }
  return out;
}

inline RVec parse_raster_csv(const std::string& text, Index* nx_out = nullptr, Index* nz_out = nullptr) {
  std::vector<double> vals;
  Index nx = -1, nz = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Index count = 0;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      double v = 0.0;
      const auto res = std::from_chars(line.data() + start, line.data() + end, v);
      if (res.ec != std::errc() || res.ptr != line.data() + end)
        throw FormatError("bad csv value on line " + std::to_string(nz + 1), static_cast<std::uint64_t>(start));
      vals.push_back(v);
      ++count;
      start = end + 1;
    }
    if (nx >= 0 && count != nx) throw FormatError("ragged csv row " + std::to_string(nz + 1), 0);
    nx = count;
    ++nz;
  }
  if (nx_out) *nx_out = std::max<Index>(nx, 0);
  if (nz_out) *nz_out = nz;
  return Eigen::Map<RVec>(vals.data(), static_cast<Index>(vals.size()));
}

/// Binary PGM (P5), maxval 65535, big-endian samples. min == max maps to 0.
inline Bytes raster_pgm16(const RVec& field, Index nx, Index nz) {
  require_shape(field.size() == nx * nz, "raster: field length does not match shape");
  const std::string header = "P5\n" + std::to_string(nx) + " " + std::to_string(nz) + "\n65535\n";
  Bytes out(header.begin(), header.end());
  const double lo = field.size() ? field.minCoeff() : 0.0;
  const double hi = field.size() ? field.maxCoeff() : 0.0;
  const double range = hi - lo;
  for (Index i = 0; i < field.size(); ++i) {
    const double t = range > 0.0 ? (field[i] - lo) / range : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
    out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q & 0xff));
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  const Bytes b = read_bytes(path);
  return std::string(b.begin(), b.end());
}

/// Writes `field` (z outer, x inner). The binary form also writes path + ".json".
inline void export_raster(const RVec& field, Index nx, Index nz, const std::string& path, RasterFormat fmt) {
  require_shape(field.size() == nx * nz, "raster: field length does not match shape");
  if (!field.allFinite()) throw ConfigError("raster field contains non-finite values");
  switch (fmt) {
    case RasterFormat::csv: write_text(path, raster_csv(field, nx, nz)); break;
    case RasterFormat::pgm16: write_bytes(path, raster_pgm16(field, nx, nz)); break;
    case RasterFormat::f64_binary: {
      detail::ByteWriter w;
      for (Index i = 0; i < field.size(); ++i) w.f64(field[i]);
      write_bytes(path, w.take());
      nlohmann::ordered_json side = {{"nx", nx}, {"nz", nz}, {"dtype", "f64-le"}, {"order", "z-outer,x-inner"}};
      write_text(path + ".json", side.dump(2) + "\n");
      break;
    }
  }
}

inline void export_raster(const RVec& field, const Grid& g, const std::string& path, RasterFormat fmt) {
  export_raster(field, g.nx, g.nz, path, fmt);
}

inline const char* raster_extension(RasterFormat fmt) {
  switch (fmt) {
    case RasterFormat::csv: return ".csv";
    case RasterFormat::f64_binary: return ".bin";
    case RasterFormat::pgm16: return ".pgm";
  }
  return "";
}

}  // namespace lwi
