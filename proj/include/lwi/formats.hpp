#pragma once
/**
 * @file formats.hpp
 * @brief Little-endian binary model ("LWIM") and data ("LWID") files.
 *
 * LWIM v1:  magic[4] u32 version u32 nx u32 nz f64 dx f64 dz f64 x0 f64 z0
 *           f64 velocity[nx*nz]            (m/s, z outer / x inner)
 * LWID v1:  magic[4] u32 version u32 n_f u32 n_s u32 n_r
 *           f64 freq[n_f]  f64 (x,z)[n_s]  f64 (x,z)[n_r]
 *           f64 (re,im)[n_f][n_s][n_r]
 *
 * Decoding either validates completely or throws FormatError naming the
 * offending byte offset; it never returns a partially filled object.
 */

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "lwi/acquisition.hpp"

namespace lwi {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr double kMaxVelocity = 2e4;

struct ModelFile {
  Grid grid;  ///< nx, nz >= 1 here; the >= 3 rule applies when building a Model
  RVec velocity;
};

struct DataFile {
  std::vector<double> freqs_hz;
  std::vector<Point> sources;
  std::vector<Point> receivers;
  std::vector<CMat> records;  ///< n_r x n_s per frequency
};

namespace detail {

class ByteWriter {
 public:
  void raw(const char* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(const Bytes& b) : b_(b) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t size() const { return b_.size(); }

  void need(std::uint64_t n, const char* what) const {
    if (b_.size() - pos_ < n) throw FormatError(std::string("truncated ") + what, b_.size());
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  double finite_f64(const char* what) {
    const std::uint64_t at = pos_;
    const double d = f64(what);
    if (!std::isfinite(d)) throw FormatError(std::string("non-finite ") + what, at);
    return d;
  }
  void magic(const char* expected) {
    if (b_.size() < 4 || std::memcmp(b_.data(), expected, 4) != 0) throw FormatError("bad magic", 0);
    pos_ = 4;
  }

 private:
  const Bytes& b_;
  std::uint64_t pos_ = 0;
};

// Payload length from the header, rejected before any allocation when it
// cannot match the buffer.
inline void expect_exact_size(const ByteReader& r, std::uint64_t header_end, std::uint64_t count_f64) {
  const std::uint64_t max_count = (std::numeric_limits<std::uint64_t>::max() - header_end) / 8;
  if (count_f64 > max_count) throw FormatError("declared payload is too large", header_end);
  const std::uint64_t expected = header_end + 8 * count_f64;
  if (r.size() < expected) throw FormatError("truncated payload", r.size());
  if (r.size() > expected) throw FormatError("trailing bytes after payload", expected);
}

}  // namespace detail

inline Bytes encode_model(const ModelFile& m) {
  require_shape(m.velocity.size() == m.grid.nx * m.grid.nz, "model file: velocity count does not match grid");
  detail::ByteWriter w;
  w.raw("LWIM", 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(m.grid.nx));
  w.u32(static_cast<std::uint32_t>(m.grid.nz));
  w.f64(m.grid.dx);
  w.f64(m.grid.dz);
  w.f64(m.grid.x0);
  w.f64(m.grid.z0);
  for (Index i = 0; i < m.velocity.size(); ++i) w.f64(m.velocity[i]);
  return w.take();
}

inline ModelFile decode_model(const Bytes& bytes) {
  detail::ByteReader r(bytes);
  r.magic("LWIM");
  if (const auto v = r.u32("header"); v != kFormatVersion)
    throw FormatError("unsupported version " + std::to_string(v), 4);
  ModelFile m;
  const std::uint32_t nx = r.u32("header");
  const std::uint32_t nz = r.u32("header");
  if (nx == 0) throw FormatError("zero nx", 8);
  if (nz == 0) throw FormatError("zero nz", 12);
  const double dx = r.finite_f64("dx");
  const double dz = r.finite_f64("dz");
  if (!(dx > 0.0)) throw FormatError("non-positive dx", 16);
  if (!(dz > 0.0)) throw FormatError("non-positive dz", 24);
  const double x0 = r.finite_f64("x0");
  const double z0 = r.finite_f64("z0");
  detail::expect_exact_size(r, r.offset(), static_cast<std::uint64_t>(nx) * nz);
  m.grid = Grid{nx, nz, dx, dz, x0, z0};
  m.velocity.resize(static_cast<Index>(nx) * nz);
  for (Index i = 0; i < m.velocity.size(); ++i) {
    const std::uint64_t at = r.offset();
    const double v = r.f64("payload");
    if (!(v > 0.0 && v < kMaxVelocity)) throw FormatError("velocity outside (0, 2e4) m/s", at);
    m.velocity[i] = v;
  }
  return m;
}

inline Bytes encode_data(const DataFile& d) {
  const std::size_t nf = d.freqs_hz.size(), ns = d.sources.size(), nr = d.receivers.size();
  require_shape(d.records.size() == nf, "data file: record count does not match frequencies");
  detail::ByteWriter w;
  w.raw("LWID", 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(nf));
  w.u32(static_cast<std::uint32_t>(ns));
  w.u32(static_cast<std::uint32_t>(nr));
  for (double f : d.freqs_hz) w.f64(f);
  for (const auto& p : d.sources) {
    w.f64(p.x);
    w.f64(p.z);
  }
  for (const auto& p : d.receivers) {
    w.f64(p.x);
    w.f64(p.z);
  }
  for (const auto& rec : d.records) {
    require_shape(rec.rows() == static_cast<Index>(nr) && rec.cols() == static_cast<Index>(ns),
                  "data file: record shape mismatch");
    for (Index s = 0; s < rec.cols(); ++s)
      for (Index q = 0; q < rec.rows(); ++q) {
        w.f64(rec(q, s).real());
        w.f64(rec(q, s).imag());
      }
  }
  return w.take();
}

inline DataFile decode_data(const Bytes& bytes) {
  detail::ByteReader r(bytes);
  r.magic("LWID");
  if (const auto v = r.u32("header"); v != kFormatVersion)
    throw FormatError("unsupported version " + std::to_string(v), 4);
  const std::uint64_t nf = r.u32("header");
  const std::uint64_t ns = r.u32("header");
  const std::uint64_t nr = r.u32("header");
  if (nf == 0) throw FormatError("zero frequency count", 8);
  if (ns == 0) throw FormatError("zero source count", 12);
  if (nr == 0) throw FormatError("zero receiver count", 16);
  // Header counts are < 2^32 each, so these products cannot overflow u64 until
  // the final multiply, which expect_exact_size guards.
  const std::uint64_t table = nf + 2 * ns + 2 * nr;
  const std::uint64_t cells = nf * ns;
  if (cells > std::numeric_limits<std::uint64_t>::max() / (2 * nr)) throw FormatError("declared payload is too large", 20);
  detail::expect_exact_size(r, r.offset(), table + 2 * cells * nr);

  DataFile d;
  d.freqs_hz.reserve(nf);
  for (std::uint64_t k = 0; k < nf; ++k) {
    const std::uint64_t at = r.offset();
    const double f = r.finite_f64("frequency");
    if (!(f > 0.0)) throw FormatError("non-positive frequency", at);
    if (k > 0 && !(f > d.freqs_hz.back())) throw FormatError("frequencies not strictly increasing", at);
    d.freqs_hz.push_back(f);
  }
  auto points = [&](std::uint64_t n, std::vector<Point>& out) {
    out.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
      const double x = r.finite_f64("position");
      const double z = r.finite_f64("position");
      out.push_back({x, z});
    }
  };
  points(ns, d.sources);
  points(nr, d.receivers);
  d.records.reserve(nf);
  for (std::uint64_t k = 0; k < nf; ++k) {
    CMat rec(static_cast<Index>(nr), static_cast<Index>(ns));
    for (Index s = 0; s < rec.cols(); ++s)
      for (Index q = 0; q < rec.rows(); ++q) {
        const double re = r.finite_f64("record");
        const double im = r.finite_f64("record");
        rec(q, s) = {re, im};
      }
    d.records.push_back(std::move(rec));
  }
  return d;
}

inline Bytes read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path + "'");
  return b;
}

inline void write_bytes(const std::string& path, const Bytes& b) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline ModelFile read_model_file(const std::string& path) { return decode_model(read_bytes(path)); }
inline void write_model_file(const std::string& path, const ModelFile& m) { write_bytes(path, encode_model(m)); }
inline DataFile read_data_file(const std::string& path) { return decode_data(read_bytes(path)); }
inline void write_data_file(const std::string& path, const DataFile& d) { write_bytes(path, encode_data(d)); }

inline ModelFile to_model_file(const Model& m) { return {m.grid(), m.velocity()}; }
inline Model to_model(const ModelFile& f) { return Model::from_velocity(f.grid, f.velocity); }

inline DataFile to_data_file(const DataSet& ds) {
  return {ds.freqs_hz, ds.acquisition.sources, ds.acquisition.receivers, ds.records};
}

/// The wavelet is not stored in the file and must come from configuration.
inline DataSet to_data_set(const DataFile& f, const SourceWavelet& wavelet) {
  DataSet ds;
  ds.freqs_hz = f.freqs_hz;
  ds.records = f.records;
  ds.acquisition.sources = f.sources;
  ds.acquisition.receivers = f.receivers;
  ds.acquisition.wavelet = wavelet;
  ds.validate();
  return ds;
}

}  // namespace lwi
