#pragma once
/**
 * @file acquisition.hpp
 * @brief Source/receiver layouts, observation operators, Ricker spectra and
 *        synthetic data generation.
 */

#include <cmath>
#include <future>
#include <numbers>
#include <random>
#include <vector>

#include "lwi/helmholtz.hpp"
#include "lwi/linsolve.hpp"

namespace lwi {

struct Point {
  double x = 0.0;
  double z = 0.0;
  bool operator==(const Point&) const = default;
};

/// Amplitude spectrum of a Ricker wavelet with peak frequency f0 (zero phase).
inline double ricker_spectrum(double f, double f0) {
  const double r = f / f0;
  return 2.0 / std::sqrt(std::numbers::pi) * (f * f / (f0 * f0 * f0)) * std::exp(-r * r);
}

struct SourceWavelet {
  enum class Kind { ricker, unit };
  Kind kind = Kind::ricker;
  double peak_hz = 10.0;

  cplx amplitude(double f) const { return kind == Kind::unit ? cplx{1.0} : cplx{ricker_spectrum(f, peak_hz)}; }
};

struct Acquisition {
  std::vector<Point> sources;
  std::vector<Point> receivers;
  SourceWavelet wavelet;

  Index ns() const { return static_cast<Index>(sources.size()); }
  Index nr() const { return static_cast<Index>(receivers.size()); }

  void validate(const Grid& g) const {
    if (sources.empty()) throw GeometryError("acquisition needs at least one source");
    if (receivers.empty()) throw GeometryError("acquisition needs at least one receiver");
    auto inside = [&](const Point& p) {
      return std::isfinite(p.x) && std::isfinite(p.z) && p.x >= g.x0 && p.x <= g.x_max() && p.z >= g.z0 &&
             p.z <= g.z_max();
    };
    for (std::size_t i = 0; i < sources.size(); ++i)
      if (!inside(sources[i])) throw GeometryError("source " + std::to_string(i) + " lies outside the interior grid");
    for (std::size_t i = 0; i < receivers.size(); ++i)
      if (!inside(receivers[i]))
        throw GeometryError("receiver " + std::to_string(i) + " lies outside the interior grid (in the pad)");
  }
};

/// Interior node nearest to p; ties resolve to the lower index.
inline Index nearest_node(const Grid& g, const Point& p) {
  const double tx = (p.x - g.x0) / g.dx;
  const double tz = (p.z - g.z0) / g.dz;
  const Index ix = std::clamp(static_cast<Index>(std::ceil(tx - 0.5)), Index{0}, g.nx - 1);
  const Index iz = std::clamp(static_cast<Index>(std::ceil(tz - 0.5)), Index{0}, g.nz - 1);
  return g.index(ix, iz);
}

/// Receiver selection P (n_r x N) and its column split by partition.
struct ObservationOperator {
  SpMat P;
  SpMat P1;  ///< columns at background (padded) nodes
  SpMat P2;  ///< columns at target nodes; zero nonzeros when receivers avoid the target
  IndexList receiver_nodes;  ///< padded index per receiver

  Index nr() const { return P.rows(); }
};

inline ObservationOperator build_observation(const Acquisition& acq, const PaddedDomain& dom) {
  acq.validate(dom.grid());
  ObservationOperator obs;
  obs.P.resize(acq.nr(), dom.N());
  std::vector<Eigen::Triplet<cplx>> trips;
  for (Index r = 0; r < acq.nr(); ++r) {
    const Index p = dom.to_padded(nearest_node(dom.grid(), acq.receivers[static_cast<std::size_t>(r)]));
    obs.receiver_nodes.push_back(p);
    trips.emplace_back(r, p, 1.0);
  }
  obs.P.setFromTriplets(trips.begin(), trips.end());
  obs.P.makeCompressed();
  return obs;
}

inline ObservationOperator build_observation(const Acquisition& acq, const PaddedDomain& dom,
                                             const Partition& part) {
  ObservationOperator obs = build_observation(acq, dom);
  const auto [background, target] = dom.lift(part);
  obs.P1 = select_columns(obs.P, background);
  obs.P2 = select_columns(obs.P, target);
  return obs;
}

/// Point sources: delta at the nearest node, scaled by amplitude / (dx dz).
inline CMat source_terms(const Acquisition& acq, const PaddedDomain& dom, double freq_hz) {
  const Grid& g = dom.grid();
  CMat B = CMat::Zero(dom.N(), acq.ns());
  const cplx amp = acq.wavelet.amplitude(freq_hz) / (g.dx * g.dz);
  for (Index s = 0; s < acq.ns(); ++s)
    B(dom.to_padded(nearest_node(g, acq.sources[static_cast<std::size_t>(s)])), s) += amp;
  return B;
}

/// Observed records, one n_r x n_s matrix per frequency.
struct DataSet {
  std::vector<double> freqs_hz;
  std::vector<CMat> records;
  Acquisition acquisition;

  Index frequency_index(double f) const {
    for (std::size_t k = 0; k < freqs_hz.size(); ++k)
      if (std::abs(freqs_hz[k] - f) <= 1e-9 * std::max(1.0, std::abs(f))) return static_cast<Index>(k);
    throw ConfigError("frequency " + std::to_string(f) + " Hz is not present in the data set");
  }

  void validate() const {
    if (freqs_hz.size() != records.size()) throw ShapeError("data set frequency/record count mismatch");
    for (std::size_t k = 0; k < freqs_hz.size(); ++k) {
      if (!(freqs_hz[k] > 0.0) || !std::isfinite(freqs_hz[k])) throw ConfigError("frequencies must be positive");
      if (k > 0 && !(freqs_hz[k] > freqs_hz[k - 1])) throw ConfigError("frequencies must be strictly increasing");
      require_shape(records[k].rows() == acquisition.nr() && records[k].cols() == acquisition.ns(),
                    "data record shape does not match acquisition");
      if (!records[k].allFinite()) throw ConfigError("data record contains non-finite values");
    }
  }
};

struct NoiseSpec {
  bool enabled = false;
  double snr_db = 40.0;
  std::uint64_t seed = 0;
};

inline double angular(double freq_hz) { return 2.0 * std::numbers::pi * freq_hz; }

/// Forward-models D = P A(m)^{-1} B at each frequency.
inline DataSet synthesize_data(const Model& model_true, const Acquisition& acq, const std::vector<double>& freqs_hz,
                               const PmlSpec& pml, const NoiseSpec& noise = {}, SolveLedger* ledger = nullptr,
                               const std::string& phase = "forward", unsigned threads = 1) {
  if (freqs_hz.empty()) throw ConfigError("no frequencies requested");
  acq.validate(model_true.grid());
  DataSet ds;
  ds.freqs_hz = freqs_hz;
  ds.acquisition = acq;
  ds.records.resize(freqs_hz.size());

  auto one = [&](std::size_t k) {
    const double f = freqs_hz[k];
    const HelmholtzSystem sys = assemble(model_true, angular(f), pml);
    const ObservationOperator obs = build_observation(acq, sys.domain);
    const LedgerTag tag{ledger, phase, f};
    const Factorization lu = factorize(sys.A, SizeClass::full, tag);
    const CMat U = lu.solve(source_terms(acq, sys.domain, f), tag);
    ds.records[k] = obs.P * U;
  };

  if (threads <= 1 || freqs_hz.size() == 1) {
    for (std::size_t k = 0; k < freqs_hz.size(); ++k) one(k);
  } else {
    std::size_t next = 0;
    while (next < freqs_hz.size()) {
      std::vector<std::future<void>> batch;
      for (unsigned t = 0; t < threads && next < freqs_hz.size(); ++t, ++next)
        batch.push_back(std::async(std::launch::async, one, next));
      for (auto& fut : batch) fut.get();
    }
  }

  if (noise.enabled) {
    // Per-frequency streams keep the draw independent of execution order.
    for (std::size_t k = 0; k < freqs_hz.size(); ++k) {
      std::mt19937_64 rng(noise.seed * 1000003ULL + k);
      CMat& D = ds.records[k];
      const double signal_power = D.squaredNorm() / static_cast<double>(D.size());
      const double sigma = std::sqrt(signal_power / std::pow(10.0, noise.snr_db / 10.0) / 2.0);
      std::normal_distribution<double> gauss(0.0, sigma);
      for (Index j = 0; j < D.cols(); ++j)
        for (Index i = 0; i < D.rows(); ++i) D(i, j) += cplx{gauss(rng), gauss(rng)};
    }
  }
  ds.validate();
  return ds;
}

}  // namespace lwi
