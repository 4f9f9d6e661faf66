#pragma once
// Small fixtures shared by the unit tests.

#include <random>

#include "dense_oracle.hpp"
#include "lwi/lwi.hpp"

namespace fixture {

using namespace lwi;

inline oracle::Mat dense(const SpMat& M) { return oracle::Mat(M); }

inline oracle::Layout layout(const Grid& g, Index w) { return {g.nx, g.nz, w, g.dx, g.dz}; }

inline oracle::Damping damping(const PmlSpec& pml, double omega) {
  return {pml.reflection, pml.reference_velocity, omega};
}

inline CMat random_cmat(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMat M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = {g(rng), g(rng)};
  return M;
}

inline RVec random_velocity(const Grid& g, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  RVec v(g.size());
  for (Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  return v;
}

/// A small problem: smooth-ish random model, 2 sources, 3 receivers in the
/// background, centered target block.
struct Tiny {
  Grid grid;
  Model model;
  Acquisition acq;
  Partition part;
  InversionConfig cfg;
  double freq = 5.0;
};

inline Tiny tiny(Index n = 10, Index pml_width = 4, std::uint64_t seed = 1) {
  Tiny t;
  t.grid = Grid{n, n, 50.0, 50.0, 0.0, 0.0};
  std::mt19937_64 rng(seed);
  t.model = Model::from_velocity(t.grid, random_velocity(t.grid, 1800.0, 2400.0, rng));
  const double L = t.grid.x_max();
  t.acq.sources = {{0.1 * L, 0.1 * L}, {0.9 * L, 0.2 * L}};
  t.acq.receivers = {{0.0, 0.8 * L}, {0.5 * L, 0.95 * L}, {L, 0.7 * L}};
  t.acq.wavelet.kind = SourceWavelet::Kind::unit;
  const double c = 0.5 * L;
  t.part = build_partition(t.grid, {Rect{c - 0.2 * L, c + 0.2 * L, c - 0.2 * L, c + 0.2 * L}});
  t.cfg.pml = PmlSpec{pml_width, 1e-3, 2000.0};
  t.cfg.bounds = BoundConstraint(1000.0, 6000.0);
  return t;
}

inline DataSet data_for(const Tiny& t, const Model& m, std::vector<double> freqs = {}) {
  if (freqs.empty()) freqs = {t.freq};
  return synthesize_data(m, t.acq, freqs, t.cfg.pml);
}

}  // namespace fixture
