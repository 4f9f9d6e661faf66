#pragma once
/**
 * @file helmholtz.hpp
 * @brief Discrete Helmholtz operator A(m) = Lap + w^2 Diag(m) with a
 *        coordinate-stretch PML, and its column-block split [A1 | A2].
 *
 * Sign convention: with the stretch s = 1 + i*sigma/w the operator absorbs
 * waves travelling as exp(+i k r) (time dependence exp(-i w t)). A point
 * source b = delta / (dx dz) therefore yields u ~ -(i/4) H0^(1)(k r).
 */

#include <cmath>
#include <numbers>
#include <vector>

#include "lwi/grid_model.hpp"

namespace lwi {

struct PmlSpec {
  Index width = 20;
  /// Target normal-incidence reflection coefficient of the continuous layer.
  double reflection = 1e-3;
  /// Velocity used to scale the damping. Kept separate from the model so that
  /// A stays affine in m.
  double reference_velocity = 2000.0;
};

/// Interior grid embedded in a PML-padded grid.
class PaddedDomain {
 public:
  PaddedDomain() = default;
  PaddedDomain(const Grid& grid, Index pml_width) : grid_(grid), w_(pml_width) {
    grid.validate();
    if (pml_width < 0) throw GeometryError("pml width must be non-negative");
    Nx_ = grid.nx + 2 * w_;
    Nz_ = grid.nz + 2 * w_;
    interior_.resize(static_cast<std::size_t>(grid.size()));
    for (Index iz = 0; iz < grid.nz; ++iz)
      for (Index ix = 0; ix < grid.nx; ++ix)
        interior_[static_cast<std::size_t>(grid.index(ix, iz))] = padded_index(ix + w_, iz + w_);
  }

  const Grid& grid() const { return grid_; }
  Index pml_width() const { return w_; }
  Index Nx() const { return Nx_; }
  Index Nz() const { return Nz_; }
  Index N() const { return Nx_ * Nz_; }
  Index n() const { return grid_.size(); }
  Index padded_index(Index px, Index pz) const { return pz * Nx_ + px; }
  /// Padded image of interior node j. Increasing in j.
  Index to_padded(Index j) const { return interior_[static_cast<std::size_t>(j)]; }
  const IndexList& interior_indices() const { return interior_; }

  bool is_interior(Index p) const {
    const Index px = p % Nx_, pz = p / Nx_;
    return px >= w_ && px < w_ + grid_.nx && pz >= w_ && pz < w_ + grid_.nz;
  }

  /// Interior node replicated into padded node p (identity inside).
  Index nearest_interior(Index p) const {
    const Index px = std::clamp(p % Nx_ - w_, Index{0}, grid_.nx - 1);
    const Index pz = std::clamp(p / Nx_ - w_, Index{0}, grid_.nz - 1);
    return grid_.index(px, pz);
  }

  /// Lift an interior-indexed field (rows) into padded rows, zero in the pad.
  template <class Derived>
  typename Derived::PlainObject embed(const Eigen::DenseBase<Derived>& x) const {
    require_shape(x.rows() == n(), "embed: field length does not match interior grid");
    typename Derived::PlainObject out = Derived::PlainObject::Zero(N(), x.cols());
    out(interior_, Eigen::all) = x.derived();
    return out;
  }

  template <class Derived>
  typename Derived::PlainObject interior_of(const Eigen::DenseBase<Derived>& x) const {
    require_shape(x.rows() == N(), "interior_of: field length does not match padded grid");
    return x.derived()(interior_, Eigen::all);
  }

  /// Model values on the padded grid (edge replication into the pad).
  RVec pad_model(const RVec& m) const {
    require_shape(m.size() == n(), "pad_model: model length does not match grid");
    RVec out(N());
    for (Index p = 0; p < N(); ++p) out[p] = m[nearest_interior(p)];
    return out;
  }

  /// Partition lifted to padded indices; pad nodes are always background.
  std::pair<IndexList, IndexList> lift(const Partition& part) const {
    require_shape(part.grid() == grid_, "partition grid does not match the domain grid");
    IndexList target;
    target.reserve(static_cast<std::size_t>(part.n2()));
    for (Index t : part.target()) target.push_back(to_padded(t));
    IndexList background;
    background.reserve(static_cast<std::size_t>(N() - part.n2()));
    std::size_t k = 0;
    for (Index p = 0; p < N(); ++p) {
      if (k < target.size() && target[k] == p) {
        ++k;
        continue;
      }
      background.push_back(p);
    }
    return {std::move(background), std::move(target)};
  }

 private:
  Grid grid_;
  Index w_ = 0;
  Index Nx_ = 0;
  Index Nz_ = 0;
  IndexList interior_;
};

namespace detail {

// Stretch factor at position d (in nodes) measured into the layer; d <= 0 is
// the physical region.
inline cplx stretch(double d, Index width, double h, const PmlSpec& pml, double omega) {
  if (width == 0 || d <= 0.0) return {1.0, 0.0};
  const double L = static_cast<double>(width) * h;
  const double sigma_max = 3.0 * pml.reference_velocity * std::log(1.0 / pml.reflection) / (2.0 * L);
  const double r = std::min(d / static_cast<double>(width), 1.0);
  return {1.0, sigma_max * r * r / omega};
}

// Layer depth of padded coordinate q (possibly a half index) along an axis of
// interior length n.
inline double layer_depth(double q, Index width, Index n) {
  const double lo = static_cast<double>(width);
  const double hi = static_cast<double>(width + n - 1);
  if (q < lo) return lo - q;
  if (q > hi) return q - hi;
  return 0.0;
}

}  // namespace detail

/// Assembled operator at one angular frequency.
struct HelmholtzSystem {
  PaddedDomain domain;
  double omega = 0.0;
  PmlSpec pml;
  /// Model-independent stretched Laplacian.
  SpMat laplacian;
  /// s_x * s_z per padded node (exactly 1 on interior nodes).
  CVec mass_weight;
  /// Padded model (edge replicated).
  RVec padded_model;
  SpMat A;

  Index N() const { return domain.N(); }
  CMat apply(const CMat& U) const {
    require_shape(U.rows() == N(), "apply: field rows do not match operator size");
    return A * U;
  }
};

/// Builds the stretched 5-point Laplacian and the mass weights.
inline std::pair<SpMat, CVec> assemble_laplacian(const PaddedDomain& dom, double omega, const PmlSpec& pml) {
  const Grid& g = dom.grid();
  const Index w = dom.pml_width();
  const Index Nx = dom.Nx(), Nz = dom.Nz();
  const double idx2 = 1.0 / (g.dx * g.dx);
  const double idz2 = 1.0 / (g.dz * g.dz);

  auto sx = [&](double qx) { return detail::stretch(detail::layer_depth(qx, w, g.nx), w, g.dx, pml, omega); };
  auto sz = [&](double qz) { return detail::stretch(detail::layer_depth(qz, w, g.nz), w, g.dz, pml, omega); };

  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(5 * dom.N()));
  CVec weight(dom.N());
  for (Index pz = 0; pz < Nz; ++pz) {
    const cplx szc = sz(static_cast<double>(pz));
    for (Index px = 0; px < Nx; ++px) {
      const cplx sxc = sx(static_cast<double>(px));
      const Index p = dom.padded_index(px, pz);
      // d/dx (s_z/s_x d/dx) + d/dz (s_x/s_z d/dz), half-point coefficients.
      const cplx cxm = szc / sx(px - 0.5) * idx2;
      const cplx cxp = szc / sx(px + 0.5) * idx2;
      const cplx czm = sxc / sz(pz - 0.5) * idz2;
      const cplx czp = sxc / sz(pz + 0.5) * idz2;
      if (pz > 0) trips.emplace_back(p, dom.padded_index(px, pz - 1), czm);
      if (px > 0) trips.emplace_back(p, dom.padded_index(px - 1, pz), cxm);
      trips.emplace_back(p, p, -(cxm + cxp + czm + czp));
      if (px + 1 < Nx) trips.emplace_back(p, dom.padded_index(px + 1, pz), cxp);
      if (pz + 1 < Nz) trips.emplace_back(p, dom.padded_index(px, pz + 1), czp);
      weight[p] = sxc * szc;
    }
  }
  SpMat L(dom.N(), dom.N());
  L.setFromTriplets(trips.begin(), trips.end());
  L.makeCompressed();
  return {std::move(L), std::move(weight)};
}

inline HelmholtzSystem assemble(const Model& model, double omega, const PmlSpec& pml) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw AssemblyError("angular frequency must be positive");
  if (pml.width > 0 && (!(pml.reflection > 0.0 && pml.reflection < 1.0) || !(pml.reference_velocity > 0.0)))
    throw AssemblyError("invalid pml parameters");
  for (Index i = 0; i < model.size(); ++i)
    if (!std::isfinite(model.values()[i]) || !(model.values()[i] > 0.0))
      throw AssemblyError("non-finite model value at node " + std::to_string(i));

  HelmholtzSystem sys;
  sys.domain = PaddedDomain(model.grid(), pml.width);
  sys.omega = omega;
  sys.pml = pml;
  auto [L, weight] = assemble_laplacian(sys.domain, omega, pml);
  sys.laplacian = std::move(L);
  sys.mass_weight = std::move(weight);
  sys.padded_model = sys.domain.pad_model(model.values());

  const double w2 = omega * omega;
  sys.A = sys.laplacian;
  for (Index p = 0; p < sys.N(); ++p) sys.A.coeffRef(p, p) += w2 * sys.mass_weight[p] * sys.padded_model[p];
  sys.A.makeCompressed();
  return sys;
}

/// Columns of a column-major sparse matrix, in the given order.
inline SpMat select_columns(const SpMat& M, const IndexList& cols) {
  SpMat out(M.rows(), static_cast<Index>(cols.size()));
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(cols.size() * 5);
  for (std::size_t k = 0; k < cols.size(); ++k)
    for (SpMat::InnerIterator it(M, cols[k]); it; ++it)
      trips.emplace_back(it.row(), static_cast<Index>(k), it.value());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

/**
 * Column split of A by partition. A1 is frozen at the system's model; A2 is
 * carried as its Laplacian part plus a unit mass injection on target rows so
 * that A2(m2) = lap2 + w^2 E2 Diag(m2).
 */
struct ColumnBlocks {
  Partition partition;
  IndexList background;  ///< padded indices of set 1 (includes the pad)
  IndexList target;      ///< padded indices of set 2
  double omega = 0.0;
  SpMat A1;              ///< N x N1
  SpMat lap2;            ///< N x N2, model independent
  RVec m2;               ///< target model the blocks were split at

  Index N() const { return A1.rows(); }
  Index N1() const { return A1.cols(); }
  Index N2() const { return lap2.cols(); }

  /// A2 at an arbitrary target model.
  SpMat A2(const RVec& m2_values) const {
    require_shape(m2_values.size() == N2(), "A2: target model length mismatch");
    SpMat out = lap2;
    const double w2 = omega * omega;
    for (Index k = 0; k < N2(); ++k) out.coeffRef(target[static_cast<std::size_t>(k)], k) += w2 * m2_values[k];
    out.makeCompressed();
    return out;
  }

  /// Mass injection E2 as a sparse 0/1 matrix.
  SpMat E2() const {
    SpMat out(N(), N2());
    std::vector<Eigen::Triplet<cplx>> trips;
    for (Index k = 0; k < N2(); ++k) trips.emplace_back(target[static_cast<std::size_t>(k)], k, 1.0);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  }

  CMat apply_A2(const RVec& m2_values, const CMat& U2) const {
    require_shape(U2.rows() == N2(), "apply_A2: target field rows mismatch");
    require_shape(m2_values.size() == N2(), "apply_A2: target model length mismatch");
    CMat out = lap2 * U2;
    const double w2 = omega * omega;
    for (Index k = 0; k < N2(); ++k) out.row(target[static_cast<std::size_t>(k)]) += w2 * m2_values[k] * U2.row(k);
    return out;
  }

  /// A1 U1 + A2(m2) U2.
  CMat apply(const RVec& m2_values, const CMat& U1, const CMat& U2) const {
    require_shape(U1.rows() == N1(), "apply: background field rows mismatch");
    require_shape(U1.cols() == U2.cols(), "apply: source counts differ");
    return A1 * U1 + apply_A2(m2_values, U2);
  }

  /// Split a padded field into (background, target) rows.
  std::pair<CMat, CMat> split(const CMat& U) const {
    require_shape(U.rows() == N(), "split: field rows do not match padded grid");
    return {U(background, Eigen::all), U(target, Eigen::all)};
  }

  CMat merge(const CMat& U1, const CMat& U2) const {
    require_shape(U1.rows() == N1() && U2.rows() == N2() && U1.cols() == U2.cols(), "merge: block shapes mismatch");
    CMat out(N(), U1.cols());
    out(background, Eigen::all) = U1;
    out(target, Eigen::all) = U2;
    return out;
  }
};

inline ColumnBlocks split_columns(const HelmholtzSystem& sys, const Partition& part) {
  require_shape(part.grid() == sys.domain.grid(), "split_columns: partition grid does not match system grid");
  ColumnBlocks b;
  b.partition = part;
  std::tie(b.background, b.target) = sys.domain.lift(part);
  b.omega = sys.omega;
  b.A1 = select_columns(sys.A, b.background);
  b.lap2 = select_columns(sys.laplacian, b.target);
  b.m2 = part.restrict_target(RVec(sys.domain.interior_of(sys.padded_model)));
  return b;
}

}  // namespace lwi
