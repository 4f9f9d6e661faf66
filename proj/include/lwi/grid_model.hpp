#pragma once
/**
 * @file grid_model.hpp
 * @brief Regular 2D grids, squared-slowness models, background/target
 *        partitions and the velocity box constraint.
 *
 * Every node vector in the library uses the same ordering: z outer (depth),
 * x inner, i.e. node (ix, iz) lives at iz * nx + ix.
 */

#include <algorithm>
#include <cmath>
#include <vector>

#include "lwi/common.hpp"

namespace lwi {

struct Grid {
  Index nx = 0;
  Index nz = 0;
  double dx = 0.0;
  double dz = 0.0;
  double x0 = 0.0;
  double z0 = 0.0;

  Index size() const { return nx * nz; }
  Index index(Index ix, Index iz) const { return iz * nx + ix; }
  double x(Index ix) const { return x0 + static_cast<double>(ix) * dx; }
  double z(Index iz) const { return z0 + static_cast<double>(iz) * dz; }
  double x_max() const { return x(nx - 1); }
  double z_max() const { return z(nz - 1); }

  void validate() const {
    if (nx < 3 || nz < 3) throw GeometryError("grid needs at least 3 nodes per axis");
    if (!(dx > 0.0) || !(dz > 0.0) || !std::isfinite(dx) || !std::isfinite(dz))
      throw GeometryError("grid spacing must be positive and finite");
    if (!std::isfinite(x0) || !std::isfinite(z0)) throw GeometryError("grid origin must be finite");
  }

  bool operator==(const Grid&) const = default;
};

/// Squared slowness (s^2/m^2) on a grid. Always strictly positive and finite.
class Model {
 public:
  Model() = default;

  static Model from_slowness2(const Grid& grid, RVec values) {
    grid.validate();
    require_shape(values.size() == grid.size(), "model length does not match grid");
    for (Index i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]) || !(values[i] > 0.0))
        throw AssemblyError("model value at node " + std::to_string(i) + " is not positive and finite");
    }
    Model m;
    m.grid_ = grid;
    m.values_ = std::move(values);
    return m;
  }

  static Model from_velocity(const Grid& grid, const RVec& velocity) {
    require_shape(velocity.size() == grid.size(), "velocity length does not match grid");
    for (Index i = 0; i < velocity.size(); ++i) {
      if (!std::isfinite(velocity[i]) || !(velocity[i] > 0.0))
        throw AssemblyError("velocity at node " + std::to_string(i) + " is not positive and finite");
    }
    return from_slowness2(grid, (velocity.array().square().inverse()).matrix());
  }

  static Model constant_velocity(const Grid& grid, double v) {
    return from_velocity(grid, RVec::Constant(grid.size(), v));
  }

  const Grid& grid() const { return grid_; }
  const RVec& values() const { return values_; }
  Index size() const { return values_.size(); }
  RVec velocity() const { return values_.array().rsqrt().matrix(); }

 private:
  Grid grid_;
  RVec values_;
};

/// Axis-aligned rectangle in physical coordinates; membership is half-open
/// [xmin, xmax) x [zmin, zmax).
struct Rect {
  double xmin = 0.0;
  double xmax = 0.0;
  double zmin = 0.0;
  double zmax = 0.0;

  bool contains(double x, double z) const { return x >= xmin && x < xmax && z >= zmin && z < zmax; }
};

/// Split of grid nodes into background (set 1) and target (set 2).
class Partition {
 public:
  Partition() = default;

  /// Builds from an explicit target index set (sorted and deduplicated here).
  static Partition from_target_indices(const Grid& grid, IndexList target) {
    std::sort(target.begin(), target.end());
    target.erase(std::unique(target.begin(), target.end()), target.end());
    Partition p;
    p.grid_ = grid;
    p.in_target_.assign(static_cast<std::size_t>(grid.size()), false);
    for (Index t : target) {
      if (t < 0 || t >= grid.size()) throw GeometryError("target index out of range");
      p.in_target_[static_cast<std::size_t>(t)] = true;
    }
    p.target_ = std::move(target);
    p.background_.reserve(static_cast<std::size_t>(grid.size()) - p.target_.size());
    for (Index i = 0; i < grid.size(); ++i)
      if (!p.in_target_[static_cast<std::size_t>(i)]) p.background_.push_back(i);
    return p;
  }

  const Grid& grid() const { return grid_; }
  const IndexList& target() const { return target_; }
  const IndexList& background() const { return background_; }
  Index n() const { return grid_.size(); }
  Index n1() const { return static_cast<Index>(background_.size()); }
  Index n2() const { return static_cast<Index>(target_.size()); }
  bool in_target(Index i) const { return in_target_[static_cast<std::size_t>(i)]; }

  template <class Derived>
  auto restrict_target(const Eigen::DenseBase<Derived>& x) const {
    check_full(x.rows());
    return typename Derived::PlainObject(x.derived()(target_, Eigen::all));
  }

  template <class Derived>
  auto restrict_background(const Eigen::DenseBase<Derived>& x) const {
    check_full(x.rows());
    return typename Derived::PlainObject(x.derived()(background_, Eigen::all));
  }

  /// Inverse of the two restrictions.
  template <class D1, class D2>
  auto merge(const Eigen::DenseBase<D1>& background, const Eigen::DenseBase<D2>& target) const {
    require_shape(background.rows() == n1() && target.rows() == n2(), "merge: sub-array lengths do not match partition");
    require_shape(background.cols() == target.cols(), "merge: column counts differ");
    typename D1::PlainObject out(n(), background.cols());
    out(background_, Eigen::all) = background.derived();
    out(target_, Eigen::all) = target.derived();
    return out;
  }

 private:
  void check_full(Index rows) const {
    require_shape(rows == n(), "restrict: array length " + std::to_string(rows) + " does not match grid size " +
                                   std::to_string(n()));
  }

  Grid grid_;
  IndexList target_;
  IndexList background_;
  std::vector<bool> in_target_;
};

/// Every node whose center lies in any rectangle joins the target set.
inline Partition build_partition(const Grid& grid, const std::vector<Rect>& rects) {
  grid.validate();
  if (rects.empty()) throw GeometryError("partition needs at least one rectangle");
  const double tol = 1e-9 * std::max(grid.dx, grid.dz);
  for (const auto& r : rects) {
    if (!(r.xmin < r.xmax) || !(r.zmin < r.zmax)) throw GeometryError("rectangle has non-positive extent");
    if (r.xmin < grid.x0 - grid.dx / 2 - tol || r.xmax > grid.x_max() + grid.dx / 2 + tol ||
        r.zmin < grid.z0 - grid.dz / 2 - tol || r.zmax > grid.z_max() + grid.dz / 2 + tol)
      throw GeometryError("rectangle lies outside the grid");
  }
  IndexList target;
  for (Index iz = 0; iz < grid.nz; ++iz) {
    for (Index ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x(ix);
      const double z = grid.z(iz);
      if (std::any_of(rects.begin(), rects.end(), [&](const Rect& r) { return r.contains(x, z); }))
        target.push_back(grid.index(ix, iz));
    }
  }
  if (target.empty()) throw DegeneratePartitionError("no grid node falls inside the target rectangles");
  return Partition::from_target_indices(grid, std::move(target));
}

/// Velocity box, realized as a squared-slowness interval.
struct BoundConstraint {
  double v_min = 1.0;
  double v_max = 1e5;

  BoundConstraint() = default;
  BoundConstraint(double vmin, double vmax) : v_min(vmin), v_max(vmax) {
    if (!(v_min > 0.0) || !(v_min < v_max) || !std::isfinite(v_max))
      throw ConfigError("velocity bounds need 0 < v_min < v_max");
  }

  double m_min() const { return 1.0 / (v_max * v_max); }
  double m_max() const { return 1.0 / (v_min * v_min); }
};

inline RVec project_bounds(const RVec& m, const BoundConstraint& c) {
  return m.cwiseMax(c.m_min()).cwiseMin(c.m_max());
}

}  // namespace lwi
