#pragma once
// Dense reference implementations used as test oracles. Everything here is
// built from the defining formulas with dense matrices and orthogonal
// factorizations; none of it calls the sparse assembly or solver code.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using cplx = std::complex<double>;
using Idx = Eigen::Index;

struct Layout {
  Idx nx, nz, w;
  double dx, dz;
  Idx Nx() const { return nx + 2 * w; }
  Idx Nz() const { return nz + 2 * w; }
  Idx N() const { return Nx() * Nz(); }
  Idx padded(Idx ix, Idx iz) const { return (iz + w) * Nx() + (ix + w); }
  // Interior node (ix, iz) at index iz*nx+ix, mapped to the padded grid.
  std::vector<Idx> interior_rows() const {
    std::vector<Idx> r;
    for (Idx iz = 0; iz < nz; ++iz)
      for (Idx ix = 0; ix < nx; ++ix) r.push_back(padded(ix, iz));
    return r;
  }
};

struct Damping {
  double reflection;
  double c_ref;
  double omega;
};

// Complex stretch at coordinate q (in node units of the padded axis) for an
// axis with n interior nodes and w pad nodes per side.
inline cplx stretch_at(double q, Idx n, Idx w, double h, const Damping& d) {
  if (w == 0) return 1.0;
  double depth = 0.0;
  if (q < static_cast<double>(w)) depth = static_cast<double>(w) - q;
  if (q > static_cast<double>(w + n - 1)) depth = q - static_cast<double>(w + n - 1);
  if (depth <= 0.0) return 1.0;
  const double thickness = static_cast<double>(w) * h;
  const double frac = std::min(depth * h / thickness, 1.0);
  const double sigma = 1.5 * d.c_ref * std::log(1.0 / d.reflection) / thickness * frac * frac;
  return cplx(1.0, sigma / d.omega);
}

// Dense stretched Laplacian and per-node mass weight s_x s_z.
inline std::pair<Mat, Vec> laplacian(const Layout& L, const Damping& d) {
  const Idx N = L.N();
  Mat lap = Mat::Zero(N, N);
  Vec weight(N);
  auto sx = [&](double q) { return stretch_at(q, L.nx, L.w, L.dx, d); };
  auto sz = [&](double q) { return stretch_at(q, L.nz, L.w, L.dz, d); };
  for (Idx pz = 0; pz < L.Nz(); ++pz) {
    for (Idx px = 0; px < L.Nx(); ++px) {
      const Idx row = pz * L.Nx() + px;
      const double x = static_cast<double>(px), z = static_cast<double>(pz);
      weight[row] = sx(x) * sz(z);
      const cplx west = sz(z) / sx(x - 0.5) / (L.dx * L.dx);
      const cplx east = sz(z) / sx(x + 0.5) / (L.dx * L.dx);
      const cplx north = sx(x) / sz(z - 0.5) / (L.dz * L.dz);
      const cplx south = sx(x) / sz(z + 0.5) / (L.dz * L.dz);
      lap(row, row) = -(west + east + north + south);
      if (px > 0) lap(row, row - 1) = west;
      if (px + 1 < L.Nx()) lap(row, row + 1) = east;
      if (pz > 0) lap(row, row - L.Nx()) = north;
      if (pz + 1 < L.Nz()) lap(row, row + L.Nx()) = south;
    }
  }
  return {lap, weight};
}

// Padded model by nearest interior node.
inline RVec pad(const Layout& L, const RVec& m) {
  RVec out(L.N());
  for (Idx pz = 0; pz < L.Nz(); ++pz)
    for (Idx px = 0; px < L.Nx(); ++px) {
      const Idx ix = std::clamp<Idx>(px - L.w, 0, L.nx - 1);
      const Idx iz = std::clamp<Idx>(pz - L.w, 0, L.nz - 1);
      out[pz * L.Nx() + px] = m[iz * L.nx + ix];
    }
  return out;
}

inline Mat helmholtz(const Layout& L, const Damping& d, const RVec& m) {
  auto [lap, weight] = laplacian(L, d);
  const RVec mp = pad(L, m);
  for (Idx p = 0; p < L.N(); ++p) lap(p, p) += d.omega * d.omega * weight[p] * mp[p];
  return lap;
}

inline Mat columns(const Mat& M, const std::vector<Idx>& cols) {
  Mat out(M.rows(), static_cast<Idx>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Idx>(k)) = M.col(cols[k]);
  return out;
}

inline Mat rows(const Mat& M, const std::vector<Idx>& r) {
  Mat out(static_cast<Idx>(r.size()), M.cols());
  for (std::size_t k = 0; k < r.size(); ++k) out.row(static_cast<Idx>(k)) = M.row(r[k]);
  return out;
}

// argmin ||P U - (D + Dh)||^2 + lambda ||A U - (B + Bh)||^2 by QR on the
// stacked system [sqrt(lambda) A; P].
inline Mat da_wavefield(const Mat& A, const Mat& P, double lambda, const Mat& B, const Mat& D, const Mat& Bh,
                        const Mat& Dh) {
  const double s = std::sqrt(lambda);
  Mat K(A.rows() + P.rows(), A.cols());
  K << s * A, P;
  Mat rhs(A.rows() + P.rows(), B.cols());
  rhs << s * (B + Bh), D + Dh;
  return K.colPivHouseholderQr().solve(rhs);
}

// Least-squares solution of A2 X = rhs through a complete orthogonal
// decomposition (minimum-norm pseudoinverse solution).
inline Mat target_solve(const Mat& A2, const Mat& rhs) { return A2.completeOrthogonalDecomposition().solve(rhs); }

// Real unknown vector x minimizing sum_i ||G_i x - y_i||^2 where the complex
// operator G_i maps x to w^2 diag(field_i) x on the chosen rows.
inline RVec real_bilinear_ls(const Mat& fields, const Mat& y, double omega) {
  const Idx n = fields.rows(), ns = fields.cols();
  RMat G = RMat::Zero(2 * n * ns, n);
  RVec r(2 * n * ns);
  const double w2 = omega * omega;
  for (Idx i = 0; i < ns; ++i)
    for (Idx j = 0; j < n; ++j) {
      const Idx base = 2 * (i * n + j);
      G(base, j) = w2 * fields(j, i).real();
      G(base + 1, j) = w2 * fields(j, i).imag();
      r[base] = y(j, i).real();
      r[base + 1] = y(j, i).imag();
    }
  return G.colPivHouseholderQr().solve(r);
}

inline RVec clamp(RVec m, double lo, double hi) {
  for (Idx i = 0; i < m.size(); ++i) m[i] = std::min(std::max(m[i], lo), hi);
  return m;
}

// Full-domain model estimate: real least squares over every padded row of
// Lap U + w^2 Diag(W) Diag(pad(m)) U = B + Bh, Jacobian built column by column.
inline RVec model_full(const Mat& lap, const Vec& weight, const Layout& L, const Mat& U, const Mat& B, const Mat& Bh,
                       double omega, double lo, double hi) {
  const Mat y = B + Bh - lap * U;
  const Idx n = L.nx * L.nz, N = L.N(), ns = U.cols();
  RMat G = RMat::Zero(2 * N * ns, n);
  RVec r(2 * N * ns);
  for (Idx j = 0; j < n; ++j) {
    const RVec sel = pad(L, RVec::Unit(n, j));
    for (Idx i = 0; i < ns; ++i)
      for (Idx p = 0; p < N; ++p) {
        const cplx g = omega * omega * weight[p] * sel[p] * U(p, i);
        G(2 * (i * N + p), j) = g.real();
        G(2 * (i * N + p) + 1, j) = g.imag();
      }
  }
  for (Idx i = 0; i < ns; ++i)
    for (Idx p = 0; p < N; ++p) {
      r[2 * (i * N + p)] = y(p, i).real();
      r[2 * (i * N + p) + 1] = y(p, i).imag();
    }
  return clamp(G.colPivHouseholderQr().solve(r), lo, hi);
}

// Target model estimate: stacked rows of w^2 E2 Diag(m2) U2 = B + Bh - A1 U1 - Lap2 U2.
inline RVec model_target(const Mat& A1, const Mat& U1, const Mat& lap2, const Mat& U2,
                         const std::vector<Idx>& target_rows, const Mat& B, const Mat& Bh, double omega, double lo,
                         double hi) {
  const Mat y = B + Bh - A1 * U1 - lap2 * U2;
  return clamp(real_bilinear_ls(U2, rows(y, target_rows), omega), lo, hi);
}

struct LwiStep {
  Mat U2;
  RVec m2;
  Mat Bh;
  Mat Dh;
};

// One localized step written out with dense operators.
inline LwiStep lwi_step(const Mat& lap, const Mat& A_at_m0, const std::vector<Idx>& bg, const std::vector<Idx>& tg,
                        const Mat& U1_0, const RVec& m2, const Mat& P, const Mat& B, const Mat& D, const Mat& Bh,
                        const Mat& Dh, double omega, double lo, double hi) {
  const Mat A1 = columns(A_at_m0, bg);
  const Mat lap2 = columns(lap, tg);
  auto A2 = [&](const RVec& m) {
    Mat out = lap2;
    for (std::size_t k = 0; k < tg.size(); ++k) out(tg[k], static_cast<Idx>(k)) += omega * omega * m[static_cast<Idx>(k)];
    return out;
  };
  LwiStep s;
  s.U2 = target_solve(A2(m2), B + Bh - A1 * U1_0);
  s.m2 = model_target(A1, U1_0, lap2, s.U2, tg, B, Bh, omega, lo, hi);
  s.Bh = Bh + B - A1 * U1_0 - A2(s.m2) * s.U2;
  s.Dh = Dh + D - columns(P, bg) * U1_0 - columns(P, tg) * s.U2;
  return s;
}

inline double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
inline double rel(const RVec& a, const RVec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace oracle
