#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"

using namespace lwi;
using fixture::dense;

namespace {

const PmlSpec kNoPml{0, 1e-3, 2000.0};

double max_abs(const oracle::Mat& M) { return M.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Assemble, ThreeByThreeByHand) {
  const Grid g{3, 3, 10.0, 20.0, 0.0, 0.0};
  const double c = 1.0 / (1500.0 * 1500.0), w = 2.0 * std::numbers::pi * 4.0;
  const HelmholtzSystem sys = assemble(Model::from_slowness2(g, RVec::Constant(9, c)), w, kNoPml);
  const oracle::Mat A = dense(sys.A);
  const double diag = -2.0 / 100.0 - 2.0 / 400.0 + w * w * c;
  for (Index i = 0; i < 9; ++i) EXPECT_NEAR(std::abs(A(i, i) - diag), 0.0, 1e-15);
  const Index center = g.index(1, 1);
  EXPECT_DOUBLE_EQ(A(center, g.index(0, 1)).real(), 1.0 / 100.0);
  EXPECT_DOUBLE_EQ(A(center, g.index(2, 1)).real(), 1.0 / 100.0);
  EXPECT_DOUBLE_EQ(A(center, g.index(1, 0)).real(), 1.0 / 400.0);
  EXPECT_DOUBLE_EQ(A(center, g.index(1, 2)).real(), 1.0 / 400.0);
  EXPECT_EQ(A(g.index(0, 0), g.index(2, 2)), cplx(0.0));
  EXPECT_EQ(sys.A.nonZeros(), 9 + 2 * (2 * 3) + 2 * (3 * 2));
}

TEST(Assemble, DeltaAtCenterMatchesStencilOracle) {
  std::mt19937_64 rng(11);
  const Grid g{10, 10, 25.0, 25.0, 0.0, 0.0};
  const RVec v = fixture::random_velocity(g, 1500.0, 3000.0, rng);
  const Model m = Model::from_velocity(g, v);
  for (Index width : {Index{0}, Index{3}}) {
    const PmlSpec pml{width, 1e-3, 2500.0};
    const double w = 2.0 * std::numbers::pi * 7.0;
    const HelmholtzSystem sys = assemble(m, w, pml);
    const auto L = fixture::layout(g, width);
    const oracle::Mat A = oracle::helmholtz(L, fixture::damping(pml, w), m.values());
    CVec delta = CVec::Zero(sys.N());
    delta[L.padded(5, 5)] = 1.0;
    const CVec got = sys.A * delta;
    const CVec want = A * delta;
    EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-12 * want.cwiseAbs().maxCoeff());
    EXPECT_LE(max_abs(dense(sys.A) - A), 1e-12 * max_abs(A));
  }
}

TEST(Assemble, PlaneWaveReproducesStencilSymbol) {
  const Grid g{16, 12, 10.0, 15.0, 0.0, 0.0};
  const double c = 1.0 / (2000.0 * 2000.0), w = 2.0 * std::numbers::pi * 12.0;
  const HelmholtzSystem sys = assemble(Model::from_slowness2(g, RVec::Constant(g.size(), c)), w, kNoPml);
  const double kx = 0.013, kz = 0.021;
  CVec u(g.size());
  for (Index iz = 0; iz < g.nz; ++iz)
    for (Index ix = 0; ix < g.nx; ++ix) u[g.index(ix, iz)] = std::exp(cplx(0.0, kx * g.x(ix) + kz * g.z(iz)));
  const CVec Au = sys.A * u;
  const double symbol = -4.0 / (g.dx * g.dx) * std::pow(std::sin(kx * g.dx / 2), 2) -
                        4.0 / (g.dz * g.dz) * std::pow(std::sin(kz * g.dz / 2), 2) + w * w * c;
  for (Index iz = 1; iz + 1 < g.nz; ++iz)
    for (Index ix = 1; ix + 1 < g.nx; ++ix) {
      const Index i = g.index(ix, iz);
      EXPECT_LE(std::abs(Au[i] / u[i] - symbol), 1e-12 * std::abs(symbol));
    }
}

TEST(Assemble, FivePointPatternAndSymmetry) {
  std::mt19937_64 rng(5);
  const Grid g{9, 7, 20.0, 20.0, 0.0, 0.0};
  const Model m = Model::from_velocity(g, fixture::random_velocity(g, 1500.0, 3500.0, rng));
  const HelmholtzSystem sys = assemble(m, 40.0, PmlSpec{5, 1e-3, 2000.0});
  const SpMat At = sys.A.transpose();
  for (Index j = 0; j < At.outerSize(); ++j) {
    Index count = 0;
    for (SpMat::InnerIterator it(At, j); it; ++it) ++count;
    EXPECT_LE(count, 5);
  }
  EXPECT_LE(max_abs(dense(sys.A) - dense(At)), 1e-14 * max_abs(dense(sys.A)));
}

TEST(Assemble, MassWeightIsOneInside) {
  const Grid g{6, 6, 20.0, 20.0, 0.0, 0.0};
  const HelmholtzSystem sys = assemble(Model::constant_velocity(g, 2000.0), 30.0, PmlSpec{4, 1e-3, 2000.0});
  for (Index p = 0; p < sys.N(); ++p) {
    if (sys.domain.is_interior(p)) EXPECT_EQ(sys.mass_weight[p], cplx(1.0));
    else EXPECT_GT(std::abs(sys.mass_weight[p].imag()), 0.0);
  }
}

TEST(Assemble, RejectsBadInputs) {
  const Grid g{4, 4, 10.0, 10.0, 0.0, 0.0};
  const Model m = Model::constant_velocity(g, 2000.0);
  EXPECT_THROW(assemble(m, 0.0, kNoPml), AssemblyError);
  EXPECT_THROW(assemble(m, 10.0, PmlSpec{3, 2.0, 2000.0}), AssemblyError);
  EXPECT_THROW(PaddedDomain(g, -1), GeometryError);
}

TEST(PaddedDomainMap, InjectiveAndEdgeReplicated) {
  const Grid g{5, 4, 10.0, 10.0, 0.0, 0.0};
  const PaddedDomain dom(g, 3);
  std::set<Index> seen;
  for (Index j = 0; j < g.size(); ++j) {
    EXPECT_TRUE(seen.insert(dom.to_padded(j)).second);
    EXPECT_TRUE(dom.is_interior(dom.to_padded(j)));
    EXPECT_EQ(dom.nearest_interior(dom.to_padded(j)), j);
  }
  RVec m(g.size());
  for (Index i = 0; i < m.size(); ++i) m[i] = 1.0 + static_cast<double>(i);
  const RVec mp = dom.pad_model(m);
  EXPECT_EQ(mp[dom.padded_index(0, 0)], m[g.index(0, 0)]);
  EXPECT_EQ(mp[dom.padded_index(dom.Nx() - 1, 4)], m[g.index(g.nx - 1, 1)]);
  EXPECT_EQ(dom.interior_of(dom.embed(m)), m);
}

TEST(SplitColumns, ReassemblyMatchesFullOperator) {
  std::mt19937_64 rng(2);
  const Grid g{8, 8, 20.0, 20.0, 0.0, 0.0};
  const Model m = Model::from_velocity(g, fixture::random_velocity(g, 1500.0, 3000.0, rng));
  const HelmholtzSystem sys = assemble(m, 35.0, PmlSpec{3, 1e-3, 2000.0});
  const Partition part = build_partition(g, {Rect{40.0, 110.0, 30.0, 100.0}});
  const ColumnBlocks b = split_columns(sys, part);
  const CMat x = fixture::random_cmat(sys.N(), 2, rng);
  const auto [x1, x2] = b.split(x);
  const CMat full = sys.A * x;
  // Entries reassemble bitwise; products differ only by summation order.
  const oracle::Mat A = dense(sys.A), A1 = dense(b.A1), A2 = dense(b.A2(b.m2));
  for (std::size_t k = 0; k < b.background.size(); ++k) EXPECT_EQ(A1.col(Index(k)), A.col(b.background[k]));
  for (std::size_t k = 0; k < b.target.size(); ++k) EXPECT_EQ(A2.col(Index(k)), A.col(b.target[k]));
  EXPECT_LE((b.A1 * x1 + b.A2(b.m2) * x2 - full).norm(), 1e-15 * full.norm());
  EXPECT_LE((b.apply(b.m2, x1, x2) - full).norm(), 1e-15 * full.norm());
  EXPECT_EQ(b.merge(x1, x2), x);
}

TEST(SplitColumns, SingleNodeTargetIsThatColumn) {
  const Grid g{5, 5, 20.0, 20.0, 0.0, 0.0};
  const HelmholtzSystem sys = assemble(Model::constant_velocity(g, 2200.0), 30.0, PmlSpec{2, 1e-3, 2000.0});
  const Partition part = build_partition(g, {Rect{30.0, 50.0, 30.0, 50.0}});
  ASSERT_EQ(part.n2(), 1);
  const ColumnBlocks b = split_columns(sys, part);
  const oracle::Mat A2 = dense(b.A2(b.m2));
  const oracle::Mat col = dense(sys.A).col(sys.domain.to_padded(part.target()[0]));
  EXPECT_EQ(A2.col(0), col);
}

TEST(SplitColumns, MassTermIsLocal) {
  std::mt19937_64 rng(4);
  const Grid g{7, 7, 20.0, 20.0, 0.0, 0.0};
  const double w = 30.0;
  const HelmholtzSystem sys = assemble(Model::constant_velocity(g, 2000.0), w, PmlSpec{2, 1e-3, 2000.0});
  const Partition part = build_partition(g, {Rect{30.0, 90.0, 30.0, 90.0}});
  const ColumnBlocks b = split_columns(sys, part);
  std::uniform_real_distribution<double> u(-1e-8, 1e-8);
  RVec dm(b.N2());
  for (Index k = 0; k < dm.size(); ++k) dm[k] = u(rng);
  const oracle::Mat diff = dense(b.A2(b.m2 + dm)) - dense(b.A2(b.m2));
  for (Index j = 0; j < diff.cols(); ++j)
    for (Index i = 0; i < diff.rows(); ++i) {
      if (i == b.target[static_cast<std::size_t>(j)])
        EXPECT_NEAR(std::abs(diff(i, j)), w * w * std::abs(dm[j]), 1e-12 * w * w * 1e-8);
      else
        EXPECT_EQ(diff(i, j), cplx(0.0));
    }
}

TEST(ApplyOperator, ExactSolutionLeavesNoResidual) {
  const Grid g{12, 12, 25.0, 25.0, 0.0, 0.0};
  const HelmholtzSystem sys = assemble(Model::constant_velocity(g, 2000.0), 2 * std::numbers::pi * 5, PmlSpec{5, 1e-3, 2000.0});
  const Partition part = build_partition(g, {Rect{100.0, 200.0, 100.0, 200.0}});
  const ColumnBlocks b = split_columns(sys, part);
  std::mt19937_64 rng(9);
  const CMat B = fixture::random_cmat(sys.N(), 2, rng);
  const CMat U = factorize(sys.A).solve(B);
  const auto [U1, U2] = b.split(U);
  EXPECT_LE((B - b.apply(b.m2, U1, U2)).norm(), 1e-10 * B.norm());
  const CMat zero1 = CMat::Zero(b.N1(), 2), zero2 = CMat::Zero(b.N2(), 2);
  EXPECT_EQ(B - b.apply(b.m2, zero1, zero2), B);
}

TEST(ApplyOperator, MatchesDenseMultiply) {
  std::mt19937_64 rng(8);
  const Grid g{6, 6, 30.0, 30.0, 0.0, 0.0};
  const Model m = Model::from_velocity(g, fixture::random_velocity(g, 1500.0, 3000.0, rng));
  const PmlSpec pml{2, 1e-3, 2000.0};
  const double w = 25.0;
  const HelmholtzSystem sys = assemble(m, w, pml);
  const oracle::Mat A = oracle::helmholtz(fixture::layout(g, 2), fixture::damping(pml, w), m.values());
  const CMat U = fixture::random_cmat(sys.N(), 3, rng);
  EXPECT_LE((sys.apply(U) - A * U).cwiseAbs().maxCoeff(), 1e-13 * (A * U).cwiseAbs().maxCoeff());
}

TEST(Pml, AbsorbsOutgoingWaves) {
  // The same source on a small padded grid and on a much larger one should
  // agree on the small grid's interior when the layer absorbs well.
  const double h = 20.0, f = 6.0;
  const Grid small{51, 51, h, h, 0.0, 0.0};
  const Grid large{151, 151, h, h, -1000.0, -1000.0};
  const PmlSpec pml{20, 1e-3, 2000.0};
  Acquisition acq;
  acq.sources = {{500.0, 500.0}};
  acq.receivers = {{0.0, 0.0}};
  acq.wavelet.kind = SourceWavelet::Kind::unit;
  auto field = [&](const Grid& g) {
    const HelmholtzSystem sys = assemble(Model::constant_velocity(g, 2000.0), angular(f), pml);
    return CVec(factorize(sys.A).solve(source_terms(acq, sys.domain, f)).col(0)(sys.domain.interior_indices()));
  };
  const CVec us = field(small), ul = field(large);
  CVec ref(small.size());
  for (Index iz = 0; iz < small.nz; ++iz)
    for (Index ix = 0; ix < small.nx; ++ix) ref[small.index(ix, iz)] = ul[large.index(ix + 50, iz + 50)];
  EXPECT_LT((us - ref).norm() / ref.norm(), 0.05);
  // Without absorption the box rings and the mismatch is large.
  const PmlSpec none{0, 1e-3, 2000.0};
  const HelmholtzSystem sys0 = assemble(Model::constant_velocity(small, 2000.0), angular(f), none);
  const CVec u0 = factorize(sys0.A).solve(source_terms(acq, sys0.domain, f)).col(0);
  EXPECT_GT((u0 - ref).norm() / ref.norm(), 0.3);
}
