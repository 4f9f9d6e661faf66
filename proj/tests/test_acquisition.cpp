#include <gtest/gtest.h>

#include "support.hpp"

using namespace lwi;

TEST(Ricker, VanishesAtZeroFrequency) {
  EXPECT_LT(ricker_spectrum(1e-9, 10.0), 1e-19);
  EXPECT_EQ(ricker_spectrum(0.0, 10.0), 0.0);
}

TEST(Ricker, PeakValue) {
  EXPECT_NEAR(ricker_spectrum(10.0, 10.0), 2.0 / (std::sqrt(std::numbers::pi) * 10.0) * std::exp(-1.0), 1e-15);
}

TEST(Ricker, PeakIsGlobalMaximum) {
  const double peak = ricker_spectrum(10.0, 10.0);
  for (double f = 0.01; f < 60.0; f += 0.01)
    if (std::abs(f - 10.0) > 1e-9) EXPECT_LT(ricker_spectrum(f, 10.0), peak) << f;
}

TEST(Observation, ReceiverOnNodeSelectsIt) {
  const Grid g{6, 5, 10.0, 10.0, 0.0, 0.0};
  const PaddedDomain dom(g, 2);
  Acquisition acq;
  acq.sources = {{0.0, 0.0}};
  acq.receivers = {{30.0, 20.0}};
  const ObservationOperator obs = build_observation(acq, dom);
  EXPECT_EQ(obs.receiver_nodes[0], dom.to_padded(g.index(3, 2)));
}

TEST(Observation, CellCenterTieGoesToLowestIndex) {
  const Grid g{6, 5, 10.0, 10.0, 0.0, 0.0};
  const PaddedDomain dom(g, 2);
  Acquisition acq;
  acq.sources = {{0.0, 0.0}};
  acq.receivers = {{25.0, 15.0}};
  const ObservationOperator obs = build_observation(acq, dom);
  EXPECT_EQ(obs.receiver_nodes[0], dom.to_padded(g.index(2, 1)));
}

TEST(Observation, RowsSelectOneNodeAndSplitConsistently) {
  const auto t = fixture::tiny(10, 3);
  const PaddedDomain dom(t.grid, 3);
  const ObservationOperator obs = build_observation(t.acq, dom, t.part);
  const oracle::Mat P = fixture::dense(obs.P);
  for (Index r = 0; r < P.rows(); ++r) {
    EXPECT_EQ((P.row(r).array() != cplx(0.0)).count(), 1);
    EXPECT_EQ(P.row(r).sum(), cplx(1.0));
  }
  std::mt19937_64 rng(1);
  const CMat x = fixture::random_cmat(dom.N(), 2, rng);
  const auto [bg, tg] = dom.lift(t.part);
  EXPECT_EQ(obs.P1 * x(bg, Eigen::all) + obs.P2 * x(tg, Eigen::all), obs.P * x);
}

TEST(Observation, ReceiversInsideTargetLeaveP1Empty) {
  const Grid g{20, 20, 25.0, 25.0, 0.0, 0.0};
  const PaddedDomain dom(g, 3);
  const Partition part = build_partition(g, {Rect{100.0, 400.0, 100.0, 400.0}});
  Acquisition acq;
  acq.sources = {{10.0, 10.0}};
  acq.receivers = {{150.0, 150.0}, {200.0, 300.0}, {375.0, 125.0}};
  const ObservationOperator obs = build_observation(acq, dom, part);
  EXPECT_EQ(obs.P1.nonZeros(), 0);
  EXPECT_EQ(obs.P2.nonZeros(), 3);
  const oracle::Mat P2 = fixture::dense(obs.P2);
  for (Index r = 0; r < 3; ++r) EXPECT_EQ(P2.row(r).sum(), cplx(1.0));
}

TEST(Observation, ReceiverInPadRejected) {
  const Grid g{6, 5, 10.0, 10.0, 0.0, 0.0};
  Acquisition acq;
  acq.sources = {{0.0, 0.0}};
  acq.receivers = {{-5.0, 20.0}};
  EXPECT_THROW(build_observation(acq, PaddedDomain(g, 2)), GeometryError);
  acq.receivers.clear();
  EXPECT_THROW(build_observation(acq, PaddedDomain(g, 2)), GeometryError);
}

TEST(Synthesize, IdenticalSourcesGiveIdenticalColumns) {
  auto t = fixture::tiny(10, 3);
  t.acq.sources = {{200.0, 150.0}, {200.0, 150.0}};
  const DataSet d = fixture::data_for(t, t.model);
  EXPECT_EQ(d.records[0].col(0), d.records[0].col(1));
}

TEST(Synthesize, RerunAndThreadingAreBitwiseIdentical) {
  const auto t = fixture::tiny(10, 3);
  const std::vector<double> f{3.0, 5.0, 7.0};
  const DataSet a = synthesize_data(t.model, t.acq, f, t.cfg.pml);
  const DataSet b = synthesize_data(t.model, t.acq, f, t.cfg.pml);
  const DataSet c = synthesize_data(t.model, t.acq, f, t.cfg.pml, {}, nullptr, "forward", 3);
  for (std::size_t k = 0; k < f.size(); ++k) {
    EXPECT_EQ(a.records[k], b.records[k]);
    EXPECT_EQ(a.records[k], c.records[k]);
  }
}

TEST(Synthesize, NoiseIsSeededAndScaled) {
  const auto t = fixture::tiny(10, 3);
  const DataSet clean = fixture::data_for(t, t.model);
  const NoiseSpec n1{true, 20.0, 42}, n2{true, 20.0, 43};
  const DataSet a = synthesize_data(t.model, t.acq, {t.freq}, t.cfg.pml, n1);
  const DataSet b = synthesize_data(t.model, t.acq, {t.freq}, t.cfg.pml, n1);
  const DataSet c = synthesize_data(t.model, t.acq, {t.freq}, t.cfg.pml, n2);
  EXPECT_EQ(a.records[0], b.records[0]);
  EXPECT_NE(a.records[0], c.records[0]);
  EXPECT_NE(a.records[0], clean.records[0]);
}

TEST(Synthesize, LedgerChargesSourcesPerFrequency) {
  const auto t = fixture::tiny(8, 2);
  SolveLedger L;
  synthesize_data(t.model, t.acq, {3.0, 4.0}, t.cfg.pml, {}, &L);
  EXPECT_EQ(L.solves("forward", 3.0, SizeClass::full), 2);
  EXPECT_EQ(L.solves("forward", 4.0, SizeClass::full), 2);
}

TEST(Synthesize, RingDataDecaysLikeCylindricalSpreading) {
  const Grid g{141, 141, 30.0, 30.0, 0.0, 0.0};
  Acquisition acq;
  acq.sources = {{200.0, 2100.0}};
  acq.wavelet.kind = SourceWavelet::Kind::unit;
  for (int i = 0; i < 120; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 120.0;
    acq.receivers.push_back({2100.0 + 1900.0 * std::cos(a), 2100.0 + 1900.0 * std::sin(a)});
  }
  const DataSet d = synthesize_data(Model::constant_velocity(g, 2000.0), acq, {5.0}, PmlSpec{20, 1e-3, 2000.0});
  // Least-squares slope of log|D| against log r, one wavelength and more away.
  std::vector<double> lx, ly;
  for (Index r = 0; r < acq.nr(); ++r) {
    const Point& p = acq.receivers[static_cast<std::size_t>(r)];
    const double dist = std::hypot(p.x - 200.0, p.z - 2100.0);
    if (dist < 400.0) continue;
    lx.push_back(std::log(dist));
    ly.push_back(std::log(std::abs(d.records[0](r, 0))));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -0.5, 0.15);
}
