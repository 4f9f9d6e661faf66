#pragma once
/**
 * @file inversion.hpp
 * @brief Scaled augmented-Lagrangian ADMM pieces shared by the full-domain
 *        (IR-WRI), multi-block and localized loops.
 *
 * Scaled AL for the split problem:
 *
 *   Psi = R1(m1) + R2(m2) + ||P U - D - Dh||_F^2
 *         + lambda ||A1(m1) U1 + A2(m2) U2 - B - Bh||_F^2
 *
 * All adjoints are conjugate transposes. The physical unknown is real, so the
 * bilinear model updates keep the real part of the per-node least-squares
 * solution.
 */

#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lwi/acquisition.hpp"

namespace lwi {

struct DualState {
  CMat B_hat;  ///< N x n_s
  CMat D_hat;  ///< n_r x n_s

  static DualState zeros(Index N, Index nr, Index ns) { return {CMat::Zero(N, ns), CMat::Zero(nr, ns)}; }
};

struct IterationReport {
  int iter = 0;
  double freq_hz = 0.0;
  double data_res = 0.0;
  double source_res = 0.0;
  double model_change = 0.0;
  double psi = 0.0;
  long full_solves = 0;
  long target_solves = 0;
  std::string phase = "iterate";
};

inline void write_reports_csv(std::ostream& os, const std::vector<IterationReport>& reports) {
  const auto old = os.precision(17);
  os << "iter,freq_hz,data_res,source_res,model_change,psi,full_solves,target_solves,phase\n";
  for (const auto& r : reports)
    os << r.iter << ',' << r.freq_hz << ',' << r.data_res << ',' << r.source_res << ',' << r.model_change << ','
       << r.psi << ',' << r.full_solves << ',' << r.target_solves << ',' << r.phase << '\n';
  os.precision(old);
}

/// Model-domain penalty slot. Null means zero.
using Regularizer = std::function<double(const RVec&)>;

struct InversionConfig {
  double lambda_rel = 0.1;
  /// Overrides the scale-aware rule when set.
  std::optional<double> lambda_abs;
  int iterations = 5;
  BoundConstraint bounds{1000.0, 6000.0};
  PmlSpec pml;
  bool update_background_once = false;
  double illumination_threshold = 1e-10;
  Regularizer regularizer1;
  Regularizer regularizer2;
};

/// lambda = lambda_rel * ||P^H D||_F / ||A^H B||_F.
inline double penalty_lambda(const HelmholtzSystem& sys, const ObservationOperator& obs, const CMat& B,
                             const CMat& D, const InversionConfig& cfg) {
  if (cfg.lambda_abs) return *cfg.lambda_abs;
  const double num = (obs.P.adjoint() * D).norm();
  const double den = (sys.A.adjoint() * B).norm();
  if (!(num > 0.0) || !(den > 0.0)) throw SolverError("cannot scale lambda: zero data or zero sources");
  return cfg.lambda_rel * num / den;
}

/// Full-domain Psi.
inline double evaluate_augmented_lagrangian(const HelmholtzSystem& sys, const ObservationOperator& obs,
                                            const CMat& U, const CMat& B, const CMat& D, const DualState& duals,
                                            double lambda, const RVec& m = {}, const Regularizer& reg = {}) {
  const double data = (obs.P * U - D - duals.D_hat).squaredNorm();
  const double wave = (sys.A * U - B - duals.B_hat).squaredNorm();
  return (reg ? reg(m) : 0.0) + data + lambda * wave;
}

/// Block Psi; blocks.A1 must have been split at m1.
inline double evaluate_augmented_lagrangian(const ColumnBlocks& blocks, const ObservationOperator& obs,
                                            const RVec& m1, const RVec& m2, const CMat& U1, const CMat& U2,
                                            const CMat& B, const CMat& D, const DualState& duals, double lambda,
                                            const Regularizer& reg1 = {}, const Regularizer& reg2 = {}) {
  const double data = (obs.P1 * U1 + obs.P2 * U2 - D - duals.D_hat).squaredNorm();
  const double wave = (blocks.apply(m2, U1, U2) - B - duals.B_hat).squaredNorm();
  return (reg1 ? reg1(m1) : 0.0) + (reg2 ? reg2(m2) : 0.0) + data + lambda * wave;
}

/// U = [lambda A^H A + P^H P]^{-1} [lambda A^H (B + Bh) + P^H (D + Dh)].
inline CMat da_wavefield(const HelmholtzSystem& sys, const ObservationOperator& obs, double lambda, const CMat& B,
                         const CMat& D, const DualState& duals, const LedgerTag& tag = {}) {
  return solve_augmented_normal(sys.A, obs.P, lambda, B + duals.B_hat, D + duals.D_hat, tag);
}

/**
 * Weighted variant: row p of `fields`/`rhs` carries mass weight[p] and
 * constrains entry node[p] of the model,
 * m_j = Re(sum conj(W U) y) / (w^2 sum |W U|^2) over rows mapped to j.
 */
inline RVec bilinear_model_update(const CMat& fields, const CMat& rhs, const CVec& weight, const IndexList& node,
                                  const RVec& prev, double omega, const BoundConstraint& bounds, double threshold) {
  require_shape(fields.rows() == rhs.rows() && fields.cols() == rhs.cols() && weight.size() == fields.rows() &&
                    static_cast<Index>(node.size()) == fields.rows(),
                "model update: shape mismatch");
  const Index k = prev.size();
  RVec num = RVec::Zero(k);
  RVec den = RVec::Zero(k);
  for (Index i = 0; i < fields.cols(); ++i) {
    for (Index p = 0; p < fields.rows(); ++p) {
      const Index j = node[static_cast<std::size_t>(p)];
      require_shape(j >= 0 && j < k, "model update: node index out of range");
      const cplx a = weight[p] * fields(p, i);
      num[j] += std::real(std::conj(a) * rhs(p, i));
      den[j] += std::norm(a);
    }
  }
  const double w2 = omega * omega;
  const double cut = threshold * (k > 0 ? den.maxCoeff() : 0.0);
  RVec out = prev;
  for (Index j = 0; j < k; ++j)
    if (den[j] > cut && den[j] > 0.0) out[j] = num[j] / (w2 * den[j]);
  return project_bounds(out, bounds);
}

/**
 * Per-node closed form of min_m sum_i |w^2 U_i m - y_i|^2 restricted to real m:
 * m = Re(sum_i conj(U_i) y_i) / (w^2 sum_i |U_i|^2), then box projection.
 * Rows of `fields` and `rhs` correspond to entries of `prev`. Nodes whose
 * illumination falls below threshold * max keep their previous value.
 */
inline RVec bilinear_model_update(const CMat& fields, const CMat& rhs, const RVec& prev, double omega,
                                  const BoundConstraint& bounds, double threshold) {
  require_shape(fields.rows() == prev.size() && rhs.rows() == prev.size() && fields.cols() == rhs.cols(),
                "model update: shape mismatch");
  IndexList node(static_cast<std::size_t>(prev.size()));
  std::iota(node.begin(), node.end(), Index{0});
  return bilinear_model_update(fields, rhs, CVec::Ones(prev.size()), node, prev, omega, bounds, threshold);
}

/// Full-domain model update from U with r_i = B_i + Bh_i - Lap U_i.
/// Pad rows count towards the edge node they replicate, weighted by s_x s_z.
inline Model update_model_full(const HelmholtzSystem& sys, const CMat& U, const CMat& B, const CMat& B_hat,
                               const Model& prev, const BoundConstraint& bounds, double threshold = 1e-10) {
  require_shape(U.rows() == sys.N() && B.rows() == sys.N() && B_hat.rows() == sys.N(), "update_model_full: shapes");
  const CMat r = B + B_hat - sys.laplacian * U;
  IndexList node(static_cast<std::size_t>(sys.N()));
  for (Index p = 0; p < sys.N(); ++p) node[static_cast<std::size_t>(p)] = sys.domain.nearest_interior(p);
  RVec m = bilinear_model_update(U, r, sys.mass_weight, node, prev.values(), sys.omega, bounds, threshold);
  return Model::from_slowness2(prev.grid(), std::move(m));
}

/**
 * Target model update: y_i = B_i + Bh_i - A1(m1^0) U1^0_i - Lap2 U2_i with
 * L(U2_i) = w^2 E2 Diag(U2_i). Only target rows of y enter since E2^H E2 = I.
 */
inline RVec update_model_target(const ColumnBlocks& blocks, const RVec& m2_prev, const CMat& U2,
                                const CMat& A1U1_0, const CMat& B, const CMat& B_hat, const BoundConstraint& bounds,
                                double threshold = 1e-10) {
  require_shape(U2.rows() == blocks.N2() && m2_prev.size() == blocks.N2(), "update_model_target: target shapes");
  require_shape(A1U1_0.rows() == blocks.N() && B.rows() == blocks.N() && B_hat.rows() == blocks.N(),
                "update_model_target: grid shapes");
  const CMat y = B + B_hat - A1U1_0 - blocks.lap2 * U2;
  return bilinear_model_update(U2, y(blocks.target, Eigen::all), m2_prev, blocks.omega, bounds, threshold);
}

/// B_hat += B - A1 U1 - A2(m2) U2;  D_hat += D - P U.
inline DualState update_duals(DualState duals, const ColumnBlocks& blocks, const RVec& m2, const CMat& U1,
                              const CMat& U2, const ObservationOperator& obs, const CMat& B, const CMat& D) {
  duals.B_hat += B - blocks.apply(m2, U1, U2);
  duals.D_hat += D - (obs.P1 * U1 + obs.P2 * U2);
  return duals;
}

inline DualState update_duals(DualState duals, const HelmholtzSystem& sys, const CMat& U,
                              const ObservationOperator& obs, const CMat& B, const CMat& D) {
  duals.B_hat += B - sys.A * U;
  duals.D_hat += D - obs.P * U;
  return duals;
}

struct BatchResult {
  Model model;
  std::vector<IterationReport> reports;
  /// Set when a solver failure aborted the batch; reports are then partial.
  std::optional<std::string> failure;
};

namespace detail {

inline double relative_change(const RVec& now, const RVec& before) {
  return (now - before).norm() / before.norm();
}

inline void stamp_solves(IterationReport& rep, const SolveLedger* ledger) {
  if (!ledger) return;
  rep.full_solves = ledger->solves(SizeClass::full);
  rep.target_solves = ledger->solves(SizeClass::target);
}

}  // namespace detail

/// Reference IR-WRI: DA wavefield, full model update, dual update, n_b times.
inline BatchResult irwri_frequency_batch(const Model& model_init, const DataSet& data, double freq_hz,
                                         const InversionConfig& cfg, SolveLedger* ledger = nullptr,
                                         const std::string& phase = "irwri") {
  BatchResult out{model_init, {}, std::nullopt};
  const Index fk = data.frequency_index(freq_hz);
  const CMat& D = data.records[static_cast<std::size_t>(fk)];
  const double omega = angular(freq_hz);
  const LedgerTag tag{ledger, phase, freq_hz};
  try {
    HelmholtzSystem sys = assemble(model_init, omega, cfg.pml);
    const ObservationOperator obs = build_observation(data.acquisition, sys.domain);
    const CMat B = source_terms(data.acquisition, sys.domain, freq_hz);
    const double lambda = penalty_lambda(sys, obs, B, D, cfg);
    DualState duals = DualState::zeros(sys.N(), obs.nr(), data.acquisition.ns());
    for (int k = 0; k < cfg.iterations; ++k) {
      const CMat U = da_wavefield(sys, obs, lambda, B, D, duals, tag);
      const Model next = update_model_full(sys, U, B, duals.B_hat, out.model, cfg.bounds, cfg.illumination_threshold);
      sys = assemble(next, omega, cfg.pml);
      IterationReport rep;
      rep.iter = k;
      rep.freq_hz = freq_hz;
      rep.phase = phase;
      rep.data_res = (obs.P * U - D).norm();
      rep.source_res = (sys.A * U - B).norm();
      rep.model_change = detail::relative_change(next.values(), out.model.values());
      rep.psi = evaluate_augmented_lagrangian(sys, obs, U, B, D, duals, lambda, next.values(), cfg.regularizer1);
      duals = update_duals(std::move(duals), sys, U, obs, B, D);
      detail::stamp_solves(rep, ledger);
      out.model = next;
      out.reports.push_back(rep);
    }
  } catch (const SolverError& e) {
    out.failure = e.what();
  }
  return out;
}

/**
 * Four-block ADMM sweep (U1, U2, m1, m2, duals). A single full-domain DA solve
 * seeds U2; afterwards each iteration costs one background-size and one
 * target-size solve family.
 */
inline BatchResult multiblock_frequency_batch(const Model& model_init, const DataSet& data, double freq_hz,
                                              const Partition& part, const InversionConfig& cfg,
                                              SolveLedger* ledger = nullptr, const std::string& phase = "multiblock") {
  BatchResult out{model_init, {}, std::nullopt};
  const Index fk = data.frequency_index(freq_hz);
  const CMat& D = data.records[static_cast<std::size_t>(fk)];
  const double omega = angular(freq_hz);
  try {
    HelmholtzSystem sys = assemble(model_init, omega, cfg.pml);
    ColumnBlocks blocks = split_columns(sys, part);
    const ObservationOperator obs = build_observation(data.acquisition, sys.domain, part);
    const CMat B = source_terms(data.acquisition, sys.domain, freq_hz);
    const double lambda = penalty_lambda(sys, obs, B, D, cfg);
    DualState duals = DualState::zeros(sys.N(), obs.nr(), data.acquisition.ns());

    const CMat U0 = da_wavefield(sys, obs, lambda, B, D, duals, {ledger, phase + "_init", freq_hz});
    auto [U1, U2] = blocks.split(U0);
    const LedgerTag tag{ledger, phase, freq_hz};
    IndexList bg_slot(static_cast<std::size_t>(part.grid().size()), -1);
    for (std::size_t k = 0; k < part.background().size(); ++k)
      bg_slot[static_cast<std::size_t>(part.background()[k])] = static_cast<Index>(k);

    for (int k = 0; k < cfg.iterations; ++k) {
      const RVec m_before = out.model.values();
      RVec m2 = blocks.m2;
      U1 = solve_block_normal(blocks.A1, obs.P1, lambda, B + duals.B_hat - blocks.apply_A2(m2, U2),
                              D + duals.D_hat - obs.P2 * U2, SizeClass::background, tag);
      U2 = solve_block_normal(blocks.A2(m2), obs.P2, lambda, B + duals.B_hat - blocks.A1 * U1,
                              D + duals.D_hat - obs.P1 * U1, SizeClass::target, tag);

      // m1 from every background row; pad rows replicating a target node are left out.
      {
        const CMat y = B + duals.B_hat - blocks.apply_A2(m2, U2) -
                       sys.laplacian * blocks.merge(U1, CMat::Zero(blocks.N2(), U2.cols()));
        IndexList rows, node;
        for (Index p = 0; p < sys.N(); ++p) {
          const Index s = bg_slot[static_cast<std::size_t>(sys.domain.nearest_interior(p))];
          if (s < 0) continue;
          rows.push_back(p);
          node.push_back(s);
        }
        const CMat U = blocks.merge(U1, U2);
        const RVec m1 = bilinear_model_update(U(rows, Eigen::all), y(rows, Eigen::all), sys.mass_weight(rows),
                                              node, part.restrict_background(m_before), omega, cfg.bounds,
                                              cfg.illumination_threshold);
        out.model = Model::from_slowness2(part.grid(), part.merge(m1, m2));
        sys = assemble(out.model, omega, cfg.pml);
        blocks = split_columns(sys, part);
      }
      // m2 against the refreshed A1(m1).
      m2 = update_model_target(blocks, m2, U2, blocks.A1 * U1, B, duals.B_hat, cfg.bounds,
                               cfg.illumination_threshold);
      out.model = Model::from_slowness2(part.grid(), part.merge(RVec(part.restrict_background(out.model.values())), m2));
      sys = assemble(out.model, omega, cfg.pml);
      blocks = split_columns(sys, part);

      IterationReport rep;
      rep.iter = k;
      rep.freq_hz = freq_hz;
      rep.phase = phase;
      rep.data_res = (obs.P1 * U1 + obs.P2 * U2 - D).norm();
      rep.source_res = (blocks.apply(m2, U1, U2) - B).norm();
      rep.model_change = detail::relative_change(out.model.values(), m_before);
      rep.psi = evaluate_augmented_lagrangian(blocks, obs, part.restrict_background(out.model.values()), m2, U1, U2,
                                              B, D, duals, lambda, cfg.regularizer1, cfg.regularizer2);
      duals = update_duals(std::move(duals), blocks, m2, U1, U2, obs, B, D);
      detail::stamp_solves(rep, ledger);
      out.reports.push_back(rep);
    }
  } catch (const SolverError& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace lwi
