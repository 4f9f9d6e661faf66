#pragma once
/**
 * @file lwi.hpp
 * @brief Localized wavefield inversion: one full-domain data-assimilated solve
 *        per frequency freezes the background, then only the target wavefield,
 *        target model and duals are iterated.
 *
 * Per frequency batch with n_b iterations and n_s sources the ledger shows
 * n_s full-size solves (init) and n_b * n_s target-size solves (iterate).
 */

#include <cstring>
#include <string_view>

#include "lwi/inversion.hpp"

namespace lwi {

/// Background quantities frozen for the whole frequency batch.
class FrozenBackground {
 public:
  FrozenBackground(CMat U1_0, RVec m1_0, CMat A1U1_0)
      : U1_0_(std::move(U1_0)), m1_0_(std::move(m1_0)), A1U1_0_(std::move(A1U1_0)) {}

  const CMat& U1_0() const { return U1_0_; }
  const RVec& m1_0() const { return m1_0_; }
  /// Cached A1(m1^0) U1^0 (N x n_s).
  const CMat& A1U1_0() const { return A1U1_0_; }

  /// FNV-1a over the raw bytes of all three members.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
      }
    };
    mix(U1_0_.data(), sizeof(cplx) * static_cast<std::size_t>(U1_0_.size()));
    mix(m1_0_.data(), sizeof(double) * static_cast<std::size_t>(m1_0_.size()));
    mix(A1U1_0_.data(), sizeof(cplx) * static_cast<std::size_t>(A1U1_0_.size()));
    return h;
  }

 private:
  const CMat U1_0_;
  const RVec m1_0_;
  const CMat A1U1_0_;
};

/// Everything one frequency batch needs after the initial DA solve.
struct FrequencyContext {
  double freq_hz = 0.0;
  double lambda = 0.0;
  Model model;  ///< model after the optional one-time background update
  HelmholtzSystem system;
  ColumnBlocks blocks;
  ObservationOperator obs;
  CMat B;
  CMat D;
  CMat U0;  ///< full DA wavefield
  CMat U2_0;
  std::shared_ptr<const FrozenBackground> background;
};

/// One DA solve with zero duals, optional background model refresh, freeze.
inline FrequencyContext init_frequency(const Model& model, const DataSet& data, double freq_hz,
                                       const Partition& part, const InversionConfig& cfg,
                                       SolveLedger* ledger = nullptr, const std::string& phase = "lwi") {
  FrequencyContext ctx;
  ctx.freq_hz = freq_hz;
  const double omega = angular(freq_hz);
  ctx.D = data.records[static_cast<std::size_t>(data.frequency_index(freq_hz))];
  HelmholtzSystem sys = assemble(model, omega, cfg.pml);
  ctx.obs = build_observation(data.acquisition, sys.domain, part);
  ctx.B = source_terms(data.acquisition, sys.domain, freq_hz);
  ctx.lambda = penalty_lambda(sys, ctx.obs, ctx.B, ctx.D, cfg);
  const DualState zero = DualState::zeros(sys.N(), ctx.obs.nr(), data.acquisition.ns());
  ctx.U0 = da_wavefield(sys, ctx.obs, ctx.lambda, ctx.B, ctx.D, zero, {ledger, phase + "_init", freq_hz});

  ctx.model = model;
  if (cfg.update_background_once) {
    ctx.model = update_model_full(sys, ctx.U0, ctx.B, zero.B_hat, model, cfg.bounds, cfg.illumination_threshold);
    sys = assemble(ctx.model, omega, cfg.pml);
  }
  ctx.blocks = split_columns(sys, part);
  ctx.system = std::move(sys);
  auto [U1, U2] = ctx.blocks.split(ctx.U0);
  ctx.U2_0 = std::move(U2);
  CMat A1U1 = ctx.blocks.A1 * U1;
  ctx.background = std::make_shared<const FrozenBackground>(std::move(U1), part.restrict_background(ctx.model.values()),
                                                            std::move(A1U1));
  return ctx;
}

/// B + Bh - A1(m1^0) U1^0.
inline CMat redatumed_rhs(const FrozenBackground& bg, const CMat& B, const CMat& B_hat) {
  require_shape(B.rows() == bg.A1U1_0().rows() && B.cols() == bg.A1U1_0().cols() && B_hat.rows() == B.rows() &&
                    B_hat.cols() == B.cols(),
                "redatumed_rhs: shape mismatch");
  return B + B_hat - bg.A1U1_0();
}

struct LwiState {
  RVec m2;
  CMat U2;
  DualState duals;
  int k = 0;
};

inline LwiState initial_state(const FrequencyContext& ctx) {
  return {ctx.blocks.m2, ctx.U2_0, DualState::zeros(ctx.system.N(), ctx.obs.nr(), ctx.B.cols()), 0};
}

/**
 * One localized iteration:
 *   U2 <- argmin ||A2(m2^k) U2 - (B + Bh - A1 U1^0)||   (n_s target solves)
 *   m2 <- bilinear update with U2^{k+1}, box projected
 *   Bh += B - A1 U1^0 - A2(m2^{k+1}) U2;  Dh += D - P [U1^0; U2]
 * Dh has no consumer here since the background subproblem is never revisited.
 */
inline LwiState lwi_iteration(const LwiState& state, const FrequencyContext& ctx, const InversionConfig& cfg,
                              SolveLedger* ledger = nullptr, const std::string& phase = "lwi",
                              IterationReport* report = nullptr) {
  const FrozenBackground& bg = *ctx.background;
  const ColumnBlocks& blocks = ctx.blocks;
  LwiState next;
  next.k = state.k + 1;
  next.U2 = solve_target_normal(blocks.A2(state.m2), redatumed_rhs(bg, ctx.B, state.duals.B_hat),
                                {ledger, phase + "_iterate", ctx.freq_hz});
  next.m2 = update_model_target(blocks, state.m2, next.U2, bg.A1U1_0(), ctx.B, state.duals.B_hat, cfg.bounds,
                                cfg.illumination_threshold);
  next.duals = update_duals(state.duals, blocks, next.m2, bg.U1_0(), next.U2, ctx.obs, ctx.B, ctx.D);
  if (report) {
    report->iter = state.k;
    report->freq_hz = ctx.freq_hz;
    report->phase = "iterate";
    report->data_res = (ctx.obs.P1 * bg.U1_0() + ctx.obs.P2 * next.U2 - ctx.D).norm();
    report->source_res = (blocks.apply(next.m2, bg.U1_0(), next.U2) - ctx.B).norm();
    report->model_change = (next.m2 - state.m2).norm() / state.m2.norm();
    report->psi = evaluate_augmented_lagrangian(blocks, ctx.obs, bg.m1_0(), next.m2, bg.U1_0(), next.U2, ctx.B,
                                                ctx.D, state.duals, ctx.lambda, cfg.regularizer1, cfg.regularizer2);
    detail::stamp_solves(*report, ledger);
  }
  return next;
}

/// init_frequency followed by n_b localized iterations with fresh zero duals.
inline BatchResult lwi_frequency_batch(const Model& model_init, const DataSet& data, double freq_hz,
                                       const Partition& part, const InversionConfig& cfg,
                                       SolveLedger* ledger = nullptr, const std::string& phase = "lwi") {
  BatchResult out{model_init, {}, std::nullopt};
  try {
    const FrequencyContext ctx = init_frequency(model_init, data, freq_hz, part, cfg, ledger, phase);
    IterationReport init;
    init.iter = 0;
    init.freq_hz = freq_hz;
    init.phase = "init";
    init.data_res = (ctx.obs.P * ctx.U0 - ctx.D).norm();
    init.source_res = (ctx.system.A * ctx.U0 - ctx.B).norm();
    init.model_change = detail::relative_change(ctx.model.values(), model_init.values());
    init.psi = evaluate_augmented_lagrangian(ctx.system, ctx.obs, ctx.U0, ctx.B, ctx.D, initial_state(ctx).duals,
                                             ctx.lambda);
    detail::stamp_solves(init, ledger);
    out.reports.push_back(init);
    out.model = ctx.model;

    LwiState st = initial_state(ctx);
    for (int k = 0; k < cfg.iterations; ++k) {
      IterationReport rep;
      st = lwi_iteration(st, ctx, cfg, ledger, phase, &rep);
      out.reports.push_back(rep);
      out.model = Model::from_slowness2(part.grid(), part.merge(ctx.background->m1_0(), st.m2));
    }
  } catch (const SolverError& e) {
    out.failure = e.what();
  }
  return out;
}

/// One entry of a frequency continuation: `passes` sweeps over `freqs_hz`.
struct ScheduleStage {
  std::vector<double> freqs_hz;
  int passes = 1;
  int iters_per_freq = 5;
};
using Schedule = std::vector<ScheduleStage>;

inline long total_iterations(const Schedule& s) {
  long n = 0;
  for (const auto& st : s) n += static_cast<long>(st.passes) * static_cast<long>(st.freqs_hz.size()) * st.iters_per_freq;
  return n;
}

inline void validate_schedule(const Schedule& s) {
  if (s.empty()) throw ConfigError("frequency schedule is empty");
  for (const auto& st : s) {
    if (st.freqs_hz.empty()) throw ConfigError("schedule stage has no frequencies");
    if (st.passes < 1 || st.iters_per_freq < 1) throw ConfigError("schedule passes and iterations must be >= 1");
    for (std::size_t k = 0; k < st.freqs_hz.size(); ++k) {
      if (!(st.freqs_hz[k] > 0.0)) throw ConfigError("schedule frequencies must be positive");
      if (k > 0 && !(st.freqs_hz[k] > st.freqs_hz[k - 1]))
        throw ConfigError("schedule frequencies must increase within a stage");
    }
  }
}

enum class Algorithm { irwri, lwi, multiblock };

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "irwri") return Algorithm::irwri;
  if (s == "lwi") return Algorithm::lwi;
  if (s == "multiblock") return Algorithm::multiblock;
  throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::irwri: return "irwri";
    case Algorithm::lwi: return "lwi";
    case Algorithm::multiblock: return "multiblock";
  }
  return "?";
}

struct ScheduleResult {
  Model model;
  std::vector<IterationReport> reports;
  long iterations = 0;
  std::optional<std::string> failure;
};

/**
 * Successive mono-frequency inversion: stages in order, each pass low to
 * high, model carried forward. Duals restart at zero for every batch.
 */
inline ScheduleResult run_schedule(Algorithm algo, const Model& model_init, const DataSet& data,
                                   const Partition* part, const Schedule& schedule, InversionConfig cfg,
                                   SolveLedger* ledger = nullptr, const std::string& phase = "") {
  validate_schedule(schedule);
  if (algo != Algorithm::irwri && !part) throw ConfigError("localized algorithms need a partition");
  const std::string label = phase.empty() ? to_string(algo) : phase;
  ScheduleResult out{model_init, {}, 0, std::nullopt};
  for (const auto& stage : schedule) {
    cfg.iterations = stage.iters_per_freq;
    for (int pass = 0; pass < stage.passes; ++pass) {
      for (double f : stage.freqs_hz) {
        BatchResult r;
        switch (algo) {
          case Algorithm::irwri: r = irwri_frequency_batch(out.model, data, f, cfg, ledger, label); break;
          case Algorithm::lwi: r = lwi_frequency_batch(out.model, data, f, *part, cfg, ledger, label); break;
          case Algorithm::multiblock: r = multiblock_frequency_batch(out.model, data, f, *part, cfg, ledger, label); break;
        }
        for (const auto& rep : r.reports)
          if (rep.phase != "init") ++out.iterations;
        out.reports.insert(out.reports.end(), r.reports.begin(), r.reports.end());
        out.model = r.model;
        if (r.failure) {
          out.failure = r.failure;
          return out;
        }
      }
    }
  }
  return out;
}

/// Target wavefields rebuilt from a naive and from a DA background field.
struct TargetWavefieldComparison {
  CMat U_true;        ///< full field in the true model
  CMat U_background;  ///< plain PDE solve in the background model
  CMat U_da;          ///< DA field in the background model with true-model data
  CMat U2_true;
  CMat U2_naive;
  CMat U2_da;
  double error_naive = 0.0;  ///< ||U2_naive - U2_true||_F / ||U2_true||_F
  double error_da = 0.0;
  double ratio() const { return error_da / error_naive; }
};

/**
 * Both estimates solve the target least-squares problem with the true target
 * model; they differ only in which background wavefield feeds the redatumed
 * right-hand side. The models must differ only inside the target.
 */
inline TargetWavefieldComparison extract_target_wavefield_comparison(const Model& model_background,
                                                                     const Model& model_true, const Partition& part,
                                                                     double freq_hz, const Acquisition& acq,
                                                                     const InversionConfig& cfg,
                                                                     SolveLedger* ledger = nullptr) {
  require_shape(model_background.grid() == model_true.grid(), "comparison: model grids differ");
  const RVec bg_diff = part.restrict_background(RVec(model_background.values() - model_true.values()));
  if (bg_diff.cwiseAbs().maxCoeff() > 0.0)
    throw ConfigError("comparison models must agree outside the target region");

  const double omega = angular(freq_hz);
  const HelmholtzSystem sys_true = assemble(model_true, omega, cfg.pml);
  const HelmholtzSystem sys_bg = assemble(model_background, omega, cfg.pml);
  const ObservationOperator obs = build_observation(acq, sys_true.domain, part);
  const CMat B = source_terms(acq, sys_true.domain, freq_hz);

  TargetWavefieldComparison out;
  const LedgerTag tag{ledger, "comparison", freq_hz};
  out.U_true = factorize(sys_true.A, SizeClass::full, tag).solve(B, tag);
  out.U_background = factorize(sys_bg.A, SizeClass::full, tag).solve(B, tag);
  const CMat D = obs.P * out.U_true;
  const double lambda = penalty_lambda(sys_bg, obs, B, D, cfg);
  out.U_da = da_wavefield(sys_bg, obs, lambda, B, D, DualState::zeros(sys_bg.N(), obs.nr(), acq.ns()), tag);

  const ColumnBlocks blocks = split_columns(sys_true, part);
  const SpMat A2 = blocks.A2(blocks.m2);
  auto target_from = [&](const CMat& U) {
    const auto [U1, U2] = blocks.split(U);
    return solve_target_normal(A2, B - blocks.A1 * U1, tag);
  };
  out.U2_true = blocks.split(out.U_true).second;
  out.U2_naive = target_from(out.U_background);
  out.U2_da = target_from(out.U_da);
  const double ref = out.U2_true.norm();
  out.error_naive = (out.U2_naive - out.U2_true).norm() / ref;
  out.error_da = (out.U2_da - out.U2_true).norm() / ref;
  return out;
}

}  // namespace lwi
