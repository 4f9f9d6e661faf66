#pragma once
/**
 * @file experiments.hpp
 * @brief Runnable drivers: forward modeling, inversion, the inclusion
 *        wavefield test and the time-lapse workflow.
 *
 * Each driver writes resolved_config.json first and then flushes every
 * artifact as soon as it exists, so a failed run leaves what it produced.
 */

#include <filesystem>
#include <iostream>

#include "lwi/config.hpp"

namespace lwi {

namespace fs = std::filesystem;

struct RunOptions {
  unsigned threads = 1;
  std::ostream* log = nullptr;
};

namespace detail {

inline fs::path prepare_output(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_text((dir / "resolved_config.json").string(), to_json(cfg).dump(2) + "\n");
  return dir;
}

inline void note(const RunOptions& opt, const std::string& msg) {
  if (opt.log) *opt.log << msg << std::endl;
}

inline void write_json(const fs::path& p, const json& j) { write_text(p.string(), j.dump(2) + "\n"); }

inline void write_reports(const fs::path& p, const std::vector<IterationReport>& reports) {
  std::ostringstream os;
  write_reports_csv(os, reports);
  write_text(p.string(), os.str());
}

inline void write_field(const fs::path& dir, const std::string& stem, const RVec& field, const Grid& g,
                        RasterFormat fmt) {
  export_raster(field, g, (dir / (stem + raster_extension(fmt))).string(), fmt);
}

inline void write_complex_field(const fs::path& dir, const std::string& stem, const CVec& field, const Grid& g,
                                RasterFormat fmt) {
  write_field(dir, stem + "_re", field.real(), g, fmt);
  write_field(dir, stem + "_im", field.imag(), g, fmt);
}

/// Root mean square of a - b over the target nodes.
inline double target_rms(const Partition& part, const RVec& a, const RVec& b) {
  const RVec d = part.restrict_target(RVec(a - b));
  return std::sqrt(d.squaredNorm() / static_cast<double>(d.size()));
}

/// Zero outside the target set.
inline RVec mask_target(const Partition& part, const RVec& v) {
  return part.merge(RVec::Zero(part.n1()), part.restrict_target(v));
}

inline json ledger_json(const SolveLedger& l) {
  return {{"full", l.solves(SizeClass::full)},
          {"background", l.solves(SizeClass::background)},
          {"target", l.solves(SizeClass::target)},
          {"factorizations", l.total_factorizations()}};
}

}  // namespace detail

// ------------------------------------------------------------------ forward

struct ForwardResult {
  Model model;
  DataSet data;
};

inline ForwardResult run_forward_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const fs::path dir = detail::prepare_output(cfg);
  const Model model = Model::from_velocity(cfg.grid, build_velocity(cfg.model, cfg.grid));
  write_model_file((dir / "model.lwim").string(), to_model_file(model));
  const std::vector<double> freqs =
      cfg.frequencies_hz.empty() ? cfg.schedule_frequencies(cfg.schedule) : cfg.frequencies_hz;
  SolveLedger ledger;
  DataSet data = synthesize_data(model, cfg.acquisition(), freqs, cfg.pml, cfg.noise_spec(), &ledger, "forward",
                                 opt.threads);
  write_data_file((dir / "data.lwid").string(), to_data_file(data));
  write_text((dir / "ledger.csv").string(), ledger.to_csv());
  detail::note(opt, "forward: " + std::to_string(freqs.size()) + " frequencies, " +
                        std::to_string(ledger.total_solves()) + " solves");
  return {model, std::move(data)};
}

// ------------------------------------------------------------------- invert

inline ScheduleResult run_invert_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const fs::path dir = detail::prepare_output(cfg);
  const Acquisition acq = cfg.acquisition();
  SolveLedger ledger;

  RVec v_true;
  DataSet data;
  if (!cfg.data_file.empty()) {
    data = to_data_set(read_data_file(cfg.data_file), cfg.wavelet);
  } else {
    v_true = build_velocity(cfg.model, cfg.grid);
    data = synthesize_data(Model::from_velocity(cfg.grid, v_true), acq, cfg.schedule_frequencies(cfg.schedule),
                           cfg.pml, cfg.noise_spec(), &ledger, "forward", opt.threads);
  }
  if (cfg.initial_model.kind == ModelSpec::Kind::smoothed && v_true.size() == 0)
    v_true = build_velocity(cfg.model, cfg.grid);
  const Model init = Model::from_velocity(cfg.grid, build_velocity(cfg.initial_model, cfg.grid, &v_true));

  std::optional<Partition> part;
  if (cfg.algorithm != Algorithm::irwri) {
    if (cfg.partition.empty()) throw ConfigError("algorithm '" + std::string(to_string(cfg.algorithm)) + "' needs partition rectangles");
    part = build_partition(cfg.grid, cfg.partition);
  }

  ScheduleResult res = run_schedule(cfg.algorithm, init, data, part ? &*part : nullptr, cfg.schedule,
                                    cfg.inversion(), &ledger);
  write_model_file((dir / "model_final.lwim").string(), to_model_file(res.model));
  detail::write_field(dir, "velocity_final", res.model.velocity(), cfg.grid, cfg.raster_format);
  detail::write_reports(dir / "reports.csv", res.reports);
  write_text((dir / "ledger.csv").string(), ledger.to_csv());

  json summary = {{"algorithm", to_string(cfg.algorithm)}, {"iterations", res.iterations},
                  {"solves", detail::ledger_json(ledger)}};
  if (v_true.size()) {
    summary["rms_error_initial"] = std::sqrt((init.velocity() - v_true).squaredNorm() / v_true.size());
    summary["rms_error_final"] = std::sqrt((res.model.velocity() - v_true).squaredNorm() / v_true.size());
  }
  summary["failure"] = res.failure ? json(*res.failure) : json(nullptr);
  detail::write_json(dir / "summary.json", summary);
  if (res.failure) throw SolverError("inversion stopped: " + *res.failure);
  detail::note(opt, "invert: " + std::to_string(res.iterations) + " iterations");
  return res;
}

// ---------------------------------------------------------------- inclusion

struct InclusionResult {
  TargetWavefieldComparison comparison;
  json summary;
};

inline InclusionResult run_inclusion_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const fs::path dir = detail::prepare_output(cfg);
  const Grid& g = cfg.grid;
  if (cfg.partition.empty()) throw ConfigError("inclusion experiment needs partition rectangles");
  const double freq = cfg.frequencies_hz.empty() ? cfg.schedule.front().freqs_hz.front() : cfg.frequencies_hz.front();
  const RVec v_true = build_velocity(cfg.model, g);
  const RVec v_background = build_velocity(cfg.initial_model, g, &v_true);
  const Model m_true = Model::from_velocity(g, v_true);
  const Model m_background = Model::from_velocity(g, v_background);
  const Partition part = build_partition(g, cfg.partition);
  SolveLedger ledger;

  InclusionResult out;
  out.comparison =
      extract_target_wavefield_comparison(m_background, m_true, part, freq, cfg.acquisition(), cfg.inversion(), &ledger);
  const auto& c = out.comparison;

  const PaddedDomain dom(g, cfg.pml.width);
  const RasterFormat fmt = cfg.raster_format;
  auto interior = [&](const CMat& U) { return CVec(dom.interior_of(U).col(0)); };
  auto background_only = [&](const CVec& u) {
    return CVec(part.merge(part.restrict_background(u), CVec::Zero(part.n2())));
  };
  auto target_only = [&](const CMat& U2) { return CVec(part.merge(CVec::Zero(part.n1()), U2.col(0))); };

  detail::write_field(dir, "velocity_true", v_true, g, fmt);
  detail::write_complex_field(dir, "wavefield_true", interior(c.U_true), g, fmt);
  detail::write_complex_field(dir, "background_naive", background_only(interior(c.U_background)), g, fmt);
  detail::write_complex_field(dir, "background_da", background_only(interior(c.U_da)), g, fmt);
  detail::write_complex_field(dir, "target_naive", target_only(c.U2_naive), g, fmt);
  detail::write_complex_field(dir, "target_naive_error", target_only(c.U2_naive - c.U2_true), g, fmt);
  detail::write_complex_field(dir, "target_da", target_only(c.U2_da), g, fmt);
  detail::write_complex_field(dir, "target_da_error", target_only(c.U2_da - c.U2_true), g, fmt);
  write_text((dir / "ledger.csv").string(), ledger.to_csv());

  out.summary = {{"frequency_hz", freq},
                 {"seed", cfg.seed},
                 {"n_target", part.n2()},
                 {"error_naive", c.error_naive},
                 {"error_da", c.error_da},
                 {"ratio", c.ratio()}};
  detail::write_json(dir / "summary.json", out.summary);
  detail::note(opt, "inclusion: error_naive=" + shortest_decimal(c.error_naive) +
                        " error_da=" + shortest_decimal(c.error_da) + " ratio=" + shortest_decimal(c.ratio()));
  return out;
}

// ---------------------------------------------------------------- timelapse

struct TimelapseRun {
  std::string name;
  RVec velocity;
  double initial_error = 0.0;  ///< target RMS of the starting model against the monitor truth
  double final_error = 0.0;
  long iterations = 0;
  long full_solves = 0;
  long target_solves = 0;
  std::optional<std::string> failure;
};

struct TimelapseResult {
  RVec v_baseline_true;
  RVec v_baseline_inverted;
  RVec v_monitor_true;
  TimelapseRun lwi_true_baseline;      ///< LWI from the true baseline
  TimelapseRun lwi_inverted_baseline;  ///< LWI from the inverted baseline
  TimelapseRun lwi_background_update;  ///< same, background refreshed once per frequency
  TimelapseRun irwri_monitor;          ///< full-domain IR-WRI from the inverted baseline
  long schedule_iterations = 0;
  json summary;

  /// Relative target-region RMS difference of an LWI model from the IR-WRI one.
  double agreement(const Partition& part, const TimelapseRun& lwi) const {
    const RVec d = part.restrict_target(RVec(lwi.velocity - irwri_monitor.velocity));
    return d.norm() / part.restrict_target(irwri_monitor.velocity).norm();
  }
};

inline TimelapseResult run_timelapse_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const fs::path dir = detail::prepare_output(cfg);
  const Grid& g = cfg.grid;
  const RasterFormat fmt = cfg.raster_format;
  if (cfg.partition.empty()) throw ConfigError("timelapse experiment needs partition rectangles");
  const Partition part = build_partition(g, cfg.partition);
  const Acquisition acq = cfg.acquisition();
  const InversionConfig inv = cfg.inversion();
  NoiseSpec noise = cfg.noise_spec();
  SolveLedger ledger_all;

  TimelapseResult out;
  out.v_baseline_true = build_velocity(cfg.model, g);
  if (!cfg.monitor_model_file.empty()) {
    const ModelFile f = read_model_file(cfg.monitor_model_file);
    if (!(f.grid == g)) throw ConfigError("monitor model file does not match the configured grid");
    out.v_monitor_true = f.velocity;
  } else if (cfg.perturbation) {
    out.v_monitor_true = apply_perturbation(g, out.v_baseline_true, *cfg.perturbation);
  } else {
    throw ConfigError("timelapse experiment needs a perturbation or a monitor_model_file");
  }
  const Model m_baseline = Model::from_velocity(g, out.v_baseline_true);
  const Model m_monitor = Model::from_velocity(g, out.v_monitor_true);
  const RVec v_init = build_velocity(cfg.initial_model, g, &out.v_baseline_true);
  write_model_file((dir / "baseline_true.lwim").string(), to_model_file(m_baseline));
  write_model_file((dir / "monitor_true.lwim").string(), to_model_file(m_monitor));
  write_model_file((dir / "baseline_initial.lwim").string(), {g, v_init});

  // (1) baseline data, (2) baseline IR-WRI.
  SolveLedger ledger_baseline;
  const DataSet d_baseline = synthesize_data(m_baseline, acq, cfg.schedule_frequencies(cfg.baseline_schedule), cfg.pml,
                                             noise, &ledger_baseline, "baseline_forward", opt.threads);
  detail::note(opt, "timelapse: baseline inversion");
  const ScheduleResult base = run_schedule(Algorithm::irwri, Model::from_velocity(g, v_init), d_baseline, nullptr,
                                           cfg.baseline_schedule, inv, &ledger_baseline, "baseline_irwri");
  out.v_baseline_inverted = base.model.velocity();
  write_model_file((dir / "baseline_inverted.lwim").string(), to_model_file(base.model));
  detail::write_reports(dir / "reports_baseline_irwri.csv", base.reports);
  write_text((dir / "ledger_baseline.csv").string(), ledger_baseline.to_csv());
  ledger_all.merge_from(ledger_baseline);
  if (base.failure) throw SolverError("baseline inversion stopped: " + *base.failure);

  // (3) monitor data; a distinct noise stream from the baseline survey.
  noise.seed = cfg.seed + 1;
  const DataSet d_monitor = synthesize_data(m_monitor, acq, cfg.schedule_frequencies(cfg.schedule), cfg.pml, noise,
                                            &ledger_all, "monitor_forward", opt.threads);

  // (4) monitor inversions.
  detail::write_field(dir, "target_change_true", detail::mask_target(part, out.v_monitor_true - out.v_baseline_true),
                      g, fmt);
  auto run = [&](const std::string& name, Algorithm algo, const Model& init, bool background_update) {
    detail::note(opt, "timelapse: " + name);
    InversionConfig c = inv;
    c.update_background_once = background_update;
    SolveLedger ledger;
    const ScheduleResult r = run_schedule(algo, init, d_monitor, &part, cfg.schedule, c, &ledger, name);
    TimelapseRun tr;
    tr.name = name;
    tr.velocity = r.model.velocity();
    tr.initial_error = detail::target_rms(part, init.velocity(), out.v_monitor_true);
    tr.final_error = detail::target_rms(part, tr.velocity, out.v_monitor_true);
    tr.iterations = r.iterations;
    tr.full_solves = ledger.solves(SizeClass::full);
    tr.target_solves = ledger.solves(SizeClass::target);
    tr.failure = r.failure;
    write_model_file((dir / (name + ".lwim")).string(), to_model_file(r.model));
    detail::write_field(dir, name + "_target_change", detail::mask_target(part, tr.velocity - init.velocity()), g, fmt);
    detail::write_reports(dir / ("reports_" + name + ".csv"), r.reports);
    write_text((dir / ("ledger_" + name + ".csv")).string(), ledger.to_csv());
    ledger_all.merge_from(ledger);
    return tr;
  };
  out.lwi_true_baseline = run("lwi_true_baseline", Algorithm::lwi, m_baseline, false);
  out.lwi_inverted_baseline = run("lwi_inverted_baseline", Algorithm::lwi, base.model, false);
  out.lwi_background_update = run("lwi_background_update", Algorithm::lwi, base.model, true);
  out.irwri_monitor = run("irwri_monitor", Algorithm::irwri, base.model, false);
  out.schedule_iterations = total_iterations(cfg.schedule);
  write_text((dir / "ledger.csv").string(), ledger_all.to_csv());

  // (5) summary.
  auto run_json = [&](const TimelapseRun& r) {
    return json{{"initial_target_rms", r.initial_error},
                {"final_target_rms", r.final_error},
                {"iterations", r.iterations},
                {"full_solves", r.full_solves},
                {"target_solves", r.target_solves},
                {"failure", r.failure ? json(*r.failure) : json(nullptr)}};
  };
  out.summary = {
      {"seed", cfg.seed},
      {"n_target", part.n2()},
      {"schedule_iterations", out.schedule_iterations},
      {"baseline_rms_initial", std::sqrt((v_init - out.v_baseline_true).squaredNorm() / g.size())},
      {"baseline_rms_inverted", std::sqrt((out.v_baseline_inverted - out.v_baseline_true).squaredNorm() / g.size())},
      {"runs",
       {{"lwi_true_baseline", run_json(out.lwi_true_baseline)},
        {"lwi_inverted_baseline", run_json(out.lwi_inverted_baseline)},
        {"lwi_background_update", run_json(out.lwi_background_update)},
        {"irwri_monitor", run_json(out.irwri_monitor)}}},
      {"agreement_lwi_inverted_vs_irwri", out.agreement(part, out.lwi_inverted_baseline)},
      {"agreement_lwi_background_update_vs_irwri", out.agreement(part, out.lwi_background_update)}};
  detail::write_json(dir / "summary.json", out.summary);

  for (const TimelapseRun* r : {&out.lwi_true_baseline, &out.lwi_inverted_baseline, &out.lwi_background_update,
                                &out.irwri_monitor})
    if (r->failure) throw SolverError(r->name + " stopped: " + *r->failure);
  return out;
}

// ------------------------------------------------------------- ledger dump

/// Sums a ledger CSV by (phase, size_class) and overall by size class.
inline std::string summarize_ledger_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "phase,frequency_hz,size_class,count")
    throw FormatError("ledger csv header mismatch", 0);
  std::map<std::pair<std::string, std::string>, long> by_phase;
  std::map<std::string, long> by_size;
  std::uint64_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (cols.size() != 4) throw FormatError("ledger row needs 4 columns", offset);
    long n = 0;
    const auto res = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), n);
    if (res.ec != std::errc() || n < 0) throw FormatError("bad ledger count", offset);
    by_phase[{cols[0], cols[2]}] += n;
    by_size[cols[2]] += n;
    offset += line.size() + 1;
  }
  std::ostringstream os;
  os << "phase,size_class,solves\n";
  for (const auto& [k, v] : by_phase) os << k.first << ',' << k.second << ',' << v << '\n';
  for (const auto& [k, v] : by_size) os << "total," << k << ',' << v << '\n';
  return os.str();
}

}  // namespace lwi
