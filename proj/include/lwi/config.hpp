#pragma once
/**
 * @file config.hpp
 * @brief JSON experiment configuration. Every object rejects unknown keys;
 *        omitted keys keep the per-experiment defaults.
 */

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lwi/formats.hpp"
#include "lwi/lwi.hpp"
#include "lwi/raster.hpp"

namespace lwi {

using json = nlohmann::ordered_json;

enum class Experiment { forward, invert, inclusion, timelapse };

inline Experiment parse_experiment(std::string_view s) {
  if (s == "forward") return Experiment::forward;
  if (s == "invert") return Experiment::invert;
  if (s == "inclusion") return Experiment::inclusion;
  if (s == "timelapse") return Experiment::timelapse;
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

/// How a velocity model is produced.
struct ModelSpec {
  enum class Kind { constant, layered, inclusion, file, smoothed };
  Kind kind = Kind::constant;
  double velocity = 2000.0;                ///< constant; also inclusion background
  std::vector<double> interfaces_m;        ///< layered: depths of layer tops 2..n
  std::vector<double> velocities;          ///< layered: one per layer
  double inclusion_velocity = 2800.0;
  Point center{2100.0, 2100.0};
  double radius = 300.0;
  std::string path;                        ///< file
  int radius_nodes = 6;                    ///< smoothed: boxcar half-width applied to the true model
};

/// Point set: explicit list, straight line, or ring.
struct PointSpec {
  enum class Kind { points, line, ring };
  Kind kind = Kind::points;
  std::vector<Point> points;
  int count = 1;
  Point start;
  Point step;
  Point center;
  double radius = 0.0;
  double start_angle_deg = 0.0;

  std::vector<Point> generate() const {
    switch (kind) {
      case Kind::points: return points;
      case Kind::line: {
        std::vector<Point> out;
        for (int i = 0; i < count; ++i) out.push_back({start.x + i * step.x, start.z + i * step.z});
        return out;
      }
      case Kind::ring: {
        std::vector<Point> out;
        for (int i = 0; i < count; ++i) {
          const double a = start_angle_deg * std::numbers::pi / 180.0 + 2.0 * std::numbers::pi * i / count;
          out.push_back({center.x + radius * std::cos(a), center.z + radius * std::sin(a)});
        }
        return out;
      }
    }
    return {};
  }
};

struct BoxPerturbation {
  Rect rect;
  double delta_velocity = 200.0;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::forward;
  Grid grid;
  PmlSpec pml;
  PointSpec sources;
  PointSpec receivers;
  SourceWavelet wavelet;
  std::vector<double> frequencies_hz;  ///< forward and inclusion; empty means schedule frequencies
  Schedule schedule;
  Schedule baseline_schedule;
  double lambda_rel = 0.1;
  std::optional<double> lambda_abs;
  double v_min = 1000.0;
  double v_max = 6000.0;
  std::vector<Rect> partition;
  bool update_background_once = false;
  Algorithm algorithm = Algorithm::lwi;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  bool noise = false;
  double snr_db = 40.0;
  ModelSpec model;
  ModelSpec initial_model;
  std::optional<BoxPerturbation> perturbation;
  std::string monitor_model_file;
  std::string data_file;
  RasterFormat raster_format = RasterFormat::csv;

  Acquisition acquisition() const { return {sources.generate(), receivers.generate(), wavelet}; }

  InversionConfig inversion() const {
    InversionConfig c;
    c.lambda_rel = lambda_rel;
    c.lambda_abs = lambda_abs;
    c.bounds = BoundConstraint(v_min, v_max);
    c.pml = pml;
    c.update_background_once = update_background_once;
    return c;
  }

  NoiseSpec noise_spec() const { return {noise, snr_db, seed}; }

  /// Sorted union of all schedule frequencies (monitor and baseline).
  std::vector<double> schedule_frequencies(const Schedule& s) const {
    std::set<double> f;
    for (const auto& st : s) f.insert(st.freqs_hz.begin(), st.freqs_hz.end());
    return {f.begin(), f.end()};
  }
};

// ---------------------------------------------------------------- defaults

inline Schedule default_baseline_schedule() {
  return {{{3, 4, 5}, 1, 5}, {{3, 4, 5, 6, 7, 8, 9}, 1, 5}, {{5, 6, 7, 8, 9, 10, 11, 12, 13}, 1, 5}};
}

/// Layered 3 km x 1.5 km section, surface line acquisition.
inline void layered_defaults(ExperimentConfig& c) {
  c.grid = Grid{121, 61, 25.0, 25.0, 0.0, 0.0};
  c.pml = PmlSpec{20, 1e-3, 3500.0};
  c.model.kind = ModelSpec::Kind::layered;
  c.model.interfaces_m = {300.0, 650.0, 1050.0};
  c.model.velocities = {1500.0, 2100.0, 2700.0, 3500.0};
  c.initial_model.kind = ModelSpec::Kind::smoothed;
  c.initial_model.radius_nodes = 6;
  c.sources.kind = PointSpec::Kind::line;
  c.sources.count = 15;
  c.sources.start = {100.0, 25.0};
  c.sources.step = {200.0, 0.0};
  c.receivers.kind = PointSpec::Kind::line;
  c.receivers.count = 61;
  c.receivers.start = {0.0, 25.0};
  c.receivers.step = {50.0, 0.0};
  c.wavelet = {SourceWavelet::Kind::ricker, 10.0};
  c.v_min = 1300.0;
  c.v_max = 4000.0;
  c.partition = {Rect{1200.0, 1800.0, 650.0, 900.0}};
  c.schedule = {{{5, 10, 15}, 2, 5}};
  c.baseline_schedule = default_baseline_schedule();
}

inline ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::inclusion: {
      c.grid = Grid{141, 141, 30.0, 30.0, 0.0, 0.0};
      c.pml = PmlSpec{20, 1e-3, 2000.0};
      c.model.kind = ModelSpec::Kind::inclusion;
      c.model.velocity = 2000.0;
      c.model.inclusion_velocity = 2800.0;
      c.model.center = {2100.0, 2100.0};
      c.model.radius = 300.0;
      c.initial_model.kind = ModelSpec::Kind::constant;
      c.initial_model.velocity = 2000.0;
      c.sources.kind = PointSpec::Kind::points;
      c.sources.points = {{200.0, 2100.0}};
      c.receivers.kind = PointSpec::Kind::ring;
      c.receivers.count = 120;
      c.receivers.center = {2100.0, 2100.0};
      c.receivers.radius = 1900.0;
      c.wavelet = {SourceWavelet::Kind::unit, 10.0};
      c.frequencies_hz = {5.0};
      c.partition = {Rect{1400.0, 2800.0, 1400.0, 2800.0}};
      c.schedule = {{{5.0}, 1, 5}};
      break;
    }
    case Experiment::timelapse:
      layered_defaults(c);
      c.perturbation = BoxPerturbation{Rect{1300.0, 1700.0, 700.0, 850.0}, 200.0};
      break;
    case Experiment::forward:
      layered_defaults(c);
      c.frequencies_hz = {5.0, 10.0, 15.0};
      break;
    case Experiment::invert:
      layered_defaults(c);
      c.algorithm = Algorithm::irwri;
      c.schedule = default_baseline_schedule();
      break;
  }
  return c;
}

// ----------------------------------------------------------------- parsing

namespace detail {

/// Reads keys from one JSON object and remembers which were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  bool get(const char* key, T& out) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(sub(key) + ": " + e.what());
    }
    return true;
  }

  std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Throws on the first key that was never consumed.
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + (path_.empty() ? k : path_ + "." + k) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Point parse_point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(path + ": expected [x, z]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json point_json(const Point& p) { return json::array({p.x, p.z}); }

inline Rect parse_rect(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Rect rect;
  if (!r.get("xmin", rect.xmin) || !r.get("xmax", rect.xmax) || !r.get("zmin", rect.zmin) || !r.get("zmax", rect.zmax))
    throw ConfigError(path + ": rectangle needs xmin, xmax, zmin, zmax");
  r.finish();
  return rect;
}

inline json rect_json(const Rect& r) { return {{"xmin", r.xmin}, {"xmax", r.xmax}, {"zmin", r.zmin}, {"zmax", r.zmax}}; }

inline void parse_grid(const json& j, Grid& g) {
  ObjectReader r(j, "grid");
  r.get("nx", g.nx);
  r.get("nz", g.nz);
  r.get("dx", g.dx);
  r.get("dz", g.dz);
  if (r.has("h")) {
    double h = 0.0;
    r.get("h", h);
    g.dx = g.dz = h;
  }
  r.get("x0", g.x0);
  r.get("z0", g.z0);
  r.finish();
}

inline void parse_points(const json& j, PointSpec& p, const std::string& path) {
  ObjectReader r(j, path);
  std::string kind;
  if (r.get("kind", kind)) {
    if (kind == "points") p.kind = PointSpec::Kind::points;
    else if (kind == "line") p.kind = PointSpec::Kind::line;
    else if (kind == "ring") p.kind = PointSpec::Kind::ring;
    else throw ConfigError(path + ".kind: expected points, line or ring");
  }
  if (r.has("points")) {
    const json& arr = r.at("points");
    if (!arr.is_array()) throw ConfigError(path + ".points: expected an array");
    p.points.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) p.points.push_back(parse_point(arr[i], path + ".points"));
  }
  r.get("count", p.count);
  if (r.has("start")) p.start = parse_point(r.at("start"), path + ".start");
  if (r.has("step")) p.step = parse_point(r.at("step"), path + ".step");
  if (r.has("center")) p.center = parse_point(r.at("center"), path + ".center");
  r.get("radius", p.radius);
  r.get("start_angle_deg", p.start_angle_deg);
  r.finish();
  if (p.kind != PointSpec::Kind::points && p.count < 1) throw ConfigError(path + ".count must be >= 1");
}

inline json points_json(const PointSpec& p) {
  switch (p.kind) {
    case PointSpec::Kind::points: {
      json arr = json::array();
      for (const auto& q : p.points) arr.push_back(point_json(q));
      return {{"kind", "points"}, {"points", arr}};
    }
    case PointSpec::Kind::line:
      return {{"kind", "line"}, {"count", p.count}, {"start", point_json(p.start)}, {"step", point_json(p.step)}};
    case PointSpec::Kind::ring:
      return {{"kind", "ring"}, {"count", p.count}, {"center", point_json(p.center)}, {"radius", p.radius},
              {"start_angle_deg", p.start_angle_deg}};
  }
  return {};
}

inline void parse_model(const json& j, ModelSpec& m, const std::string& path) {
  ObjectReader r(j, path);
  std::string kind;
  if (r.get("kind", kind)) {
    if (kind == "constant") m.kind = ModelSpec::Kind::constant;
    else if (kind == "layered") m.kind = ModelSpec::Kind::layered;
    else if (kind == "inclusion") m.kind = ModelSpec::Kind::inclusion;
    else if (kind == "file") m.kind = ModelSpec::Kind::file;
    else if (kind == "smoothed") m.kind = ModelSpec::Kind::smoothed;
    else throw ConfigError(path + ".kind: expected constant, layered, inclusion, file or smoothed");
  }
  r.get("velocity", m.velocity);
  r.get("interfaces_m", m.interfaces_m);
  r.get("velocities", m.velocities);
  r.get("inclusion_velocity", m.inclusion_velocity);
  if (r.has("center")) m.center = parse_point(r.at("center"), path + ".center");
  r.get("radius", m.radius);
  r.get("path", m.path);
  r.get("radius_nodes", m.radius_nodes);
  r.finish();
}

inline json model_json(const ModelSpec& m) {
  switch (m.kind) {
    case ModelSpec::Kind::constant: return {{"kind", "constant"}, {"velocity", m.velocity}};
    case ModelSpec::Kind::layered:
      return {{"kind", "layered"}, {"interfaces_m", m.interfaces_m}, {"velocities", m.velocities}};
    case ModelSpec::Kind::inclusion:
      return {{"kind", "inclusion"}, {"velocity", m.velocity}, {"inclusion_velocity", m.inclusion_velocity},
              {"center", point_json(m.center)}, {"radius", m.radius}};
    case ModelSpec::Kind::file: return {{"kind", "file"}, {"path", m.path}};
    case ModelSpec::Kind::smoothed: return {{"kind", "smoothed"}, {"radius_nodes", m.radius_nodes}};
  }
  return {};
}

inline Schedule parse_schedule(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of stages");
  Schedule s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    ObjectReader r(j[i], path + "[" + std::to_string(i) + "]");
    ScheduleStage st;
    if (!r.get("freqs_hz", st.freqs_hz)) throw ConfigError(r.sub("freqs_hz") + " is required");
    r.get("passes", st.passes);
    r.get("iters_per_freq", st.iters_per_freq);
    r.finish();
    s.push_back(std::move(st));
  }
  return s;
}

inline json schedule_json(const Schedule& s) {
  json arr = json::array();
  for (const auto& st : s)
    arr.push_back({{"freqs_hz", st.freqs_hz}, {"passes", st.passes}, {"iters_per_freq", st.iters_per_freq}});
  return arr;
}

}  // namespace detail

inline const char* to_string(RasterFormat f) {
  switch (f) {
    case RasterFormat::csv: return "csv";
    case RasterFormat::f64_binary: return "f64-binary";
    case RasterFormat::pgm16: return "pgm16";
  }
  return "?";
}

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::forward: return "forward";
    case Experiment::invert: return "invert";
    case Experiment::inclusion: return "inclusion";
    case Experiment::timelapse: return "timelapse";
  }
  return "?";
}

inline void validate_config(const ExperimentConfig& c) {
  try {
    c.grid.validate();
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  if (c.pml.width < 0) throw ConfigError("pml_width must be >= 0");
  if (!(c.pml.reflection > 0.0 && c.pml.reflection < 1.0)) throw ConfigError("pml_reflection must lie in (0, 1)");
  if (!(c.pml.reference_velocity > 0.0)) throw ConfigError("pml_velocity must be positive");
  if (!(c.lambda_rel > 0.0)) throw ConfigError("lambda_rel must be positive");
  if (c.lambda_abs && !(*c.lambda_abs > 0.0)) throw ConfigError("lambda_abs must be positive");
  if (!(c.v_min > 0.0 && c.v_min < c.v_max)) throw ConfigError("bounds need 0 < v_min < v_max");
  if (c.model.kind == ModelSpec::Kind::smoothed) throw ConfigError("model: 'smoothed' is only valid for initial_model");
  if (c.model.kind == ModelSpec::Kind::layered && c.model.velocities.size() != c.model.interfaces_m.size() + 1)
    throw ConfigError("model: layered needs one more velocity than interfaces");
  if (c.initial_model.radius_nodes < 0) throw ConfigError("initial_model.radius_nodes must be >= 0");
  validate_schedule(c.schedule);
  if (c.experiment == Experiment::timelapse) validate_schedule(c.baseline_schedule);
  for (double f : c.frequencies_hz)
    if (!(f > 0.0)) throw ConfigError("frequencies_hz must be positive");
  if (!(c.wavelet.peak_hz > 0.0)) throw ConfigError("wavelet.peak_hz must be positive");
}

/// Overlays `j` on the defaults for `e`.
inline ExperimentConfig parse_config(const json& j, Experiment e) {
  ExperimentConfig c = default_config(e);
  detail::ObjectReader r(j, "");
  if (r.has("experiment")) {
    std::string name;
    r.get("experiment", name);
    if (parse_experiment(name) != e) throw ConfigError("config is for experiment '" + name + "'");
  }
  if (r.has("grid")) detail::parse_grid(r.at("grid"), c.grid);
  r.get("pml_width", c.pml.width);
  r.get("pml_reflection", c.pml.reflection);
  r.get("pml_velocity", c.pml.reference_velocity);
  if (r.has("acquisition")) {
    detail::ObjectReader a(r.at("acquisition"), "acquisition");
    if (a.has("sources")) detail::parse_points(a.at("sources"), c.sources, "acquisition.sources");
    if (a.has("receivers")) detail::parse_points(a.at("receivers"), c.receivers, "acquisition.receivers");
    if (a.has("wavelet")) {
      detail::ObjectReader w(a.at("wavelet"), "acquisition.wavelet");
      std::string kind;
      if (w.get("kind", kind)) {
        if (kind == "ricker") c.wavelet.kind = SourceWavelet::Kind::ricker;
        else if (kind == "unit") c.wavelet.kind = SourceWavelet::Kind::unit;
        else throw ConfigError("acquisition.wavelet.kind: expected ricker or unit");
      }
      w.get("peak_hz", c.wavelet.peak_hz);
      w.finish();
    }
    a.finish();
  }
  r.get("frequencies_hz", c.frequencies_hz);
  if (r.has("schedule")) c.schedule = detail::parse_schedule(r.at("schedule"), "schedule");
  if (r.has("baseline_schedule")) c.baseline_schedule = detail::parse_schedule(r.at("baseline_schedule"), "baseline_schedule");
  r.get("lambda_rel", c.lambda_rel);
  if (r.has("lambda_abs")) {
    double v = 0.0;
    r.get("lambda_abs", v);
    c.lambda_abs = v;
  }
  if (r.has("bounds")) {
    detail::ObjectReader b(r.at("bounds"), "bounds");
    b.get("v_min", c.v_min);
    b.get("v_max", c.v_max);
    b.finish();
  }
  if (r.has("partition")) {
    const json& arr = r.at("partition");
    if (!arr.is_array()) throw ConfigError("partition: expected an array of rectangles");
    c.partition.clear();
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.partition.push_back(detail::parse_rect(arr[i], "partition[" + std::to_string(i) + "]"));
  }
  if (r.has("flags")) {
    detail::ObjectReader f(r.at("flags"), "flags");
    f.get("update_background_once", c.update_background_once);
    std::string algo;
    if (f.get("algorithm", algo)) c.algorithm = parse_algorithm(algo);
    f.finish();
  }
  r.get("output_dir", c.output_dir);
  r.get("seed", c.seed);
  if (r.has("noise")) {
    detail::ObjectReader n(r.at("noise"), "noise");
    n.get("enabled", c.noise);
    n.get("snr_db", c.snr_db);
    n.finish();
  }
  if (r.has("model")) detail::parse_model(r.at("model"), c.model, "model");
  if (r.has("initial_model")) detail::parse_model(r.at("initial_model"), c.initial_model, "initial_model");
  if (r.has("perturbation")) {
    const json& p = r.at("perturbation");
    if (p.is_null()) {
      c.perturbation.reset();
    } else {
      detail::ObjectReader pr(p, "perturbation");
      BoxPerturbation box = c.perturbation.value_or(BoxPerturbation{});
      if (pr.has("rect")) box.rect = detail::parse_rect(pr.at("rect"), "perturbation.rect");
      pr.get("delta_velocity", box.delta_velocity);
      pr.finish();
      c.perturbation = box;
    }
  }
  r.get("monitor_model_file", c.monitor_model_file);
  r.get("data_file", c.data_file);
  if (r.has("raster_format")) {
    std::string f;
    r.get("raster_format", f);
    c.raster_format = parse_raster_format(f);
  }
  r.finish();
  validate_config(c);
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text, Experiment e) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  return parse_config(j, e);
}

inline ExperimentConfig load_config(const std::string& path, Experiment e) {
  return parse_config_text(read_text(path), e);
}

/// The fully resolved configuration, every default written out.
inline json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["grid"] = {{"nx", c.grid.nx}, {"nz", c.grid.nz}, {"dx", c.grid.dx},
               {"dz", c.grid.dz}, {"x0", c.grid.x0}, {"z0", c.grid.z0}};
  j["pml_width"] = c.pml.width;
  j["pml_reflection"] = c.pml.reflection;
  j["pml_velocity"] = c.pml.reference_velocity;
  j["acquisition"] = {{"sources", detail::points_json(c.sources)},
                      {"receivers", detail::points_json(c.receivers)},
                      {"wavelet", {{"kind", c.wavelet.kind == SourceWavelet::Kind::unit ? "unit" : "ricker"},
                                   {"peak_hz", c.wavelet.peak_hz}}}};
  j["frequencies_hz"] = c.frequencies_hz;
  j["schedule"] = detail::schedule_json(c.schedule);
  j["baseline_schedule"] = detail::schedule_json(c.baseline_schedule);
  j["lambda_rel"] = c.lambda_rel;
  if (c.lambda_abs) j["lambda_abs"] = *c.lambda_abs;
  j["bounds"] = {{"v_min", c.v_min}, {"v_max", c.v_max}};
  json parts = json::array();
  for (const auto& r : c.partition) parts.push_back(detail::rect_json(r));
  j["partition"] = parts;
  j["flags"] = {{"update_background_once", c.update_background_once}, {"algorithm", to_string(c.algorithm)}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["noise"] = {{"enabled", c.noise}, {"snr_db", c.snr_db}};
  j["model"] = detail::model_json(c.model);
  j["initial_model"] = detail::model_json(c.initial_model);
  if (c.perturbation)
    j["perturbation"] = {{"rect", detail::rect_json(c.perturbation->rect)},
                         {"delta_velocity", c.perturbation->delta_velocity}};
  else
    j["perturbation"] = nullptr;
  j["monitor_model_file"] = c.monitor_model_file;
  j["data_file"] = c.data_file;
  j["raster_format"] = to_string(c.raster_format);
  return j;
}

// ------------------------------------------------------------ model builds

inline RVec box_smooth(const Grid& g, const RVec& v, int radius) {
  if (radius <= 0) return v;
  RVec out(v.size());
  for (Index iz = 0; iz < g.nz; ++iz)
    for (Index ix = 0; ix < g.nx; ++ix) {
      double sum = 0.0;
      int count = 0;
      for (int dz = -radius; dz <= radius; ++dz)
        for (int dx = -radius; dx <= radius; ++dx) {
          const Index jx = std::clamp<Index>(ix + dx, 0, g.nx - 1);
          const Index jz = std::clamp<Index>(iz + dz, 0, g.nz - 1);
          sum += v[g.index(jx, jz)];
          ++count;
        }
      out[g.index(ix, iz)] = sum / count;
    }
  return out;
}

/// Velocity field for `spec`. `reference` supplies the field that a smoothed
/// spec is derived from.
inline RVec build_velocity(const ModelSpec& spec, const Grid& g, const RVec* reference = nullptr) {
  RVec v(g.size());
  switch (spec.kind) {
    case ModelSpec::Kind::constant: v.setConstant(spec.velocity); break;
    case ModelSpec::Kind::layered:
      if (spec.velocities.size() != spec.interfaces_m.size() + 1)
        throw ConfigError("layered model needs one more velocity than interfaces");
      for (Index iz = 0; iz < g.nz; ++iz) {
        std::size_t layer = 0;
        while (layer < spec.interfaces_m.size() && g.z(iz) >= spec.interfaces_m[layer]) ++layer;
        v.segment(iz * g.nx, g.nx).setConstant(spec.velocities[layer]);
      }
      break;
    case ModelSpec::Kind::inclusion:
      for (Index iz = 0; iz < g.nz; ++iz)
        for (Index ix = 0; ix < g.nx; ++ix)
          v[g.index(ix, iz)] = std::hypot(g.x(ix) - spec.center.x, g.z(iz) - spec.center.z) < spec.radius
                                   ? spec.inclusion_velocity
                                   : spec.velocity;
      break;
    case ModelSpec::Kind::file: {
      const ModelFile f = read_model_file(spec.path);
      if (!(f.grid == g)) throw ConfigError("model file '" + spec.path + "' does not match the configured grid");
      v = f.velocity;
      break;
    }
    case ModelSpec::Kind::smoothed:
      if (!reference) throw ConfigError("a smoothed model needs a reference model");
      v = box_smooth(g, *reference, spec.radius_nodes);
      break;
  }
  return v;
}

inline RVec apply_perturbation(const Grid& g, RVec v, const BoxPerturbation& p) {
  for (Index iz = 0; iz < g.nz; ++iz)
    for (Index ix = 0; ix < g.nx; ++ix)
      if (p.rect.contains(g.x(ix), g.z(iz))) v[g.index(ix, iz)] += p.delta_velocity;
  return v;
}

}  // namespace lwi
