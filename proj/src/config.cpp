#include "cvent/config.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "config_json.hpp"
#include "cvent/io.hpp"

namespace cvent::config {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

// Rethrows model-level validation errors under a field path.
template <typename F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

std::string json_type(const ordered_json& j) { return j.type_name(); }

class Obj {
 public:
  Obj(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object, got " + json_type(j));
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const ordered_json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(field(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail(field(key), "expected a number, got " + json_type(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(field(key), "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
  std::optional<double> opt_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  std::int64_t integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail(field(key), "expected an integer, got " + json_type(v));
    return v.get<std::int64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(field(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  int small_integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const auto v = integer(key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(field(key), "out of range");
    return int(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) fail(field(key), "expected true or false, got " + json_type(v));
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail(field(key), "expected a string, got " + json_type(v));
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }
  std::optional<std::string> opt_string(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return string(key);
  }

  const ordered_json& array(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail(field(key), "expected an array, got " + json_type(v));
    return v;
  }

  Obj object(const std::string& key) { return Obj(raw(key), field(key)); }

  // Rejects keys that were never read, which catches misspelled fields.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key()) && it.key() != "comment") fail(field(it.key()), "unknown field");
    }
  }

 private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::pair<double, double> number_pair(const ordered_json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(path, "expected a [number, number] pair");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<std::pair<double, double>> pair_list(const ordered_json& arr, const std::string& path) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(number_pair(arr[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

CurveSpec read_curve(const ordered_json& v, const std::string& path) {
  if (v.is_number()) return CurveSpec::constant(v.get<double>());
  Obj o(v, path);
  CurveSpec c;
  int forms = 0;
  if (o.has("constant_db")) {
    c.constant_db = o.number("constant_db");
    ++forms;
  }
  if (o.has("knots_mhz_db")) {
    c.knots_mhz_db = pair_list(o.array("knots_mhz_db"), o.field("knots_mhz_db"));
    if (c.knots_mhz_db.empty()) fail(o.field("knots_mhz_db"), "needs at least one knot");
    ++forms;
  }
  if (o.has("csv")) {
    c.csv_path = o.string("csv");
    ++forms;
  }
  if (forms != 1) fail(path, "give exactly one of constant_db, knots_mhz_db, csv");
  o.finish();
  return c;
}

CavityBlock read_cavity_block(Obj o) {
  CavityBlock b;
  b.name = o.string("name");
  b.wavelength_nm = o.number("wavelength_nm");
  b.refractive_index = o.number("refractive_index");
  b.r1 = o.number("r1");
  b.r2 = o.number("r2");
  b.round_trip_loss = o.opt_number("round_trip_loss");
  b.absorption_ppm_per_cm = o.number("absorption_ppm_per_cm", 0.0);
  if (b.round_trip_loss && o.has("absorption_ppm_per_cm")) {
    fail(o.field("round_trip_loss"), "give either round_trip_loss or absorption_ppm_per_cm");
  }
  o.finish();
  return b;
}

CavityConfig read_cavity(Obj o) {
  CavityConfig c;
  c.length_mm = o.number("length_mm");
  const auto& blocks = o.array("blocks");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    c.blocks.push_back(read_cavity_block(Obj(blocks[i], o.field("blocks") + "[" + std::to_string(i) + "]")));
  }
  if (o.has("input_powers_mw")) {
    const auto& p = o.array("input_powers_mw");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!p[i].is_number()) fail(o.field("input_powers_mw") + "[" + std::to_string(i) + "]", "expected a number");
      c.input_powers_mw.push_back(p[i].get<double>());
    }
  }
  o.finish();
  return c;
}

ThresholdConfig read_threshold(Obj o) {
  ThresholdConfig t;
  t.signal_block = o.string("signal_block", t.signal_block);
  t.pump_block = o.string("pump_block", t.pump_block);
  t.waist_signal_um = o.number("waist_signal_um");
  t.waist_pump_um = o.number("waist_pump_um");
  t.d_eff_pm_per_v = o.number("d_eff_pm_per_v");
  o.finish();
  return t;
}

SourceConfig read_source(Obj o) {
  SourceConfig s;
  s.pump_ratio_x = o.opt_number("pump_ratio_x");
  s.pump_power_mw = o.opt_number("pump_power_mw");
  s.threshold_power_mw = o.opt_number("threshold_power_mw");
  s.threshold_from_model = o.boolean("threshold_from_model", false);
  s.gamma_hwhm_mhz = o.opt_number("gamma_hwhm_mhz");
  s.gamma_from_cavity = o.opt_string("gamma_from_cavity");
  s.escape_efficiency = o.number("escape_efficiency", s.escape_efficiency);

  if (s.pump_ratio_x) {
    if (s.pump_power_mw || s.threshold_power_mw || s.threshold_from_model) {
      fail(o.field("pump_ratio_x"), "give either pump_ratio_x or pump_power_mw with a threshold");
    }
  } else {
    if (!s.pump_power_mw) fail(o.field("pump_power_mw"), "missing required field (or give pump_ratio_x)");
    if (bool(s.threshold_power_mw) == s.threshold_from_model) {
      fail(o.field("threshold_power_mw"), "give exactly one of threshold_power_mw or threshold_from_model");
    }
  }
  if (bool(s.gamma_hwhm_mhz) == bool(s.gamma_from_cavity)) {
    fail(o.field("gamma_hwhm_mhz"), "give exactly one of gamma_hwhm_mhz or gamma_from_cavity");
  }
  o.finish();
  return s;
}

EntanglerDoc read_entangler(Obj o) {
  EntanglerDoc e;
  e.relative_phase_deg = o.number("relative_phase_deg", e.relative_phase_deg);
  e.beam_splitter_reflectivity = o.number("beam_splitter_reflectivity", e.beam_splitter_reflectivity);
  o.finish();
  return e;
}

DetectionDoc read_detection(Obj o) {
  DetectionDoc d;
  d.total_efficiency = o.opt_number("total_efficiency");
  d.visibility = o.opt_number("visibility");
  if (d.visibility && o.has("overlap_efficiency")) {
    fail(o.field("visibility"), "give either visibility or overlap_efficiency");
  }
  d.overlap_efficiency = o.number("overlap_efficiency", 1.0);
  d.propagation_efficiency = o.number("propagation_efficiency", 1.0);
  d.quantum_efficiency = o.number("quantum_efficiency", 1.0);
  if (o.has("gain_a_db")) d.gain_a_db = read_curve(o.raw("gain_a_db"), o.field("gain_a_db"));
  if (o.has("gain_b_db")) d.gain_b_db = read_curve(o.raw("gain_b_db"), o.field("gain_b_db"));
  d.gain_ratio = o.number("gain_ratio", 1.0);
  if (o.has("clearance_db")) {
    if (o.has("clearance_a_db") || o.has("clearance_b_db")) {
      fail(o.field("clearance_db"), "give either clearance_db or per-detector clearances");
    }
    d.clearance_a_db = read_curve(o.raw("clearance_db"), o.field("clearance_db"));
    d.clearance_b_db = d.clearance_a_db;
  }
  if (o.has("clearance_a_db")) d.clearance_a_db = read_curve(o.raw("clearance_a_db"), o.field("clearance_a_db"));
  if (o.has("clearance_b_db")) d.clearance_b_db = read_curve(o.raw("clearance_b_db"), o.field("clearance_b_db"));
  d.clearance_offset_db = o.number("clearance_offset_db", 0.0);
  d.dark_noise_subtracted = o.boolean("dark_noise_subtracted", false);
  o.finish();
  return d;
}

BandSplitDoc read_band_split(Obj o) {
  BandSplitDoc b;
  b.lower_mhz = o.number("lower_mhz");
  b.upper_mhz = o.number("upper_mhz");
  b.lo_power_a_mw = o.opt_number("lo_power_a_mw");
  b.lo_power_b_mw = o.opt_number("lo_power_b_mw");
  b.gain_a = o.opt_number("gain_a");
  b.gain_b = o.opt_number("gain_b");
  const bool lo = b.lo_power_a_mw && b.lo_power_b_mw;
  const bool gain = b.gain_a && b.gain_b;
  const bool partial = (bool(b.lo_power_a_mw) != bool(b.lo_power_b_mw)) || (bool(b.gain_a) != bool(b.gain_b));
  if (partial || lo == gain) fail(o.field("lo_power_a_mw"), "give both LO powers or both gains");
  o.finish();
  return b;
}

SweepDoc read_sweep(Obj o) {
  SweepDoc s;
  s.start_mhz = o.number("start_mhz", s.start_mhz);
  s.stop_mhz = o.number("stop_mhz", s.stop_mhz);
  s.points = o.small_integer("points", s.points);
  s.rbw_mhz = o.number("rbw_mhz", s.rbw_mhz);
  s.vbw_khz = o.number("vbw_khz", s.vbw_khz);
  s.sweep_time_ms = o.number("sweep_time_ms", s.sweep_time_ms);
  s.averages = o.small_integer("averages", s.averages);
  if (o.has("band_splits")) {
    const auto& arr = o.array("band_splits");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      s.band_splits.push_back(read_band_split(Obj(arr[i], o.field("band_splits") + "[" + std::to_string(i) + "]")));
    }
  }
  o.finish();
  return s;
}

MonteCarloDoc read_montecarlo(Obj o) {
  MonteCarloDoc m;
  m.sample_rate_mhz = o.number("sample_rate_mhz", m.sample_rate_mhz);
  m.n_samples = o.unsigned_integer("n_samples", m.n_samples);
  m.segment_length = o.unsigned_integer("segment_length", m.segment_length);
  m.overlap_fraction = o.number("overlap_fraction", m.overlap_fraction);
  m.window = o.string("window", m.window);
  if (m.window != "hann" && m.window != "rectangular") fail(o.field("window"), "expected \"hann\" or \"rectangular\"");
  m.batches = o.unsigned_integer("batches", m.batches);
  m.lower_mhz = o.number("lower_mhz", m.lower_mhz);
  m.upper_mhz = o.number("upper_mhz", m.upper_mhz);
  m.bin_width_mhz = o.number("bin_width_mhz", m.bin_width_mhz);
  m.with_reid = o.boolean("with_reid", m.with_reid);
  m.dump_raw = o.boolean("dump_raw", m.dump_raw);
  o.finish();
  return m;
}

SynthDoc read_synth(Obj o) {
  SynthDoc s;
  s.sigma_db = o.opt_number("sigma_db");
  if (o.has("spurs")) {
    const auto& arr = o.array("spurs");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Obj so(arr[i], o.field("spurs") + "[" + std::to_string(i) + "]");
      SpurDoc sp;
      sp.frequency_mhz = so.number("frequency_mhz");
      sp.amplitude_db = so.number("amplitude_db");
      so.finish();
      s.spurs.push_back(sp);
    }
  }
  o.finish();
  return s;
}

FitDoc read_fit(Obj o) {
  FitDoc f;
  const auto& arr = o.array("free");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Obj po(arr[i], o.field("free") + "[" + std::to_string(i) + "]");
    FreeParameterDoc p;
    p.name = po.string("name");
    p.lower = po.number("lower");
    p.upper = po.number("upper");
    p.initial = po.opt_number("initial");
    po.finish();
    f.free.push_back(p);
  }
  f.target = o.string("target", f.target);
  if (f.target != "quadratures" && f.target != "duan") fail(o.field("target"), "expected \"quadratures\" or \"duan\"");
  f.domain = o.string("domain", f.domain);
  if (f.domain != "db" && f.domain != "linear") fail(o.field("domain"), "expected \"db\" or \"linear\"");
  f.sigma_db = o.opt_number("sigma_db");
  if (o.has("exclusion_windows_mhz")) {
    f.exclusion_windows_mhz = pair_list(o.array("exclusion_windows_mhz"), o.field("exclusion_windows_mhz"));
  }
  f.starts = o.small_integer("starts", f.starts);
  f.max_iterations = o.small_integer("max_iterations", f.max_iterations);
  f.data = o.opt_string("data");
  o.finish();
  return f;
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// Serialization helpers.

ordered_json curve_json(const CurveSpec& c) {
  if (c.constant_db) return *c.constant_db;
  ordered_json j = ordered_json::object();
  if (!c.csv_path.empty()) {
    j["csv"] = c.csv_path;
  } else {
    ordered_json knots = ordered_json::array();
    for (const auto& [f, v] : c.knots_mhz_db) knots.push_back({f, v});
    j["knots_mhz_db"] = knots;
  }
  return j;
}

template <typename T>
void put_opt(ordered_json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

ordered_json pairs_json(const std::vector<std::pair<double, double>>& v) {
  ordered_json a = ordered_json::array();
  for (const auto& [x, y] : v) a.push_back({x, y});
  return a;
}

const CavityBlock& find_block(const ExperimentConfig& cfg, const std::string& name, const std::string& path) {
  if (!cfg.cavity) fail(path, "refers to cavity block '" + name + "' but the config has no cavity section");
  for (const auto& b : cfg.cavity->blocks) {
    if (b.name == name) return b;
  }
  fail(path, "no cavity block named '" + name + "'");
}

CavityGeometry<double> geometry_of(const CavityConfig& c, const CavityBlock& b) {
  CavityGeometry<double> g;
  g.length = c.length_mm * 1e-3;
  g.refractive_index = b.refractive_index;
  g.r1 = b.r1;
  g.r2 = b.r2;
  // ppm/cm -> 1/m
  g.round_trip_loss = b.round_trip_loss ? *b.round_trip_loss
                                        : absorption_round_trip_loss(g.length, b.absorption_ppm_per_cm * 1e-6 * 100.0);
  return g;
}

}  // namespace

Curve CurveSpec::resolve(const std::filesystem::path& base_dir) const {
  if (constant_db) return Curve::constant(*constant_db);
  if (!csv_path.empty()) {
    std::filesystem::path p(csv_path);
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError("curve file '" + p.string() + "' does not exist");
    return Curve::from_csv_file(p.string());
  }
  std::vector<Curve::Knot> knots;
  for (const auto& [f, v] : knots_mhz_db) knots.push_back({f * 1e6, v});
  return Curve(std::move(knots));
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return seed == o.seed && cavity == o.cavity && threshold == o.threshold && sources == o.sources &&
         entangler == o.entangler && detection == o.detection && sweep == o.sweep && montecarlo == o.montecarlo &&
         synth == o.synth && fit == o.fit;
}

ExperimentConfig parse(const std::string& text, const std::string& source_name, const std::filesystem::path& base_dir) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string what = e.what();
    const auto pos = what.find("syntax error");
    throw ConfigError(source_name + ": " + line_column(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                      (pos == std::string::npos ? what : what.substr(pos)));
  }

  try {
    Obj o(root, "");
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    cfg.seed = o.unsigned_integer("seed", 1);
    if (o.has("cavity")) cfg.cavity = read_cavity(o.object("cavity"));
    if (o.has("threshold")) cfg.threshold = read_threshold(o.object("threshold"));
    const auto& src = o.array("sources");
    if (src.size() != 2) fail("sources", "expected exactly two source blocks");
    for (std::size_t i = 0; i < 2; ++i) cfg.sources[i] = read_source(Obj(src[i], "sources[" + std::to_string(i) + "]"));
    if (o.has("entangler")) cfg.entangler = read_entangler(o.object("entangler"));
    cfg.detection = read_detection(o.object("detection"));
    if (o.has("sweep")) cfg.sweep = read_sweep(o.object("sweep"));
    if (o.has("montecarlo")) cfg.montecarlo = read_montecarlo(o.object("montecarlo"));
    if (o.has("synth")) cfg.synth = read_synth(o.object("synth"));
    if (o.has("fit")) cfg.fit = read_fit(o.object("fit"));
    o.finish();

    for (std::size_t i = 0; i < 2; ++i) {
      const auto& s = cfg.sources[i];
      const std::string path = "sources[" + std::to_string(i) + "]";
      if (s.gamma_from_cavity) find_block(cfg, *s.gamma_from_cavity, path + ".gamma_from_cavity");
      if (s.threshold_from_model && !cfg.threshold) {
        fail(path + ".threshold_from_model", "requires a threshold section");
      }
    }
    if (cfg.threshold) {
      find_block(cfg, cfg.threshold->signal_block, "threshold.signal_block");
      find_block(cfg, cfg.threshold->pump_block, "threshold.pump_block");
    }
    // Resolve once so every unit and cross-reference problem surfaces here.
    build_model(cfg);
    at_path("sweep", [&] { return build_sweep(cfg); });
    if (cfg.cavity) build_cavities(cfg);
    if (cfg.montecarlo) at_path("montecarlo", [&] { return build_synthesis(cfg); });
    if (cfg.fit) {
      for (std::size_t i = 0; i < cfg.fit->free.size(); ++i) {
        at_path("fit.free[" + std::to_string(i) + "].name",
                [&] { return fit::parameter_from_string(cfg.fit->free[i].name == "gamma_hwhm_mhz"
                                                            ? std::string("gamma_hwhm_hz")
                                                            : cfg.fit->free[i].name); });
      }
    }
    return cfg;
  } catch (const ConfigError& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
}

ExperimentConfig load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  auto dir = path.parent_path();
  if (dir.empty()) dir = ".";
  return parse(text, path.string(), dir);
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  if (cfg.cavity) {
    ordered_json c;
    c["length_mm"] = cfg.cavity->length_mm;
    c["blocks"] = ordered_json::array();
    for (const auto& b : cfg.cavity->blocks) {
      ordered_json bj;
      bj["name"] = b.name;
      bj["wavelength_nm"] = b.wavelength_nm;
      bj["refractive_index"] = b.refractive_index;
      bj["r1"] = b.r1;
      bj["r2"] = b.r2;
      if (b.round_trip_loss) {
        bj["round_trip_loss"] = *b.round_trip_loss;
      } else {
        bj["absorption_ppm_per_cm"] = b.absorption_ppm_per_cm;
      }
      c["blocks"].push_back(bj);
    }
    c["input_powers_mw"] = cfg.cavity->input_powers_mw;
    j["cavity"] = c;
  }
  if (cfg.threshold) {
    const auto& t = *cfg.threshold;
    j["threshold"] = {{"signal_block", t.signal_block},
                      {"pump_block", t.pump_block},
                      {"waist_signal_um", t.waist_signal_um},
                      {"waist_pump_um", t.waist_pump_um},
                      {"d_eff_pm_per_v", t.d_eff_pm_per_v}};
  }
  j["sources"] = ordered_json::array();
  for (const auto& s : cfg.sources) {
    ordered_json sj = ordered_json::object();
    put_opt(sj, "pump_ratio_x", s.pump_ratio_x);
    put_opt(sj, "pump_power_mw", s.pump_power_mw);
    put_opt(sj, "threshold_power_mw", s.threshold_power_mw);
    if (s.threshold_from_model) sj["threshold_from_model"] = true;
    put_opt(sj, "gamma_hwhm_mhz", s.gamma_hwhm_mhz);
    put_opt(sj, "gamma_from_cavity", s.gamma_from_cavity);
    sj["escape_efficiency"] = s.escape_efficiency;
    j["sources"].push_back(sj);
  }
  j["entangler"] = {{"relative_phase_deg", cfg.entangler.relative_phase_deg},
                    {"beam_splitter_reflectivity", cfg.entangler.beam_splitter_reflectivity}};
  {
    const auto& d = cfg.detection;
    ordered_json dj = ordered_json::object();
    put_opt(dj, "total_efficiency", d.total_efficiency);
    if (d.visibility) {
      dj["visibility"] = *d.visibility;
    } else {
      dj["overlap_efficiency"] = d.overlap_efficiency;
    }
    dj["propagation_efficiency"] = d.propagation_efficiency;
    dj["quantum_efficiency"] = d.quantum_efficiency;
    dj["gain_a_db"] = curve_json(d.gain_a_db);
    dj["gain_b_db"] = curve_json(d.gain_b_db);
    dj["gain_ratio"] = d.gain_ratio;
    if (d.clearance_a_db) dj["clearance_a_db"] = curve_json(*d.clearance_a_db);
    if (d.clearance_b_db) dj["clearance_b_db"] = curve_json(*d.clearance_b_db);
    dj["clearance_offset_db"] = d.clearance_offset_db;
    dj["dark_noise_subtracted"] = d.dark_noise_subtracted;
    j["detection"] = dj;
  }
  {
    const auto& s = cfg.sweep;
    ordered_json sj = {{"start_mhz", s.start_mhz},
                       {"stop_mhz", s.stop_mhz},
                       {"points", s.points},
                       {"rbw_mhz", s.rbw_mhz},
                       {"vbw_khz", s.vbw_khz},
                       {"sweep_time_ms", s.sweep_time_ms},
                       {"averages", s.averages}};
    sj["band_splits"] = ordered_json::array();
    for (const auto& b : s.band_splits) {
      ordered_json bj = {{"lower_mhz", b.lower_mhz}, {"upper_mhz", b.upper_mhz}};
      put_opt(bj, "lo_power_a_mw", b.lo_power_a_mw);
      put_opt(bj, "lo_power_b_mw", b.lo_power_b_mw);
      put_opt(bj, "gain_a", b.gain_a);
      put_opt(bj, "gain_b", b.gain_b);
      sj["band_splits"].push_back(bj);
    }
    j["sweep"] = sj;
  }
  if (cfg.montecarlo) {
    const auto& m = *cfg.montecarlo;
    j["montecarlo"] = {{"sample_rate_mhz", m.sample_rate_mhz}, {"n_samples", m.n_samples},
                       {"segment_length", m.segment_length},   {"overlap_fraction", m.overlap_fraction},
                       {"window", m.window},                   {"batches", m.batches},
                       {"lower_mhz", m.lower_mhz},             {"upper_mhz", m.upper_mhz},
                       {"bin_width_mhz", m.bin_width_mhz},     {"with_reid", m.with_reid},
                       {"dump_raw", m.dump_raw}};
  }
  {
    ordered_json sj = ordered_json::object();
    put_opt(sj, "sigma_db", cfg.synth.sigma_db);
    sj["spurs"] = ordered_json::array();
    for (const auto& s : cfg.synth.spurs) {
      sj["spurs"].push_back({{"frequency_mhz", s.frequency_mhz}, {"amplitude_db", s.amplitude_db}});
    }
    j["synth"] = sj;
  }
  if (cfg.fit) {
    const auto& f = *cfg.fit;
    ordered_json fj;
    fj["free"] = ordered_json::array();
    for (const auto& p : f.free) {
      ordered_json pj = {{"name", p.name}, {"lower", p.lower}, {"upper", p.upper}};
      put_opt(pj, "initial", p.initial);
      fj["free"].push_back(pj);
    }
    fj["target"] = f.target;
    fj["domain"] = f.domain;
    put_opt(fj, "sigma_db", f.sigma_db);
    fj["exclusion_windows_mhz"] = pairs_json(f.exclusion_windows_mhz);
    fj["starts"] = f.starts;
    fj["max_iterations"] = f.max_iterations;
    put_opt(fj, "data", f.data);
    j["fit"] = fj;
  }
  return j;
}

std::string to_json_string(const ExperimentConfig& cfg, int indent) { return to_json(cfg).dump(indent) + "\n"; }

std::vector<NamedCavity> build_cavities(const ExperimentConfig& cfg) {
  std::vector<NamedCavity> out;
  if (!cfg.cavity) return out;
  for (std::size_t i = 0; i < cfg.cavity->blocks.size(); ++i) {
    const auto& b = cfg.cavity->blocks[i];
    const std::string path = "cavity.blocks[" + std::to_string(i) + "]";
    if (!(b.wavelength_nm > 0.0)) fail(path + ".wavelength_nm", "must be positive");
    NamedCavity c;
    c.name = b.name;
    c.wavelength_m = b.wavelength_nm * 1e-9;
    c.geometry = geometry_of(*cfg.cavity, b);
    c.figures = at_path(path, [&] { return figures_of_merit(c.geometry); });
    out.push_back(c);
  }
  return out;
}

ThresholdInputs build_threshold_inputs(const ExperimentConfig& cfg) {
  if (!cfg.threshold) fail("threshold", "missing required section");
  const auto& t = *cfg.threshold;
  const auto& sb = find_block(cfg, t.signal_block, "threshold.signal_block");
  const auto& pb = find_block(cfg, t.pump_block, "threshold.pump_block");
  const auto sg = geometry_of(*cfg.cavity, sb);
  const auto pg = geometry_of(*cfg.cavity, pb);

  ThresholdInputs in;
  in.signal_wavelength = sb.wavelength_nm * 1e-9;
  in.waist_signal = t.waist_signal_um * 1e-6;
  in.waist_pump = t.waist_pump_um * 1e-6;
  in.d_eff = t.d_eff_pm_per_v * 1e-12;
  in.crystal_length = sg.length;
  in.index_signal = sb.refractive_index;
  in.index_pump = pb.refractive_index;
  in.absorption_signal = sb.absorption_ppm_per_cm * 1e-4;
  in.absorption_pump = pb.absorption_ppm_per_cm * 1e-4;
  in.output_transmission = 1.0 - sg.r2;
  in.signal_extra_loss = (1.0 - sg.r1) + sg.round_trip_loss;
  in.pump_buildup = at_path("threshold.pump_block", [&] { return power_buildup(pg); });
  at_path("threshold", [&] {
    in.validate();
    return 0;
  });
  return in;
}

ExperimentModel build_model(const ExperimentConfig& cfg) {
  ExperimentModel m;
  std::optional<double> model_threshold_w;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& s = cfg.sources[i];
    const std::string path = "sources[" + std::to_string(i) + "]";
    OpaSpectrumModel<double> opa;
    if (s.gamma_hwhm_mhz) {
      opa.gamma_hwhm = *s.gamma_hwhm_mhz * 1e6;
    } else {
      const auto& b = find_block(cfg, *s.gamma_from_cavity, path + ".gamma_from_cavity");
      opa.gamma_hwhm = at_path(path + ".gamma_from_cavity",
                               [&] { return linewidth_fwhm(geometry_of(*cfg.cavity, b)) / 2.0; });
    }
    if (s.pump_ratio_x) {
      opa.pump_ratio_x = *s.pump_ratio_x;
    } else {
      double thr_mw;
      if (s.threshold_power_mw) {
        thr_mw = *s.threshold_power_mw;
      } else {
        if (!model_threshold_w) {
          model_threshold_w = at_path("threshold", [&] { return opo_threshold(build_threshold_inputs(cfg)).input_power; });
        }
        thr_mw = *model_threshold_w * 1e3;
      }
      opa.pump_ratio_x = at_path(path + ".pump_power_mw", [&] { return pump_ratio(*s.pump_power_mw, thr_mw); });
    }
    opa.escape_efficiency = s.escape_efficiency;
    at_path(path, [&] {
      opa.validate();
      return 0;
    });
    (i == 0 ? m.entangler.source_a : m.entangler.source_b) = opa;
  }
  m.entangler.relative_phase = cfg.entangler.relative_phase_deg * std::numbers::pi / 180.0;
  m.entangler.beam_splitter_reflectivity = cfg.entangler.beam_splitter_reflectivity;
  at_path("entangler", [&] {
    m.entangler.validate();
    return 0;
  });

  const auto& d = cfg.detection;
  auto& c = m.detection;
  c.total_efficiency = d.total_efficiency;
  c.overlap_efficiency = d.visibility ? *d.visibility * *d.visibility : d.overlap_efficiency;
  c.propagation_efficiency = d.propagation_efficiency;
  c.quantum_efficiency = d.quantum_efficiency;
  c.gain_a_db = at_path("detection.gain_a_db", [&] { return d.gain_a_db.resolve(cfg.base_dir); });
  c.gain_b_db = at_path("detection.gain_b_db", [&] { return d.gain_b_db.resolve(cfg.base_dir); });
  c.gain_ratio = d.gain_ratio;
  if (d.clearance_a_db) {
    c.clearance_a = at_path("detection.clearance_a_db", [&] { return d.clearance_a_db->resolve(cfg.base_dir); });
  }
  if (d.clearance_b_db) {
    c.clearance_b = at_path("detection.clearance_b_db", [&] { return d.clearance_b_db->resolve(cfg.base_dir); });
  }
  c.clearance_offset_db = d.clearance_offset_db;
  c.dark_noise_subtracted = d.dark_noise_subtracted;
  at_path("detection", [&] {
    c.validate();
    return 0;
  });
  return m;
}

SweepConfig build_sweep(const ExperimentConfig& cfg) {
  const auto& s = cfg.sweep;
  SweepConfig out;
  out.grid = at_path("sweep.points", [&] { return Grid::linear(s.start_mhz * 1e6, s.stop_mhz * 1e6, s.points); });
  out.rbw_hz = s.rbw_mhz * 1e6;
  out.vbw_hz = s.vbw_khz * 1e3;
  out.sweep_time_s = s.sweep_time_ms * 1e-3;
  out.averages = s.averages;
  for (std::size_t i = 0; i < s.band_splits.size(); ++i) {
    const auto& b = s.band_splits[i];
    const std::string path = "sweep.band_splits[" + std::to_string(i) + "]";
    BandSplit split{b.lower_mhz * 1e6, b.upper_mhz * 1e6, 1.0, 1.0};
    if (b.lo_power_a_mw) {
      if (!(*b.lo_power_a_mw > 0.0 && *b.lo_power_b_mw > 0.0)) fail(path, "LO powers must be positive");
      split.gain_a = std::sqrt(*b.lo_power_a_mw);
      split.gain_b = std::sqrt(*b.lo_power_b_mw);
    } else {
      split.gain_a = *b.gain_a;
      split.gain_b = *b.gain_b;
    }
    out.band_splits.push_back(split);
  }
  at_path("sweep", [&] {
    out.validate();
    return 0;
  });
  return out;
}

double synth_sigma_db(const ExperimentConfig& cfg) {
  if (cfg.synth.sigma_db) {
    if (!(*cfg.synth.sigma_db >= 0.0)) fail("synth.sigma_db", "must be non-negative");
    return *cfg.synth.sigma_db;
  }
  const auto s = build_sweep(cfg);
  return estimator_sigma_db(s.rbw_hz, s.vbw_hz, s.averages);
}

std::vector<Spur> build_spurs(const ExperimentConfig& cfg) {
  std::vector<Spur> out;
  for (const auto& s : cfg.synth.spurs) out.push_back({s.frequency_mhz * 1e6, s.amplitude_db});
  return out;
}

mc::SynthesisConfig build_synthesis(const ExperimentConfig& cfg) {
  const MonteCarloDoc m = cfg.montecarlo.value_or(MonteCarloDoc{});
  mc::SynthesisConfig s;
  s.sample_rate_hz = m.sample_rate_mhz * 1e6;
  s.n_samples = std::size_t(m.n_samples);
  s.seed = cfg.seed;
  s.segment_length = std::size_t(m.segment_length);
  s.overlap_fraction = m.overlap_fraction;
  s.window = m.window == "rectangular" ? mc::Window::kRectangular : mc::Window::kHann;
  s.batches = std::size_t(m.batches);
  at_path("montecarlo", [&] {
    s.validate(m.upper_mhz * 1e6);
    return 0;
  });
  return s;
}

mc::EmpiricalOptions build_empirical_options(const ExperimentConfig& cfg) {
  const MonteCarloDoc m = cfg.montecarlo.value_or(MonteCarloDoc{});
  mc::EmpiricalOptions o;
  o.lower_hz = m.lower_mhz * 1e6;
  o.upper_hz = m.upper_mhz * 1e6;
  o.bin_width_hz = m.bin_width_mhz * 1e6;
  o.with_reid = m.with_reid;
  return o;
}

fit::FitProblem build_fit_problem(const ExperimentConfig& cfg, const TraceSet& data) {
  if (!cfg.fit) fail("fit", "missing required section");
  const auto& f = *cfg.fit;
  fit::FitProblem p;
  const double sigma = f.sigma_db ? *f.sigma_db : synth_sigma_db(cfg);
  if (!(sigma > 0.0)) fail("fit.sigma_db", "must be positive");
  p.data = fit::FitData::from_traces(data, sigma);
  for (std::size_t i = 0; i < f.free.size(); ++i) {
    const auto& d = f.free[i];
    const std::string path = "fit.free[" + std::to_string(i) + "]";
    const bool mhz = d.name == "gamma_hwhm_mhz";
    const double scale = mhz ? 1e6 : 1.0;
    fit::FreeParameter fp;
    fp.id = at_path(path + ".name", [&] { return fit::parameter_from_string(mhz ? "gamma_hwhm_hz" : d.name); });
    fp.lower = d.lower * scale;
    fp.upper = d.upper * scale;
    if (d.initial) fp.initial = *d.initial * scale;
    p.free.push_back(fp);
  }
  p.fixed = build_model(cfg);
  p.band_splits = build_sweep(cfg).band_splits;
  for (const auto& [lo, hi] : f.exclusion_windows_mhz) p.exclusion_windows.push_back({lo * 1e6, hi * 1e6});
  p.target = f.target == "duan" ? fit::Target::kDuan : fit::Target::kQuadratures;
  p.domain = f.domain == "linear" ? fit::Domain::kLinear : fit::Domain::kDb;
  p.options.starts = f.starts;
  p.options.max_iterations = f.max_iterations;
  p.options.seed = cfg.seed;
  return p;
}

}  // namespace cvent::config
