#include "cvent/commands.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config_json.hpp"
#include "cvent/io.hpp"

namespace cvent::cli {

using nlohmann::ordered_json;

namespace {

ordered_json with_config(const config::ExperimentConfig& cfg, const char* kind) {
  ordered_json j;
  j["kind"] = kind;
  j["config"] = config::to_json(cfg);
  return j;
}

void write(CommandResult& r, const std::filesystem::path& path, const std::string& content) {
  io::write_file_atomic(path, content);
  r.files.push_back(path);
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

// Non-finite values have no JSON number form; they are written as strings.
ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return io::format_double(v);
}

ordered_json numbers(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

ordered_json traces_json(const TraceSet& t) {
  ordered_json j;
  j["frequency_hz"] = numbers(t.grid.points());
  j["var_xsum_db"] = numbers(t.var_xsum_db);
  j["var_ydiff_db"] = numbers(t.var_ydiff_db);
  j["duan"] = numbers(t.duan);
  j["tms_db"] = numbers(t.tms_db);
  j["reid_product"] = numbers(t.reid_product);
  if (!t.vacuum_db.empty()) j["vacuum_db"] = numbers(t.vacuum_db);
  if (!t.dark_db.empty()) j["dark_db"] = numbers(t.dark_db);
  return j;
}

ordered_json summary_json(const CriteriaSummary& s) {
  auto bands = [](const std::vector<FrequencyBand>& b) {
    ordered_json a = ordered_json::array();
    for (const auto& x : b) a.push_back({number(x.lower_hz), number(x.upper_hz)});
    return a;
  };
  ordered_json j;
  j["min_duan"] = number(s.min_duan);
  j["min_duan_frequency_hz"] = number(s.min_duan_frequency_hz);
  j["entangled_bands_hz"] = bands(s.entangled_bands);
  j["epr_bands_hz"] = bands(s.epr_bands);
  return j;
}

std::string fmt(double v) { return io::format_double(v); }

// Short fixed-precision rendering for the human report only.
std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

config::ExperimentConfig seeded(const config::ExperimentConfig& cfg, const CommandOptions& opt) {
  config::ExperimentConfig c = cfg;
  if (opt.seed) c.seed = *opt.seed;
  return c;
}

std::string csv_row(std::initializer_list<std::string> cols) {
  std::string s;
  bool first = true;
  for (const auto& c : cols) {
    if (!first) s += ',';
    s += c;
    first = false;
  }
  return s + "\n";
}

std::string report_name(fit::Parameter p) {
  return p == fit::Parameter::kGammaHwhm ? "gamma_hwhm_mhz" : fit::to_string(p);
}
double report_scale(fit::Parameter p) { return p == fit::Parameter::kGammaHwhm ? 1e-6 : 1.0; }

}  // namespace

CommandResult cmd_cavity(const config::ExperimentConfig& cfg, const CommandOptions& opt) {
  if (!cfg.cavity) throw config::ConfigError("cavity: missing required section");
  const auto cavities = config::build_cavities(cfg);
  CommandResult r;
  std::ostringstream rep;
  rep << "block        lambda_nm  FSR_GHz    finesse   FWHM_MHz    buildup   escape_eff\n";

  ordered_json j = with_config(cfg, "cavity");
  j["blocks"] = ordered_json::array();
  std::string csv = csv_row({"name", "wavelength_nm", "fsr_hz", "finesse", "fwhm_hz", "hwhm_hz", "buildup",
                             "escape_efficiency", "round_trip_loss"});
  std::string circ = csv_row({"name", "input_power_w", "circulating_power_w"});
  ordered_json circ_j = ordered_json::array();

  for (const auto& c : cavities) {
    const auto& f = c.figures;
    ordered_json b;
    b["name"] = c.name;
    b["wavelength_nm"] = c.wavelength_m * 1e9;
    b["fsr_hz"] = f.fsr;
    b["finesse"] = f.finesse;
    b["fwhm_hz"] = f.fwhm;
    b["hwhm_hz"] = f.hwhm;
    b["buildup"] = f.buildup;
    b["escape_efficiency"] = f.escape_efficiency;
    b["round_trip_loss"] = c.geometry.round_trip_loss;
    j["blocks"].push_back(b);
    csv += csv_row({c.name, fmt(c.wavelength_m * 1e9), fmt(f.fsr), fmt(f.finesse), fmt(f.fwhm), fmt(f.hwhm),
                    fmt(f.buildup), fmt(f.escape_efficiency), fmt(c.geometry.round_trip_loss)});
    std::string name = c.name;
    name.resize(std::max<std::size_t>(name.size(), 12), ' ');
    rep << name << ' ' << fixed(c.wavelength_m * 1e9, 1) << "     " << fixed(f.fsr * 1e-9, 3) << "    "
        << fixed(f.finesse, 2) << "     " << fixed(f.fwhm * 1e-6, 1) << "    " << fixed(f.buildup, 2) << "     "
        << fixed(f.escape_efficiency, 5) << "\n";
    const bool pumped = !cfg.threshold || cfg.threshold->pump_block == c.name;
    for (double p_mw : pumped ? cfg.cavity->input_powers_mw : std::vector<double>{}) {
      const double p = p_mw * 1e-3;
      circ += csv_row({c.name, fmt(p), fmt(p * f.buildup)});
      circ_j.push_back({{"name", c.name}, {"input_power_w", p}, {"circulating_power_w", p * f.buildup}});
      rep << "  " << c.name << ": " << fixed(p_mw, 1) << " mW incident -> " << fixed(p * f.buildup, 2)
          << " W circulating\n";
    }
  }
  j["circulating"] = circ_j;

  std::filesystem::create_directories(opt.out_dir);
  if (opt.format == Format::kJson) {
    write(r, opt.out_dir / "cavity.json", dump(j));
  } else {
    write(r, opt.out_dir / "cavity.csv", csv);
    write(r, opt.out_dir / "circulating.csv", circ);
  }
  r.report = rep.str();
  return r;
}

CommandResult cmd_threshold(const config::ExperimentConfig& cfg, const CommandOptions& opt) {
  const ThresholdInputs in = config::build_threshold_inputs(cfg);
  const ThresholdResult t = opo_threshold(in);
  CommandResult r;

  const std::vector<std::pair<std::string, double>> rows = {
      {"focusing_xi", t.focusing_xi},
      {"focusing_xi_pump", t.focusing_xi_pump},
      {"focusing_h", t.focusing_h},
      {"nonlinear_efficiency_per_w", t.nonlinear_efficiency},
      {"output_transmission", in.output_transmission},
      {"signal_extra_loss", in.signal_extra_loss},
      {"pump_buildup", in.pump_buildup},
      {"circulating_power_w", t.circulating_power},
      {"input_power_w", t.input_power},
  };
  std::ostringstream rep;
  rep << "focusing xi = " << fixed(t.focusing_xi, 4) << ", h = " << fixed(t.focusing_h, 4) << "\n"
      << "E_nl = " << fmt(t.nonlinear_efficiency) << " 1/W\n"
      << "threshold: " << fixed(t.circulating_power, 2) << " W circulating, " << fixed(t.input_power * 1e3, 1)
      << " mW incident (buildup " << fixed(in.pump_buildup, 2) << ")\n";

  std::filesystem::create_directories(opt.out_dir);
  if (opt.format == Format::kJson) {
    ordered_json j = with_config(cfg, "threshold");
    ordered_json res;
    for (const auto& [k, v] : rows) res[k] = v;
    j["result"] = res;
    write(r, opt.out_dir / "threshold.json", dump(j));
  } else {
    std::string csv = csv_row({"quantity", "value"});
    for (const auto& [k, v] : rows) csv += csv_row({k, fmt(v)});
    write(r, opt.out_dir / "threshold.csv", csv);
  }
  r.report = rep.str();
  return r;
}

CommandResult cmd_spectrum(const config::ExperimentConfig& cfg, const CommandOptions& opt) {
  const ExperimentModel model = config::build_model(cfg);
  const SweepConfig sw = config::build_sweep(cfg);
  const TraceSet traces = sweep(model, sw);
  const auto summary = classify(make_criteria(traces.grid, traces.duan, traces.reid_product));

  CommandResult r;
  std::filesystem::create_directories(opt.out_dir);
  write(r, opt.out_dir / "spectrum.csv", trace_to_csv(traces));
  ordered_json j = with_config(cfg, "spectrum");
  j["traces"] = traces_json(traces);
  j["summary"] = summary_json(summary);
  write(r, opt.out_dir / "spectrum.json", dump(j));

  std::ostringstream rep;
  rep << traces.size() << " points, min Duan " << fixed(summary.min_duan, 4) << " at "
      << fixed(summary.min_duan_frequency_hz * 1e-6, 1) << " MHz\n";
  for (const auto& b : summary.entangled_bands) {
    rep << "  Duan < 4 over " << fixed(b.lower_hz * 1e-6, 1) << " - " << fixed(b.upper_hz * 1e-6, 1) << " MHz\n";
  }
  r.report = rep.str();
  return r;
}

CommandResult cmd_synth(const config::ExperimentConfig& cfg_in, const CommandOptions& opt) {
  const config::ExperimentConfig cfg = seeded(cfg_in, opt);
  const ExperimentModel model = config::build_model(cfg);
  const SweepConfig sw = config::build_sweep(cfg);
  const double sigma = config::synth_sigma_db(cfg);
  const TraceSet clean = sweep(model, sw);
  const TraceSet noisy = noisy_trace(clean, sigma, cfg.seed, config::build_spurs(cfg));

  CommandResult r;
  std::filesystem::create_directories(opt.out_dir);
  write(r, opt.out_dir / "synthetic.csv", trace_to_csv(noisy));
  ordered_json j = with_config(cfg, "synth");
  j["sigma_db"] = sigma;
  j["traces"] = traces_json(noisy);
  write(r, opt.out_dir / "synthetic.json", dump(j));
  std::ostringstream rep;
  rep << "synthetic trace: " << noisy.size() << " points, sigma " << fixed(sigma, 4) << " dB, seed " << cfg.seed
      << "\n";

  if (opt.montecarlo || cfg.montecarlo) {
    const mc::SynthesisConfig sc = config::build_synthesis(cfg);
    const mc::EmpiricalOptions eo = config::build_empirical_options(cfg);
    const mc::TimeDomainChain chain = mc::chain_from_model(model);
    mc::SourceTraces s1 = mc::synthesize_source(model.entangler.source_a, sc, 0);
    mc::SourceTraces s2 = mc::synthesize_source(model.entangler.source_b, sc, 2);
    const mc::DetectorTraces det = mc::simulate_chain(std::move(s1), std::move(s2), chain, sc);
    const mc::EmpiricalSpectrum emp = mc::empirical_duan_spectrum(det, sc, eo);
    const std::vector<double> analytic = mc::analytic_binned_duan(model, emp);
    const mc::OracleComparison cmp = mc::compare_to_model(emp, analytic);

    write(r, opt.out_dir / "empirical.csv", trace_to_csv(emp.as_traces()));
    ordered_json ej = with_config(cfg, "empirical");
    ej["traces"] = traces_json(emp.as_traces());
    ej["duan_standard_error"] = numbers(emp.duan_standard_error);
    ej["analytic_duan"] = numbers(analytic);
    ej["comparison"] = {{"bins", cmp.bins},
                        {"within_3_standard_errors", cmp.within},
                        {"fraction", cmp.fraction()},
                        {"max_abs_z", cmp.max_abs_z}};
    write(r, opt.out_dir / "empirical.json", dump(ej));
    if (cfg.montecarlo && cfg.montecarlo->dump_raw) {
      const auto dir = opt.out_dir / "raw";
      std::filesystem::create_directories(dir);
      const std::pair<const char*, const mc::QuadratureTrace*> dumps[] = {
          {"x_a", &det.x_a}, {"x_b", &det.x_b},     {"y_a", &det.y_a},
          {"y_b", &det.y_b}, {"vac_a", &det.vac_a}, {"vac_b", &det.vac_b}};
      for (const auto& [name, trace] : dumps) {
        const auto path = dir / (std::string(name) + ".f64");
        mc::write_raw_trace(path, *trace, sc);
        r.files.push_back(path);
        r.files.push_back(path.string() + ".json");
      }
    }
    rep << "time-domain oracle: " << cmp.within << "/" << cmp.bins << " bins within 3 standard errors\n";
  }
  r.report = rep.str();
  return r;
}

CommandResult cmd_fit(const config::ExperimentConfig& cfg_in, const CommandOptions& opt) {
  const config::ExperimentConfig cfg = seeded(cfg_in, opt);
  if (!cfg.fit) throw config::ConfigError("fit: missing required section");
  std::filesystem::path data_path;
  if (opt.data) {
    data_path = *opt.data;
  } else if (cfg.fit->data) {
    data_path = *cfg.fit->data;
    if (data_path.is_relative()) data_path = cfg.base_dir / data_path;
  } else {
    throw config::ConfigError("fit.data: no data file given (use --data or fit.data)");
  }
  const TraceSet data = trace_from_csv(io::read_file(data_path), data_path.string());
  const fit::FitProblem problem = config::build_fit_problem(cfg, data);
  const fit::FitResult res = fit::fit(problem);

  ordered_json params = ordered_json::array();
  std::string csv = csv_row({"parameter", "value", "uncertainty", "lower", "upper", "at_bound"});
  std::ostringstream rep;
  for (std::size_t i = 0; i < res.free.size(); ++i) {
    const auto& p = res.free[i];
    const double s = report_scale(p.id);
    const double v = res.parameters(Eigen::Index(i)) * s;
    const double u = res.uncertainties(Eigen::Index(i)) * s;
    params.push_back({{"name", report_name(p.id)},
                      {"value", number(v)},
                      {"uncertainty", number(u)},
                      {"lower", p.lower * s},
                      {"upper", p.upper * s},
                      {"at_bound", bool(res.at_bound[i])}});
    csv += csv_row({report_name(p.id), fmt(v), fmt(u), fmt(p.lower * s), fmt(p.upper * s),
                    res.at_bound[i] ? "true" : "false"});
    rep << report_name(p.id) << " = " << fmt(v) << " +/- " << fmt(u) << (res.at_bound[i] ? "  (at bound)" : "")
        << "\n";
  }
  ordered_json cov = ordered_json::array();
  for (Eigen::Index a = 0; a < res.covariance.rows(); ++a) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index b = 0; b < res.covariance.cols(); ++b) {
      row.push_back(number(res.covariance(a, b) * report_scale(res.free[std::size_t(a)].id) *
                           report_scale(res.free[std::size_t(b)].id)));
    }
    cov.push_back(row);
  }
  ordered_json starts = ordered_json::array();
  for (const auto& s : res.starts) {
    starts.push_back({{"objective", number(s.objective)}, {"iterations", s.iterations}, {"converged", s.converged}});
  }
  ordered_json masked = ordered_json::array();
  for (const auto& w : problem.exclusion_windows) masked.push_back({w.lower_hz, w.upper_hz});

  ordered_json j = with_config(cfg, "fit");
  j["data"] = data_path.filename().string();
  j["parameters"] = params;
  j["covariance"] = cov;
  j["residual_rms_db"] = number(res.residual_rms_db);
  j["residual_rms_weighted"] = number(res.residual_rms);
  j["objective"] = number(res.objective);
  j["points"] = res.points;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["best_start"] = res.best_start;
  j["starts"] = starts;
  j["exclusion_windows_hz"] = masked;

  CommandResult r;
  std::filesystem::create_directories(opt.out_dir);
  write(r, opt.out_dir / "fit.json", dump(j));
  if (opt.format == Format::kCsv) write(r, opt.out_dir / "fit.csv", csv);
  rep << "residual rms " << fixed(res.residual_rms_db, 4) << " dB over " << res.points << " residuals, "
      << res.iterations << " iterations\n";
  if (!res.converged) {
    rep << "fit did not converge; best-so-far parameters reported\n";
    r.exit_code = kNumericalFailure;
  }
  r.report = rep.str();
  return r;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-variable entanglement source modeling toolkit", "cvent"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
  std::uint64_t seed = 0;
  std::string data_path;
  bool montecarlo = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", seed, "random seed, overrides the config");
  };
  auto* cavity = app.add_subcommand("cavity", "cavity figures of merit");
  auto* spectrum = app.add_subcommand("spectrum", "analytic spectrum-analyzer sweep");
  auto* threshold = app.add_subcommand("threshold", "oscillation threshold estimate");
  auto* synth = app.add_subcommand("synth", "noisy synthetic trace, optionally the time-domain oracle");
  auto* fitc = app.add_subcommand("fit", "fit model parameters to a trace");
  for (auto* s : {cavity, spectrum, threshold, synth, fitc}) add_common(s);
  synth->add_flag("--montecarlo", montecarlo, "run the time-domain oracle even without a montecarlo section");
  fitc->add_option("--data", data_path, "trace CSV to fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  CommandOptions opt;
  opt.out_dir = out_dir;
  opt.format = format == "json" ? Format::kJson : Format::kCsv;
  for (auto* s : {cavity, spectrum, threshold, synth, fitc}) {
    if (s->count("--seed")) opt.seed = seed;
  }
  if (!data_path.empty()) opt.data = data_path;
  opt.montecarlo = montecarlo;

  try {
    const config::ExperimentConfig cfg = config::load(config_path);
    CommandResult r;
    if (*cavity) r = cmd_cavity(cfg, opt);
    if (*spectrum) r = cmd_spectrum(cfg, opt);
    if (*threshold) r = cmd_threshold(cfg, opt);
    if (*synth) r = cmd_synth(cfg, opt);
    if (*fitc) r = cmd_fit(cfg, opt);
    out << r.report;
    for (const auto& f : r.files) out << "wrote " << f.string() << "\n";
    return r.exit_code;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace cvent::cli
