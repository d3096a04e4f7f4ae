// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvent/commands.hpp"
#include "cvent/io.hpp"
#include "oracle.hpp"

using namespace cvent;
namespace fs = std::filesystem;

namespace {

const fs::path kPaperConfig = fs::path(CVENT_SOURCE_DIR) / "configs" / "paper.json";

struct Outcome {
  bool pass;
  std::string detail;
};

bool in_band(double v, double center, double tol) { return std::abs(v - center) <= tol; }

std::string num(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome cavity_reproduction() {
  const auto cavities = config::build_cavities(config::load(kPaperConfig));
  const auto& s = cavities.at(0).figures;
  const auto& p = cavities.at(1).figures;
  const double p300 = 0.300 * p.buildup, p655 = 0.655 * p.buildup;
  const bool ok = in_band(s.fsr, 31.75e9, 0.05e9) && in_band(s.finesse, 14.0, 0.2) && in_band(s.fwhm, 2.26e9, 0.05e9) &&
                  in_band(p.finesse, 307.0, 3.0) && in_band(p.buildup, 194.0, 2.0) && in_band(p300, 58.0, 1.0) &&
                  in_band(p655, 127.0, 1.0);
  return {ok, "FSR " + num(s.fsr / 1e9) + " GHz, F1550 " + num(s.finesse) + ", FWHM " + num(s.fwhm / 1e9) +
                  " GHz, F775 " + num(p.finesse) + ", B " + num(p.buildup) + ", " + num(p300) + " W / " +
                  num(p655) + " W"};
}

ExperimentModel minimum_model() {
  ExperimentModel m;
  const double x = std::sqrt(300.0 / 655.0);
  m.entangler.source_a = {1.13e9, x, 1.0};
  m.entangler.source_b = {1.13e9, x, 1.0};
  m.detection.total_efficiency = 0.59;
  return m;
}

Outcome duan_minimum() {
  const double d = evaluate_point(minimum_model(), 300e6).duan;
  const bool ok = in_band(d, 1.78, 0.02) && in_band(d, 1.8, 0.1);
  return {ok, "D(300 MHz) = " + num(d, 5)};
}

// Fits the gain ratio of the full detection model (clearance anchors, dark
// noise not subtracted) to the two reported high-frequency Duan values and
// checks the fitted model against the consistency bands.
Outcome high_frequency_band() {
  auto cfg = config::load(kPaperConfig);
  cfg.sweep.band_splits.clear();
  cfg.sweep.start_mhz = 1100;
  cfg.sweep.stop_mhz = 1480;
  cfg.sweep.points = 20;
  const ExperimentModel model = config::build_model(cfg);
  const SweepConfig sw = config::build_sweep(cfg);

  TraceSet target = sweep(model, sw);
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double f = target.grid[i];
    target.duan[i] = 2.8 + (f - 1.2e9) / (1.48e9 - 1.2e9) * (3.1 - 2.8);
  }
  fit::FitProblem problem;
  problem.data = fit::FitData::from_traces(target, 0.05);
  problem.fixed = model;
  problem.free = {{fit::Parameter::kGainRatio, 1.0, 1.5, std::nullopt}};
  problem.target = fit::Target::kDuan;
  problem.options.starts = 4;
  const auto res = fit::fit(problem);
  const double g = *res.value(fit::Parameter::kGainRatio);

  auto fitted = model;
  fitted.detection.gain_ratio = g;
  const double d12 = evaluate_point(fitted, 1.2e9).duan;
  const double d148 = evaluate_point(fitted, 1.48e9).duan;
  const bool ok = g >= 1.0 && g <= 1.5 && d12 >= 2.5 && d12 <= 3.1 && d148 >= 2.6 && d148 <= 3.2;
  return {ok, "gain ratio " + num(g) + ", D(1.2 GHz) = " + num(d12) + ", D(1.48 GHz) = " + num(d148)};
}

Outcome threshold_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto t = opo_threshold(config::build_threshold_inputs(config::load(kPaperConfig)));
  const double elapsed = seconds_since(t0);
  const double ratio = t.circulating_power / t.input_power;
  const bool ok = t.input_power >= 0.330 && t.input_power <= 1.310 && in_band(ratio, 194.0, 1.0) && elapsed < 1.0;
  return {ok, "P_in " + num(t.input_power * 1e3) + " mW, P_circ/P_in " + num(ratio) + ", h " + num(t.focusing_h)};
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  mc::SynthesisConfig cfg;
  cfg.sample_rate_hz = 4e9;
  cfg.n_samples = std::size_t{1} << 22;
  mc::EmpiricalOptions opt;
  opt.lower_hz = 1e6;
  opt.upper_hz = 1480e6;
  opt.bin_width_hz = 10e6;

  std::size_t bins = 0, within = 0, configs = 0;
  double worst_fraction = 1.0, worst_z = 0.0;
  std::uint64_t seed = 100;
  for (double x : {0.0, 0.3, 0.6768}) {
    for (double eta : {1.0, 0.59}) {
      for (double gain : {1.0, std::numbers::sqrt2}) {
        for (bool dark : {false, true}) {
          ExperimentModel m;
          m.entangler.source_a = {1.13e9, x, 1.0};
          m.entangler.source_b = {1.13e9, x, 1.0};
          m.detection.total_efficiency = eta;
          m.detection.gain_ratio = gain;
          if (dark) {
            m.detection.clearance_a = Curve::constant(13.0);
            m.detection.clearance_b = Curve::constant(13.0);
          }
          cfg.seed = seed++;
          const auto run = mc::run_oracle(m, cfg, opt);
          bins += run.comparison.bins;
          within += run.comparison.within;
          worst_fraction = std::min(worst_fraction, run.comparison.fraction());
          worst_z = std::max(worst_z, run.comparison.max_abs_z);
          ++configs;
        }
      }
    }
  }
  const double fraction = double(within) / double(bins);
  return {configs == 24 && fraction >= 0.99,
          std::to_string(within) + "/" + std::to_string(bins) + " bins within 3 SE (" + num(100.0 * fraction) +
              "%), worst config " + num(100.0 * worst_fraction) + "%, max |z| " + num(worst_z) + ", " +
              num(seconds_since(t0), 3) + " s"};
}

Outcome criteria_identities() {
  const Eigen::Matrix4d vac = Eigen::Matrix4d::Identity();
  bool ok = duan_value(vac) == 4.0 && reid_epr_product(vac) == 1.0;
  ok = ok && std::abs(tms_db(2.0) - 3.01) < 5e-3;

  double worst = 0.0;
  for (double x : {0.1, 0.5, 0.6768, 0.95}) {
    for (double phase : {0.0, 0.7, std::numbers::pi / 2}) {
      EntanglerConfig<double> e;
      e.source_a = {1.13e9, x, 1.0};
      e.source_b = {1.13e9, x * 0.8, 1.0};
      e.relative_phase = phase;
      const auto m = entangle_at(e, 250e6);
      for (double eta : {0.0, 0.2, 0.59, 0.9, 1.0}) {
        worst = std::max(worst, std::abs(duan_value(apply_loss(m, eta, eta)) - (eta * duan_value(m) + 4.0 * (1.0 - eta))));
      }
    }
  }
  ok = ok && worst < 1e-12;

  const double vanti = 1e6, vsq = 1.0 / vanti;
  const auto state = entangle_single(vsq, vanti, vsq, vanti, std::numbers::pi / 2, 0.5);
  auto reid_minus_one = [&](double eta) { return reid_epr_product(apply_loss(state, eta, eta)) - 1.0; };
  double lo = 0.01, hi = 0.99;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (reid_minus_one(mid) > 0.0 ? lo : hi) = mid;
  }
  const double crossing = 0.5 * (lo + hi);
  ok = ok && std::abs(crossing - 0.5) <= 1e-3;
  return {ok, "vacuum D = " + num(duan_value(vac)) + ", E = " + num(reid_epr_product(vac)) + ", tms(2) = " +
                  num(tms_db(2.0), 5) + " dB, loss law err " + num(worst, 3) + ", Reid crossing eta = " +
                  num(crossing, 6)};
}

Outcome fit_round_trip() {
  auto cfg = config::load(kPaperConfig);
  cfg.detection.gain_ratio = 1.2;
  cfg.synth.sigma_db = 0.056;
  const ExperimentModel truth = config::build_model(cfg);
  const SweepConfig sw = config::build_sweep(cfg);
  const TraceSet data = noisy_trace(sweep(truth, sw), 0.056, cfg.seed, {});

  auto start = cfg;
  start.detection.gain_ratio = 1.0;
  const auto problem = config::build_fit_problem(start, data);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = fit::fit(problem);
  const double elapsed = seconds_since(t0);

  const std::map<fit::Parameter, double> expected{{fit::Parameter::kEtaTotal, truth.detection.efficiency()},
                                                  {fit::Parameter::kGammaHwhm, truth.entangler.source_a.gamma_hwhm},
                                                  {fit::Parameter::kGainRatio, 1.2}};
  bool ok = res.converged && elapsed < 10.0 && data.size() == 740 && res.free.size() == expected.size();
  std::string detail;
  for (const auto& p : res.free) {
    const double v = *res.value(p.id), t = expected.at(p.id);
    const double rel = std::abs(v / t - 1.0);
    ok = ok && rel < 0.02;
    detail += fit::to_string(p.id) + " " + num(v, 6) + " (" + num(100.0 * rel, 2) + "%), ";
  }
  return {ok, detail + num(elapsed, 3) + " s"};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return files;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "cvent_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);

  auto j = nlohmann::json::parse(io::read_file(kPaperConfig));
  j["montecarlo"] = {{"n_samples", 1 << 18}, {"segment_length", 1024}, {"batches", 32}, {"bin_width_mhz", 40},
                     {"dump_raw", true}};
  const fs::path cfg_path = root / "config.json";
  io::write_file_atomic(cfg_path, j.dump(2));

  const std::vector<std::string> commands{"cavity", "threshold", "spectrum", "synth", "fit"};
  std::size_t compared = 0;
  std::vector<std::string> mismatched;
  for (const char* format : {"csv", "json"}) {
    std::array<std::map<std::string, std::string>, 2> trees;
    for (int run = 0; run < 2; ++run) {
      const fs::path out = root / (std::string(format) + std::to_string(run));
      for (const auto& cmd : commands) {
        std::vector<std::string> args{"cvent", cmd, "--config", cfg_path.string(), "--out", out.string(),
                                      "--format", format, "--seed", "7"};
        if (cmd == "fit") {
          args.push_back("--data");
          args.push_back((out / "synthetic.csv").string());
        }
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream sink;
        const int code = cli::run(int(argv.size()), argv.data(), sink, sink);
        if (code != 0) return {false, cmd + " exited with " + std::to_string(code) + ": " + sink.str()};
      }
      trees[std::size_t(run)] = read_tree(out);
    }
    if (trees[0].size() != trees[1].size()) mismatched.push_back(std::string(format) + ": file sets differ");
    for (const auto& [name, bytes] : trees[0]) {
      ++compared;
      const auto it = trees[1].find(name);
      if (it == trees[1].end() || it->second != bytes) mismatched.push_back(name);
    }
  }
  fs::remove_all(root);
  std::string detail = std::to_string(compared) + " files compared";
  for (const auto& m : mismatched) detail += ", differs: " + m;
  return {mismatched.empty() && compared > 0, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 cavity reproduction", cavity_reproduction},
      {"2 duan minimum", duan_minimum},
      {"3 high-frequency band", high_frequency_band},
      {"4 threshold consistency", threshold_consistency},
      {"5 oracle equivalence", oracle_equivalence},
      {"6 criteria identities", criteria_identities},
      {"7 fit round trip", fit_round_trip},
      {"8 determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
