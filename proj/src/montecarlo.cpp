#include "cvent/montecarlo.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <algorithm>
#include <complex>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "cvent/io.hpp"

namespace cvent::mc {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix(mix(seed) ^ mix(stream ^ 0xd1b54a32d192ed03ULL)));
}

// Stream ids under one seed.
constexpr std::uint64_t kLossStream = 100;
constexpr std::uint64_t kDarkStream = 200;
constexpr std::uint64_t kVacuumStream = 300;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<double> make_window(Window kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == Window::kHann) {
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(j) / double(n)));
    }
  }
  return w;
}

double dark_variance(const std::optional<Curve>& clearance, double f) {
  if (!clearance) return 0.0;
  return ratio_from_db(-clearance->value_db_clamped(f));
}

void add_scaled(std::vector<double>& dst, const std::vector<double>& src, double scale) {
  Eigen::Map<Eigen::VectorXd>(dst.data(), Eigen::Index(dst.size())) +=
      scale * Eigen::Map<const Eigen::VectorXd>(src.data(), Eigen::Index(src.size()));
}

}  // namespace

void SynthesisConfig::validate(double max_analysis_hz) const {
  detail::require(sample_rate_hz > 0.0, "sample rate must be positive");
  detail::require(sample_rate_hz > 2.0 * max_analysis_hz, "sample rate must exceed twice the analysis band");
  detail::require(is_power_of_two(n_samples), "sample count must be a power of two");
  detail::require(segment_length >= 8 && segment_length % 4 == 0, "segment length must be a multiple of 4");
  detail::require(n_samples >= 4 * segment_length, "need at least 4 segment lengths of samples");
  detail::require(overlap_fraction >= 0.0 && overlap_fraction <= 0.9, "overlap must be in [0, 0.9]");
  detail::require(batches >= 2, "need at least 2 batches for standard errors");
}

QuadratureTrace synthesize_colored_noise(const PsdFunction& target_psd, const SynthesisConfig& cfg,
                                         std::uint64_t stream, std::string stage) {
  cfg.validate();
  const std::size_t n = cfg.n_samples;
  const std::size_t half = n / 2;
  std::vector<std::complex<double>> spectrum(half + 1);
  auto engine = stream_engine(cfg.seed, stream);
  std::normal_distribution<double> normal;
  const double df = cfg.sample_rate_hz / double(n);
  for (std::size_t k = 0; k <= half; ++k) {
    const double v = target_psd(double(k) * df);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("target PSD must be strictly positive (bin " + std::to_string(k) + ")");
    }
    if (k == 0 || k == half) {
      spectrum[k] = {std::sqrt(v * double(n)) * normal(engine), 0.0};
    } else {
      const double amp = std::sqrt(v * double(n) / 2.0);
      const double re = normal(engine);
      const double im = normal(engine);
      spectrum[k] = {amp * re, amp * im};
    }
  }
  QuadratureTrace out{std::vector<double>(n), std::move(stage)};
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  fft.inv(out.samples.data(), spectrum.data(), Eigen::Index(n));
  return out;
}

QuadratureTrace synthesize_white_noise(const SynthesisConfig& cfg, std::uint64_t stream, std::string stage) {
  cfg.validate();
  auto engine = stream_engine(cfg.seed, stream);
  std::normal_distribution<double> normal;
  QuadratureTrace out{std::vector<double>(cfg.n_samples), std::move(stage)};
  for (double& v : out.samples) v = normal(engine);
  return out;
}

SourceTraces synthesize_source(const OpaSpectrumModel<double>& model, const SynthesisConfig& cfg,
                               std::uint64_t stream_base) {
  model.validate();
  return {synthesize_colored_noise([&](double f) { return squeezed_variance(model, f); }, cfg, stream_base, "source.x"),
          synthesize_colored_noise([&](double f) { return anti_squeezed_variance(model, f); }, cfg, stream_base + 1,
                                   "source.y")};
}

TimeDomainChain chain_from_model(const ExperimentModel& model) {
  const auto& det = model.detection;
  detail::require(det.gain_a_db.is_constant() && det.gain_b_db.is_constant(),
                  "time-domain chain needs frequency-independent detector gains");
  TimeDomainChain chain;
  chain.relative_phase = model.entangler.relative_phase;
  chain.beam_splitter_reflectivity = model.entangler.beam_splitter_reflectivity;
  chain.eta_a = chain.eta_b = det.efficiency();
  chain.gain_a = det.gain_ratio * amplitude_from_db(det.gain_a_db.value_db(1.0));
  chain.gain_b = amplitude_from_db(det.gain_b_db.value_db(1.0));
  auto shifted = [&](const std::optional<Curve>& c) -> std::optional<Curve> {
    if (!c) return std::nullopt;
    auto knots = c->knots();
    for (auto& k : knots) k.value_db += det.clearance_offset_db;
    return c->is_constant() ? Curve::constant(knots.front().value_db) : Curve(std::move(knots));
  };
  if (!det.dark_noise_subtracted) {
    chain.clearance_a = shifted(det.clearance_a);
    chain.clearance_b = shifted(det.clearance_b);
  }
  return chain;
}

DetectorTraces simulate_chain(SourceTraces s1, SourceTraces s2, const TimeDomainChain& chain,
                              const SynthesisConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_samples;
  for (const auto* t : {&s1.x, &s1.y, &s2.x, &s2.y}) {
    detail::require(t->size() == n, "source traces must match the synthesis sample count");
  }
  detail::require(chain.eta_a >= 0.0 && chain.eta_a <= 1.0 && chain.eta_b >= 0.0 && chain.eta_b <= 1.0,
                  "efficiency must be in [0, 1]");
  detail::require(chain.gain_a > 0.0 && chain.gain_b > 0.0, "detector gains must be positive");
  const double R = chain.beam_splitter_reflectivity;
  detail::require(R > 0.0 && R < 1.0, "beam splitter reflectivity must be in (0, 1)");

  const double c = std::cos(chain.relative_phase);
  const double s = std::sin(chain.relative_phase);
  const double t = std::sqrt(1.0 - R);
  const double r = std::sqrt(R);

  // In place: s1.x -> X_A, s2.x -> X_B, s1.y -> Y_A, s2.y -> Y_B.
  auto& x1 = s1.x.samples;
  auto& y1 = s1.y.samples;
  auto& x2 = s2.x.samples;
  auto& y2 = s2.y.samples;
  for (std::size_t i = 0; i < n; ++i) {
    const double x2r = c * x2[i] - s * y2[i];
    const double y2r = s * x2[i] + c * y2[i];
    const double xa = t * x1[i] + r * x2r;
    const double xb = r * x1[i] - t * x2r;
    const double ya = t * y1[i] + r * y2r;
    const double yb = r * y1[i] - t * y2r;
    x1[i] = xa;
    x2[i] = xb;
    y1[i] = ya;
    y2[i] = yb;
  }

  DetectorTraces out{std::move(s1.x), std::move(s2.x), std::move(s1.y), std::move(s2.y), {}, {}};

  auto lose = [&](QuadratureTrace& q, double eta, std::uint64_t stream) {
    if (eta == 1.0) return;
    auto engine = stream_engine(cfg.seed, stream);
    std::normal_distribution<double> normal;
    const double keep = std::sqrt(eta);
    const double mixin = std::sqrt(1.0 - eta);
    for (double& v : q.samples) v = keep * v + mixin * normal(engine);
  };
  lose(out.x_a, chain.eta_a, kLossStream + 0);
  lose(out.y_a, chain.eta_a, kLossStream + 1);
  lose(out.x_b, chain.eta_b, kLossStream + 2);
  lose(out.y_b, chain.eta_b, kLossStream + 3);

  out.vac_a = synthesize_white_noise(cfg, kVacuumStream + 0, "vacuum.a");
  out.vac_b = synthesize_white_noise(cfg, kVacuumStream + 1, "vacuum.b");

  struct Detector {
    QuadratureTrace* trace;
    double gain;
    const std::optional<Curve>* clearance;
  };
  const Detector detectors[] = {{&out.x_a, chain.gain_a, &chain.clearance_a}, {&out.x_b, chain.gain_b, &chain.clearance_b},
                                {&out.y_a, chain.gain_a, &chain.clearance_a}, {&out.y_b, chain.gain_b, &chain.clearance_b},
                                {&out.vac_a, chain.gain_a, &chain.clearance_a}, {&out.vac_b, chain.gain_b, &chain.clearance_b}};
  std::uint64_t dark_stream = kDarkStream;
  for (const auto& d : detectors) {
    Eigen::Map<Eigen::VectorXd>(d.trace->samples.data(), Eigen::Index(n)) *= d.gain;
    if (d.clearance->has_value()) {
      const auto& curve = *d.clearance;
      const QuadratureTrace dark = synthesize_colored_noise(
          [&](double f) { return dark_variance(curve, f); }, cfg, dark_stream, "dark");
      add_scaled(d.trace->samples, dark.samples, d.gain);
    }
    ++dark_stream;
    d.trace->stage = "detector";
  }
  return out;
}

WelchEstimate welch_psd(std::span<const double> samples, const SynthesisConfig& cfg) {
  const std::size_t seg = cfg.segment_length;
  detail::require(seg >= 8 && seg % 4 == 0, "segment length must be a multiple of 4");
  detail::require(samples.size() >= seg, "trace is shorter than one Welch segment");
  detail::require(cfg.overlap_fraction >= 0.0 && cfg.overlap_fraction <= 0.9, "overlap must be in [0, 0.9]");
  const std::size_t step = std::max<std::size_t>(1, std::size_t(std::llround(double(seg) * (1.0 - cfg.overlap_fraction))));
  const std::size_t segments = (samples.size() - seg) / step + 1;
  const std::size_t batches = std::min(cfg.batches, segments);
  const std::size_t bins = seg / 2 + 1;

  const std::vector<double> window = make_window(cfg.window, seg);
  double window_power = 0.0;
  for (double w : window) window_power += w * w;

  WelchEstimate out;
  out.segments = segments;
  out.frequency_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) out.frequency_hz[k] = double(k) * cfg.sample_rate_hz / double(seg);
  out.batch_psd = Eigen::MatrixXd::Zero(Eigen::Index(bins), Eigen::Index(batches));
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(Eigen::Index(batches));

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buffer(seg);
  std::vector<std::complex<double>> spectrum(bins);
  for (std::size_t k = 0; k < segments; ++k) {
    const double* src = samples.data() + k * step;
    for (std::size_t j = 0; j < seg; ++j) buffer[j] = src[j] * window[j];
    fft.fwd(spectrum.data(), buffer.data(), Eigen::Index(seg));
    const auto b = Eigen::Index(k * batches / segments);
    for (std::size_t i = 0; i < bins; ++i) out.batch_psd(Eigen::Index(i), b) += std::norm(spectrum[i]);
    counts(b) += 1.0;
  }
  out.psd = out.batch_psd.rowwise().sum() / (double(segments) * window_power);
  for (Eigen::Index b = 0; b < out.batch_psd.cols(); ++b) out.batch_psd.col(b) /= counts(b) * window_power;
  return out;
}

CriteriaSpectrum EmpiricalSpectrum::criteria() const {
  return make_criteria(Grid(center_hz), duan, reid);
}

TraceSet EmpiricalSpectrum::as_traces() const {
  TraceSet t;
  t.grid = Grid(center_hz);
  const std::size_t n = center_hz.size();
  t.var_xsum_db.resize(n);
  t.var_ydiff_db.resize(n);
  t.duan = duan;
  t.tms_db.resize(n);
  t.reid_product = reid;
  t.vacuum_db.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    t.var_xsum_db[i] = db_from_ratio(var_xsum[i]);
    t.var_ydiff_db[i] = db_from_ratio(var_ydiff[i]);
    t.tms_db[i] = tms_db(duan[i]);
  }
  return t;
}

EmpiricalSpectrum empirical_duan_spectrum(const DetectorTraces& tr, const SynthesisConfig& cfg,
                                          const EmpiricalOptions& opt) {
  cfg.validate(opt.upper_hz);
  detail::require(opt.lower_hz < opt.upper_hz && opt.bin_width_hz > 0.0, "invalid analysis band");
  const std::size_t n = cfg.n_samples;
  for (const auto* t : {&tr.x_a, &tr.x_b, &tr.y_a, &tr.y_b}) {
    detail::require(t->size() == n, "detector traces must match the synthesis sample count");
  }
  if (tr.vac_a.size() != n || tr.vac_b.size() != n) throw InvalidArgument("missing vacuum calibration traces");

  std::vector<double> combo(n);
  auto combined = [&](const QuadratureTrace& a, const QuadratureTrace& b, double sign) {
    for (std::size_t i = 0; i < n; ++i) combo[i] = a.samples[i] + sign * b.samples[i];
    return welch_psd(std::span<const double>(combo), cfg);
  };
  const WelchEstimate xsum = combined(tr.x_a, tr.x_b, +1.0);
  const WelchEstimate ydiff = combined(tr.y_a, tr.y_b, -1.0);
  const WelchEstimate vsum = combined(tr.vac_a, tr.vac_b, +1.0);
  const WelchEstimate vdiff = combined(tr.vac_a, tr.vac_b, -1.0);

  std::optional<WelchEstimate> xa, xb, ya, yb, va, vb;
  if (opt.with_reid) {
    xa = welch_psd(tr.x_a, cfg);
    xb = welch_psd(tr.x_b, cfg);
    ya = welch_psd(tr.y_a, cfg);
    yb = welch_psd(tr.y_b, cfg);
    va = welch_psd(tr.vac_a, cfg);
    vb = welch_psd(tr.vac_b, cfg);
  }

  EmpiricalSpectrum out;
  out.welch_frequency_hz = xsum.frequency_hz;
  const auto& freq = xsum.frequency_hz;
  const Eigen::Index batches = xsum.batch_psd.cols();

  for (double lo = opt.lower_hz; lo < opt.upper_hz - 1e-9 * opt.bin_width_hz; lo += opt.bin_width_hz) {
    const double hi = std::min(lo + opt.bin_width_hz, opt.upper_hz);
    std::size_t first = freq.size();
    std::size_t last = 0;
    for (std::size_t k = 0; k < freq.size(); ++k) {
      if (freq[k] >= lo && freq[k] < hi) {
        first = std::min(first, k);
        last = k + 1;
      }
    }
    if (first >= last) continue;
    const auto f0 = Eigen::Index(first);
    const auto len = Eigen::Index(last - first);
    auto total = [&](const WelchEstimate& w) { return w.psd.segment(f0, len).sum(); };
    auto batch_total = [&](const WelchEstimate& w, Eigen::Index b) { return w.batch_psd.col(b).segment(f0, len).sum(); };

    const double vx = total(xsum) / total(vsum);
    const double vy = total(ydiff) / total(vdiff);
    Eigen::VectorXd d(batches);
    for (Eigen::Index b = 0; b < batches; ++b) {
      d(b) = 2.0 * (batch_total(xsum, b) / batch_total(vsum, b) + batch_total(ydiff, b) / batch_total(vdiff, b));
    }
    const double mean = d.mean();
    const double var = (d.array() - mean).square().sum() / double(batches - 1);

    double center = 0.0;
    for (std::size_t k = first; k < last; ++k) center += freq[k];
    out.center_hz.push_back(center / double(last - first));
    out.first_bin.push_back(first);
    out.last_bin.push_back(last);
    out.var_xsum.push_back(vx);
    out.var_ydiff.push_back(vy);
    out.duan.push_back(2.0 * (vx + vy));
    out.duan_standard_error.push_back(std::sqrt(var / double(batches)));

    if (opt.with_reid) {
      // per-detector normalization; cross terms from the sum/difference spectra
      const double ca = total(*va), cb = total(*vb);
      const double pxa = total(*xa), pxb = total(*xb), pya = total(*ya), pyb = total(*yb);
      const double cov_x = 0.5 * (total(xsum) - pxa - pxb) / std::sqrt(ca * cb);
      const double cov_y = 0.5 * (pya + pyb - total(ydiff)) / std::sqrt(ca * cb);
      const double vxa = pxa / ca, vxb = pxb / cb, vya = pya / ca, vyb = pyb / cb;
      out.reid.push_back((vxa - cov_x * cov_x / vxb) * (vya - cov_y * cov_y / vyb));
    } else {
      out.reid.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  detail::require(!out.center_hz.empty(), "analysis band contains no Welch bins");
  return out;
}

std::vector<double> analytic_binned_duan(const ExperimentModel& model, const EmpiricalSpectrum& spectrum) {
  std::vector<double> out;
  out.reserve(spectrum.center_hz.size());
  for (std::size_t b = 0; b < spectrum.center_hz.size(); ++b) {
    double sum = 0.0;
    for (std::size_t k = spectrum.first_bin[b]; k < spectrum.last_bin[b]; ++k) {
      sum += evaluate_point(model, spectrum.welch_frequency_hz[k]).duan;
    }
    out.push_back(sum / double(spectrum.last_bin[b] - spectrum.first_bin[b]));
  }
  return out;
}

OracleComparison compare_to_model(const EmpiricalSpectrum& empirical, const std::vector<double>& analytic,
                                  double sigmas) {
  detail::require(analytic.size() == empirical.duan.size(), "analytic spectrum length must match");
  OracleComparison c;
  c.bins = analytic.size();
  for (std::size_t i = 0; i < c.bins; ++i) {
    const double z = std::abs(empirical.duan[i] - analytic[i]) / empirical.duan_standard_error[i];
    c.max_abs_z = std::max(c.max_abs_z, z);
    if (z < sigmas) ++c.within;
  }
  return c;
}

OracleRun run_oracle(const ExperimentModel& model, const SynthesisConfig& cfg, const EmpiricalOptions& options) {
  model.validate();
  cfg.validate(options.upper_hz);
  const TimeDomainChain chain = chain_from_model(model);
  SourceTraces s1 = synthesize_source(model.entangler.source_a, cfg, 0);
  SourceTraces s2 = synthesize_source(model.entangler.source_b, cfg, 2);
  const DetectorTraces det = simulate_chain(std::move(s1), std::move(s2), chain, cfg);
  OracleRun run;
  run.empirical = empirical_duan_spectrum(det, cfg, options);
  run.analytic = analytic_binned_duan(model, run.empirical);
  run.comparison = compare_to_model(run.empirical, run.analytic);
  return run;
}

void write_raw_trace(const std::filesystem::path& path, const QuadratureTrace& trace, const SynthesisConfig& cfg) {
  static_assert(std::numeric_limits<double>::is_iec559, "raw dumps assume IEEE-754 doubles");
  std::string bytes;
  bytes.resize(trace.samples.size() * sizeof(double));
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &trace.samples[i], sizeof bits);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + std::size_t(b)] = char((bits >> (8 * b)) & 0xffu);
  }
  io::write_file_atomic(path, bytes);
  nlohmann::json meta = {{"sample_rate_hz", cfg.sample_rate_hz},
                         {"seed", cfg.seed},
                         {"n_samples", trace.samples.size()},
                         {"stage", trace.stage},
                         {"dtype", "float64-le"}};
  io::write_file_atomic(path.string() + ".json", meta.dump(2) + "\n");
}

}  // namespace cvent::mc
