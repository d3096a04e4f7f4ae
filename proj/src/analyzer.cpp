#include "cvent/analyzer.hpp"

#include <cmath>
#include <locale>
#include <numbers>
#include <sstream>

#include "cvent/io.hpp"

namespace cvent {

void SweepConfig::validate() const {
  detail::require(grid.size() >= 2, "sweep needs at least 2 points");
  detail::require(vbw_hz > 0.0 && rbw_hz > vbw_hz, "sweep needs rbw > vbw > 0");
  detail::require(averages >= 1, "sweep needs at least one average");
  detail::require(sweep_time_s > 0.0, "sweep time must be positive");
  for (const auto& b : band_splits) {
    detail::require(b.lower_hz < b.upper_hz, "band split range must have lower < upper");
    detail::require(b.gain_a > 0.0 && b.gain_b > 0.0, "band split gains must be positive");
  }
}

DetectorGains band_gains_at(const std::vector<BandSplit>& band_splits, double f) {
  if (band_splits.empty()) return {};
  for (const auto& b : band_splits) {
    if (b.contains(f)) return {b.gain_a, b.gain_b};
  }
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "band splits do not cover " << f << " Hz";
  throw InvalidArgument(os.str());
}

ModelPoint evaluate_point(const ExperimentModel& model, double f, const DetectorGains& band_gains) {
  const auto& chain = model.detection;
  ModelPoint p;
  const double eta = chain.efficiency();
  p.optical = apply_loss(entangle_at(model.entangler, f), eta, eta);

  const double g_a = chain.gain_ratio * band_gains.a * amplitude_from_db(chain.gain_a_db.value_db(f));
  const double g_b = band_gains.b * amplitude_from_db(chain.gain_b_db.value_db(f));
  const DarkNoise dark = dark_noise_at(chain, f);
  p.dark = combined_dark(dark, g_a, g_b);

  const JointVariances raw = joint_variances(p.optical, g_a, g_b);
  p.joint = {with_dark_noise(raw.xsum, p.dark, chain.dark_noise_subtracted),
             with_dark_noise(raw.ydiff, p.dark, chain.dark_noise_subtracted)};
  p.duan = duan_value(p.joint);
  p.reid = chain.dark_noise_subtracted ? reid_epr_product(p.optical)
                                       : reid_epr_product(apply_detector_dark_noise(p.optical, dark));
  return p;
}

TraceSet sweep(const ExperimentModel& model, const SweepConfig& cfg) {
  model.validate();
  cfg.validate();
  TraceSet t;
  t.grid = cfg.grid;
  const std::size_t n = cfg.grid.size();
  for (auto* v : {&t.var_xsum_db, &t.var_ydiff_db, &t.duan, &t.tms_db, &t.reid_product, &t.vacuum_db, &t.dark_db}) {
    v->resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cfg.grid[i];
    const ModelPoint p = evaluate_point(model, f, cfg.band_gains(f));
    t.var_xsum_db[i] = db_from_ratio(p.joint.xsum);
    t.var_ydiff_db[i] = db_from_ratio(p.joint.ydiff);
    t.duan[i] = p.duan;
    t.tms_db[i] = tms_db(p.duan);
    t.reid_product[i] = p.reid;
    t.vacuum_db[i] = 0.0;
    if (p.dark > 0.0) {
      t.dark_db[i] = model.detection.dark_noise_subtracted ? db_from_ratio(p.dark)
                                                           : db_from_ratio(p.dark / (1.0 + p.dark));
    } else {
      t.dark_db[i] = -INFINITY;
    }
  }
  return t;
}

double estimator_sigma_db(double rbw_hz, double vbw_hz, int averages) {
  detail::require(vbw_hz > 0.0 && rbw_hz > vbw_hz, "estimator statistics need rbw > vbw > 0");
  detail::require(averages >= 1, "averages must be >= 1");
  const double samples = rbw_hz / vbw_hz * static_cast<double>(averages);
  return 10.0 / std::numbers::ln10 / std::sqrt(samples);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_open(std::uint64_t bits) {
  // (0, 1): 53 random bits, offset by half an ulp
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  const std::uint64_t a = splitmix64(key ^ (2 * counter));
  const std::uint64_t b = splitmix64(key ^ (2 * counter + 1));
  const double u1 = unit_open(a);
  const double u2 = unit_open(b);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

TraceSet noisy_trace(const TraceSet& clean, double sigma_db, std::uint64_t seed, const std::vector<Spur>& spurs) {
  detail::require(sigma_db >= 0.0, "noise sigma must be non-negative");
  TraceSet t = clean;
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) {
    t.var_xsum_db[i] += sigma_db * counter_normal(seed, 0, i);
    t.var_ydiff_db[i] += sigma_db * counter_normal(seed, 1, i);
  }
  for (const auto& spur : spurs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(t.grid[i] - spur.frequency_hz) < std::abs(t.grid[best] - spur.frequency_hz)) best = i;
    }
    t.var_xsum_db[best] += spur.amplitude_db;
    t.var_ydiff_db[best] += spur.amplitude_db;
  }
  for (std::size_t i = 0; i < n; ++i) {
    t.duan[i] = 2.0 * (ratio_from_db(t.var_xsum_db[i]) + ratio_from_db(t.var_ydiff_db[i]));
    t.tms_db[i] = tms_db(t.duan[i]);
  }
  return t;
}

TraceSet noisy_trace(const TraceSet& clean, const SweepConfig& sweep, std::uint64_t seed,
                     const std::vector<Spur>& spurs) {
  return noisy_trace(clean, estimator_sigma_db(sweep.rbw_hz, sweep.vbw_hz, sweep.averages), seed, spurs);
}

std::string trace_to_csv(const TraceSet& t) {
  std::string out = kTraceCsvHeader;
  out += '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += io::format_double(t.grid[i]);
    for (double v : {t.var_xsum_db[i], t.var_ydiff_db[i], t.duan[i], t.tms_db[i], t.reid_product[i]}) {
      out += ',';
      out += io::format_double(v);
    }
    out += '\n';
  }
  return out;
}

TraceSet trace_from_csv(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(source_name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) {
    throw InvalidArgument(source_name + ":1: expected header '" + std::string(kTraceCsvHeader) + "'");
  }
  std::vector<double> freq;
  TraceSet t;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<double> cols;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      const auto field = std::string_view(line).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        cols.push_back(io::parse_double(field));
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(source_name + ":" + std::to_string(line_no) + ": " + e.what());
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cols.size() != 6) {
      throw InvalidArgument(source_name + ":" + std::to_string(line_no) + ": expected 6 columns");
    }
    freq.push_back(cols[0]);
    t.var_xsum_db.push_back(cols[1]);
    t.var_ydiff_db.push_back(cols[2]);
    t.duan.push_back(cols[3]);
    t.tms_db.push_back(cols[4]);
    t.reid_product.push_back(cols[5]);
  }
  try {
    t.grid = Grid(std::move(freq));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(source_name + ": " + e.what());
  }
  return t;
}

}  // namespace cvent
