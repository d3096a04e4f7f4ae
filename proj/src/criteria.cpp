#include "cvent/criteria.hpp"

#include <algorithm>
#include <limits>

namespace cvent {

CriteriaSpectrum make_criteria(const Grid& grid, std::vector<double> duan, std::vector<double> reid) {
  detail::require(duan.size() == grid.size(), "Duan spectrum length must match the grid");
  if (reid.empty()) reid.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  detail::require(reid.size() == grid.size(), "Reid spectrum length must match the grid");
  CriteriaSpectrum out{grid, std::move(duan), {}, std::move(reid)};
  out.tms_db.reserve(out.duan.size());
  for (double d : out.duan) out.tms_db.push_back(tms_db(d));
  return out;
}

CriteriaSpectrum criteria_from_covariance(const CovarianceSpectrum& cov) {
  std::vector<double> duan;
  std::vector<double> reid;
  duan.reserve(cov.size());
  reid.reserve(cov.size());
  for (const auto& m : cov.matrices) {
    duan.push_back(duan_value(m));
    reid.push_back(reid_epr_product(m));
  }
  return make_criteria(cov.grid, std::move(duan), std::move(reid));
}

std::vector<FrequencyBand> bands_below(const Grid& grid, const std::vector<double>& values, double threshold) {
  detail::require(values.size() == grid.size(), "spectrum length must match the grid");
  std::vector<FrequencyBand> bands;
  auto crossing = [&](std::size_t i) {
    // threshold crossing between points i and i+1
    const double t = (threshold - values[i]) / (values[i + 1] - values[i]);
    return grid[i] + t * (grid[i + 1] - grid[i]);
  };
  bool open = values[0] < threshold;
  double start = grid[0];
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const bool below_now = values[i] < threshold;
    const bool below_next = values[i + 1] < threshold;
    if (!below_now && below_next) {
      start = crossing(i);
      open = true;
    } else if (below_now && !below_next) {
      bands.push_back({start, crossing(i)});
      open = false;
    }
  }
  if (open) bands.push_back({start, grid.back()});
  return bands;
}

namespace {

std::optional<FrequencyBand> widest(const std::vector<FrequencyBand>& bands) {
  if (bands.empty()) return std::nullopt;
  return *std::max_element(bands.begin(), bands.end(),
                           [](const FrequencyBand& a, const FrequencyBand& b) { return a.width() < b.width(); });
}

}  // namespace

CriteriaSummary classify(const CriteriaSpectrum& criteria) {
  detail::require(!criteria.duan.empty(), "cannot classify an empty spectrum");
  CriteriaSummary s;
  s.entangled_bands = bands_below(criteria.grid, criteria.duan, kDuanThreshold);
  s.epr_bands = bands_below(criteria.grid, criteria.duan, kEprDuanThreshold);
  s.entangled_band = widest(s.entangled_bands);
  s.epr_band = widest(s.epr_bands);
  const auto it = std::min_element(criteria.duan.begin(), criteria.duan.end());
  s.min_duan = *it;
  s.min_duan_frequency_hz = criteria.grid[static_cast<std::size_t>(it - criteria.duan.begin())];
  return s;
}

}  // namespace cvent
