#include "cvent/curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <locale>
#include <sstream>

#include "cvent/error.hpp"

namespace cvent {

namespace {

std::string format_hz(double f) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << f << " Hz";
  return os.str();
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return false;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

}  // namespace

Curve::Curve(std::vector<Knot> knots) : knots_(std::move(knots)) {
  detail::require(!knots_.empty(), "curve needs at least one knot");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    detail::require(knots_[i].frequency_hz > 0 && std::isfinite(knots_[i].frequency_hz),
                    "curve frequencies must be positive");
    detail::require(std::isfinite(knots_[i].value_db), "curve values must be finite");
    if (i > 0) {
      detail::require(knots_[i].frequency_hz > knots_[i - 1].frequency_hz,
                      "curve frequencies must be strictly increasing");
    }
  }
}

Curve Curve::constant(double value_db) {
  detail::require(std::isfinite(value_db), "curve values must be finite");
  Curve c;
  c.knots_ = {{1.0, value_db}};
  return c;
}

bool Curve::covers(double f) const {
  if (is_constant()) return true;
  return f >= knots_.front().frequency_hz && f <= knots_.back().frequency_hz;
}

double Curve::interpolate(double f) const {
  auto upper = std::upper_bound(knots_.begin(), knots_.end(), f,
                                [](double v, const Knot& k) { return v < k.frequency_hz; });
  if (upper == knots_.begin()) return knots_.front().value_db;
  if (upper == knots_.end()) return knots_.back().value_db;
  const Knot& hi = *upper;
  const Knot& lo = *(upper - 1);
  const double t = (std::log(f) - std::log(lo.frequency_hz)) /
                   (std::log(hi.frequency_hz) - std::log(lo.frequency_hz));
  return lo.value_db + t * (hi.value_db - lo.value_db);
}

double Curve::value_db(double f) const {
  if (is_constant()) return knots_.front().value_db;
  if (!covers(f)) {
    throw InvalidArgument("curve does not cover " + format_hz(f) + " (defined on " +
                          format_hz(knots_.front().frequency_hz) + " .. " +
                          format_hz(knots_.back().frequency_hz) + ")");
  }
  return interpolate(f);
}

double Curve::value_db_clamped(double f) const {
  if (is_constant()) return knots_.front().value_db;
  return interpolate(f);
}

Curve Curve::from_csv(std::istream& in, const std::string& source_name) {
  std::vector<Knot> knots;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InvalidArgument(source_name + ":" + std::to_string(line_no) + ": expected two columns");
    }
    double f = 0.0;
    double v = 0.0;
    const bool ok = parse_double(std::string_view(line).substr(0, comma), f) &&
                    parse_double(std::string_view(line).substr(comma + 1), v);
    if (!ok) {
      if (knots.empty() && line_no == 1) continue;  // header
      throw InvalidArgument(source_name + ":" + std::to_string(line_no) + ": malformed number");
    }
    knots.push_back({f, v});
  }
  if (knots.empty()) throw InvalidArgument(source_name + ": no data rows");
  try {
    return Curve(std::move(knots));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(source_name + ": " + e.what());
  }
}

Curve Curve::from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open curve file '" + path + "'");
  return from_csv(in, path);
}

}  // namespace cvent
