#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cvent {

/// Piecewise-linear curve in (log frequency, dB). A constant curve is
/// defined at every frequency; a tabulated curve only between its first and
/// last knot.
class Curve {
 public:
  struct Knot {
    double frequency_hz;
    double value_db;
    bool operator==(const Knot&) const = default;
  };

  Curve() = default;
  explicit Curve(std::vector<Knot> knots);
  static Curve constant(double value_db);

  bool is_constant() const { return knots_.size() == 1; }
  bool covers(double frequency_hz) const;

  /// Throws InvalidArgument naming the frequency when outside the table.
  double value_db(double frequency_hz) const;
  /// Holds the end values outside the table.
  double value_db_clamped(double frequency_hz) const;

  const std::vector<Knot>& knots() const { return knots_; }
  bool operator==(const Curve&) const = default;

  /// Reads `frequency_hz,value_db` rows; a header row is skipped.
  static Curve from_csv(std::istream& in, const std::string& source_name = "curve");
  static Curve from_csv_file(const std::string& path);

 private:
  double interpolate(double frequency_hz) const;
  std::vector<Knot> knots_{{1.0, 0.0}};
};

}  // namespace cvent
