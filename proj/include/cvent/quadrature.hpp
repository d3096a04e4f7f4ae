#pragma once

// Shared vocabulary: frequency grids, vacuum-normalized quadrature variances,
// two-mode covariance spectra and decibel conversions.
//
// Convention: every quadrature of the vacuum has variance 1, so the vacuum
// covariance of two modes is the 4x4 identity in the mode order
// (X_A, Y_A, X_B, Y_B) and the Gaussian uncertainty bound reads nu >= 1 for
// both symplectic eigenvalues.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cvent/error.hpp"

namespace cvent {

/// Index of each quadrature in a two-mode covariance matrix.
enum Quadrature : Eigen::Index { kXA = 0, kYA = 1, kXB = 2, kYB = 3 };

template <typename Scalar>
using Covariance4 = Eigen::Matrix<Scalar, 4, 4>;

/// Ordered sideband frequencies in Hz.
template <typename Scalar = double>
class FrequencyGrid {
 public:
  FrequencyGrid() = default;

  explicit FrequencyGrid(std::vector<Scalar> points) : points_(std::move(points)) {
    detail::require(points_.size() >= 2, "frequency grid needs at least 2 points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const Scalar f = points_[i];
      detail::require(std::isfinite(static_cast<double>(f)) && f > Scalar(0),
                      "frequency grid entries must be finite and positive (index " +
                          std::to_string(i) + ")");
      if (i > 0) {
        detail::require(f > points_[i - 1], "frequency grid must be strictly increasing (index " +
                                                 std::to_string(i) + ")");
      }
    }
  }

  /// Evenly spaced grid, endpoints included.
  static FrequencyGrid linear(Scalar start, Scalar stop, std::size_t count) {
    detail::require(count >= 2, "frequency grid needs at least 2 points");
    std::vector<Scalar> pts(count);
    const Scalar step = (stop - start) / Scalar(count - 1);
    for (std::size_t i = 0; i < count; ++i) pts[i] = start + step * Scalar(i);
    pts.back() = stop;
    return FrequencyGrid(std::move(pts));
  }

  std::size_t size() const { return points_.size(); }
  Scalar operator[](std::size_t i) const { return points_[i]; }
  Scalar front() const { return points_.front(); }
  Scalar back() const { return points_.back(); }
  const std::vector<Scalar>& points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  bool operator==(const FrequencyGrid&) const = default;

 private:
  std::vector<Scalar> points_;
};

/// Quadrature variance in vacuum units (vacuum = 1). Zero is unphysical.
template <typename Scalar = double>
class QuadratureVariance {
 public:
  explicit QuadratureVariance(Scalar value) : value_(value) {
    detail::require(value > Scalar(0) && std::isfinite(static_cast<double>(value)),
                    "quadrature variance must be positive and finite");
  }
  Scalar value() const { return value_; }
  operator Scalar() const { return value_; }

 private:
  Scalar value_;
};

template <typename Scalar = double>
struct TwoModeCovarianceSpectrum {
  FrequencyGrid<Scalar> grid;
  std::vector<Covariance4<Scalar>, Eigen::aligned_allocator<Covariance4<Scalar>>> matrices;

  std::size_t size() const { return matrices.size(); }
};

// ---------------------------------------------------------------------------
// Decibels

template <typename Scalar>
Scalar db_from_ratio(Scalar ratio) {
  detail::require(ratio > Scalar(0), "decibel conversion needs a positive power ratio");
  using std::log10;
  return Scalar(10) * log10(ratio);
}

template <typename Scalar>
Scalar ratio_from_db(Scalar db) {
  using std::pow;
  return pow(Scalar(10), db / Scalar(10));
}

// ---------------------------------------------------------------------------
// Symplectic structure

template <typename Scalar>
Covariance4<Scalar> symplectic_form() {
  Covariance4<Scalar> omega = Covariance4<Scalar>::Zero();
  omega(0, 1) = omega(2, 3) = Scalar(1);
  omega(1, 0) = omega(3, 2) = Scalar(-1);
  return omega;
}

/// Symplectic eigenvalues nu_1 <= nu_2, from the spectrum of Omega * cov,
/// whose eigenvalues come in pairs +-i*nu.
template <typename Derived>
std::array<typename Derived::Scalar, 2> symplectic_eigenvalues(const Eigen::MatrixBase<Derived>& cov) {
  using Scalar = typename Derived::Scalar;
  const Covariance4<Scalar> m = symplectic_form<Scalar>() * cov;
  Eigen::EigenSolver<Covariance4<Scalar>> solver(m, false);
  std::array<Scalar, 4> nu{};
  for (int i = 0; i < 4; ++i) nu[i] = std::abs(solver.eigenvalues()[i].imag());
  std::sort(nu.begin(), nu.end());
  // Each value appears twice; averaging pairs damps round-off.
  return {(nu[0] + nu[1]) / Scalar(2), (nu[2] + nu[3]) / Scalar(2)};
}

/// Partial transposition of mode B (Y_B -> -Y_B). An involution.
template <typename Derived>
Covariance4<typename Derived::Scalar> partial_transpose(const Eigen::MatrixBase<Derived>& cov) {
  using Scalar = typename Derived::Scalar;
  Eigen::DiagonalMatrix<Scalar, 4> flip(Scalar(1), Scalar(1), Scalar(1), Scalar(-1));
  return flip * cov * flip;
}

// ---------------------------------------------------------------------------
// Construction and validation

template <typename Scalar>
TwoModeCovarianceSpectrum<Scalar> vacuum_covariance(const FrequencyGrid<Scalar>& grid) {
  TwoModeCovarianceSpectrum<Scalar> out{grid, {}};
  out.matrices.assign(grid.size(), Covariance4<Scalar>::Identity());
  return out;
}

struct CovarianceViolation {
  enum class Kind { kNotSymmetric, kNotPositiveDefinite, kUncertaintyBound, kNonFinite };
  std::size_t index = 0;
  double frequency_hz = 0.0;
  Kind kind = Kind::kNonFinite;
  double value = 0.0;  ///< offending asymmetry, eigenvalue or symplectic eigenvalue
};

std::string to_string(CovarianceViolation::Kind kind);

struct ValidationReport {
  std::vector<CovarianceViolation> violations;
  bool ok() const { return violations.empty(); }
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kUncertaintyTolerance = 1e-9;

/// Checks one matrix; appends any failures to `report`.
template <typename Derived>
void validate_matrix(const Eigen::MatrixBase<Derived>& cov, std::size_t index, double frequency_hz,
                     ValidationReport& report) {
  using Scalar = typename Derived::Scalar;
  auto add = [&](CovarianceViolation::Kind kind, double value) {
    report.violations.push_back({index, frequency_hz, kind, value});
  };
  if (!cov.allFinite()) {
    add(CovarianceViolation::Kind::kNonFinite, 0.0);
    return;
  }
  const Scalar scale = std::max(cov.cwiseAbs().maxCoeff(), Scalar(1e-300));
  const Scalar asym = (cov - cov.transpose()).cwiseAbs().maxCoeff() / scale;
  if (asym > Scalar(kSymmetryTolerance)) add(CovarianceViolation::Kind::kNotSymmetric, double(asym));

  const Covariance4<Scalar> sym = (cov + cov.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Covariance4<Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  const Scalar lowest = eig.eigenvalues().minCoeff();
  if (!(lowest > Scalar(0))) {
    add(CovarianceViolation::Kind::kNotPositiveDefinite, double(lowest));
    return;
  }
  const auto nu = symplectic_eigenvalues(sym);
  if (nu[0] < Scalar(1.0 - kUncertaintyTolerance)) {
    add(CovarianceViolation::Kind::kUncertaintyBound, double(nu[0]));
  }
}

template <typename Scalar>
ValidationReport validate_covariance(const TwoModeCovarianceSpectrum<Scalar>& cov) {
  ValidationReport report;
  for (std::size_t i = 0; i < cov.matrices.size(); ++i) {
    const double f = i < cov.grid.size() ? double(cov.grid[i]) : 0.0;
    validate_matrix(cov.matrices[i], i, f, report);
  }
  return report;
}

using Grid = FrequencyGrid<double>;
using CovarianceSpectrum = TwoModeCovarianceSpectrum<double>;

}  // namespace cvent
