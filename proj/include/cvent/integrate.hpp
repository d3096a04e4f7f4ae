#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature for smooth integrands,
// real or complex valued.

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <vector>

#include "cvent/error.hpp"

namespace cvent {

template <typename Value>
struct QuadratureResult {
  Value value{};
  double error_estimate = 0.0;
  int evaluations = 0;
};

namespace detail {

inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Value>
struct Segment {
  double a, b;
  Value value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename Value, typename F>
Segment<Value> gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const Value fc = f(center);
  Value kronrod = fc * kKronrodWeights[7];
  Value gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const Value sum = f(center - dx) + f(center + dx);
    kronrod += sum * kKronrodWeights[i];
    if (i % 2 == 1) gauss += sum * kGaussWeights[i / 2];
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over [a, b] until the summed error estimate is below
/// max(abs_tol, rel_tol * |I|).
template <typename Value, typename F>
QuadratureResult<Value> integrate_adaptive(F f, double a, double b, double rel_tol = 1e-10,
                                           double abs_tol = 0.0, int max_segments = 2000) {
  detail::require(std::isfinite(a) && std::isfinite(b), "integration bounds must be finite");
  std::priority_queue<detail::Segment<Value>> heap;
  heap.push(detail::gauss_kronrod_15<Value>(f, a, b));
  int evaluations = 15;
  Value total = heap.top().value;
  double error = heap.top().error;
  while (error > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (static_cast<int>(heap.size()) >= max_segments) {
      throw NumericalError("adaptive quadrature did not reach the requested tolerance");
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gauss_kronrod_15<Value>(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15<Value>(f, mid, worst.b);
    evaluations += 30;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed accumulated cancellation error from the running updates.
  Value sum{};
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {sum, err, evaluations};
}

}  // namespace cvent
