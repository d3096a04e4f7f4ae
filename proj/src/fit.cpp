#include "cvent/fit.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>
#include <sstream>

namespace cvent::fit {

std::string to_string(Parameter p) {
  switch (p) {
    case Parameter::kEtaTotal:
      return "eta_total";
    case Parameter::kPumpRatioX:
      return "pump_ratio_x";
    case Parameter::kGammaHwhm:
      return "gamma_hwhm_hz";
    case Parameter::kGainRatio:
      return "gain_ratio";
    case Parameter::kClearanceOffsetDb:
      return "clearance_offset_db";
  }
  return "unknown";
}

Parameter parameter_from_string(const std::string& name) {
  for (auto p : {Parameter::kEtaTotal, Parameter::kPumpRatioX, Parameter::kGammaHwhm, Parameter::kGainRatio,
                 Parameter::kClearanceOffsetDb}) {
    if (to_string(p) == name) return p;
  }
  throw InvalidArgument("unknown fit parameter '" + name + "'");
}

FitData FitData::from_traces(const TraceSet& traces, double sigma_db) {
  detail::require(sigma_db > 0.0, "fit sigma must be positive");
  FitData d;
  d.grid = traces.grid;
  d.var_xsum_db = traces.var_xsum_db;
  d.var_ydiff_db = traces.var_ydiff_db;
  d.duan = traces.duan;
  d.sigma_db.assign(traces.size(), sigma_db);
  return d;
}

void FitProblem::validate() const {
  detail::require(!free.empty(), "fit needs at least one free parameter");
  const std::size_t n = data.grid.size();
  detail::require(data.sigma_db.size() == n, "fit sigma must have one entry per point");
  if (target == Target::kQuadratures) {
    detail::require(data.var_xsum_db.size() == n && data.var_ydiff_db.size() == n,
                    "fit data needs both quadrature traces");
  } else {
    detail::require(data.duan.size() == n, "fit data needs a Duan trace");
  }
  for (double s : data.sigma_db) detail::require(s > 0.0 && std::isfinite(s), "fit sigma must be positive");
  for (std::size_t i = 0; i < free.size(); ++i) {
    const auto& p = free[i];
    detail::require(std::isfinite(p.lower) && std::isfinite(p.upper) && p.lower < p.upper,
                    "bounds of '" + to_string(p.id) + "' must be finite with lower < upper");
    if (p.initial) {
      detail::require(*p.initial >= p.lower && *p.initial <= p.upper,
                      "initial value of '" + to_string(p.id) + "' lies outside its bounds");
    }
    for (std::size_t j = 0; j < i; ++j) {
      detail::require(free[j].id != p.id, "fit parameter '" + to_string(p.id) + "' listed twice");
    }
  }
  detail::require(options.starts >= 1, "fit needs at least one start");
  detail::require(unmasked_indices().size() >= 5 * free.size(), "insufficient unmasked points");
}

std::vector<std::size_t> FitProblem::unmasked_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.grid.size(); ++i) {
    const double f = data.grid[i];
    const bool masked = std::any_of(exclusion_windows.begin(), exclusion_windows.end(),
                                    [&](const FrequencyWindow& w) { return w.contains(f); });
    if (!masked) out.push_back(i);
  }
  return out;
}

ExperimentModel apply_parameters(const ExperimentModel& base, const std::vector<FreeParameter>& free,
                                 const Eigen::VectorXd& theta) {
  ExperimentModel m = base;
  for (std::size_t i = 0; i < free.size(); ++i) {
    const double v = theta(Eigen::Index(i));
    switch (free[i].id) {
      case Parameter::kEtaTotal:
        m.detection.total_efficiency = v;
        break;
      case Parameter::kPumpRatioX:
        m.entangler.source_a.pump_ratio_x = v;
        m.entangler.source_b.pump_ratio_x = v;
        break;
      case Parameter::kGammaHwhm:
        m.entangler.source_a.gamma_hwhm = v;
        m.entangler.source_b.gamma_hwhm = v;
        break;
      case Parameter::kGainRatio:
        m.detection.gain_ratio = v;
        break;
      case Parameter::kClearanceOffsetDb:
        m.detection.clearance_offset_db = v;
        break;
    }
  }
  return m;
}

namespace {

struct Prepared {
  std::vector<std::size_t> indices;
  std::size_t rows = 0;
};

Prepared prepare(const FitProblem& problem) {
  Prepared p;
  p.indices = problem.unmasked_indices();
  p.rows = p.indices.size() * (problem.target == Target::kQuadratures ? 2 : 1);
  return p;
}

// Residual of one observation; both values in dB.
double residual(double model_db, double data_db, double sigma_db, Domain domain) {
  if (domain == Domain::kDb) return (model_db - data_db) / sigma_db;
  const double data_lin = ratio_from_db(data_db);
  const double sigma_lin = data_lin * sigma_db * std::numbers::ln10 / 10.0;
  return (ratio_from_db(model_db) - data_lin) / sigma_lin;
}

struct Evaluation {
  Eigen::VectorXd weighted;
  double sum_sq_db = 0.0;
};

Evaluation evaluate(const Eigen::VectorXd& theta, const FitProblem& problem, const Prepared& prep) {
  const ExperimentModel model = apply_parameters(problem.fixed, problem.free, theta);
  Evaluation e;
  e.weighted.resize(Eigen::Index(prep.rows));
  const std::size_t n = prep.indices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = prep.indices[k];
    const double f = problem.data.grid[i];
    ModelPoint p;
    try {
      p = evaluate_point(model, f, band_gains_at(problem.band_splits, f));
    } catch (const std::exception& ex) {
      std::ostringstream os;
      os << "model evaluation failed at " << f << " Hz with";
      for (std::size_t j = 0; j < problem.free.size(); ++j) {
        os << ' ' << to_string(problem.free[j].id) << '=' << theta(Eigen::Index(j));
      }
      os << ": " << ex.what();
      throw NumericalError(os.str());
    }
    const double s = problem.data.sigma_db[i];
    if (problem.target == Target::kQuadratures) {
      const double mx = db_from_ratio(p.joint.xsum);
      const double my = db_from_ratio(p.joint.ydiff);
      e.weighted(Eigen::Index(k)) = residual(mx, problem.data.var_xsum_db[i], s, problem.domain);
      e.weighted(Eigen::Index(k + n)) = residual(my, problem.data.var_ydiff_db[i], s, problem.domain);
      e.sum_sq_db += (mx - problem.data.var_xsum_db[i]) * (mx - problem.data.var_xsum_db[i]) +
                     (my - problem.data.var_ydiff_db[i]) * (my - problem.data.var_ydiff_db[i]);
    } else {
      const double md = db_from_ratio(p.duan);
      const double dd = db_from_ratio(problem.data.duan[i]);
      e.weighted(Eigen::Index(k)) = residual(md, dd, s, problem.domain);
      e.sum_sq_db += (md - dd) * (md - dd);
    }
  }
  if (!e.weighted.allFinite()) throw NumericalError("model produced non-finite residuals");
  return e;
}

// Smooth bijection between R and (lower, upper).
struct BoundTransform {
  std::vector<FreeParameter> free;

  Eigen::VectorXd to_bounded(const Eigen::VectorXd& u) const {
    Eigen::VectorXd theta(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const auto& p = free[std::size_t(i)];
      theta(i) = p.lower + (p.upper - p.lower) / (1.0 + std::exp(-u(i)));
    }
    return theta;
  }

  Eigen::VectorXd to_unbounded(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd u(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const auto& p = free[std::size_t(i)];
      const double width = p.upper - p.lower;
      // keep strictly inside so the logit stays finite
      const double s = std::clamp((theta(i) - p.lower) / width, 1e-12, 1.0 - 1e-12);
      u(i) = std::log(s / (1.0 - s));
    }
    return u;
  }
};

StartSummary levenberg_marquardt(const FitProblem& problem, const Prepared& prep, const BoundTransform& transform,
                                 const Eigen::VectorXd& theta0) {
  const auto& opt = problem.options;
  const Eigen::Index m = theta0.size();
  StartSummary out;
  out.initial = theta0;

  Eigen::VectorXd u = transform.to_unbounded(theta0);
  auto objective_at = [&](const Eigen::VectorXd& uu, Eigen::VectorXd& r) {
    r = evaluate(transform.to_bounded(uu), problem, prep).weighted;
    return 0.5 * r.squaredNorm();
  };

  Eigen::VectorXd r;
  double cost = objective_at(u, r);
  out.objective_history.push_back(cost);
  double lambda = 1e-3;
  int small_steps = 0;

  Eigen::MatrixXd jac(r.size(), m);
  Eigen::VectorXd r_step;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    out.iterations = iter + 1;
    if (cost < 1e-30) {
      out.converged = true;
      break;
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::VectorXd up = u;
      const double h = opt.fd_relative_step * std::max(1.0, std::abs(u(j)));
      up(j) += h;
      objective_at(up, r_step);
      jac.col(j) = (r_step - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;

    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-grad);
      const Eigen::VectorXd u_new = u + delta;
      double cost_new = INFINITY;
      if (delta.allFinite()) {
        try {
          cost_new = objective_at(u_new, r_step);
        } catch (const NumericalError&) {
          cost_new = INFINITY;
        }
      }
      if (cost_new < cost) {
        const double rel = (cost - cost_new) / cost;
        u = u_new;
        r = r_step;
        cost = cost_new;
        out.objective_history.push_back(cost);
        lambda = std::max(lambda / 10.0, 1e-12);
        small_steps = rel < opt.relative_tolerance ? small_steps + 1 : 0;
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left at machine precision: a stationary point.
      out.converged = true;
      break;
    }
    if (small_steps >= opt.tolerance_iterations) {
      out.converged = true;
      break;
    }
  }
  out.estimate = transform.to_bounded(u);
  out.objective = cost;
  return out;
}

}  // namespace

Eigen::VectorXd model_residuals(const Eigen::VectorXd& theta, const FitProblem& problem) {
  detail::require(theta.size() == Eigen::Index(problem.free.size()), "parameter vector size mismatch");
  for (std::size_t i = 0; i < problem.free.size(); ++i) {
    const double v = theta(Eigen::Index(i));
    detail::require(v >= problem.free[i].lower && v <= problem.free[i].upper,
                    "parameter '" + to_string(problem.free[i].id) + "' outside its bounds");
  }
  return evaluate(theta, problem, prepare(problem)).weighted;
}

std::optional<double> FitResult::value(Parameter p) const {
  for (std::size_t i = 0; i < free.size(); ++i) {
    if (free[i].id == p) return parameters(Eigen::Index(i));
  }
  return std::nullopt;
}

FitResult fit(const FitProblem& problem) {
  problem.validate();
  const Prepared prep = prepare(problem);
  const BoundTransform transform{problem.free};
  const Eigen::Index m = Eigen::Index(problem.free.size());

  // Deterministic start points: the configured initial guess, then uniform
  // draws from the inner 90% of each range.
  std::vector<Eigen::VectorXd> initials;
  std::mt19937_64 engine(problem.options.seed);
  for (int s = 0; s < problem.options.starts; ++s) {
    Eigen::VectorXd theta(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& p = problem.free[std::size_t(i)];
      const double width = p.upper - p.lower;
      const double u = std::uniform_real_distribution<double>(0.05, 0.95)(engine);
      if (s == 0) {
        theta(i) = p.initial.value_or(p.lower + 0.5 * width);
      } else {
        theta(i) = p.lower + u * width;
      }
    }
    initials.push_back(theta);
  }

  std::vector<std::future<StartSummary>> jobs;
  for (const auto& theta0 : initials) {
    jobs.push_back(std::async([&, theta0] { return levenberg_marquardt(problem, prep, transform, theta0); }));
  }
  FitResult result;
  result.free = problem.free;
  for (auto& j : jobs) result.starts.push_back(j.get());

  // best objective, ties broken by start index
  std::size_t best = 0;
  for (std::size_t s = 1; s < result.starts.size(); ++s) {
    if (result.starts[s].objective < result.starts[best].objective) best = s;
  }
  const StartSummary& winner = result.starts[best];
  result.best_start = best;
  result.parameters = winner.estimate;
  result.objective = winner.objective;
  result.iterations = winner.iterations;
  result.converged = winner.converged;
  result.points = prep.rows;

  const Evaluation final_eval = evaluate(result.parameters, problem, prep);
  result.residual_rms = std::sqrt(final_eval.weighted.squaredNorm() / double(prep.rows));
  result.residual_rms_db = std::sqrt(final_eval.sum_sq_db / double(prep.rows));

  // Quadratic approximation at the optimum, central differences in theta.
  Eigen::MatrixXd jac(Eigen::Index(prep.rows), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& p = problem.free[std::size_t(j)];
    const double width = p.upper - p.lower;
    const double h = 1e-6 * std::max(std::abs(result.parameters(j)), 1e-3 * width);
    Eigen::VectorXd lo = result.parameters;
    Eigen::VectorXd hi = result.parameters;
    lo(j) = std::max(p.lower, lo(j) - h);
    hi(j) = std::min(p.upper, hi(j) + h);
    jac.col(j) = (evaluate(hi, problem, prep).weighted - evaluate(lo, problem, prep).weighted) / (hi(j) - lo(j));
  }
  // Invert in width-normalized coordinates; raw units (Hz next to
  // efficiencies) would make the rank decision meaningless.
  Eigen::VectorXd widths(m);
  for (Eigen::Index j = 0; j < m; ++j) widths(j) = problem.free[std::size_t(j)].upper - problem.free[std::size_t(j)].lower;
  const Eigen::MatrixXd scaled = jac * widths.asDiagonal();
  const Eigen::MatrixXd info = scaled.transpose() * scaled;
  result.covariance =
      widths.asDiagonal() * Eigen::MatrixXd(info.completeOrthogonalDecomposition().pseudoInverse()) * widths.asDiagonal();
  result.uncertainties = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();

  result.at_bound.resize(std::size_t(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = problem.free[std::size_t(i)];
    const double tol = 1e-3 * (p.upper - p.lower);
    result.at_bound[std::size_t(i)] =
        result.parameters(i) - p.lower < tol || p.upper - result.parameters(i) < tol;
  }
  return result;
}

}  // namespace cvent::fit
