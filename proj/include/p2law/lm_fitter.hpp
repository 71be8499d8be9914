#pragma once
//
// Levenberg-Marquardt fitting of one law jointly over every curve of a
// CurveSet, with seeded multi-start initialization.
//
// Each LM iteration solves the damped least-squares subproblem
//   min || J s + r ||^2 + lambda || D s ||^2,   D = sqrt(diag(J^T J))
// by QR on the stacked system. Accepted steps multiply lambda by
// damping_down, rejected steps by damping_up. Steps whose trial point
// leaves the law's domain are rejected.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "p2law/curve_store.hpp"
#include "p2law/error.hpp"
#include "p2law/format.hpp"
#include "p2law/law_family.hpp"

namespace p2law {

struct Objective {
  enum class Kind { squared, huber };
  Kind kind = Kind::squared;
  double delta = 1.0;  // Huber threshold

  static Objective squared() { return {}; }
  static Objective huber(double delta) { return {Kind::huber, delta}; }
};

inline std::string to_string(const Objective& o) {
  return o.kind == Objective::Kind::squared ? std::string("squared") : "huber:" + text::number(o.delta);
}

/// Parses `squared` or `huber:<delta>`.
inline Objective parse_objective(std::string_view s) {
  if (s == "squared") return Objective::squared();
  if (s.starts_with("huber:")) {
    auto d = text::parse_double(s.substr(6));
    if (d && *d > 0.0) return Objective::huber(*d);
  }
  throw ParseError("objective must be 'squared' or 'huber:<delta>' with delta > 0", 0);
}

struct FitOptions {
  int max_iterations = 500;
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double step_tolerance = 1e-10;
  double objective_tolerance = 1e-12;
  int n_starts = 32;
  std::uint64_t rng_seed = 0;
  Objective objective;
  Units units = Units::billions;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
    if (!(initial_damping > 0 && damping_up > 1 && damping_down > 0 && damping_down < 1))
      throw ValidationError("damping settings out of range");
    if (!(step_tolerance > 0 && objective_tolerance > 0)) throw ValidationError("tolerances must be positive");
    if (n_starts < 1) throw ValidationError("n_starts must be >= 1");
    if (objective.kind == Objective::Kind::huber && !(objective.delta > 0))
      throw ValidationError("huber delta must be positive");
  }
};

enum class StopReason { step_tolerance, objective_tolerance, exact_fit, max_iterations, stalled, invalid_start };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::step_tolerance: return "step_tol";
    case StopReason::objective_tolerance: return "objective_tol";
    case StopReason::exact_fit: return "exact_fit";
    case StopReason::max_iterations: return "max_iter";
    case StopReason::stalled: return "stalled";
    case StopReason::invalid_start: return "invalid_start";
  }
  return "?";
}

inline bool is_converged(StopReason r) {
  return r == StopReason::step_tolerance || r == StopReason::objective_tolerance || r == StopReason::exact_fit;
}

/// Outcome of one LM run from one starting point.
struct LmRun {
  std::vector<double> initial;
  std::vector<double> params;
  double objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
  StopReason reason = StopReason::invalid_start;
  std::vector<double> trace;  // objective after every accepted step, starting with the initial value
  std::string message;
};

struct StartSummary {
  int index = 0;
  double objective = 0.0;
  int iterations = 0;
  StopReason reason = StopReason::invalid_start;
};

struct FitResult {
  LawSpec spec;
  double objective_value = 0.0;
  Objective objective;
  std::vector<double> residuals;  // one per fitted (D > 0) checkpoint, curve order
  int iterations = 0;
  bool converged = false;
  int start_index = 0;
  Units units = Units::billions;
  double jacobian_condition = 0.0;
  std::vector<Param> zero_columns;
  std::optional<std::string> warning;  // set when the Jacobian is rank-deficient
  std::vector<StartSummary> starts;
};

/// Flattened fitting data: one row per checkpoint with D > 0.
struct FitProblem {
  std::vector<LawInput> inputs;
  std::vector<double> targets;
  std::vector<std::string> labels;  // "run_id@tokens" for diagnostics

  static FitProblem from(const CurveSet& set, Units units) {
    FitProblem p;
    for (const auto& curve : set.curves())
      for (const auto& cp : curve.points()) {
        if (cp.tokens == 0) continue;  // laws are singular at D = 0
        p.inputs.push_back(make_input(curve.meta(), static_cast<double>(cp.tokens), units));
        p.targets.push_back(cp.loss);
        p.labels.push_back(curve.meta().run_id + "@" + std::to_string(cp.tokens));
      }
    return p;
  }

  std::size_t size() const noexcept { return targets.size(); }
};

namespace detail {

inline double huber_point(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

inline double objective_of(const Objective& obj, std::span<const double> residuals) {
  double s = 0.0;
  if (obj.kind == Objective::Kind::squared)
    for (double r : residuals) s += r * r;
  else
    for (double r : residuals) s += huber_point(r, obj.delta);
  return s;
}

/// Residuals at params; nullopt if any checkpoint leaves the law's domain.
inline std::optional<Eigen::VectorXd> try_residuals(LawId id, const Eigen::VectorXd& params, const FitProblem& prob) {
  try {
    LawSpec spec(id, std::vector<double>(params.data(), params.data() + params.size()));
    Eigen::VectorXd r(static_cast<Eigen::Index>(prob.size()));
    for (std::size_t i = 0; i < prob.size(); ++i)
      r[static_cast<Eigen::Index>(i)] = evaluate(spec, prob.inputs[i]) - prob.targets[i];
    return r;
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline Eigen::MatrixXd jacobian(const LawSpec& spec, const FitProblem& prob) {
  const auto n = static_cast<Eigen::Index>(law_params(spec.id()).size());
  Eigen::MatrixXd J(static_cast<Eigen::Index>(prob.size()), n);
  for (std::size_t i = 0; i < prob.size(); ++i) {
    std::vector<double> g;
    try {
      g = param_gradient(spec, prob.inputs[i]);
    } catch (const Error& e) {
      throw EvaluationError(std::string(e.what()) + " at checkpoint " + prob.labels[i]);
    }
    for (Eigen::Index k = 0; k < n; ++k) J(static_cast<Eigen::Index>(i), k) = g[static_cast<std::size_t>(k)];
  }
  return J;
}

}  // namespace detail

/// Jacobian of the residuals (rows: D > 0 checkpoints, columns: law_params order).
inline Eigen::MatrixXd residual_jacobian(const LawSpec& spec, const CurveSet& set, Units units = Units::billions) {
  return detail::jacobian(spec, FitProblem::from(set, units));
}

/// evaluate(spec, checkpoint) - loss for every D > 0 checkpoint.
inline std::vector<double> residuals(const LawSpec& spec, const CurveSet& set, Units units = Units::billions) {
  auto prob = FitProblem::from(set, units);
  std::vector<double> r(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) r[i] = evaluate(spec, prob.inputs[i]) - prob.targets[i];
  return r;
}

/// One LM run from `initial`.
inline LmRun levenberg_marquardt(LawId id, std::vector<double> initial, const FitProblem& prob,
                                 const FitOptions& opts) {
  LmRun run;
  run.initial = initial;
  run.params = initial;
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(initial.data(), static_cast<Eigen::Index>(initial.size()));
  const auto n = theta.size();
  const auto m = static_cast<Eigen::Index>(prob.size());

  auto r = detail::try_residuals(id, theta, prob);
  if (!r) {
    run.message = "initial point outside law domain";
    return run;
  }
  auto objective = [&](const Eigen::VectorXd& res) {
    return detail::objective_of(opts.objective, std::span<const double>(res.data(), static_cast<std::size_t>(res.size())));
  };
  double f = objective(*r);
  if (!std::isfinite(f)) {
    run.message = "non-finite initial objective";
    return run;
  }
  run.objective = f;
  run.trace.push_back(f);

  const bool huber = opts.objective.kind == Objective::Kind::huber;
  double lambda = opts.initial_damping;
  Eigen::MatrixXd J;
  bool need_jacobian = true;
  run.reason = StopReason::max_iterations;

  for (int it = 0; it < opts.max_iterations; ++it) {
    run.iterations = it + 1;
    if (f == 0.0) {
      run.reason = StopReason::exact_fit;
      break;
    }
    if (need_jacobian) {
      try {
        J = detail::jacobian(LawSpec(id, std::vector<double>(theta.data(), theta.data() + n)), prob);
      } catch (const Error& e) {
        run.reason = StopReason::stalled;
        run.message = e.what();
        break;
      }
      need_jacobian = false;
    }

    // Huber: iteratively reweighted least squares inside the LM step.
    Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
    if (huber)
      for (Eigen::Index i = 0; i < m; ++i) {
        const double a = std::abs((*r)[i]);
        if (a > opts.objective.delta) w[i] = std::sqrt(opts.objective.delta / a);
      }
    const Eigen::MatrixXd Jw = w.asDiagonal() * J;
    const Eigen::VectorXd rw = w.asDiagonal() * *r;

    Eigen::VectorXd scale = Jw.colwise().norm().transpose();
    const double floor = std::max(scale.maxCoeff(), 1.0) * 1e-12;
    for (Eigen::Index k = 0; k < n; ++k) scale[k] = std::max(scale[k], floor);

    Eigen::MatrixXd A(m + n, n);
    A.topRows(m) = Jw;
    A.bottomRows(n) = (std::sqrt(lambda) * scale).asDiagonal();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + n);
    b.head(m) = -rw;
    const Eigen::VectorXd step = A.colPivHouseholderQr().solve(b);

    const bool tiny_step = step.norm() <= opts.step_tolerance * (theta.norm() + opts.step_tolerance);
    const Eigen::VectorXd trial = theta + step;
    auto r_trial = step.allFinite() ? detail::try_residuals(id, trial, prob) : std::nullopt;
    const double f_trial = r_trial ? objective(*r_trial) : std::numeric_limits<double>::infinity();

    if (std::isfinite(f_trial) && f_trial < f) {
      const double decrease = f - f_trial;
      theta = trial;
      r = std::move(r_trial);
      f = f_trial;
      run.trace.push_back(f);
      need_jacobian = true;
      lambda = std::max(lambda * opts.damping_down, 1e-300);
      if (tiny_step) {
        run.reason = StopReason::step_tolerance;
        break;
      }
      if (decrease <= opts.objective_tolerance * (f + decrease)) {
        run.reason = StopReason::objective_tolerance;
        break;
      }
    } else {
      if (tiny_step) {
        run.reason = StopReason::step_tolerance;
        break;
      }
      lambda *= opts.damping_up;
      if (lambda > 1e30) {
        run.reason = StopReason::stalled;
        run.message = "damping limit reached";
        break;
      }
    }
  }
  run.params.assign(theta.data(), theta.data() + n);
  run.objective = f;
  return run;
}

/// Uniform starting points: exponents in [-2,2], N_C and D_C in [0,10], E in [-3,3].
inline std::vector<std::vector<double>> draw_starts(LawId id, int n_starts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> exponent(-2.0, 2.0), scale(0.0, 10.0), offset(-3.0, 3.0);
  std::vector<std::vector<double>> starts;
  for (int s = 0; s < n_starts; ++s) {
    std::vector<double> v;
    for (auto p : law_params(id)) {
      switch (p) {
        case Param::N_C:
        case Param::D_C: v.push_back(scale(rng)); break;
        case Param::E: v.push_back(offset(rng)); break;
        default: v.push_back(exponent(rng)); break;
      }
    }
    starts.push_back(std::move(v));
  }
  return starts;
}

namespace detail {

inline void diagnose_jacobian(FitResult& res, const FitProblem& prob) {
  Eigen::MatrixXd J;
  try {
    J = jacobian(res.spec, prob);
  } catch (const Error& e) {
    res.warning = std::string("jacobian unavailable: ") + e.what();
    return;
  }
  const double jmax = J.cwiseAbs().maxCoeff();
  const auto symbols = law_params(res.spec.id());
  for (Eigen::Index k = 0; k < J.cols(); ++k)
    if (J.col(k).cwiseAbs().maxCoeff() <= 1e-14 * jmax) res.zero_columns.push_back(symbols[static_cast<std::size_t>(k)]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  res.jacobian_condition = smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();

  std::string msg;
  if (!res.zero_columns.empty()) {
    msg = "unidentifiable parameter(s):";
    for (auto p : res.zero_columns) msg += " " + std::string(to_string(p));
  }
  if (res.jacobian_condition > 1e12) {
    if (!msg.empty()) msg += "; ";
    msg += "rank-deficient Jacobian (condition number " + text::scientific(res.jacobian_condition, 3) + ")";
  }
  if (!msg.empty()) res.warning = msg;
}

}  // namespace detail

/// Fits law `id` to every checkpoint of `set` (D > 0) from opts.n_starts
/// seeded starting points and returns the best run. Deterministic in the seed.
inline FitResult fit(LawId id, const CurveSet& set, const FitOptions& opts) {
  opts.validate();
  if (set.empty()) throw FitError("empty curve set");
  if (!compatible(id, set.method()))
    throw FitError("law/method mismatch: " + std::string(to_string(id)) + " cannot fit " +
                   std::string(to_string(set.method())) + " curves");
  const auto prob = FitProblem::from(set, opts.units);
  const auto n_params = law_params(id).size();
  if (prob.size() <= n_params)
    throw FitError("underdetermined fit: " + std::to_string(prob.size()) + " checkpoints for " +
                   std::to_string(n_params) + " parameters");

  const auto starts = draw_starts(id, opts.n_starts, opts.rng_seed);
  std::vector<LmRun> runs(starts.size());

  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(starts.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < starts.size(); i = next++) runs[i] = levenberg_marquardt(id, starts[i], prob, opts);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  // Deterministic reduction by (objective, start index).
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].reason == StopReason::invalid_start || !std::isfinite(runs[i].objective)) continue;
    if (!best || runs[i].objective < runs[*best].objective) best = i;
  }

  std::vector<StartSummary> summaries;
  for (std::size_t i = 0; i < runs.size(); ++i)
    summaries.push_back({static_cast<int>(i), runs[i].objective, runs[i].iterations, runs[i].reason});

  if (!best) {
    std::string msg = "all " + std::to_string(runs.size()) + " starts diverged:";
    for (std::size_t i = 0; i < runs.size() && i < 8; ++i)
      msg += " [" + std::to_string(i) + ": " + std::string(to_string(runs[i].reason)) +
             (runs[i].message.empty() ? "" : " " + runs[i].message) + "]";
    throw FitError(msg);
  }

  const LmRun& win = runs[*best];
  FitResult res{LawSpec(id, win.params)};
  res.objective = opts.objective;
  res.objective_value = win.objective;
  res.iterations = win.iterations;
  res.converged = is_converged(win.reason);
  res.start_index = static_cast<int>(*best);
  res.units = opts.units;
  res.starts = std::move(summaries);
  res.residuals.resize(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) res.residuals[i] = evaluate(res.spec, prob.inputs[i]) - prob.targets[i];
  detail::diagnose_jacobian(res, prob);
  return res;
}

/// Plain-text report with a stable layout.
inline void write_fit_report(std::ostream& out, const FitResult& r) {
  out << "law_id: " << to_string(r.spec.id()) << '\n';
  out << "units: " << to_string(r.units) << " (N0 and D divided by " << text::number(unit_scale(r.units)) << ")\n";
  out << "objective: " << to_string(r.objective) << '\n';
  out << "parameters:\n";
  auto symbols = law_params(r.spec.id());
  for (std::size_t i = 0; i < symbols.size(); ++i)
    out << "  " << text::pad_right(std::string(to_string(symbols[i])), 6) << " = " << text::number(r.spec.values()[i])
        << '\n';
  out << "objective_value: " << text::scientific(r.objective_value, 6) << '\n';
  out << "iterations: " << r.iterations << '\n';
  out << "converged: " << (r.converged ? "true" : "false") << '\n';
  out << "start_index: " << r.start_index << '\n';
  out << "checkpoints: " << r.residuals.size() << '\n';
  out << "jacobian_condition: " << text::scientific(r.jacobian_condition, 3) << '\n';
  out << "warning: " << (r.warning ? *r.warning : "none") << '\n';
  out << "starts:\n";
  out << "  " << text::pad_left("start", 5) << "  " << text::pad_left("objective", 14) << "  "
      << text::pad_left("iters", 5) << "  status\n";
  for (const auto& s : r.starts)
    out << "  " << text::pad_left(std::to_string(s.index), 5) << "  "
        << text::pad_left(std::isfinite(s.objective) ? text::scientific(s.objective, 6) : "inf", 14) << "  "
        << text::pad_left(std::to_string(s.iterations), 5) << "  " << to_string(s.reason) << '\n';
}

}  // namespace p2law
