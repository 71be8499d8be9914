#pragma once
//
// Experiments built on the fitter: law comparison, the three generalization
// protocols (dataset size, model size, pruning rate), flattening-point
// prediction, and synthetic ground-truth curves for oracle tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "p2law/curve_store.hpp"
#include "p2law/error.hpp"
#include "p2law/fit_metrics.hpp"
#include "p2law/format.hpp"
#include "p2law/law_family.hpp"
#include "p2law/lm_fitter.hpp"

namespace p2law {

// ---------------------------------------------------------------------------
// Synthetic curves

enum class Spacing { linear, log };

struct SynthSpec {
  LawSpec true_law;
  std::string family = "synthetic";
  Method method = Method::depth;
  std::vector<std::int64_t> n0_list;
  std::vector<double> rho_list;  // semi24: defaults to {0.5} when empty
  std::vector<double> l0_list;   // one per n0
  std::size_t n_points = 200;
  std::int64_t d_min = 5'000'000;
  std::int64_t d_max = 1'000'000'000;
  Spacing spacing = Spacing::log;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  Units units = Units::billions;

  void validate() const {
    if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0");
    if (n_points < 2) throw ValidationError("token schedule needs at least 2 points");
    if (d_min <= 0 || d_max <= d_min) throw ValidationError("token schedule needs 0 < d_min < d_max");
    if (n0_list.empty()) throw ValidationError("n0 list is empty");
    if (l0_list.size() != n0_list.size()) throw ValidationError("need one l0 per n0");
    if (rho_list.empty() && method != Method::semi24) throw ValidationError("rho list is empty");
    if (!compatible(true_law.id(), method))
      throw ValidationError("law/method mismatch: " + std::string(to_string(true_law.id())) + " with " +
                            std::string(to_string(method)));
  }
};

inline std::vector<std::int64_t> token_schedule(const SynthSpec& s) {
  std::vector<std::int64_t> out;
  const auto n = s.n_points;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    double d;
    if (s.spacing == Spacing::linear)
      d = static_cast<double>(s.d_min) + t * static_cast<double>(s.d_max - s.d_min);
    else
      d = std::exp(std::log(static_cast<double>(s.d_min)) +
                   t * (std::log(static_cast<double>(s.d_max)) - std::log(static_cast<double>(s.d_min))));
    auto v = static_cast<std::int64_t>(std::llround(d));
    if (i + 1 == n) v = s.d_max;
    if (!out.empty() && v <= out.back()) throw ValidationError("token schedule too dense to be strictly increasing");
    out.push_back(v);
  }
  return out;
}

inline std::string synthetic_run_id(const std::string& family, std::int64_t n0, double rho) {
  return family + "-n" + std::to_string(n0) + "-r" + text::number(rho);
}

/// loss = evaluate(true_law) + N(0, sigma^2) at every (n0, rho, D).
/// Deterministic in spec.seed.
inline CurveSet generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const auto tokens = token_schedule(spec);
  std::vector<double> rhos = spec.rho_list;
  if (rhos.empty()) rhos = {0.5};
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);

  std::vector<LossCurve> curves;
  for (std::size_t k = 0; k < spec.n0_list.size(); ++k)
    for (double rho : rhos) {
      RunMeta meta;
      meta.family = spec.family;
      meta.method = spec.method;
      meta.n0 = spec.n0_list[k];
      meta.rho = rho;
      meta.l0 = spec.l0_list[k];
      meta.n_after = spec.method == Method::semi24
                         ? meta.n0 / 2
                         : static_cast<std::int64_t>(std::llround(static_cast<double>(meta.n0) * (1.0 - rho)));
      meta.run_id = synthetic_run_id(spec.family, meta.n0, rho);
      std::vector<Checkpoint> pts;
      for (auto d : tokens) {
        double loss = evaluate(spec.true_law, make_input(meta, static_cast<double>(d), spec.units));
        if (spec.noise_sigma > 0) loss += noise(rng);
        pts.push_back({d, loss});
      }
      curves.emplace_back(std::move(meta), std::move(pts));
    }
  return CurveSet(std::move(curves));
}

inline std::vector<std::string> synthetic_comments(const SynthSpec& s) {
  return {"synthetic curves from " + to_string(s.true_law),
          "units=" + std::string(to_string(s.units)) + " noise_sigma=" + text::number(s.noise_sigma) +
              " seed=" + std::to_string(s.seed) + " spacing=" + (s.spacing == Spacing::log ? "log" : "linear")};
}

// ---------------------------------------------------------------------------
// Law comparison

struct ComparisonRow {
  LawId law;
  std::optional<FitResult> fit;
  std::optional<MetricReport> metrics;
  std::string error;
};

/// Fits every law on all checkpoints and ranks by ASD, then Huber, then R²
/// (descending), then law id order. Failed laws are listed last.
inline std::vector<ComparisonRow> compare_laws(const CurveSet& set, std::span<const LawId> laws,
                                               const FitOptions& opts, MetricOptions metric_opts = {}) {
  if (laws.empty()) throw ValidationError("nothing to compare");
  metric_opts.units = opts.units;
  std::vector<ComparisonRow> ok, failed;
  for (auto id : laws) {
    ComparisonRow row{id, std::nullopt, std::nullopt, {}};
    try {
      row.fit = fit(id, set, opts);
      row.metrics = evaluate_metrics(set, row.fit->spec, metric_opts);
      ok.push_back(std::move(row));
    } catch (const Error& e) {
      row.error = e.what();
      failed.push_back(std::move(row));
    }
  }
  std::stable_sort(ok.begin(), ok.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    const auto& ma = *a.metrics;
    const auto& mb = *b.metrics;
    if (ma.asd != mb.asd) return ma.asd < mb.asd;
    if (ma.huber != mb.huber) return ma.huber < mb.huber;
    if (ma.r_squared != mb.r_squared) return ma.r_squared > mb.r_squared;
    return a.law < b.law;
  });
  for (auto& f : failed) ok.push_back(std::move(f));
  return ok;
}

inline void write_comparison_table(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << text::pad_left("rank", 4) << "  " << text::pad_right("law", 16) << text::pad_left("R2", 10)
      << text::pad_left("Huber loss", 12) << text::pad_left("ASD", 12) << text::pad_left("objective", 14)
      << "  status\n";
  int rank = 0;
  for (const auto& r : rows) {
    ++rank;
    out << text::pad_left(std::to_string(rank), 4) << "  " << text::pad_right(std::string(to_string(r.law)), 16);
    if (r.metrics) {
      out << text::pad_left(text::fixed(r.metrics->r_squared, 4), 10) << text::pad_left(text::fixed(r.metrics->huber, 6), 12)
          << text::pad_left(text::fixed(r.metrics->asd, 6), 12)
          << text::pad_left(text::scientific(r.fit->objective_value, 4), 14) << "  "
          << (r.fit->converged ? "converged" : "not-converged") << '\n';
    } else {
      out << text::pad_left("-", 10) << text::pad_left("-", 12) << text::pad_left("-", 12) << text::pad_left("-", 14)
          << "  failed: " << r.error << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Generalization protocols

enum class Protocol { dataset_size, model_size, pruning_rate };

inline std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::dataset_size: return "dataset_size";
    case Protocol::model_size: return "model_size";
    case Protocol::pruning_rate: return "pruning_rate";
  }
  return "?";
}

inline std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "dataset_size") return Protocol::dataset_size;
  if (s == "model_size") return Protocol::model_size;
  if (s == "pruning_rate") return Protocol::pruning_rate;
  return std::nullopt;
}

struct SplitSpec {
  Protocol protocol = Protocol::dataset_size;
  double fit_fraction = 0.8;               // dataset_size: leading checkpoints per curve
  std::vector<std::int64_t> holdout_n0;    // model_size
  std::vector<double> holdout_rho;         // pruning_rate
  double rho_match_tolerance = 0.02;       // model_size pairing of held-out rates
};

/// A held-out curve of the model-size protocol and the fitted rate it pairs with.
struct Pairing {
  std::string heldout_run;
  double heldout_rho = 0.0;
  std::optional<double> matched_rho;  // nullopt: no fitted rate within tolerance, curve excluded
};

struct GeneralizationResult {
  FitResult fit;
  MetricReport heldout;
  MetricReport fitted;
  CurveSet fit_set;
  CurveSet holdout_set;
  std::vector<TokenWindow> holdout_windows;
  std::vector<Pairing> pairings;
};

namespace detail {

inline bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-9; }

}  // namespace detail

/// Splits `set` per the protocol, fits on one side and evaluates on the
/// other. Deterministic for identical inputs.
inline std::pair<CurveSet, CurveSet> split_curves(const CurveSet& set, const SplitSpec& split,
                                                  std::vector<Pairing>* pairings = nullptr) {
  if (set.empty()) throw ValidationError("empty curve set");
  std::vector<LossCurve> fit_curves, hold_curves;
  switch (split.protocol) {
    case Protocol::dataset_size: {
      if (!(split.fit_fraction > 0.0 && split.fit_fraction < 1.0)) throw ValidationError("fit fraction must lie in (0,1)");
      for (const auto& c : set.curves()) {
        const auto k = static_cast<std::size_t>(std::floor(split.fit_fraction * static_cast<double>(c.size())));
        if (k < 2 || c.size() - k < 2)
          throw ValidationError("run '" + c.meta().run_id + "' too short for a " + text::number(split.fit_fraction) +
                                " split");
        fit_curves.push_back(c.slice(0, k));
        hold_curves.push_back(c.slice(k, c.size()));
      }
      break;
    }
    case Protocol::model_size: {
      if (split.holdout_n0.empty()) throw ValidationError("model-size holdout list is empty");
      for (auto n0 : split.holdout_n0) {
        bool present = std::any_of(set.curves().begin(), set.curves().end(),
                                   [&](const LossCurve& c) { return c.meta().n0 == n0; });
        if (!present) throw ValidationError("held-out n0 " + std::to_string(n0) + " not present in curve set");
      }
      auto held = [&](const LossCurve& c) {
        return std::find(split.holdout_n0.begin(), split.holdout_n0.end(), c.meta().n0) != split.holdout_n0.end();
      };
      for (const auto& c : set.curves())
        if (!held(c)) fit_curves.push_back(c);
      for (const auto& c : set.curves()) {
        if (!held(c)) continue;
        Pairing p{c.meta().run_id, c.meta().rho, std::nullopt};
        double best = INFINITY;
        for (const auto& f : fit_curves) {
          const double gap = std::abs(f.meta().rho - c.meta().rho);
          if (gap <= split.rho_match_tolerance + 1e-12 && gap < best) {
            best = gap;
            p.matched_rho = f.meta().rho;
          }
        }
        if (p.matched_rho) hold_curves.push_back(c);
        if (pairings) pairings->push_back(p);
      }
      break;
    }
    case Protocol::pruning_rate: {
      if (split.holdout_rho.empty()) throw ValidationError("pruning-rate holdout list is empty");
      auto held = [&](const LossCurve& c) {
        return std::any_of(split.holdout_rho.begin(), split.holdout_rho.end(),
                           [&](double r) { return detail::same_rate(r, c.meta().rho); });
      };
      for (double r : split.holdout_rho) {
        bool present = std::any_of(set.curves().begin(), set.curves().end(),
                                   [&](const LossCurve& c) { return detail::same_rate(c.meta().rho, r); });
        if (!present) throw ValidationError("held-out rho " + text::number(r) + " not present in curve set");
      }
      for (const auto& c : set.curves()) (held(c) ? hold_curves : fit_curves).push_back(c);
      break;
    }
  }
  if (fit_curves.empty()) throw ValidationError("holdout exhausts fitting data");
  if (hold_curves.empty()) throw ValidationError("no held-out curves remain after the split");
  return {CurveSet(std::move(fit_curves)), CurveSet(std::move(hold_curves))};
}

inline GeneralizationResult run_generalization(const CurveSet& set, LawId law, const SplitSpec& split,
                                               const FitOptions& opts, MetricOptions metric_opts = {}) {
  metric_opts.units = opts.units;
  std::vector<Pairing> pairings;
  auto [fit_set, hold_set] = split_curves(set, split, &pairings);
  FitResult fitted = fit(law, fit_set, opts);

  // Held-out ASD window: the whole held-out tail for dataset_size, else the
  // latter half of each held-out curve.
  std::vector<TokenWindow> windows;
  for (const auto& c : hold_set.curves()) {
    if (split.protocol == Protocol::dataset_size)
      windows.push_back({static_cast<double>(c.min_tokens()), static_cast<double>(c.max_tokens())});
    else
      windows.push_back(latter_half(c));
  }
  GeneralizationResult res{std::move(fitted), {}, {}, fit_set, hold_set, windows, std::move(pairings)};
  res.heldout = evaluate_metrics(hold_set, res.fit.spec, metric_opts, windows);
  res.fitted = evaluate_metrics(fit_set, res.fit.spec, metric_opts);
  return res;
}

// ---------------------------------------------------------------------------
// Flattening point

struct FlatteningOptions {
  double epsilon = 1e-2;  // |dL/dC| threshold, nats per law-unit of compute
  double d_lo = 1e-4;     // bracket on D, law units
  double d_hi = 1e4;
  Units units = Units::billions;
};

struct FlatteningPoint {
  double compute = 0.0;        // C* = 6 n_after D*, FLOPs
  double compute_law = 0.0;    // same in law units (6 * n_after/s * D/s)
  double tokens = 0.0;         // D*, raw tokens
  double slope = 0.0;          // dL/dC at D*, law units
  double epsilon = 0.0;
};

/// Slope of the loss with respect to compute, in law units.
inline double compute_slope(const LawSpec& spec, const RunMeta& meta, double d_law, Units units) {
  const double s = unit_scale(units);
  LawInput in{static_cast<double>(meta.n0) / s, d_law, meta.rho, meta.l0};
  return partial_wrt_tokens(spec, in) / (6.0 * static_cast<double>(meta.n_after) / s);
}

/// Smallest compute at which |dL/dC| < epsilon, by log-bisection on D over
/// the bracket. Assumes |dL/dC| decreases in D inside the bracket.
inline FlatteningPoint predict_flattening(const LawSpec& spec, const RunMeta& meta, const FlatteningOptions& opts = {}) {
  if (!(opts.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (!(opts.d_lo > 0.0 && opts.d_hi > opts.d_lo)) throw ValidationError("bracket needs 0 < d_lo < d_hi");
  const double s = unit_scale(opts.units);
  auto result = [&](double d_law) {
    const double slope = compute_slope(spec, meta, d_law, opts.units);
    return FlatteningPoint{6.0 * static_cast<double>(meta.n_after) * d_law * s,
                           6.0 * (static_cast<double>(meta.n_after) / s) * d_law, d_law * s, slope, opts.epsilon};
  };
  const double slope_lo = compute_slope(spec, meta, opts.d_lo, opts.units);
  if (slope_lo > 0.0) throw ValidationError("loss is not decreasing at the bracket start (Condition 1 violated)");
  if (std::abs(slope_lo) < opts.epsilon) return result(opts.d_lo);
  const double slope_hi = compute_slope(spec, meta, opts.d_hi, opts.units);
  if (!(std::abs(slope_hi) < opts.epsilon))
    throw ValidationError("slope never falls below epsilon=" + text::number(opts.epsilon) + " within D in [" +
                          text::number(opts.d_lo) + ", " + text::number(opts.d_hi) + "] (|slope| at end " +
                          text::number(std::abs(slope_hi)) + ")");
  double lo = std::log(opts.d_lo), hi = std::log(opts.d_hi);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::abs(compute_slope(spec, meta, std::exp(mid), opts.units)) < opts.epsilon)
      hi = mid;
    else
      lo = mid;
  }
  return result(std::exp(hi));
}

// ---------------------------------------------------------------------------
// Plot data

/// Rows `series_id,x,y,kind` with x = compute 6*n_after*D.
inline void write_plot_data(std::ostream& out, const CurveSet& set, const LawSpec* spec, Units units,
                            bool header = true) {
  if (header) out << "series_id,x,y,kind\n";
  for (const auto& c : set.curves()) {
    const double n = static_cast<double>(c.meta().n_after);
    for (const auto& p : c.points())
      out << c.meta().run_id << ',' << text::number(6.0 * n * static_cast<double>(p.tokens)) << ','
          << text::number(p.loss) << ",actual\n";
    if (!spec) continue;
    for (const auto& p : c.points()) {
      if (p.tokens == 0) continue;
      const double y = evaluate(*spec, make_input(c.meta(), static_cast<double>(p.tokens), units));
      out << c.meta().run_id << ',' << text::number(6.0 * n * static_cast<double>(p.tokens)) << ','
          << text::number(y) << ",predicted\n";
    }
  }
}

}  // namespace p2law
