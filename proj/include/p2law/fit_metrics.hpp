#pragma once
//
// Goodness-of-fit metrics between recorded checkpoints and law predictions:
// R^2, mean Huber loss, and the Average Slope Difference (ASD).

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "p2law/curve_store.hpp"
#include "p2law/error.hpp"
#include "p2law/format.hpp"
#include "p2law/law_family.hpp"

namespace p2law {

inline void require_same_length(std::span<const double> a, std::span<const double> b, std::size_t min_len) {
  if (a.size() != b.size()) throw ValidationError("series lengths differ");
  if (a.size() < min_len) throw ValidationError("series too short");
}

/// 1 - SS_res / SS_tot. May be negative; throws for a constant actual series.
inline double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  require_same_length(actual, predicted, 2);
  double mean = 0.0;
  for (double y : actual) mean += y;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw ValidationError("R² undefined for constant series");
  return 1.0 - ss_res / ss_tot;
}

/// Mean Huber loss of the residuals actual - predicted.
inline double huber(std::span<const double> actual, std::span<const double> predicted, double delta) {
  require_same_length(actual, predicted, 1);
  if (!(delta > 0.0)) throw ValidationError("huber delta must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double a = std::abs(actual[i] - predicted[i]);
    s += a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
  }
  return s / static_cast<double>(actual.size());
}

/// (1/N) sum_{i=2..N} |(y_i - y_{i-1}) - (yhat_i - yhat_{i-1})|.
/// Note the 1/N normalization over N-1 differences.
inline double asd(std::span<const double> actual, std::span<const double> predicted) {
  require_same_length(actual, predicted, 2);
  double s = 0.0;
  for (std::size_t i = 1; i < actual.size(); ++i)
    s += std::abs((actual[i] - actual[i - 1]) - (predicted[i] - predicted[i - 1]));
  return s / static_cast<double>(actual.size());
}

/// Axis on which ASD sample points are spaced uniformly. Uniform in compute
/// coincides with uniform in tokens for a single curve.
enum class AsdAxis { tokens, checkpoint_index };

/// Token interval [lo, hi] from which ASD samples are drawn.
struct TokenWindow {
  double lo = 0.0;
  double hi = 0.0;
};

/// Latter half of the recorded token range.
inline TokenWindow latter_half(const LossCurve& c) {
  const double lo = static_cast<double>(c.min_tokens());
  const double hi = static_cast<double>(c.max_tokens());
  return {0.5 * (lo + hi), hi};
}

struct AsdOptions {
  std::size_t n_points = 50;
  AsdAxis axis = AsdAxis::tokens;
};

/// ASD of one curve against a law. Samples are spaced uniformly over
/// `window` (default: latter half of training); the actual curve is
/// interpolated piecewise-linearly, the law is evaluated directly.
inline double asd(const LossCurve& curve, const LawSpec& spec, const AsdOptions& opts = {},
                  Units units = Units::billions, std::optional<TokenWindow> window = std::nullopt) {
  if (opts.n_points < 2) throw ValidationError("ASD needs at least 2 sample points");
  const TokenWindow w = window.value_or(latter_half(curve));
  if (!(w.hi > w.lo)) throw ValidationError("ASD window too narrow for run '" + curve.meta().run_id + "'");
  const auto series = curve.as_series();
  const std::size_t n = opts.n_points;

  std::vector<double> y(n), yhat(n);
  if (opts.axis == AsdAxis::tokens) {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = i + 1 == n ? w.hi : w.lo + (w.hi - w.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      y[i] = interpolate(series, d);
      yhat[i] = evaluate(spec, make_input(curve.meta(), d, units));
    }
  } else {
    // Index positions of the window edges, then uniform spacing in index.
    Series tokens_by_index, loss_by_index;
    for (std::size_t i = 0; i < series.size(); ++i) {
      tokens_by_index.push_back({static_cast<double>(i), series[i].x});
      loss_by_index.push_back({static_cast<double>(i), series[i].y});
    }
    Series index_by_tokens;
    for (std::size_t i = 0; i < series.size(); ++i) index_by_tokens.push_back({series[i].x, static_cast<double>(i)});
    const double k_lo = interpolate(index_by_tokens, w.lo);
    const double k_hi = interpolate(index_by_tokens, w.hi);
    for (std::size_t i = 0; i < n; ++i) {
      const double k = i + 1 == n ? k_hi : k_lo + (k_hi - k_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      y[i] = interpolate(loss_by_index, k);
      yhat[i] = evaluate(spec, make_input(curve.meta(), interpolate(tokens_by_index, k), units));
    }
  }
  return asd(y, yhat);
}

struct MetricOptions {
  double huber_delta = 1.0;
  AsdOptions asd;
  Units units = Units::billions;
};

struct MetricReport {
  double r_squared = 0.0;
  double huber = 0.0;
  double huber_delta = 1.0;
  double asd = 0.0;
  std::size_t asd_points = 0;
  std::string asd_window;  // "latter-half" or "held-out"
  std::size_t n_eval_points = 0;
};

/// Pools every D > 0 checkpoint for R² and Huber; ASD is averaged over
/// curves without weighting. `windows`, when given, overrides the per-curve
/// ASD window (same order as the curves).
inline MetricReport evaluate_metrics(const CurveSet& set, const LawSpec& spec, const MetricOptions& opts = {},
                                     std::span<const TokenWindow> windows = {}) {
  if (set.empty()) throw ValidationError("empty curve set");
  if (!windows.empty() && windows.size() != set.size()) throw ValidationError("one ASD window per curve required");
  std::vector<double> actual, predicted;
  double asd_sum = 0.0;
  for (std::size_t c = 0; c < set.size(); ++c) {
    const auto& curve = set[c];
    for (const auto& p : curve.points()) {
      if (p.tokens == 0) continue;
      actual.push_back(p.loss);
      predicted.push_back(evaluate(spec, make_input(curve.meta(), static_cast<double>(p.tokens), opts.units)));
    }
    std::optional<TokenWindow> w;
    if (!windows.empty()) w = windows[c];
    asd_sum += asd(curve, spec, opts.asd, opts.units, w);
  }
  MetricReport rep;
  rep.r_squared = r_squared(actual, predicted);
  rep.huber = huber(actual, predicted, opts.huber_delta);
  rep.huber_delta = opts.huber_delta;
  rep.asd = asd_sum / static_cast<double>(set.size());
  rep.asd_points = opts.asd.n_points;
  rep.asd_window = windows.empty() ? "latter-half" : "held-out";
  rep.n_eval_points = actual.size();
  return rep;
}

/// Fixed column order: label, R², Huber loss, ASD.
inline void write_metric_table(std::ostream& out, std::span<const std::pair<std::string, MetricReport>> rows) {
  std::size_t w = 16;
  for (const auto& [label, _] : rows) w = std::max(w, label.size() + 2);
  out << text::pad_right("", w) << text::pad_left("R2", 10) << text::pad_left("Huber loss", 12)
      << text::pad_left("ASD", 12) << '\n';
  for (const auto& [label, m] : rows)
    out << text::pad_right(label, w) << text::pad_left(text::fixed(m.r_squared, 4), 10)
        << text::pad_left(text::fixed(m.huber, 6), 12) << text::pad_left(text::fixed(m.asd, 6), 12) << '\n';
}

}  // namespace p2law
