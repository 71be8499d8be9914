#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "p2law/experiment_runner.hpp"
#include "p2law/fit_metrics.hpp"
#include "test_support.hpp"

using namespace p2law;
using p2law::testing::synth_grid;
using p2law::testing::truth_l1;

namespace {

// Replace every loss by f(loss, tokens).
template <class F>
CurveSet map_losses(const CurveSet& set, F f) {
  std::vector<LossCurve> out;
  for (const auto& c : set.curves()) {
    std::vector<Checkpoint> pts(c.points().begin(), c.points().end());
    for (auto& p : pts) p.loss = f(p.loss, p.tokens);
    out.emplace_back(c.meta(), pts);
  }
  return CurveSet(out);
}

}  // namespace

TEST(FitMetrics, RSquaredHandValues) {
  std::vector<double> a{1, 2, 3}, p{1, 2, 4};
  // SS_res = 1, SS_tot = 2
  EXPECT_DOUBLE_EQ(r_squared(a, p), 0.5);
  EXPECT_DOUBLE_EQ(r_squared(a, a), 1.0);
  std::vector<double> far{10, 10, 10};
  EXPECT_LT(r_squared(a, far), 0.0);
  std::vector<double> flat{2, 2, 2};
  EXPECT_THROW(r_squared(flat, a), ValidationError);
  EXPECT_THROW(r_squared(std::vector<double>{1, 2}, std::vector<double>{1}), ValidationError);
}

TEST(FitMetrics, HuberHandValues) {
  std::vector<double> zero{0.0};
  EXPECT_DOUBLE_EQ(huber(zero, std::vector<double>{2.0}, 1.0), 1.5);
  EXPECT_NEAR(huber(zero, std::vector<double>{1e-3}, 1.0), 0.5e-6, 1e-20);
  // Mean, not sum.
  std::vector<double> a{0.0, 0.0}, p{2.0, 0.0};
  EXPECT_DOUBLE_EQ(huber(a, p, 1.0), 0.75);
  EXPECT_THROW(huber(a, p, 0.0), ValidationError);
}

TEST(FitMetrics, AsdHandValues) {
  std::vector<double> a{1.0, 1.1, 1.1}, p{1.0, 1.0, 1.0};
  // Two differences, |0.1| + |0|, divided by N = 3.
  EXPECT_NEAR(asd(a, p), 0.1 / 3.0, 1e-15);
  EXPECT_EQ(asd(a, a), 0.0);
  // Differences -0.1, -0.05 against -0.05, -0.1.
  std::vector<double> y{1.0, 0.9, 0.85}, yhat{1.0, 0.95, 0.85};
  EXPECT_NEAR(asd(y, yhat), 0.1 / 3.0, 1e-12);
}

TEST(FitMetrics, AsdIgnoresConstantOffset) {
  std::vector<double> a{3.0, 2.5, 2.2, 2.1}, p{2.9, 2.6, 2.25, 2.0};
  std::vector<double> shifted = p;
  for (auto& v : shifted) v += 0.37;
  EXPECT_NEAR(asd(a, p), asd(a, shifted), 1e-15);
}

TEST(FitMetrics, CurveAsdNearZeroForTrueLaw) {
  auto spec = truth_l1();
  auto set = generate_synthetic(synth_grid(spec, 400));
  for (const auto& c : set.curves()) EXPECT_LT(asd(c, spec), 1e-5);
}

TEST(FitMetrics, CurveAsdOffsetInvariant) {
  auto spec = truth_l1();
  auto set = generate_synthetic(synth_grid(spec, 100));
  auto shifted = map_losses(set, [](double l, std::int64_t) { return l + 0.05; });
  for (std::size_t i = 0; i < set.size(); ++i) EXPECT_NEAR(asd(set[i], spec), asd(shifted[i], spec), 1e-12);
  // Huber and R2 do see the offset.
  auto m0 = evaluate_metrics(set, spec);
  auto m1 = evaluate_metrics(shifted, spec);
  EXPECT_NEAR(m0.asd, m1.asd, 1e-12);
  EXPECT_GT(m1.huber, m0.huber);
  EXPECT_LT(m1.r_squared, m0.r_squared);
}

TEST(FitMetrics, CurveAsdSeesSlopeErrors) {
  auto spec = truth_l1();
  auto set = generate_synthetic(synth_grid(spec, 100));
  auto tilted = map_losses(set, [](double l, std::int64_t d) { return l + 0.05 * static_cast<double>(d) / 1e9; });
  for (std::size_t i = 0; i < set.size(); ++i) {
    // Window [0.5025e9, 1e9] carries a total tilt of 0.05 * 0.4975, divided by N = 50.
    EXPECT_NEAR(asd(tilted[i], spec), 0.05 * 0.4975 / 50.0, 2e-5);
  }
}

TEST(FitMetrics, AxisChoiceAgreesOnLinearSchedule) {
  auto spec = truth_l1();
  auto s = synth_grid(spec, 101, 0.0);
  s.spacing = Spacing::linear;
  auto set = map_losses(generate_synthetic(s), [](double l, std::int64_t d) {
    return l + 0.01 * std::sin(static_cast<double>(d) / 5e7);
  });
  AsdOptions tok{50, AsdAxis::tokens}, idx{50, AsdAxis::checkpoint_index};
  for (const auto& c : set.curves()) EXPECT_NEAR(asd(c, spec, tok), asd(c, spec, idx), 1e-9);
}

TEST(FitMetrics, AsdWindowValidation) {
  auto spec = truth_l1();
  auto set = generate_synthetic(synth_grid(spec, 20));
  EXPECT_THROW(asd(set[0], spec, AsdOptions{1, AsdAxis::tokens}), ValidationError);
  EXPECT_THROW(asd(set[0], spec, {}, Units::billions, TokenWindow{1e8, 1e8}), ValidationError);
  auto w = latter_half(set[0]);
  EXPECT_DOUBLE_EQ(w.hi, static_cast<double>(set[0].max_tokens()));
  EXPECT_DOUBLE_EQ(w.lo, 0.5 * static_cast<double>(set[0].min_tokens() + set[0].max_tokens()));
}

TEST(FitMetrics, PooledMetricsAndZeroTokenExclusion) {
  auto spec = truth_l1();
  auto set = generate_synthetic(synth_grid(spec, 30));
  std::vector<LossCurve> curves;
  for (const auto& c : set.curves()) {
    std::vector<Checkpoint> pts{{0, 9.0}};
    pts.insert(pts.end(), c.points().begin(), c.points().end());
    curves.emplace_back(c.meta(), pts);
  }
  auto m = evaluate_metrics(CurveSet(curves), spec);
  EXPECT_EQ(m.n_eval_points, set.total_points());
  EXPECT_NEAR(m.r_squared, 1.0, 1e-12);
  EXPECT_LT(m.huber, 1e-25);
  EXPECT_EQ(m.asd_window, "latter-half");

  // Pooled R2 differs from the mean of per-curve R2 values.
  auto noisy = generate_synthetic(synth_grid(spec, 30, 2e-3, 5));
  auto pooled = evaluate_metrics(noisy, spec).r_squared;
  double mean = 0.0;
  for (const auto& c : noisy.curves()) mean += evaluate_metrics(CurveSet({c}), spec).r_squared;
  mean /= static_cast<double>(noisy.size());
  EXPECT_NE(pooled, mean);
}

TEST(FitMetrics, WindowOverride) {
  auto spec = truth_l1();
  auto set = generate_synthetic(synth_grid(spec, 30));
  std::vector<TokenWindow> one{TokenWindow{1e7, 1e8}};
  EXPECT_THROW(evaluate_metrics(set, spec, {}, one), ValidationError);
  std::vector<TokenWindow> all(set.size(), TokenWindow{1e7, 1e8});
  auto m = evaluate_metrics(set, spec, {}, all);
  EXPECT_EQ(m.asd_window, "held-out");
}

TEST(FitMetrics, TableLayout) {
  MetricReport r;
  r.r_squared = 0.9717;
  r.huber = 0.000016;
  r.asd = 0.000619;
  std::vector<std::pair<std::string, MetricReport>> rows{{"L1", r}};
  std::ostringstream out;
  write_metric_table(out, rows);
  EXPECT_NE(out.str().find("0.9717"), std::string::npos);
  EXPECT_NE(out.str().find("0.000016"), std::string::npos);
  EXPECT_NE(out.str().find("0.000619"), std::string::npos);
  EXPECT_LT(out.str().find("R2"), out.str().find("Huber"));
  EXPECT_LT(out.str().find("Huber"), out.str().find("ASD"));
}
