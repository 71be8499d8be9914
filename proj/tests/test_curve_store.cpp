#include <gtest/gtest.h>

#include <sstream>

#include "p2law/curve_store.hpp"
#include "test_support.hpp"

using namespace p2law;
using p2law::testing::simple_curve;

namespace {

const char* kTwoRuns =
    "## header comment\n"
    "#run a family=llama3 method=depth n0=1000000000 rho=0.25 l0=2.5 n_after=750000000\n"
    "#run b family=llama3 method=depth n0=1000000000 rho=0.35 l0=2.5 n_after=650000000\n"
    "a,0,3.5\n"
    "a,1000,3.1\n"
    "b,1000,3.4\n"
    "a,2000,3.0\n"
    "b,2000,3.2\n";

CurveSet parse(const std::string& s) {
  std::istringstream in(s);
  return parse_curves(in);
}

int parse_error_line(const std::string& s) {
  try {
    parse(s);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

}  // namespace

TEST(CurveStore, ParsesInterleavedRuns) {
  auto set = parse(kTwoRuns);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set.family(), "llama3");
  EXPECT_EQ(set.method(), Method::depth);
  EXPECT_EQ(set[0].size(), 3u);
  EXPECT_EQ(set[1].size(), 2u);
  EXPECT_EQ(set[0].points()[0].tokens, 0);
  EXPECT_DOUBLE_EQ(set[1].points()[1].loss, 3.2);
  EXPECT_DOUBLE_EQ(set[1].meta().rho, 0.35);
  EXPECT_EQ(set.total_points(), 5u);
}

TEST(CurveStore, RoundTripIsExact) {
  auto set = parse(kTwoRuns);
  std::ostringstream out;
  write_curves(out, set);
  auto again = parse(out.str());
  ASSERT_EQ(again.size(), set.size());
  for (std::size_t c = 0; c < set.size(); ++c) {
    EXPECT_EQ(again[c].meta().run_id, set[c].meta().run_id);
    EXPECT_EQ(again[c].meta().n_after, set[c].meta().n_after);
    ASSERT_EQ(again[c].size(), set[c].size());
    for (std::size_t i = 0; i < set[c].size(); ++i) {
      EXPECT_EQ(again[c].points()[i].tokens, set[c].points()[i].tokens);
      EXPECT_EQ(again[c].points()[i].loss, set[c].points()[i].loss);
    }
  }
  std::ostringstream twice;
  write_curves(twice, again);
  EXPECT_EQ(twice.str(), out.str());
}

TEST(CurveStore, RoundTripKeepsShortestDoubles) {
  auto c = simple_curve("x", {10, 20}, {0.1 + 0.2, 1.0 / 3.0});
  CurveSet set({c});
  std::ostringstream out;
  write_curves(out, set);
  auto again = parse(out.str());
  EXPECT_EQ(again[0].points()[0].loss, 0.1 + 0.2);
  EXPECT_EQ(again[0].points()[1].loss, 1.0 / 3.0);
}

TEST(CurveStore, NonMonotoneTokensReportLine) {
  std::string s =
      "#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=75\n"
      "a,10,3\n"
      "a,20,2.9\n"
      "a,15,2.8\n";
  EXPECT_EQ(parse_error_line(s), 4);
  try {
    parse(s);
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("non-monotone tokens at line 4"), std::string::npos);
  }
}

TEST(CurveStore, DuplicateTokensAreNonMonotone) {
  EXPECT_EQ(parse_error_line("#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=75\na,10,3\na,10,2.9\n"), 3);
}

TEST(CurveStore, HeterogeneousSetRejected) {
  std::string s =
      "#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=75\n"
      "#run b family=f method=width n0=100 rho=0.25 l0=2 n_after=75\n";
  EXPECT_EQ(parse_error_line(s), 2);
  std::string fam =
      "#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=75\n"
      "#run b family=g method=depth n0=100 rho=0.25 l0=2 n_after=75\n";
  EXPECT_EQ(parse_error_line(fam), 2);

  auto a = simple_curve("a", {1, 2}, {3, 2});
  RunMeta m = a.meta();
  m.run_id = "b";
  m.method = Method::width;
  LossCurve b(m, {{1, 3.0}, {2, 2.0}});
  EXPECT_THROW(CurveSet({a, b}), ValidationError);
}

TEST(CurveStore, DuplicateRunIdRejected) {
  auto a = simple_curve("a", {1, 2}, {3, 2});
  EXPECT_THROW(CurveSet({a, a}), ValidationError);
  EXPECT_EQ(parse_error_line("#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=75\n"
                             "#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=75\n"),
            2);
}

TEST(CurveStore, MalformedInputs) {
  const std::string hdr = "#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=75\n";
  EXPECT_EQ(parse_error_line("a,10,3\n"), 1);                       // checkpoint before manifest
  EXPECT_EQ(parse_error_line(hdr + "a,10\n"), 2);                    // missing field
  EXPECT_EQ(parse_error_line(hdr + "a,10,abc\n"), 2);                // bad number
  EXPECT_EQ(parse_error_line(hdr + "a,10,-1\n"), 2);                 // non-positive loss
  EXPECT_EQ(parse_error_line(hdr + "a,-5,3\n"), 2);                  // negative tokens
  EXPECT_EQ(parse_error_line("#run a family=f method=cube n0=100 rho=0.25 l0=2 n_after=75\n"), 1);
  EXPECT_EQ(parse_error_line("#run a family=f method=depth n0=100 rho=0.25 l0=2\n"), 1);
  EXPECT_EQ(parse_error_line("#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=75 extra=1\n"), 1);
  EXPECT_THROW(parse(hdr + "a,10,3\n"), ParseError);                 // fewer than 2 checkpoints
}

TEST(CurveStore, MetadataConsistency) {
  // n_after must not exceed n0 and must track n0 (1 - rho) for depth/width.
  EXPECT_EQ(parse_error_line("#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=120\n"), 1);
  EXPECT_EQ(parse_error_line("#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=40\n"), 1);
  EXPECT_NO_THROW(parse("#run a family=f method=depth n0=100 rho=0.25 l0=2 n_after=80\na,1,3\na,2,2\n"));
  // semi24 ignores rho.
  EXPECT_NO_THROW(parse("#run a family=f method=semi24 n0=100 rho=0.5 l0=2 n_after=50\na,1,3\na,2,2\n"));
}

TEST(CurveStore, MissingFileNamesPath) {
  try {
    load_curves("/nonexistent/dir/curves.cv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/curves.cv"), std::string::npos);
  }
}

TEST(CurveStore, SaveAndLoadFile) {
  auto dir = p2law::testing::scratch_dir("curve_store");
  auto set = parse(kTwoRuns);
  std::vector<std::string> comments{"generated for a test"};
  save_curves(dir / "c.cv", set, comments);
  auto again = load_curves(dir / "c.cv");
  EXPECT_EQ(again.size(), 2u);
  EXPECT_EQ(again[0].points()[2].loss, 3.0);
}

TEST(CurveStore, Slice) {
  auto c = simple_curve("a", {1, 2, 3, 4}, {4, 3, 2, 1});
  auto s = c.slice(1, 3);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.min_tokens(), 2);
  EXPECT_EQ(s.max_tokens(), 3);
  EXPECT_THROW(c.slice(0, 1), ValidationError);
}

TEST(CurveStore, DerivedSeries) {
  auto c = simple_curve("a", {10, 20}, {3.0, 2.75}, 1'000'000'000, 0.25);
  auto rel = relative_loss(c);
  EXPECT_DOUBLE_EQ(rel[0].y, 0.5);
  EXPECT_DOUBLE_EQ(rel[1].y, 0.25);

  auto norm = normalized_relative_loss(c, -1.0);
  // (1/0.25)^-1 = 0.25
  EXPECT_DOUBLE_EQ(norm[0].y, 2.0);

  auto comp = compute_axis(c);
  EXPECT_DOUBLE_EQ(comp[1].x, 6.0 * 750'000'000.0 * 20.0);
  EXPECT_DOUBLE_EQ(comp[1].y, 2.75);
}

TEST(CurveStore, NormalizationAtZeroRate) {
  auto m = p2law::testing::depth_meta("z", 1000, 0.0);
  LossCurve c(m, {{1, 3.0}, {2, 2.0}});
  EXPECT_THROW(normalized_relative_loss(c, -1.0), DomainError);
}

TEST(CurveStore, Interpolation) {
  Series s{{0, 0}, {10, 5}, {20, 25}};
  EXPECT_DOUBLE_EQ(interpolate(s, 5), 2.5);
  EXPECT_DOUBLE_EQ(interpolate(s, 15), 15.0);
  EXPECT_DOUBLE_EQ(interpolate(s, 20), 25.0);
  EXPECT_THROW(interpolate(s, 21), DomainError);
  EXPECT_THROW(interpolate(s, -1), DomainError);
}

TEST(CurveStore, Trend2OverlapZeroForExactLaw) {
  // Curves following excess = (1/rho)^gamma * f(D) collapse after normalization.
  const double gamma = -1.2;
  std::vector<LossCurve> curves;
  for (double rho : {0.15, 0.25, 0.35}) {
    std::vector<Checkpoint> pts;
    for (std::int64_t d = 1; d <= 10; ++d)
      pts.push_back({d * 100, 2.0 + std::pow(1.0 / rho, gamma) * (1.0 + 5.0 / static_cast<double>(d))});
    auto m = p2law::testing::depth_meta("r" + std::to_string(rho), 1'000'000'000, rho, 2.0);
    curves.emplace_back(m, pts);
  }
  EXPECT_LT(trend2_overlap(curves, gamma), 1e-12);
  EXPECT_GT(trend2_overlap(curves, 0.0), 1e-2);
}
