#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "p2law/cli.hpp"
#include "test_support.hpp"

using namespace p2law;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

// Writes a true-law params file and a zero-noise curve file into dir.
std::filesystem::path make_curves(const std::filesystem::path& dir) {
  std::ofstream(dir / "truth.par") << "L1: N_C=0.4, D_C=0.6, E=0.25, alpha=0.7, beta=0.4, gamma=-1.1, delta=0.3\n";
  auto r = run({"synth", "--law", "L1", "--params", (dir / "truth.par").string(), "--n0", "5e8,1.5e9,4e9", "--l0",
                "2.9,2.6,2.3", "--points", "40", "--out", (dir / "synth").string(), "--seed", "11"});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir / "synth" / "synth.cv";
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* cmd : {"fit", "evaluate", "conditions", "generalize", "predict", "synth", "compare"})
    EXPECT_TRUE(contains(r.out, cmd)) << cmd;
  auto f = run({"fit", "--help"});
  EXPECT_EQ(f.code, 0);
  EXPECT_TRUE(contains(f.out, "--starts"));
  EXPECT_TRUE(contains(f.out, "32"));
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  auto dir = p2law::testing::scratch_dir("cli_usage");
  auto missing = run({"fit", "--curves", (dir / "nope.cv").string(), "--law", "L1", "--out", dir.string()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_TRUE(contains(missing.err, "nope.cv"));
  EXPECT_EQ(run({"fit", "--curves", "x.cv"}).code, 1);  // --law missing
  EXPECT_EQ(run({"fit", "--curves", "x.cv", "--law", "L1", "--units", "furlongs"}).code, 1);
}

TEST(Cli, LawMethodMismatchExitsOne) {
  auto dir = p2law::testing::scratch_dir("cli_mismatch");
  auto curves = make_curves(dir);
  auto r = run({"fit", "--curves", curves.string(), "--law", "L2_24", "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "law/method mismatch"));
  EXPECT_EQ(run({"fit", "--curves", curves.string(), "--law", "L7", "--out", (dir / "o").string()}).code, 1);
}

TEST(Cli, FitWritesArtifactsDeterministically) {
  auto dir = p2law::testing::scratch_dir("cli_fit");
  auto curves = make_curves(dir);
  auto a = run({"fit", "--curves", curves.string(), "--law", "L1", "--starts", "8", "--seed", "3", "--out",
                (dir / "a").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  auto b = run({"fit", "--curves", curves.string(), "--law", "L1", "--starts", "8", "--seed", "3", "--out",
                (dir / "b").string()});
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
  for (const char* f : {"fit_report.txt", "params.par", "plot_data.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  EXPECT_TRUE(contains(a.out, "converged: true"));

  auto params = cli::load_params(dir / "a" / "params.par");
  EXPECT_EQ(params.spec.id(), LawId::L1);
  ASSERT_TRUE(params.units.has_value());
  EXPECT_EQ(*params.units, Units::billions);
  EXPECT_NEAR(params.spec.get(Param::gamma), -1.1, 1e-8);

  auto meta = slurp(dir / "a" / "run.meta");
  EXPECT_TRUE(contains(meta, "seed=3"));
  EXPECT_TRUE(contains(meta, "fit.starts=8"));
}

TEST(Cli, NonConvergedFitExitsTwo) {
  auto dir = p2law::testing::scratch_dir("cli_nonconv");
  auto curves = make_curves(dir);
  auto r = run({"fit", "--curves", curves.string(), "--law", "L1", "--starts", "2", "--max-iter", "1", "--out",
                (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.out, "converged: false"));
}

TEST(Cli, EvaluateWithFittedParams) {
  auto dir = p2law::testing::scratch_dir("cli_eval");
  auto curves = make_curves(dir);
  auto r = run({"evaluate", "--curves", curves.string(), "--params", (dir / "truth.par").string(), "--out",
                (dir / "e").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "1.0000"));
  EXPECT_TRUE(std::filesystem::exists(dir / "e" / "metrics.txt"));
  EXPECT_EQ(run({"evaluate", "--curves", curves.string(), "--params", (dir / "missing.par").string(), "--out",
                 (dir / "e").string()})
                .code,
            1);
}

TEST(Cli, ConditionsOnPresets) {
  auto dir = p2law::testing::scratch_dir("cli_cond");
  auto all = run({"conditions", "--preset", "all", "--out", dir.string()});
  ASSERT_EQ(all.code, 0) << all.err;
  EXPECT_TRUE(contains(all.out, "llama3 L2"));
  EXPECT_TRUE(contains(all.out, "✗"));
  auto one = run({"conditions", "--preset", "paper-qwen-width", "--law", "L3", "--out", dir.string()});
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_TRUE(contains(one.out, "Condition 2"));
  EXPECT_TRUE(contains(one.out, "finite-difference audit"));
  EXPECT_EQ(run({"conditions", "--preset", "paper-mistral-depth", "--out", dir.string()}).code, 1);
  EXPECT_EQ(run({"conditions", "--out", dir.string()}).code, 1);
}

TEST(Cli, PredictMatchesLibrary) {
  auto dir = p2law::testing::scratch_dir("cli_predict");
  auto r = run({"predict", "--preset", "paper-llama-depth", "--law", "L1", "--n0", "8e9", "--rho", "0.25",
                "--epsilon", "1e-3", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto m = p2law::testing::depth_meta("prediction", 8'000'000'000, 0.25);
  auto p = predict_flattening(*presets::lookup("paper-llama-depth", LawId::L1), m, {1e-3});
  EXPECT_TRUE(contains(r.out, text::scientific(p.compute, 6))) << r.out;
}

TEST(Cli, ConfigFileWithCommandLineOverride) {
  auto dir = p2law::testing::scratch_dir("cli_config");
  auto curves = make_curves(dir);
  std::ofstream(dir / "run.cfg") << "# defaults for this study\nstarts=5\nseed=9\nlaw=L3\n";
  auto r = run({"fit", "--config", (dir / "run.cfg").string(), "--curves", curves.string(), "--law", "L1", "--out",
                (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "law_id: L1"));
  auto meta = slurp(dir / "o" / "run.meta");
  EXPECT_TRUE(contains(meta, "fit.starts=5"));
  EXPECT_TRUE(contains(meta, "seed=9"));

  auto over = run({"--seed", "4", "fit", "--config", (dir / "run.cfg").string(), "--curves", curves.string(), "--out",
                   (dir / "p").string()});
  ASSERT_EQ(over.code, 0) << over.err;
  EXPECT_TRUE(contains(over.out, "law_id: L3"));
  EXPECT_TRUE(contains(slurp(dir / "p" / "run.meta"), "seed=4"));

  std::ofstream(dir / "bad.cfg") << "starts\n";
  EXPECT_EQ(run({"fit", "--config", (dir / "bad.cfg").string(), "--curves", curves.string(), "--law", "L1"}).code, 1);
}

TEST(Cli, GeneralizeAndCompare) {
  auto dir = p2law::testing::scratch_dir("cli_gen");
  auto curves = make_curves(dir);
  auto g = run({"generalize", "--curves", curves.string(), "--law", "L1", "--starts", "8", "--out",
                (dir / "g").string()});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_TRUE(contains(g.out, "held-out"));
  auto bad = run({"generalize", "--curves", curves.string(), "--law", "L1", "--protocol", "pruning_rate",
                  "--holdout-rho", "0.15,0.25,0.35", "--out", (dir / "g").string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_TRUE(contains(bad.err, "holdout exhausts fitting data"));

  auto c = run({"compare", "--curves", curves.string(), "--laws", "L1,L3", "--starts", "6", "--out",
                (dir / "c").string()});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_LT(c.out.find("L1"), c.out.find("L3"));
}

TEST(Cli, SynthFromPresetRoundTripsThroughParser) {
  auto dir = p2law::testing::scratch_dir("cli_synth");
  auto r = run({"synth", "--law", "L2", "--preset", "paper-qwen-semi24", "--points", "10", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto set = load_curves(dir / "synth.cv");
  EXPECT_EQ(set.method(), Method::semi24);
  EXPECT_EQ(set.family(), "qwen2.5");
  EXPECT_EQ(set[0].size(), 10u);
}
