#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "p2law/curve_store.hpp"
#include "p2law/experiment_runner.hpp"
#include "p2law/law_family.hpp"

namespace p2law::testing {

// A well-conditioned L1 law used as ground truth for synthetic data.
inline LawSpec truth_l1() { return LawSpec(LawId::L1, {0.4, 0.6, 0.25, 0.7, 0.4, -1.1, 0.3}); }

inline SynthSpec synth_grid(const LawSpec& law, std::size_t points = 200, double sigma = 0.0, std::uint64_t seed = 11) {
  SynthSpec s{law};
  s.method = is_semi24_law(law.id()) ? Method::semi24 : Method::depth;
  s.n0_list = {500'000'000, 1'500'000'000, 4'000'000'000};
  s.rho_list = s.method == Method::semi24 ? std::vector<double>{} : std::vector<double>{0.15, 0.25, 0.35};
  s.l0_list = {2.9, 2.6, 2.3};
  s.n_points = points;
  s.noise_sigma = sigma;
  s.seed = seed;
  return s;
}

inline RunMeta depth_meta(std::string id, std::int64_t n0, double rho, double l0 = 2.5) {
  RunMeta m;
  m.run_id = std::move(id);
  m.family = "fam";
  m.method = Method::depth;
  m.n0 = n0;
  m.rho = rho;
  m.l0 = l0;
  m.n_after = static_cast<std::int64_t>(std::llround(static_cast<double>(n0) * (1.0 - rho)));
  return m;
}

inline LossCurve simple_curve(std::string id, std::vector<std::int64_t> tokens, std::vector<double> loss,
                              std::int64_t n0 = 1'000'000'000, double rho = 0.25) {
  std::vector<Checkpoint> pts;
  for (std::size_t i = 0; i < tokens.size(); ++i) pts.push_back({tokens[i], loss[i]});
  return LossCurve(depth_meta(std::move(id), n0, rho), std::move(pts));
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("p2law_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Five-point central difference.
template <class F>
double central_diff(F f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

}  // namespace p2law::testing
