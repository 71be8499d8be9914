#pragma once
//
// Published fitted parameters for the Llama-3 and Qwen-2.5 series, used as
// named fixtures so condition checks and predictions run without data.
// Unit convention of these values is not known; only their signs are
// unit-invariant.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2law/curve_store.hpp"
#include "p2law/law_family.hpp"

namespace p2law::presets {

struct FittedRow {
  std::string_view family;  // "llama3" or "qwen2.5"
  Method method;
  LawId law;  // L1/L2/L3 for depth and width, the *_24 variant for semi24
  std::array<double, 7> values;  // law_params order, unused tail ignored
};

// clang-format off
inline constexpr std::array<FittedRow, 18> fitted_rows = {{
  // Llama-3 series
  {"llama3", Method::depth,  LawId::L1,    {0.02, 5.94, 0.14, -1.57, 0.23, -1.08, 0.29}},
  {"llama3", Method::depth,  LawId::L2,    {0.64, 7.99, 0.73, 2.45, 0.47, -1.08}},
  {"llama3", Method::depth,  LawId::L3,    {5.93, 0.54, 0.30, -1.06, 0.15}},
  {"llama3", Method::width,  LawId::L1,    {0.05, 5.86, -2.52, -1.68, 0.08, -0.97, 0.38}},
  {"llama3", Method::width,  LawId::L2,    {0.00, 3.53, 0.20, -21.89, 0.25, -0.97}},
  {"llama3", Method::width,  LawId::L3,    {3.87, 0.53, 0.34, -0.98, -0.05}},
  {"llama3", Method::semi24, LawId::L1_24, {38.26, 0.87, 2.49, 26.53, 0.37, 0.05}},
  {"llama3", Method::semi24, LawId::L2_24, {0.53, 0.89, 2.19, 0.92, 0.41}},
  {"llama3", Method::semi24, LawId::L3_24, {0.80, 2.5, 0.22, 0.07}},
  // Qwen-2.5 series
  {"qwen2.5", Method::depth,  LawId::L1,    {0.01, 4.32, 0.20, -3.73, 0.21, -1.17, 0.22}},
  {"qwen2.5", Method::depth,  LawId::L2,    {0.02, 4.78, 0.62, 4.08, 0.32, -1.17}},
  {"qwen2.5", Method::depth,  LawId::L3,    {4.77, 0.87, 0.36, -1.15, 0.16}},
  {"qwen2.5", Method::width,  LawId::L1,    {-0.58, 7.01, -1.89, 0.38, 0.10, -1.28, 0.16}},
  {"qwen2.5", Method::width,  LawId::L2,    {-0.01, 5.84, -0.65, -1.58, 0.18, -1.28}},
  {"qwen2.5", Method::width,  LawId::L3,    {5.95, -0.91, 0.16, -1.28, 0.02}},
  {"qwen2.5", Method::semi24, LawId::L1_24, {1.85, 0.93, 0.32, -0.12, 0.10, 0.17}},
  {"qwen2.5", Method::semi24, LawId::L2_24, {1.52, 0.75, 0.92, 0.15, 0.18}},
  {"qwen2.5", Method::semi24, LawId::L3_24, {0.76, 2.41, 0.16, 0.09}},
}};
// clang-format on

inline LawSpec to_spec(const FittedRow& row) {
  const auto n = law_params(row.law).size();
  return LawSpec(row.law, std::vector<double>(row.values.begin(), row.values.begin() + static_cast<std::ptrdiff_t>(n)));
}

/// Published Condition-2 compliance (true = satisfied).
struct ComplianceRow {
  std::string_view family;
  Method method;
  LawId law;
  bool satisfied;
};

// clang-format off
inline constexpr std::array<ComplianceRow, 18> published_compliance = {{
  {"llama3", Method::depth, LawId::L1, true},  {"llama3", Method::width, LawId::L1, true},  {"llama3", Method::semi24, LawId::L1_24, true},
  {"llama3", Method::depth, LawId::L2, false}, {"llama3", Method::width, LawId::L2, false}, {"llama3", Method::semi24, LawId::L2_24, false},
  {"llama3", Method::depth, LawId::L3, true},  {"llama3", Method::width, LawId::L3, false}, {"llama3", Method::semi24, LawId::L3_24, true},
  {"qwen2.5", Method::depth, LawId::L1, true},  {"qwen2.5", Method::width, LawId::L1, true},  {"qwen2.5", Method::semi24, LawId::L1_24, true},
  {"qwen2.5", Method::depth, LawId::L2, false}, {"qwen2.5", Method::width, LawId::L2, false}, {"qwen2.5", Method::semi24, LawId::L2_24, false},
  {"qwen2.5", Method::depth, LawId::L3, true},  {"qwen2.5", Method::width, LawId::L3, true},  {"qwen2.5", Method::semi24, LawId::L3_24, true},
}};
// clang-format on

/// Published metric values for the main law comparison. Documentation only:
/// they depend on checkpoints that are not available here and are never
/// asserted by tests.
struct ReportedMetrics {
  std::string_view family;
  Method method;
  std::string_view law;
  double r_squared, huber, asd;
};

// clang-format off
inline constexpr std::array<ReportedMetrics, 18> reported_metrics = {{
  {"llama3", Method::depth, "L1", 0.9717, 0.000016, 0.000619}, {"llama3", Method::width, "L1", -1.2985, 0.000177, 0.000592}, {"llama3", Method::semi24, "L1", 0.8126, 0.000056, 0.001466},
  {"llama3", Method::depth, "L2", 0.9300, 0.000045, 0.001150}, {"llama3", Method::width, "L2", -2.5578, 0.000450, 0.001419}, {"llama3", Method::semi24, "L2", 0.7797, 0.000079, 0.002294},
  {"llama3", Method::depth, "L3", 0.7737, 0.000118, 0.000827}, {"llama3", Method::width, "L3", -4.5905, 0.000776, 0.001754}, {"llama3", Method::semi24, "L3", -0.2555, 0.000493, 0.002054},
  {"qwen2.5", Method::depth, "L1", 0.9781, 0.000011, 0.000524}, {"qwen2.5", Method::width, "L1", 0.9891, 0.000010, 0.000648}, {"qwen2.5", Method::semi24, "L1", 0.9995, 0.000000, 0.000191},
  {"qwen2.5", Method::depth, "L2", 0.9423, 0.000031, 0.000879}, {"qwen2.5", Method::width, "L2", 0.9803, 0.000027, 0.000712}, {"qwen2.5", Method::semi24, "L2", 0.9867, 0.000010, 0.000753},
  {"qwen2.5", Method::depth, "L3", 0.8855, 0.000075, 0.001270}, {"qwen2.5", Method::width, "L3", 0.9824, 0.000024, 0.000733}, {"qwen2.5", Method::semi24, "L3", 0.9930, 0.000005, 0.000491},
}};
// clang-format on

/// Preset names are `paper-<llama|qwen>-<depth|width|semi24>`.
inline std::optional<std::pair<std::string_view, Method>> parse_preset_name(std::string_view name) {
  if (!name.starts_with("paper-")) return std::nullopt;
  name.remove_prefix(6);
  auto dash = name.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  auto fam = name.substr(0, dash);
  auto method = parse_method(name.substr(dash + 1));
  if (!method) return std::nullopt;
  if (fam == "llama") return std::pair{std::string_view("llama3"), *method};
  if (fam == "qwen") return std::pair{std::string_view("qwen2.5"), *method};
  return std::nullopt;
}

/// Fitted spec for a preset. `law` may name either the rho form (L1) or the
/// 2:4 form (L1_24); for semi24 presets L1/L2/L3 map to their 2:4 variants.
inline std::optional<LawSpec> lookup(std::string_view preset, LawId law) {
  auto key = parse_preset_name(preset);
  if (!key) return std::nullopt;
  if (key->second == Method::semi24) {
    if (law == LawId::L1) law = LawId::L1_24;
    if (law == LawId::L2) law = LawId::L2_24;
    if (law == LawId::L3) law = LawId::L3_24;
  }
  for (const auto& row : fitted_rows)
    if (row.family == key->first && row.method == key->second && row.law == law) return to_spec(row);
  return std::nullopt;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (auto fam : {"llama", "qwen"})
    for (auto m : {"depth", "width", "semi24"}) out.push_back(std::string("paper-") + fam + "-" + m);
  return out;
}

}  // namespace p2law::presets
