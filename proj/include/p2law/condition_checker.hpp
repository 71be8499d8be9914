#pragma once
//
// Verification of the necessary conditions a post-training law must meet:
//   1. dL/dD < 0
//   2. d2L/(dN0 dD) > 0           (smaller models descend faster)
//   3. dL ~ (1/rho)^gamma          (relative loss power law in rho)
// plus the rho -> 0 corollary (relative loss vanishes, needs gamma < 0).
// Conditions 1 and 2 are evaluated on a domain grid; closed-form sign rules
// are reported next to the grid verdict where they exist.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "p2law/error.hpp"
#include "p2law/format.hpp"
#include "p2law/law_family.hpp"

namespace p2law {

/// Grid over which conditions are quantified (law units).
struct DomainGrid {
  std::vector<double> n0_values{0.5, 1.0, 3.0, 8.0};
  std::vector<double> d_values{0.01, 0.1, 0.5, 1.0};
  std::vector<double> rho_values{0.15, 0.25, 0.35};

  void validate() const {
    if (n0_values.empty() || d_values.empty() || rho_values.empty()) throw ValidationError("empty domain grid");
    for (double v : n0_values)
      if (!(v > 0)) throw ValidationError("grid n0 values must be positive");
    for (double v : d_values)
      if (!(v > 0)) throw ValidationError("grid d values must be positive");
    for (double v : rho_values)
      if (!(v > 0 && v < 1)) throw ValidationError("grid rho values must lie in (0,1)");
  }
};

enum class Verdict { holds, fails, not_applicable };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::not_applicable: return "not-applicable";
  }
  return "?";
}

struct GridPoint {
  double n0 = 0, d = 0, rho = 0;
};

struct Witness {
  GridPoint at;
  double value = 0.0;
  bool indeterminate = false;  // |value| <= 1e-15
};

struct ConditionResult {
  std::string name;
  Verdict verdict = Verdict::not_applicable;
  std::vector<Witness> witnesses;          // failing grid points
  std::optional<double> worst_value;       // value closest to violating the inequality
  std::optional<std::string> analytic;     // closed-form sign rule and its outcome
  std::optional<bool> analytic_holds;
  std::vector<std::string> evaluation_errors;
  std::vector<std::pair<double, Verdict>> per_rho;  // condition 2 only
};

struct Condition3Result {
  ConditionResult power_law;  // ratio identity
  ConditionResult corollary;  // rho -> 0 gives zero relative loss
  double max_identity_error = 0.0;
};

struct ConditionReport {
  LawSpec spec;
  ConditionResult condition1;
  ConditionResult condition2;
  Condition3Result condition3;
};

inline constexpr double indeterminate_band = 1e-15;

namespace detail {

inline std::string describe(const GridPoint& p) {
  return "(n0=" + text::number(p.n0) + ", d=" + text::number(p.d) + ", rho=" + text::number(p.rho) + ")";
}

/// Evaluates `f` on every grid point and checks sign * f > 0.
template <class F>
ConditionResult grid_check(std::string name, const DomainGrid& grid, double sign, F&& f) {
  grid.validate();
  ConditionResult res;
  res.name = std::move(name);
  for (double rho : grid.rho_values) {
    bool ok = true;
    for (double n0 : grid.n0_values)
      for (double d : grid.d_values) {
        const GridPoint p{n0, d, rho};
        double v;
        try {
          v = f(LawInput{n0, d, rho, 2.0});
        } catch (const Error& e) {
          res.evaluation_errors.push_back(describe(p) + ": " + e.what());
          ok = false;
          continue;
        }
        const double s = sign * v;
        if (!res.worst_value || s < sign * *res.worst_value) res.worst_value = v;
        const bool indeterminate = std::abs(v) <= indeterminate_band;
        if (!(s > 0.0) || indeterminate) {
          res.witnesses.push_back({p, v, indeterminate});
          ok = false;
        }
      }
    res.per_rho.emplace_back(rho, ok ? Verdict::holds : Verdict::fails);
  }
  const bool holds = res.witnesses.empty() && res.evaluation_errors.empty();
  res.verdict = holds ? Verdict::holds : Verdict::fails;
  if (!holds && res.witnesses.empty()) {
    // Evaluation failures count as failures; keep a witness so every fail has one.
    res.witnesses.push_back({GridPoint{}, std::nan(""), true});
  }
  return res;
}

inline std::string sign_word(double v) { return v > 0 ? "> 0" : (v < 0 ? "< 0" : "= 0"); }

}  // namespace detail

/// dL/dD < 0 at every grid point.
inline ConditionResult check_condition1(const LawSpec& spec, const DomainGrid& grid = {}) {
  auto res = detail::grid_check("Condition 1 (dL/dD < 0)", grid, -1.0,
                                [&](const LawInput& in) { return partial_wrt_tokens(spec, in); });
  res.per_rho.clear();
  // chinchilla form: dL/dD = -prefactor * beta * D_C * D^(-beta-1)
  // openai form:     dL/dD = -prefactor * beta * D_C * B^(beta-1) / D^2, B > 0
  const double s = spec.get(Param::beta) * spec.get(Param::D_C);
  res.analytic = "beta*D_C = " + text::number(s) + " " + detail::sign_word(s);
  res.analytic_holds = s > 0;
  return res;
}

/// d2L/(dN0 dD) > 0 at every grid point, sliced by rho.
inline ConditionResult check_condition2(const LawSpec& spec, const DomainGrid& grid = {}) {
  auto res = detail::grid_check("Condition 2 (d2L/dN0dD > 0)", grid, +1.0,
                                [&](const LawInput& in) { return cross_partial(spec, in); });
  if (!is_openai_form(spec.id())) {
    if (!spec.has(Param::delta)) {
      res.analytic = "no N0 factor on the D term: cross partial identically 0";
      res.analytic_holds = false;
    } else {
      const double s = spec.get(Param::delta) * spec.get(Param::beta) * spec.get(Param::D_C);
      res.analytic = "delta*beta*D_C = " + text::number(s) + " " + detail::sign_word(s);
      res.analytic_holds = s > 0;
    }
  }
  return res;
}

/// Power-law identity dL(rho1)/dL(rho2) = (rho2/rho1)^gamma on seeded random
/// inputs, plus the rho -> 0 corollary (gamma < 0).
inline Condition3Result check_condition3(const LawSpec& spec, int n_draws = 100, std::uint64_t seed = 7) {
  Condition3Result out;
  out.power_law.name = "Condition 3 (dL ~ (1/rho)^gamma)";
  out.corollary.name = "rho -> 0 corollary (dL -> 0)";
  if (!uses_rho(spec.id())) {
    out.power_law.verdict = Verdict::not_applicable;
    out.corollary.verdict = Verdict::not_applicable;
    out.power_law.analytic = "law takes no pruning rate";
    return out;
  }
  const double gamma = spec.get(Param::gamma);
  out.power_law.analytic = "prefactor (1/rho)^gamma multiplies a rho-free expression";
  out.power_law.analytic_holds = true;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> n0(0.5, 8.0), d(0.01, 1.0), rho(0.05, 0.6);
  for (int i = 0; i < n_draws; ++i) {
    const double n = n0(rng), dd = d(rng), r1 = rho(rng), r2 = rho(rng);
    const GridPoint p{n, dd, r1};
    try {
      const double a = excess_loss(spec, {n, dd, r1, 0.0});
      const double b = excess_loss(spec, {n, dd, r2, 0.0});
      if (b == 0.0 && a == 0.0) continue;
      const double expected = std::pow(r2 / r1, gamma);
      const double err = std::abs(a / b - expected) / std::abs(expected);
      out.max_identity_error = std::max(out.max_identity_error, err);
      if (!(err <= 1e-12)) out.power_law.witnesses.push_back({p, a / b, false});
    } catch (const Error& e) {
      out.power_law.evaluation_errors.push_back(detail::describe(p) + ": " + e.what());
    }
  }
  out.power_law.verdict =
      out.power_law.witnesses.empty() && out.power_law.evaluation_errors.empty() ? Verdict::holds : Verdict::fails;
  if (out.power_law.verdict == Verdict::fails && out.power_law.witnesses.empty())
    out.power_law.witnesses.push_back({GridPoint{}, std::nan(""), true});

  out.corollary.analytic = "gamma = " + text::number(gamma) + " " + detail::sign_word(gamma) + " (needs < 0)";
  out.corollary.analytic_holds = gamma < 0;
  out.corollary.verdict = gamma < 0 ? Verdict::holds : Verdict::fails;
  if (gamma >= 0) {
    // Witness: relative loss at a tiny rate does not shrink.
    const GridPoint p{1.0, 0.1, 1e-6};
    double v = std::nan("");
    try {
      v = excess_loss(spec, {p.n0, p.d, p.rho, 0.0});
    } catch (const Error&) {
    }
    out.corollary.witnesses.push_back({p, v, false});
  }
  out.corollary.worst_value = gamma;
  return out;
}

inline ConditionReport check_conditions(const LawSpec& spec, const DomainGrid& grid = {}) {
  return {spec, check_condition1(spec, grid), check_condition2(spec, grid), check_condition3(spec)};
}

struct AuditResult {
  double max_discrepancy = 0.0;
  std::vector<std::string> evaluation_errors;
};

/// Worst discrepancy between the analytic dL/dD and d2L/dN0dD and five-point
/// central differences with relative step h_rel. Relative error is used unless
/// the analytic value is below 1e-10 in magnitude, in which case absolute error.
inline AuditResult finite_difference_audit(const LawSpec& spec, const DomainGrid& grid, double h_rel) {
  if (!(h_rel > 0.0 && h_rel <= 1e-2)) throw ValidationError("h_rel must lie in (0, 1e-2]");
  grid.validate();
  AuditResult out;
  auto discrepancy = [](double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    return std::abs(analytic) < 1e-10 ? diff : diff / std::abs(analytic);
  };
  auto stencil = [](auto f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
  };
  for (double rho : grid.rho_values)
    for (double n0 : grid.n0_values)
      for (double d : grid.d_values) {
        const LawInput in{n0, d, rho, 2.0};
        try {
          const double fd_d = stencil([&](double x) { return evaluate(spec, {n0, x, rho, 2.0}); }, d, h_rel * d);
          out.max_discrepancy = std::max(out.max_discrepancy, discrepancy(partial_wrt_tokens(spec, in), fd_d));
          const double fd_x =
              stencil([&](double x) { return partial_wrt_tokens(spec, {x, d, rho, 2.0}); }, n0, h_rel * n0);
          out.max_discrepancy = std::max(out.max_discrepancy, discrepancy(cross_partial(spec, in), fd_x));
        } catch (const Error& e) {
          out.evaluation_errors.push_back(detail::describe({n0, d, rho}) + ": " + e.what());
        }
      }
  return out;
}

inline std::string_view mark(Verdict v) {
  switch (v) {
    case Verdict::holds: return "✓";
    case Verdict::fails: return "✗";
    case Verdict::not_applicable: return "-";
  }
  return "?";
}

inline void write_condition_report(std::ostream& out, const ConditionReport& r) {
  out << "law: " << to_string(r.spec) << '\n';
  auto line = [&](const ConditionResult& c) {
    out << "  " << mark(c.verdict) << ' ' << text::pad_right(c.name, 34) << ' ' << to_string(c.verdict);
    if (c.analytic) out << "  [analytic: " << *c.analytic << "]";
    out << '\n';
    for (std::size_t i = 0; i < c.witnesses.size() && i < 3; ++i) {
      const auto& w = c.witnesses[i];
      out << "      witness " << detail::describe(w.at) << " value=" << text::number(w.value)
          << (w.indeterminate ? " (indeterminate)" : "") << '\n';
    }
    if (c.witnesses.size() > 3) out << "      ... " << c.witnesses.size() - 3 << " more witnesses\n";
    for (const auto& e : c.evaluation_errors) out << "      error " << e << '\n';
    if (!c.per_rho.empty()) {
      out << "      per-rho:";
      for (const auto& [rho, v] : c.per_rho) out << " rho=" << text::number(rho) << ' ' << mark(v);
      out << '\n';
    }
  };
  line(r.condition1);
  line(r.condition2);
  line(r.condition3.power_law);
  line(r.condition3.corollary);
}

/// Compliance table: one row per (label, law), one column per label group.
struct ComplianceCell {
  std::string row;     // e.g. "llama3 L1"
  std::string column;  // e.g. "depth"
  Verdict verdict;
};

inline void write_compliance_table(std::ostream& out, std::span<const ComplianceCell> cells) {
  std::vector<std::string> rows, cols;
  for (const auto& c : cells) {
    if (std::find(rows.begin(), rows.end(), c.row) == rows.end()) rows.push_back(c.row);
    if (std::find(cols.begin(), cols.end(), c.column) == cols.end()) cols.push_back(c.column);
  }
  out << text::pad_right("", 16);
  for (const auto& c : cols) out << text::pad_right(c, 10);
  out << '\n';
  for (const auto& r : rows) {
    out << text::pad_right(r, 16);
    for (const auto& c : cols) {
      std::string_view m = " ";
      for (const auto& cell : cells)
        if (cell.row == r && cell.column == c) m = mark(cell.verdict);
      // pad by code points, the marks are multibyte
      out << m << std::string(9, ' ');
    }
    out << '\n';
  }
}

}  // namespace p2law
