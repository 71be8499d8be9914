#pragma once
//
// Candidate parameterizations of the post-training loss of a pruned model,
// with closed-form derivatives.
//
// Chinchilla-form laws:
//   loss = shift + (1/rho)^gamma (1/N0)^delta (N_C/N0^alpha + D_C/D^beta + E)
// OpenAI-form laws:
//   loss = shift + (1/rho)^gamma (1/N0)^delta (N_C/N0^alpha + D_C/D)^beta
//
// shift is l0 for the rho-laws (L1..L5) and 0 for the 2:4 variants and the
// base forms. A parameter a law does not use is treated as zero, which
// removes the corresponding factor or term.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "p2law/curve_store.hpp"
#include "p2law/error.hpp"
#include "p2law/format.hpp"

namespace p2law {

enum class LawId { L1, L2, L3, L4, L5, L1_24, L2_24, L3_24, chinchilla_base, openai_base };

enum class Param { N_C, D_C, E, alpha, beta, gamma, delta };

inline constexpr std::array<LawId, 10> all_laws = {LawId::L1,    LawId::L2,    LawId::L3,    LawId::L4,
                                                   LawId::L5,    LawId::L1_24, LawId::L2_24, LawId::L3_24,
                                                   LawId::chinchilla_base, LawId::openai_base};

inline std::string_view to_string(LawId id) {
  switch (id) {
    case LawId::L1: return "L1";
    case LawId::L2: return "L2";
    case LawId::L3: return "L3";
    case LawId::L4: return "L4";
    case LawId::L5: return "L5";
    case LawId::L1_24: return "L1_24";
    case LawId::L2_24: return "L2_24";
    case LawId::L3_24: return "L3_24";
    case LawId::chinchilla_base: return "chinchilla_base";
    case LawId::openai_base: return "openai_base";
  }
  return "?";
}

inline std::optional<LawId> parse_law_id(std::string_view s) {
  for (auto id : all_laws)
    if (to_string(id) == s) return id;
  return std::nullopt;
}

inline std::string_view to_string(Param p) {
  switch (p) {
    case Param::N_C: return "N_C";
    case Param::D_C: return "D_C";
    case Param::E: return "E";
    case Param::alpha: return "alpha";
    case Param::beta: return "beta";
    case Param::gamma: return "gamma";
    case Param::delta: return "delta";
  }
  return "?";
}

inline std::optional<Param> parse_param(std::string_view s) {
  for (int i = 0; i < 7; ++i)
    if (to_string(static_cast<Param>(i)) == s) return static_cast<Param>(i);
  return std::nullopt;
}

/// Parameters used by a law, in the fixed order of its parameter vector.
inline std::span<const Param> law_params(LawId id) {
  using P = Param;
  static constexpr P l1[] = {P::N_C, P::D_C, P::E, P::alpha, P::beta, P::gamma, P::delta};
  static constexpr P l2[] = {P::N_C, P::D_C, P::E, P::alpha, P::beta, P::gamma};
  static constexpr P l3[] = {P::D_C, P::E, P::beta, P::gamma, P::delta};
  static constexpr P l4[] = {P::N_C, P::D_C, P::alpha, P::beta, P::gamma, P::delta};
  static constexpr P l5[] = {P::N_C, P::D_C, P::alpha, P::beta, P::gamma};
  static constexpr P l1_24[] = {P::N_C, P::D_C, P::E, P::alpha, P::beta, P::delta};
  static constexpr P l2_24[] = {P::N_C, P::D_C, P::E, P::alpha, P::beta};
  static constexpr P l3_24[] = {P::D_C, P::E, P::beta, P::delta};
  static constexpr P openai[] = {P::N_C, P::D_C, P::alpha, P::beta};
  switch (id) {
    case LawId::L1: return l1;
    case LawId::L2: return l2;
    case LawId::L3: return l3;
    case LawId::L4: return l4;
    case LawId::L5: return l5;
    case LawId::L1_24: return l1_24;
    case LawId::L2_24: return l2_24;
    case LawId::L3_24: return l3_24;
    case LawId::chinchilla_base: return l2_24;
    case LawId::openai_base: return openai;
  }
  return {};
}

/// L1..L5 take rho and l0.
inline bool uses_rho(LawId id) {
  return id == LawId::L1 || id == LawId::L2 || id == LawId::L3 || id == LawId::L4 || id == LawId::L5;
}

inline bool is_semi24_law(LawId id) { return id == LawId::L1_24 || id == LawId::L2_24 || id == LawId::L3_24; }

inline bool is_openai_form(LawId id) { return id == LawId::L4 || id == LawId::L5 || id == LawId::openai_base; }

/// rho-laws need depth/width curves, 2:4 laws need semi24 curves; base forms fit anything.
inline bool compatible(LawId id, Method m) {
  if (uses_rho(id)) return m != Method::semi24;
  if (is_semi24_law(id)) return m == Method::semi24;
  return true;
}

/// A parameterization plus its parameter vector (ordered as law_params).
class LawSpec {
public:
  LawSpec(LawId id, std::vector<double> values) : id_(id), values_(std::move(values)) {
    if (values_.size() != law_params(id_).size())
      throw ValidationError(std::string(to_string(id_)) + " expects " + std::to_string(law_params(id_).size()) +
                            " parameters, got " + std::to_string(values_.size()));
    for (double v : values_)
      if (!std::isfinite(v)) throw ValidationError("law parameters must be finite");
  }

  /// Builds from named values; the names must be exactly the law's symbols.
  static LawSpec from_named(LawId id, const std::map<Param, double>& named) {
    const auto symbols = law_params(id);
    if (named.size() != symbols.size())
      throw ValidationError(std::string(to_string(id)) + ": parameter set does not match the law");
    std::vector<double> v;
    for (auto p : symbols) {
      auto it = named.find(p);
      if (it == named.end())
        throw ValidationError(std::string(to_string(id)) + ": missing parameter " + std::string(to_string(p)));
      v.push_back(it->second);
    }
    return LawSpec(id, std::move(v));
  }

  LawId id() const noexcept { return id_; }
  std::span<const double> values() const noexcept { return values_; }

  bool has(Param p) const {
    for (auto q : law_params(id_))
      if (q == p) return true;
    return false;
  }

  /// Value of p, or 0 when the law does not use p.
  double get(Param p) const {
    auto symbols = law_params(id_);
    for (std::size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i] == p) return values_[i];
    return 0.0;
  }

  friend bool operator==(const LawSpec&, const LawSpec&) = default;

private:
  LawId id_;
  std::vector<double> values_;
};

/// Serialized as `L1: N_C=0.02, D_C=5.94, ...`.
inline std::string to_string(const LawSpec& spec) {
  std::string out(to_string(spec.id()));
  out += ':';
  auto symbols = law_params(spec.id());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    out += i == 0 ? " " : ", ";
    out += to_string(symbols[i]);
    out += '=';
    out += text::number(spec.values()[i]);
  }
  return out;
}

inline LawSpec parse_law_spec(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw ParseError("law spec missing ':'", 0);
  auto id = parse_law_id(text::trim(s.substr(0, colon)));
  if (!id) throw ParseError("unknown law id '" + std::string(text::trim(s.substr(0, colon))) + "'", 0);
  std::map<Param, double> named;
  std::string_view rest = s.substr(colon + 1);
  while (!text::trim(rest).empty()) {
    auto comma = rest.find(',');
    auto item = text::trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ParseError("malformed parameter '" + std::string(item) + "'", 0);
    auto p = parse_param(text::trim(item.substr(0, eq)));
    auto v = text::parse_double(text::trim(item.substr(eq + 1)));
    if (!p || !v) throw ParseError("malformed parameter '" + std::string(item) + "'", 0);
    if (!named.emplace(*p, *v).second) throw ParseError("repeated parameter '" + std::string(item) + "'", 0);
  }
  try {
    return LawSpec::from_named(*id, named);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), 0);
  }
}

// ---------------------------------------------------------------------------
// Units

/// Scaling applied to N0 and D before they enter a law.
enum class Units { billions, raw };

inline double unit_scale(Units u) { return u == Units::billions ? 1e9 : 1.0; }

inline std::string_view to_string(Units u) { return u == Units::billions ? "billions" : "raw"; }

inline std::optional<Units> parse_units(std::string_view s) {
  if (s == "billions") return Units::billions;
  if (s == "raw") return Units::raw;
  return std::nullopt;
}

/// Physical inputs of a law, already expressed in law units.
struct LawInput {
  double n0 = 1.0;
  double d = 1.0;
  double rho = 0.25;
  double l0 = 0.0;
};

inline LawInput make_input(const RunMeta& meta, double tokens, Units units) {
  const double s = unit_scale(units);
  return {static_cast<double>(meta.n0) / s, tokens / s, meta.rho, meta.l0};
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

// exp() overflows past ~709.78; keep headroom for the products that follow.
inline constexpr double max_log_magnitude = 700.0;

/// x^(-e) for x > 0 computed as exp(-e ln x), refusing to overflow.
inline double inv_pow(double log_x, double e) {
  const double arg = -e * log_x;
  if (!(std::abs(arg) <= max_log_magnitude)) throw EvaluationError("exponent overflow in law evaluation");
  return std::exp(arg);
}

inline double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw EvaluationError(std::string("non-finite ") + what);
  return v;
}

/// Shared intermediate quantities of every law at one input.
struct Terms {
  double shift = 0;      // l0 or 0
  double log_rho = 0;    // ln rho (0 when unused)
  double log_n0 = 0;
  double log_d = 0;
  double scale = 1;      // (1/rho)^gamma (1/N0)^delta
  double n_pow = 0;      // N0^-alpha
  double n_term = 0;     // N_C N0^-alpha
  double d_term = 0;     // D_C D^-beta (chinchilla) or D_C / D (openai)
  double bracket = 0;    // sum inside the parentheses
  double body = 0;       // bracket, or bracket^beta for the openai form
  double beta = 0;
  double n_c = 0, d_c = 0, alpha = 0, delta = 0;
};

inline Terms terms(const LawSpec& spec, const LawInput& in) {
  const LawId id = spec.id();
  if (!(in.n0 > 0.0) || !std::isfinite(in.n0)) throw DomainError("n0 must be positive");
  if (!(in.d > 0.0) || !std::isfinite(in.d)) throw DomainError("d must be positive");
  Terms t;
  if (uses_rho(id)) {
    if (!(in.rho > 0.0 && in.rho < 1.0)) throw DomainError("rho must lie in (0,1)");
    if (!std::isfinite(in.l0)) throw DomainError("l0 must be finite");
    t.shift = in.l0;
    t.log_rho = std::log(in.rho);
  }
  t.log_n0 = std::log(in.n0);
  t.log_d = std::log(in.d);
  t.n_c = spec.get(Param::N_C);
  t.d_c = spec.get(Param::D_C);
  t.alpha = spec.get(Param::alpha);
  t.beta = spec.get(Param::beta);
  t.delta = spec.get(Param::delta);
  const double gamma = spec.get(Param::gamma);

  // (1/rho)^gamma (1/N0)^delta = exp(-gamma ln rho - delta ln N0)
  const double log_scale = -gamma * t.log_rho - t.delta * t.log_n0;
  if (!(std::abs(log_scale) <= max_log_magnitude)) throw EvaluationError("exponent overflow in law prefactor");
  t.scale = std::exp(log_scale);

  t.n_pow = spec.has(Param::N_C) ? inv_pow(t.log_n0, t.alpha) : 0.0;
  t.n_term = t.n_c * t.n_pow;
  if (is_openai_form(id)) {
    t.d_term = t.d_c / in.d;
    t.bracket = t.n_term + t.d_term;
    if (!(t.bracket > 0.0)) throw EvaluationError("power-law base N_C/N0^alpha + D_C/D must be positive");
    const double log_body = t.beta * std::log(t.bracket);
    if (!(std::abs(log_body) <= max_log_magnitude)) throw EvaluationError("exponent overflow in power-law body");
    t.body = std::exp(log_body);
  } else {
    t.d_term = t.d_c * inv_pow(t.log_d, t.beta);
    t.bracket = t.n_term + t.d_term + spec.get(Param::E);
    t.body = t.bracket;
  }
  return t;
}

}  // namespace detail

/// Closed-form loss. Throws DomainError / EvaluationError, never returns inf.
inline double evaluate(const LawSpec& spec, const LawInput& in) {
  const auto t = detail::terms(spec, in);
  return detail::finite_or_throw(t.shift + t.scale * t.body, "law value");
}

/// Loss minus the shift (l0 for rho-laws); the relative post-training loss.
inline double excess_loss(const LawSpec& spec, const LawInput& in) {
  const auto t = detail::terms(spec, in);
  return detail::finite_or_throw(t.scale * t.body, "law value");
}

/// d(loss)/dD in law units.
inline double partial_wrt_tokens(const LawSpec& spec, const LawInput& in) {
  const auto t = detail::terms(spec, in);
  double v;
  if (is_openai_form(spec.id())) {
    // scale * beta * B^(beta-1) * (-D_C / D^2)
    v = t.scale * t.beta * (t.body / t.bracket) * (-t.d_term / in.d);
  } else {
    // scale * (-beta D_C D^(-beta-1))
    v = t.scale * (-t.beta * t.d_term / in.d);
  }
  return detail::finite_or_throw(v, "token derivative");
}

/// d^2(loss)/dN0 dD in law units.
inline double cross_partial(const LawSpec& spec, const LawInput& in) {
  const auto t = detail::terms(spec, in);
  double v;
  if (is_openai_form(spec.id())) {
    // d/dN0 [ scale * beta * B^(beta-1) * (-D_C/D^2) ]
    //   = beta (-D_C/D^2) (1/rho)^gamma [ -delta N0^(-delta-1) B^(beta-1)
    //                                     + N0^(-delta) (beta-1) B^(beta-2) dB/dN0 ]
    const double dB_dn0 = -t.alpha * t.n_term / in.n0;
    const double b_pow = t.body / t.bracket;  // B^(beta-1)
    const double inner = -t.delta / in.n0 * b_pow + (t.beta - 1.0) * b_pow / t.bracket * dB_dn0;
    v = t.beta * (-t.d_term / in.d) * t.scale * inner;
  } else {
    // scale * delta beta D_C D^(-beta-1) / N0; exactly zero when delta is absent
    v = t.scale * t.delta * t.beta * (t.d_term / in.d) / in.n0;
  }
  return detail::finite_or_throw(v, "cross partial");
}

/// d(loss)/d(theta) for every parameter of the law, in law_params order.
inline std::vector<double> param_gradient(const LawSpec& spec, const LawInput& in) {
  const auto t = detail::terms(spec, in);
  const bool openai = is_openai_form(spec.id());
  // d(body)/d(bracket): 1 for chinchilla, beta B^(beta-1) for openai
  const double dbody = openai ? t.beta * t.body / t.bracket : 1.0;
  std::vector<double> g;
  g.reserve(law_params(spec.id()).size());
  for (auto p : law_params(spec.id())) {
    double v = 0.0;
    switch (p) {
      case Param::N_C: v = t.scale * dbody * t.n_pow; break;
      case Param::D_C: v = t.scale * dbody * (openai ? 1.0 / in.d : detail::inv_pow(t.log_d, t.beta)); break;
      case Param::E: v = t.scale; break;
      case Param::alpha: v = t.scale * dbody * t.n_term * (-t.log_n0); break;
      case Param::beta:
        v = openai ? t.scale * t.body * std::log(t.bracket) : t.scale * t.d_term * (-t.log_d);
        break;
      case Param::gamma: v = -t.log_rho * t.scale * t.body; break;
      case Param::delta: v = -t.log_n0 * t.scale * t.body; break;
    }
    g.push_back(detail::finite_or_throw(v, "parameter gradient"));
  }
  return g;
}

}  // namespace p2law
