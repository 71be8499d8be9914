#pragma once
//
// Loss curves of post-training runs: data model, file ingestion and
// derived series (relative loss, normalized relative loss, compute axis).
//
// Curve file format, one record per line:
//
//   ## free-form comment
//   #run <run_id> family=<s> method=<depth|width|semi24> n0=<int> rho=<float> l0=<float> n_after=<int>
//   <run_id>,<tokens:int>,<loss:float>
//
// A run's manifest precedes its checkpoints. All runs in one file share
// family and method.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "p2law/error.hpp"
#include "p2law/format.hpp"

namespace p2law {

enum class Method { depth, width, semi24 };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::depth: return "depth";
    case Method::width: return "width";
    case Method::semi24: return "semi24";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "depth") return Method::depth;
  if (s == "width") return Method::width;
  if (s == "semi24") return Method::semi24;
  return std::nullopt;
}

/// Metadata of one pruned-and-post-trained run.
struct RunMeta {
  std::string run_id;
  std::string family;
  Method method = Method::depth;
  std::int64_t n0 = 0;       // parameters before pruning
  double rho = 0.0;          // pruning rate; ignored by 2:4 laws
  double l0 = 0.0;           // loss before pruning, nats/token
  std::int64_t n_after = 0;  // parameters after pruning (nonzeros for semi24)

  friend bool operator==(const RunMeta&, const RunMeta&) = default;
};

/// Throws ValidationError if any RunMeta invariant is broken.
inline void validate(const RunMeta& m) {
  auto fail = [&](const std::string& msg) { throw ValidationError("run '" + m.run_id + "': " + msg); };
  if (m.run_id.empty()) throw ValidationError("empty run_id");
  if (m.n0 <= 0) fail("n0 must be positive");
  if (m.n_after <= 0) fail("n_after must be positive");
  if (m.n_after > m.n0) fail("n_after exceeds n0");
  if (!(m.rho >= 0.0 && m.rho < 1.0)) fail("rho must lie in [0,1)");
  if (!(m.l0 > 0.0) || !std::isfinite(m.l0)) fail("l0 must be positive and finite");
  if (m.method != Method::semi24) {
    // Whole structures are removed, so only approximate proportionality holds.
    const double expected = static_cast<double>(m.n0) * (1.0 - m.rho);
    if (std::abs(static_cast<double>(m.n_after) - expected) > 0.1 * expected)
      fail("n_after deviates more than 10% from n0*(1-rho)");
  }
}

struct Checkpoint {
  std::int64_t tokens = 0;
  double loss = 0.0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct SeriesPoint {
  double x = 0.0;
  double y = 0.0;
};
using Series = std::vector<SeriesPoint>;

/// One post-training run: ordered checkpoints plus metadata. Immutable.
class LossCurve {
public:
  LossCurve(RunMeta meta, std::vector<Checkpoint> points) : meta_(std::move(meta)), points_(std::move(points)) {
    validate(meta_);
    if (points_.size() < 2) throw ValidationError("run '" + meta_.run_id + "': fewer than 2 checkpoints");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      if (!std::isfinite(p.loss) || p.loss <= 0.0)
        throw ValidationError("run '" + meta_.run_id + "': loss must be finite and positive");
      if (p.tokens < 0) throw ValidationError("run '" + meta_.run_id + "': negative token count");
      if (i > 0 && p.tokens <= points_[i - 1].tokens)
        throw ValidationError("run '" + meta_.run_id + "': non-monotone tokens");
    }
  }

  const RunMeta& meta() const noexcept { return meta_; }
  std::span<const Checkpoint> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

  std::int64_t min_tokens() const noexcept { return points_.front().tokens; }
  std::int64_t max_tokens() const noexcept { return points_.back().tokens; }

  /// Checkpoints [first, last) as a new curve sharing the metadata.
  LossCurve slice(std::size_t first, std::size_t last) const {
    return LossCurve(meta_, std::vector<Checkpoint>(points_.begin() + static_cast<std::ptrdiff_t>(first),
                                                    points_.begin() + static_cast<std::ptrdiff_t>(last)));
  }

  Series as_series() const {
    Series s;
    s.reserve(points_.size());
    for (const auto& p : points_) s.push_back({static_cast<double>(p.tokens), p.loss});
    return s;
  }

private:
  RunMeta meta_;
  std::vector<Checkpoint> points_;
};

/// Curves sharing one (family, method) key. Immutable after construction.
class CurveSet {
public:
  CurveSet() = default;

  explicit CurveSet(std::vector<LossCurve> curves) : curves_(std::move(curves)) {
    std::set<std::string> ids;
    for (const auto& c : curves_) {
      if (c.meta().family != curves_.front().meta().family || c.meta().method != curves_.front().meta().method)
        throw ValidationError("heterogeneous curve set");
      if (!ids.insert(c.meta().run_id).second) throw ValidationError("duplicate run_id '" + c.meta().run_id + "'");
    }
  }

  std::span<const LossCurve> curves() const noexcept { return curves_; }
  bool empty() const noexcept { return curves_.empty(); }
  std::size_t size() const noexcept { return curves_.size(); }
  const LossCurve& operator[](std::size_t i) const { return curves_.at(i); }

  const std::string& family() const { return require_nonempty().meta().family; }
  Method method() const { return require_nonempty().meta().method; }

  std::size_t total_points() const noexcept {
    std::size_t n = 0;
    for (const auto& c : curves_) n += c.size();
    return n;
  }

private:
  const LossCurve& require_nonempty() const {
    if (curves_.empty()) throw ValidationError("empty curve set");
    return curves_.front();
  }

  std::vector<LossCurve> curves_;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline RunMeta parse_manifest(std::string_view body, std::size_t line_no) {
  RunMeta m;
  std::istringstream in{std::string(body)};
  std::string tok;
  if (!(in >> m.run_id)) throw ParseError("manifest without run_id", line_no);
  if (m.run_id.find(',') != std::string::npos) throw ParseError("run_id may not contain ','", line_no);
  std::map<std::string, std::string> kv;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("malformed manifest field '" + tok + "'", line_no);
    if (!kv.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second)
      throw ParseError("repeated manifest field '" + tok.substr(0, eq) + "'", line_no);
  }
  auto take = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(std::string("manifest missing field '") + key + "'", line_no);
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  m.family = take("family");
  auto method = parse_method(take("method"));
  if (!method) throw ParseError("unknown method", line_no);
  m.method = *method;
  auto n0 = text::parse_int(take("n0"));
  auto rho = text::parse_double(take("rho"));
  auto l0 = text::parse_double(take("l0"));
  auto n_after = text::parse_int(take("n_after"));
  if (!n0 || !rho || !l0 || !n_after) throw ParseError("malformed manifest number", line_no);
  if (!kv.empty()) throw ParseError("unknown manifest field '" + kv.begin()->first + "'", line_no);
  m.n0 = *n0;
  m.rho = *rho;
  m.l0 = *l0;
  m.n_after = *n_after;
  try {
    validate(m);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line_no);
  }
  return m;
}

}  // namespace detail

/// Parses a curve stream. Errors carry the offending line number.
inline CurveSet parse_curves(std::istream& in) {
  struct Pending {
    RunMeta meta;
    std::vector<Checkpoint> points;
  };
  std::vector<Pending> runs;
  std::map<std::string, std::size_t, std::less<>> index;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = text::trim(raw);
    if (line.empty() || line.starts_with("##")) continue;
    if (line.starts_with("#run ")) {
      RunMeta m = detail::parse_manifest(line.substr(5), line_no);
      if (!runs.empty() && (m.family != runs.front().meta.family || m.method != runs.front().meta.method))
        throw ParseError("heterogeneous curve set", line_no);
      if (index.contains(m.run_id)) throw ParseError("duplicate run_id '" + m.run_id + "'", line_no);
      index.emplace(m.run_id, runs.size());
      runs.push_back({std::move(m), {}});
      continue;
    }
    if (line.starts_with('#')) throw ParseError("unknown directive", line_no);

    auto fields = detail::split(line, ',');
    if (fields.size() != 3) throw ParseError("malformed checkpoint record", line_no);
    auto id = text::trim(fields[0]);
    auto it = index.find(id);
    if (it == index.end()) throw ParseError("checkpoint for run '" + std::string(id) + "' before its manifest", line_no);
    auto tokens = text::parse_int(text::trim(fields[1]));
    auto loss = text::parse_double(text::trim(fields[2]));
    if (!tokens || !loss) throw ParseError("malformed checkpoint number", line_no);
    if (*tokens < 0) throw ParseError("negative token count", line_no);
    if (!std::isfinite(*loss) || *loss <= 0.0) throw ParseError("loss must be finite and positive", line_no);
    auto& pts = runs[it->second].points;
    if (!pts.empty() && *tokens <= pts.back().tokens) throw ParseError("non-monotone tokens", line_no);
    pts.push_back({*tokens, *loss});
  }

  std::vector<LossCurve> curves;
  curves.reserve(runs.size());
  for (auto& r : runs) {
    if (r.points.size() < 2) throw ParseError("run '" + r.meta.run_id + "' has fewer than 2 checkpoints", 0);
    curves.emplace_back(std::move(r.meta), std::move(r.points));
  }
  return CurveSet(std::move(curves));
}

inline CurveSet load_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open curve file '" + path.string() + "'");
  try {
    return parse_curves(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

inline void write_curves(std::ostream& out, const CurveSet& set, std::span<const std::string> comments = {}) {
  for (const auto& c : comments) out << "## " << c << '\n';
  for (const auto& curve : set.curves()) {
    const auto& m = curve.meta();
    out << "#run " << m.run_id << " family=" << m.family << " method=" << to_string(m.method) << " n0=" << m.n0
        << " rho=" << text::number(m.rho) << " l0=" << text::number(m.l0) << " n_after=" << m.n_after << '\n';
    for (const auto& p : curve.points()) out << m.run_id << ',' << p.tokens << ',' << text::number(p.loss) << '\n';
  }
}

inline void save_curves(const std::filesystem::path& path, const CurveSet& set,
                        std::span<const std::string> comments = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write curve file '" + path.string() + "'");
  write_curves(out, set, comments);
}

// ---------------------------------------------------------------------------
// Derived series

/// Loss minus the pre-pruning loss, pointwise on the curve's token grid.
inline Series relative_loss(const LossCurve& curve) {
  Series s;
  s.reserve(curve.size());
  for (const auto& p : curve.points()) s.push_back({static_cast<double>(p.tokens), p.loss - curve.meta().l0});
  return s;
}

/// Relative loss divided by (1/rho)^gamma.
inline Series normalized_relative_loss(const LossCurve& curve, double gamma) {
  const double rho = curve.meta().rho;
  if (rho == 0.0) throw DomainError("normalization undefined at zero pruning rate");
  if (!std::isfinite(gamma)) throw DomainError("gamma must be finite");
  const double divisor = std::pow(1.0 / rho, gamma);
  Series s = relative_loss(curve);
  for (auto& p : s) p.y /= divisor;
  return s;
}

/// Compute C = 6 * n_after * D paired with the loss.
inline Series compute_axis(const LossCurve& curve) {
  const double n = static_cast<double>(curve.meta().n_after);
  Series s;
  s.reserve(curve.size());
  for (const auto& p : curve.points()) s.push_back({6.0 * n * static_cast<double>(p.tokens), p.loss});
  return s;
}

/// Piecewise-linear interpolation; x outside the recorded range throws.
inline double interpolate(std::span<const SeriesPoint> s, double x) {
  if (s.empty() || x < s.front().x || x > s.back().x) throw DomainError("interpolation outside recorded range");
  auto hi = std::lower_bound(s.begin(), s.end(), x, [](const SeriesPoint& p, double v) { return p.x < v; });
  if (hi->x == x) return hi->y;
  auto lo = hi - 1;
  const double t = (x - lo->x) / (hi->x - lo->x);
  return lo->y + t * (hi->y - lo->y);
}

/// Descriptive statistic for the pruning-rate overlap of normalized curves:
/// the largest pairwise sup-distance between normalized relative-loss series,
/// taken over the union of token values inside the common recorded range.
inline double trend2_overlap(std::span<const LossCurve> curves, double gamma) {
  if (curves.size() < 2) return 0.0;
  std::vector<Series> norm;
  norm.reserve(curves.size());
  double lo = -INFINITY;
  double hi = INFINITY;
  for (const auto& c : curves) {
    norm.push_back(normalized_relative_loss(c, gamma));
    lo = std::max(lo, norm.back().front().x);
    hi = std::min(hi, norm.back().back().x);
  }
  if (lo > hi) throw DomainError("curves share no common token range");
  std::vector<double> grid;
  for (const auto& s : norm)
    for (const auto& p : s)
      if (p.x >= lo && p.x <= hi) grid.push_back(p.x);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double worst = 0.0;
  for (std::size_t a = 0; a < norm.size(); ++a)
    for (std::size_t b = a + 1; b < norm.size(); ++b)
      for (double x : grid) worst = std::max(worst, std::abs(interpolate(norm[a], x) - interpolate(norm[b], x)));
  return worst;
}

}  // namespace p2law
