#pragma once
//
// Command-line front end. run_cli() is the whole program minus main(), so
// tests can drive it in-process.
//
// Exit codes: 0 success, 1 usage or input error, 2 fit failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "p2law/condition_checker.hpp"
#include "p2law/curve_store.hpp"
#include "p2law/experiment_runner.hpp"
#include "p2law/fit_metrics.hpp"
#include "p2law/law_family.hpp"
#include "p2law/lm_fitter.hpp"
#include "p2law/presets.hpp"

namespace p2law::cli {

/// Usage or input problem (exit code 1).
class UsageError : public Error {
public:
  using Error::Error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = "p2law_out";
  std::string units = "billions";
  std::string config;
};

/// Law parameters file: optional `## units=<u>` comment plus one LawSpec line.
struct ParamsFile {
  LawSpec spec;
  std::optional<Units> units;
};

inline ParamsFile load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open parameter file '" + path.string() + "'");
  std::optional<Units> units;
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.starts_with("##")) {
      auto pos = t.find("units=");
      if (pos != std::string_view::npos) units = parse_units(text::trim(t.substr(pos + 6)));
      continue;
    }
    return {parse_law_spec(t), units};
  }
  throw UsageError("parameter file '" + path.string() + "' holds no law spec");
}

inline void save_params(const std::filesystem::path& path, const LawSpec& spec, Units units) {
  std::ofstream out(path, std::ios::binary);
  out << "## units=" << to_string(units) << '\n' << to_string(spec) << '\n';
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!text::trim(item).empty()) out.emplace_back(text::trim(item));
  return out;
}

inline std::vector<double> parse_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    auto v = text::parse_double(item);
    if (!v) throw UsageError(std::string("malformed number '") + item + "' in " + what);
    out.push_back(*v);
  }
  return out;
}

inline std::vector<std::int64_t> parse_counts(const std::string& s, const char* what) {
  std::vector<std::int64_t> out;
  for (double v : parse_doubles(s, what)) {
    if (!(v > 0) || v != std::floor(v)) throw UsageError(std::string("expected positive integers in ") + what);
    out.push_back(static_cast<std::int64_t>(v));
  }
  return out;
}

inline LawId require_law(const std::string& s) {
  auto id = parse_law_id(s);
  if (!id) throw UsageError("unknown law id '" + s + "'");
  return *id;
}

inline Units require_units(const std::string& s) {
  auto u = parse_units(s);
  if (!u) throw UsageError("--units must be 'billions' or 'raw'");
  return *u;
}

inline CurveSet require_curves(const std::string& path) {
  if (path.empty()) throw UsageError("--curves is required");
  if (!std::filesystem::exists(path)) throw UsageError("curve file not found: " + path);
  return load_curves(path);
}

/// Resolves the law from --params or --preset (+ --law).
inline LawSpec resolve_spec(const std::string& params, const std::string& preset, const std::string& law) {
  if (!params.empty() && !preset.empty()) throw UsageError("give either --params or --preset, not both");
  if (!params.empty()) {
    if (!std::filesystem::exists(params)) throw UsageError("parameter file not found: " + params);
    auto pf = load_params(params);
    if (!law.empty() && require_law(law) != pf.spec.id())
      throw UsageError("--law " + law + " does not match parameter file law " + std::string(to_string(pf.spec.id())));
    return pf.spec;
  }
  if (!preset.empty()) {
    const LawId id = law.empty() ? LawId::L1 : require_law(law);
    auto spec = presets::lookup(preset, id);
    if (!spec) throw UsageError("unknown preset '" + preset + "' for law " + std::string(to_string(id)));
    return *spec;
  }
  throw UsageError("one of --params or --preset is required");
}

inline std::filesystem::path prepare_out(const Globals& g) {
  std::filesystem::path dir(g.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << content;
}

/// Reads a flat key=value config file into `--key=value` arguments.
inline std::vector<std::string> config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos || eq == 0) throw UsageError("config line " + std::to_string(n) + ": expected key=value");
    auto key = std::string(text::trim(t.substr(0, eq)));
    if (key == "config") throw UsageError("config files cannot include other config files");
    out.push_back("--" + key + "=" + std::string(text::trim(t.substr(eq + 1))));
  }
  return out;
}

inline std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return std::nullopt;
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fit, evaluate and stress-test post-training scaling laws for pruned language models", "p2law"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--units", g.units, "Units of N0 and D inside laws")->check(CLI::IsMember({"billions", "raw"}));
  app.add_option("--config", g.config, "Flat key=value file; command-line flags override it");

  // fit
  struct {
    std::string curves, law, objective = "squared";
    int starts = 32, max_iter = 500;
  } fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one law to a curve file with multi-start Levenberg-Marquardt");
  fit_cmd->add_option("--curves", fit_args.curves, "Curve file")->required();
  fit_cmd->add_option("--law", fit_args.law, "Law id (L1..L5, L1_24.., chinchilla_base, openai_base)")->required();
  fit_cmd->add_option("--starts", fit_args.starts, "Number of multi-start runs");
  fit_cmd->add_option("--objective", fit_args.objective, "squared or huber:<delta>");
  fit_cmd->add_option("--max-iter", fit_args.max_iter, "LM iterations per start");

  // evaluate
  struct {
    std::string curves, params, axis = "tokens";
    double huber_delta = 1.0;
    std::size_t asd_points = 50;
  } eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "R2, Huber loss and ASD of a fitted law on a curve file");
  eval_cmd->add_option("--curves", eval_args.curves, "Curve file")->required();
  eval_cmd->add_option("--params", eval_args.params, "Parameter file written by fit")->required();
  eval_cmd->add_option("--huber-delta", eval_args.huber_delta, "Huber threshold");
  eval_cmd->add_option("--asd-points", eval_args.asd_points, "ASD sample points per curve");
  eval_cmd->add_option("--asd-axis", eval_args.axis, "ASD spacing axis")->check(CLI::IsMember({"tokens", "index"}));

  // conditions
  struct {
    std::string params, preset, law, grid_n0 = "0.5,1,3,8", grid_d = "0.01,0.1,0.5,1", grid_rho = "0.15,0.25,0.35";
    double audit_h = 1e-3;
  } cond_args;
  auto* cond_cmd = app.add_subcommand("conditions", "Check the necessary conditions for a law");
  cond_cmd->add_option("--params", cond_args.params, "Parameter file");
  cond_cmd->add_option("--preset", cond_args.preset, "Published fit (paper-<llama|qwen>-<method>) or 'all'");
  cond_cmd->add_option("--law", cond_args.law, "Law id (checked against --params, selects the preset row)");
  cond_cmd->add_option("--grid-n0", cond_args.grid_n0, "Grid of N0 values (law units)");
  cond_cmd->add_option("--grid-d", cond_args.grid_d, "Grid of D values (law units)");
  cond_cmd->add_option("--grid-rho", cond_args.grid_rho, "Grid of pruning rates");
  cond_cmd->add_option("--audit-h", cond_args.audit_h, "Relative step of the finite-difference audit");

  // generalize
  struct {
    std::string curves, law, protocol = "dataset_size", holdout_n0, holdout_rho;
    double fraction = 0.8;
    int starts = 32;
  } gen_args;
  auto* gen_cmd = app.add_subcommand("generalize", "Fit on part of the data and evaluate on the held-out part");
  gen_cmd->add_option("--curves", gen_args.curves, "Curve file")->required();
  gen_cmd->add_option("--law", gen_args.law, "Law id")->required();
  gen_cmd->add_option("--protocol", gen_args.protocol, "Split protocol")
      ->check(CLI::IsMember({"dataset_size", "model_size", "pruning_rate"}));
  gen_cmd->add_option("--fraction", gen_args.fraction, "dataset_size: leading fraction of checkpoints used to fit");
  gen_cmd->add_option("--holdout-n0", gen_args.holdout_n0, "model_size: comma list of held-out N0 (parameters)");
  gen_cmd->add_option("--holdout-rho", gen_args.holdout_rho, "pruning_rate: comma list of held-out rates");
  gen_cmd->add_option("--starts", gen_args.starts, "Number of multi-start runs");

  // predict
  struct {
    std::string params, preset, law;
    double n0 = 1e9, rho = 0.25, l0 = 2.5, n_after = 0, epsilon = 1e-2, d_lo = 1e-4, d_hi = 1e4;
  } pred_args;
  auto* pred_cmd = app.add_subcommand("predict", "Predict the compute at which the loss curve flattens");
  pred_cmd->add_option("--params", pred_args.params, "Parameter file");
  pred_cmd->add_option("--preset", pred_args.preset, "Published fit (paper-<llama|qwen>-<method>)");
  pred_cmd->add_option("--law", pred_args.law, "Law id");
  pred_cmd->add_option("--n0", pred_args.n0, "Parameters before pruning");
  pred_cmd->add_option("--rho", pred_args.rho, "Pruning rate");
  pred_cmd->add_option("--l0", pred_args.l0, "Loss before pruning");
  pred_cmd->add_option("--n-after", pred_args.n_after, "Parameters after pruning (0: n0*(1-rho))");
  pred_cmd->add_option("--epsilon", pred_args.epsilon, "Slope threshold |dL/dC| in law units");
  pred_cmd->add_option("--d-lo", pred_args.d_lo, "Bracket start on D (law units)");
  pred_cmd->add_option("--d-hi", pred_args.d_hi, "Bracket end on D (law units)");

  // synth
  struct {
    std::string law, params, preset, n0 = "1000000000,3000000000,8000000000", rho = "0.15,0.25,0.35", l0, family,
                                         method, spacing = "log", output;
    std::size_t points = 200;
    double d_min = 5e6, d_max = 1e9, noise = 0.0;
  } syn_args;
  auto* syn_cmd = app.add_subcommand("synth", "Generate a curve file from a known law");
  syn_cmd->add_option("--law", syn_args.law, "Law id")->required();
  syn_cmd->add_option("--params", syn_args.params, "Parameter file holding the true law");
  syn_cmd->add_option("--preset", syn_args.preset, "Published fit used as the true law");
  syn_cmd->add_option("--n0", syn_args.n0, "Comma list of N0 (parameters)");
  syn_cmd->add_option("--rho", syn_args.rho, "Comma list of pruning rates");
  syn_cmd->add_option("--l0", syn_args.l0, "Comma list of l0, one per N0 (default 2.5 each)");
  syn_cmd->add_option("--points", syn_args.points, "Checkpoints per curve");
  syn_cmd->add_option("--d-min", syn_args.d_min, "First checkpoint (tokens)");
  syn_cmd->add_option("--d-max", syn_args.d_max, "Last checkpoint (tokens)");
  syn_cmd->add_option("--spacing", syn_args.spacing, "Checkpoint spacing")->check(CLI::IsMember({"log", "linear"}));
  syn_cmd->add_option("--noise", syn_args.noise, "Gaussian noise sigma on loss");
  syn_cmd->add_option("--family", syn_args.family, "Family tag (default: preset family or 'synthetic')");
  syn_cmd->add_option("--method", syn_args.method, "depth|width|semi24 (default: from preset or law)");
  syn_cmd->add_option("--output", syn_args.output, "Curve file path (default <out>/synth.cv)");

  // compare
  struct {
    std::string curves, laws = "L1,L2,L3";
    int starts = 32;
  } cmp_args;
  auto* cmp_cmd = app.add_subcommand("compare", "Fit several laws and rank them by ASD, Huber loss, R2");
  cmp_cmd->add_option("--curves", cmp_args.curves, "Curve file")->required();
  cmp_cmd->add_option("--laws", cmp_args.laws, "Comma list of law ids");
  cmp_cmd->add_option("--starts", cmp_args.starts, "Number of multi-start runs");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  // Config file values go first so later command-line flags win.
  std::vector<std::string> argv_store{"p2law"};
  try {
    auto cfg = detail::find_config(args);
    auto sub_it = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
      for (auto* sub : app.get_subcommands({}))
        if (sub->get_name() == a) return true;
      return false;
    });
    if (cfg && sub_it != args.end()) {
      argv_store.push_back(*sub_it);
      for (auto& a : detail::config_args(*cfg)) argv_store.push_back(std::move(a));
      for (auto it = args.begin(); it != args.end(); ++it)
        if (it != sub_it) argv_store.push_back(*it);
    } else {
      argv_store.insert(argv_store.end(), args.begin(), args.end());
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    // Help for the subcommand that was named, if any.
    const CLI::App* target = &app;
    for (auto* sub : app.get_subcommands({}))
      if (sub->parsed()) target = sub;
    out << target->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    const Units units = detail::require_units(g.units);
    const auto dir = detail::prepare_out(g);
    detail::write_file(dir / "run.meta", app.config_to_str(true, false));

    if (fit_cmd->parsed()) {
      const LawId law = detail::require_law(fit_args.law);
      auto curves = detail::require_curves(fit_args.curves);
      if (!compatible(law, curves.method()))
        throw UsageError("law/method mismatch: " + fit_args.law + " cannot fit " + std::string(to_string(curves.method())) +
                         " curves");
      FitOptions opts;
      opts.n_starts = fit_args.starts;
      opts.max_iterations = fit_args.max_iter;
      opts.rng_seed = g.seed;
      opts.units = units;
      try {
        opts.objective = parse_objective(fit_args.objective);
      } catch (const ParseError& e) {
        throw UsageError(e.what());
      }
      std::optional<FitResult> fitted;
      try {
        fitted.emplace(fit(law, curves, opts));
      } catch (const FitError& e) {
        err << "fit failed: " << e.what() << '\n';
        return 2;
      }
      const FitResult& r = *fitted;
      std::ostringstream report;
      write_fit_report(report, r);
      detail::write_file(dir / "fit_report.txt", report.str());
      save_params(dir / "params.par", r.spec, units);
      std::ostringstream plot;
      write_plot_data(plot, curves, &r.spec, units);
      detail::write_file(dir / "plot_data.csv", plot.str());
      out << report.str();
      if (!r.converged) {
        err << "fit did not converge\n";
        return 2;
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      auto curves = detail::require_curves(eval_args.curves);
      auto spec = detail::resolve_spec(eval_args.params, "", "");
      MetricOptions mo;
      mo.huber_delta = eval_args.huber_delta;
      mo.asd.n_points = eval_args.asd_points;
      mo.asd.axis = eval_args.axis == "index" ? AsdAxis::checkpoint_index : AsdAxis::tokens;
      mo.units = units;
      auto m = evaluate_metrics(curves, spec, mo);
      std::ostringstream rep;
      rep << "law: " << to_string(spec) << '\n';
      rep << "units: " << to_string(units) << "  huber_delta: " << text::number(m.huber_delta)
          << "  asd_points: " << m.asd_points << "  asd_window: " << m.asd_window
          << "  checkpoints: " << m.n_eval_points << '\n';
      std::vector<std::pair<std::string, MetricReport>> rows{{curves.family() + " " + std::string(to_string(curves.method())), m}};
      write_metric_table(rep, rows);
      detail::write_file(dir / "metrics.txt", rep.str());
      std::ostringstream plot;
      write_plot_data(plot, curves, &spec, units);
      detail::write_file(dir / "plot_data.csv", plot.str());
      out << rep.str();
      return 0;
    }

    if (cond_cmd->parsed()) {
      DomainGrid grid{detail::parse_doubles(cond_args.grid_n0, "--grid-n0"),
                      detail::parse_doubles(cond_args.grid_d, "--grid-d"),
                      detail::parse_doubles(cond_args.grid_rho, "--grid-rho")};
      try {
        grid.validate();
      } catch (const ValidationError& e) {
        throw UsageError(e.what());
      }
      std::ostringstream rep;
      if (cond_args.preset == "all") {
        std::vector<ComplianceCell> cells;
        for (const auto& row : presets::fitted_rows) {
          auto spec = presets::to_spec(row);
          std::string law(to_string(row.law));
          law = law.substr(0, 2);
          cells.push_back({std::string(row.family) + " " + law, std::string(to_string(row.method)),
                           check_condition2(spec, grid).verdict});
        }
        rep << "Condition 2 compliance of published fits\n";
        write_compliance_table(rep, cells);
      } else {
        auto spec = detail::resolve_spec(cond_args.params, cond_args.preset, cond_args.law);
        auto report = check_conditions(spec, grid);
        write_condition_report(rep, report);
        auto audit = finite_difference_audit(spec, grid, cond_args.audit_h);
        rep << "finite-difference audit (h_rel=" << text::number(cond_args.audit_h)
            << "): max discrepancy " << text::scientific(audit.max_discrepancy, 3) << '\n';
        for (const auto& e : audit.evaluation_errors) rep << "  error " << e << '\n';
      }
      detail::write_file(dir / "conditions.txt", rep.str());
      out << rep.str();
      return 0;
    }

    if (gen_cmd->parsed()) {
      const LawId law = detail::require_law(gen_args.law);
      auto curves = detail::require_curves(gen_args.curves);
      if (!compatible(law, curves.method())) throw UsageError("law/method mismatch");
      SplitSpec split;
      split.protocol = *parse_protocol(gen_args.protocol);
      split.fit_fraction = gen_args.fraction;
      if (!gen_args.holdout_n0.empty()) split.holdout_n0 = detail::parse_counts(gen_args.holdout_n0, "--holdout-n0");
      if (!gen_args.holdout_rho.empty()) split.holdout_rho = detail::parse_doubles(gen_args.holdout_rho, "--holdout-rho");
      FitOptions opts;
      opts.n_starts = gen_args.starts;
      opts.rng_seed = g.seed;
      opts.units = units;
      GeneralizationResult r = [&] {
        try {
          return run_generalization(curves, law, split, opts);
        } catch (const ValidationError& e) {
          throw UsageError(e.what());
        }
      }();
      std::ostringstream rep;
      rep << "protocol: " << to_string(split.protocol) << '\n';
      rep << "fit curves: " << r.fit_set.size() << "  held-out curves: " << r.holdout_set.size() << '\n';
      for (const auto& p : r.pairings)
        rep << "pairing: " << p.heldout_run << " rho=" << text::number(p.heldout_rho) << " -> "
            << (p.matched_rho ? "rho=" + text::number(*p.matched_rho) : std::string("unpaired (excluded)")) << '\n';
      write_fit_report(rep, r.fit);
      std::vector<std::pair<std::string, MetricReport>> rows{{"fitted", r.fitted}, {"held-out", r.heldout}};
      write_metric_table(rep, rows);
      detail::write_file(dir / "generalization.txt", rep.str());
      std::ostringstream plot;
      write_plot_data(plot, r.holdout_set, &r.fit.spec, units);
      detail::write_file(dir / "plot_data.csv", plot.str());
      out << rep.str();
      return r.fit.converged ? 0 : 2;
    }

    if (pred_cmd->parsed()) {
      auto spec = detail::resolve_spec(pred_args.params, pred_args.preset, pred_args.law);
      RunMeta meta;
      meta.run_id = "prediction";
      meta.family = "prediction";
      meta.n0 = static_cast<std::int64_t>(pred_args.n0);
      meta.rho = pred_args.rho;
      meta.l0 = pred_args.l0;
      meta.n_after = pred_args.n_after > 0 ? static_cast<std::int64_t>(pred_args.n_after)
                                           : static_cast<std::int64_t>(std::llround(pred_args.n0 * (1.0 - pred_args.rho)));
      FlatteningOptions fo{pred_args.epsilon, pred_args.d_lo, pred_args.d_hi, units};
      FlatteningPoint p = [&] {
        try {
          return predict_flattening(spec, meta, fo);
        } catch (const ValidationError& e) {
          throw UsageError(e.what());
        }
      }();
      std::ostringstream rep;
      rep << "law: " << to_string(spec) << '\n';
      rep << "n0: " << meta.n0 << "  rho: " << text::number(meta.rho) << "  l0: " << text::number(meta.l0)
          << "  n_after: " << meta.n_after << "  units: " << to_string(units) << '\n';
      rep << "epsilon: " << text::number(p.epsilon) << " (|dL/dC|, law units)\n";
      rep << "tokens D*: " << text::scientific(p.tokens, 6) << '\n';
      rep << "compute C*: " << text::scientific(p.compute, 6) << " FLOPs (" << text::scientific(p.compute_law, 6)
          << " law units)\n";
      rep << "slope at C*: " << text::scientific(p.slope, 6) << '\n';
      detail::write_file(dir / "prediction.txt", rep.str());
      out << rep.str();
      return 0;
    }

    if (syn_cmd->parsed()) {
      const LawId law = detail::require_law(syn_args.law);
      auto spec = detail::resolve_spec(syn_args.params, syn_args.preset, syn_args.law);
      SynthSpec s{spec};
      std::optional<Method> method;
      if (!syn_args.preset.empty()) {
        auto key = presets::parse_preset_name(syn_args.preset);
        s.family = std::string(key->first);
        method = key->second;
      }
      if (!syn_args.method.empty()) {
        method = parse_method(syn_args.method);
        if (!method) throw UsageError("unknown method '" + syn_args.method + "'");
      }
      s.method = method.value_or(is_semi24_law(spec.id()) ? Method::semi24 : Method::depth);
      if (!syn_args.family.empty()) s.family = syn_args.family;
      if (s.family.empty()) s.family = "synthetic";
      s.n0_list = detail::parse_counts(syn_args.n0, "--n0");
      s.rho_list = s.method == Method::semi24 ? std::vector<double>{} : detail::parse_doubles(syn_args.rho, "--rho");
      s.l0_list = syn_args.l0.empty() ? std::vector<double>(s.n0_list.size(), 2.5) : detail::parse_doubles(syn_args.l0, "--l0");
      s.n_points = syn_args.points;
      s.d_min = static_cast<std::int64_t>(syn_args.d_min);
      s.d_max = static_cast<std::int64_t>(syn_args.d_max);
      s.spacing = syn_args.spacing == "linear" ? Spacing::linear : Spacing::log;
      s.noise_sigma = syn_args.noise;
      s.seed = g.seed;
      s.units = units;
      (void)law;
      CurveSet set = [&] {
        try {
          return generate_synthetic(s);
        } catch (const ValidationError& e) {
          throw UsageError(e.what());
        }
      }();
      const std::filesystem::path path = syn_args.output.empty() ? dir / "synth.cv" : std::filesystem::path(syn_args.output);
      save_curves(path, set, synthetic_comments(s));
      std::ostringstream plot;
      write_plot_data(plot, set, &spec, units);
      detail::write_file(dir / "plot_data.csv", plot.str());
      out << "wrote " << set.size() << " curves x " << s.n_points << " checkpoints to " << path.string() << '\n';
      return 0;
    }

    if (cmp_cmd->parsed()) {
      auto curves = detail::require_curves(cmp_args.curves);
      std::vector<LawId> laws;
      for (const auto& name : detail::split_list(cmp_args.laws)) laws.push_back(detail::require_law(name));
      if (laws.empty()) throw UsageError("nothing to compare");
      for (auto id : laws)
        if (!compatible(id, curves.method()))
          throw UsageError("law/method mismatch: " + std::string(to_string(id)) + " cannot fit " +
                           std::string(to_string(curves.method())) + " curves");
      FitOptions opts;
      opts.n_starts = cmp_args.starts;
      opts.rng_seed = g.seed;
      opts.units = units;
      auto rows = compare_laws(curves, laws, opts);
      std::ostringstream rep;
      rep << "curves: " << curves.family() << ' ' << to_string(curves.method()) << "  (" << curves.size() << " runs, "
          << curves.total_points() << " checkpoints, units " << to_string(units) << ")\n";
      write_comparison_table(rep, rows);
      for (const auto& r : rows)
        if (r.fit) rep << to_string(r.fit->spec) << '\n';
      detail::write_file(dir / "compare.txt", rep.str());
      std::ostringstream plot;
      plot << "series_id,x,y,kind\n";
      for (const auto& r : rows)
        if (r.fit) {
          write_plot_data(plot, curves, &r.fit->spec, units, false);
          break;
        }
      detail::write_file(dir / "plot_data.csv", plot.str());
      out << rep.str();
      const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.fit.has_value(); });
      return any_ok ? 0 : 2;
    }
  } catch (const FitError& e) {
    err << "fit failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace p2law::cli
