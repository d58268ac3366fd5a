// gaegd: run, tune and verify generalized energy-based adaptive gradient descent.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "gaegd/bench.hpp"
#include "gaegd/error.hpp"
#include "gaegd/numfmt.hpp"
#include "gaegd/serialize.hpp"

namespace fs = std::filesystem;
using namespace gaegd;
using namespace gaegd::bench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

/// Flags shared by run, tune and sweep-c. Only flags actually given
/// override the config file.
struct SpecFlags {
  std::map<std::string, CLI::Option*> opt;
  std::string config;
  bool svg = false;

  void attach(CLI::App* app) {
    auto add = [&](const std::string& name, const std::string& help) {
      opt[name] = app->add_option("--" + name, help);
    };
    app->add_option("--config", config, "JSON file with ExperimentSpec fields")
        ->check(CLI::ExistingFile);
    add("objective", "quad100 | quad1d | rosenbrock[:b]");
    add("algo", "gaegd | aegd | alegd | aegd-ref | gdm");
    add("energy", "power:<p> | log | aegd | alegd");
    add("eta", "base step size (learning rate for gdm)");
    add("c", "energy shift, f* + c > 0");
    add("r0", "initial energy variable (default F(f(x0) + c))");
    add("target", "stop threshold; 'none' runs max-iters steps");
    add("metric", "f-gap | grad-norm-sq");
    add("max-iters", "iteration cap");
    add("energy-variable", "scalar | elementwise");
    add("probe", "coordinate reported for elementwise r");
    add("snapshot-stride", "keep x every n steps (0 = auto)");
    add("beta", "gdm momentum");
    add("theory-eps", "gradient accuracy used in theory.json");
    add("repeats", "timing repeats");
    add("seed", "seed recorded with timing repeats");
    add("out-dir", "output directory");
    app->add_flag("--svg", svg, "also write SVG plots");
  }

  bool given(const std::string& name) const { return opt.at(name)->count() > 0; }
  template <class T>
  T get(const std::string& name) const { return opt.at(name)->as<T>(); }

  ExperimentSpec build() const {
    ExperimentSpec s;
    if (!config.empty()) {
      std::ifstream in(config);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::exception& e) {
        throw ConfigError("cannot parse " + config + ": " + e.what());
      }
      s = spec_from_json(j, s);
    }
    if (given("objective")) s.objective = get<std::string>("objective");
    if (given("algo")) s.algo = get<std::string>("algo");
    if (given("energy")) s.energy = get<std::string>("energy");
    if (given("eta")) s.eta = get<double>("eta");
    if (given("c")) s.c = get<double>("c");
    if (given("r0")) s.r0 = get<double>("r0");
    if (given("target")) {
      const auto t = get<std::string>("target");
      if (t == "none") {
        s.target.reset();
      } else {
        try {
          s.target = std::stod(t);
        } catch (const std::exception&) {
          throw ConfigError("--target expects a number or 'none'");
        }
      }
    }
    if (given("metric")) s.metric = parse_metric(get<std::string>("metric"));
    if (given("max-iters")) s.max_iters = get<std::size_t>("max-iters");
    if (given("energy-variable")) {
      s.energy_variable = parse_energy_variable(get<std::string>("energy-variable"));
    }
    if (given("probe")) s.probe_coordinate = get<std::size_t>("probe");
    if (given("snapshot-stride")) s.snapshot_stride = get<std::size_t>("snapshot-stride");
    if (given("beta")) s.gdm_beta = get<double>("beta");
    if (given("theory-eps")) s.theory_eps = get<double>("theory-eps");
    if (given("repeats")) s.timing_repeats = get<std::size_t>("repeats");
    if (given("seed")) s.seed = get<std::uint64_t>("seed");
    if (given("out-dir")) s.out_dir = get<std::string>("out-dir");
    s.validate();
    return s;
  }
};

struct GridFlags {
  std::optional<double> lo, hi;
  std::optional<int> per_decade, refine;
  std::vector<double> values;

  void attach(CLI::App* app) {
    app->add_option("--grid-lo", lo, "lower end of the coarse log grid");
    app->add_option("--grid-hi", hi, "upper end of the coarse log grid");
    app->add_option("--grid-per-decade", per_decade, "coarse points per decade");
    app->add_option("--grid-refine", refine, "linear refinement points (0 disables)");
    app->add_option("--grid-values", values, "explicit coarse grid")->delimiter(',');
  }

  TuningGrid build(const ExperimentSpec& spec) const {
    TuningGrid g = spec.grid.value_or(TuningGrid{});
    if (lo) g.lo = *lo;
    if (hi) g.hi = *hi;
    if (per_decade) g.points_per_decade = *per_decade;
    if (refine) g.refine_points = *refine;
    if (!values.empty()) g.values = values;
    g.coarse();
    return g;
  }
};

std::string opt_str(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : "-";
}

void plot_run(const ExperimentSpec& spec, const ExperimentOutcome& o, bool svg) {
  if (spec.out_dir.empty()) return;
  std::vector<LabeledTrajectory> runs{{o.label, o.trajectory}};
  const auto obj = make_objective(spec.objective);
  std::vector<PlotKind> kinds{PlotKind::LossCurve, PlotKind::RCurve, PlotKind::EtaCurve};
  if (obj->dimension() == 2) kinds.push_back(PlotKind::Trajectory2d);
  for (PlotKind k : kinds) {
    for (const auto& w : emit_plot_data(runs, k, spec.out_dir / "plots", svg, obj.get()).warnings) {
      std::cerr << "warning: " << w << '\n';
    }
  }
}

int cmd_run(const SpecFlags& flags) {
  const ExperimentSpec spec = flags.build();
  const ExperimentOutcome o = run_experiment(spec);
  plot_run(spec, o, flags.svg);
  const auto& t = o.trajectory.terminal;
  std::cout << o.label << ": stop=" << to_string(o.result.reason)
            << " iterations_to_target=" << opt_str(o.result.iterations_to_target)
            << " steps=" << o.trajectory.iterations() << " f=" << format_double(t.f)
            << " grad_norm_sq=" << format_double(t.grad_norm_sq)
            << " r=" << format_double(t.r) << '\n';
  if (o.divergence) std::cout << "divergence: " << *o.divergence << '\n';
  if (o.mean_wall_seconds) {
    std::cout << "mean wall seconds over " << spec.timing_repeats
              << " repeats: " << format_double(*o.mean_wall_seconds) << '\n';
  }
  return kExitOk;
}

int cmd_tune(const SpecFlags& flags, const GridFlags& gflags) {
  const ExperimentSpec spec = flags.build();
  const TuneResult r = tune_lr(spec, gflags.build(spec));
  if (r.all_failed()) {
    std::cout << "tune: every grid point failed to reach the target (" << r.table.size()
              << " cells)\n";
    return kExitOk;
  }
  std::cout << "best_eta=" << format_double(*r.best_eta)
            << " iterations=" << *r.best_iterations << " cells=" << r.table.size() << '\n';
  return kExitOk;
}

int cmd_sweep(const SpecFlags& flags, const GridFlags& gflags, std::vector<double> c_values) {
  const ExperimentSpec spec = flags.build();
  if (c_values.empty()) c_values = spec.c_values;
  const auto rows = sweep_c(spec, gflags.build(spec), c_values);
  std::cout << "c\tbest_eta\titerations\n";
  for (const auto& r : rows) {
    std::cout << format_double(r.c) << '\t'
              << (r.tune.best_eta ? format_double(*r.tune.best_eta) : "-") << '\t'
              << opt_str(r.tune.best_iterations);
    if (r.error) std::cout << "\t(" << *r.error << ')';
    std::cout << '\n';
  }
  return kExitOk;
}

int cmd_verify(std::vector<std::string> objectives, std::vector<std::string> energies,
               std::vector<double> etas, std::size_t steps, double c, bool quiet) {
  if (energies.empty()) energies = default_energy_names();
  const auto cases = verify_matrix(objectives, energies, etas, steps, c);
  std::size_t failed = 0;
  for (const auto& v : cases) {
    const bool ok = v.passed();
    failed += !ok;
    if (quiet && ok) continue;
    std::cout << (ok ? "ok   " : "FAIL ") << v.objective << ' ' << v.energy
              << " eta=" << format_double(v.eta) << " steps=" << v.steps
              << (v.diverged ? " (x diverged)" : "") << " r_monotone=" << v.r_monotone
              << " r_positive=" << v.r_positive
              << " energy_residual=" << format_double(v.energy_residual_rel);
    if (v.gap_violation) std::cout << " gap=" << format_double(*v.gap_violation);
    if (v.bounds_violation) std::cout << " bounds=" << format_double(*v.bounds_violation);
    std::cout << '\n';
  }
  std::cout << cases.size() - failed << '/' << cases.size() << " configurations passed\n";
  return failed ? kExitViolation : kExitOk;
}

std::string read_label(const fs::path& dir) {
  std::ifstream in(dir / "result.json");
  if (!in) return dir.filename().string();
  try {
    return Json::parse(in).value("label", dir.filename().string());
  } catch (const Json::exception&) {
    return dir.filename().string();
  }
}

int cmd_report(const std::vector<std::string>& inputs, const std::vector<std::string>& kinds,
               const std::string& out_dir, const std::string& contour, bool svg) {
  std::vector<LabeledTrajectory> runs;
  for (const auto& in : inputs) {
    const fs::path dir(in);
    if (fs::exists(dir / "sweep.csv")) {
      std::cout << "## " << dir.string() << "/sweep.csv\n";
      std::ifstream f(dir / "sweep.csv");
      std::string line;
      while (std::getline(f, line)) std::cout << line << '\n';
    }
    if (fs::exists(dir / "tune.json")) {
      std::ifstream f(dir / "tune.json");
      const Json j = Json::parse(f);
      std::cout << "## " << dir.string() << ": best_eta=" << j["best_eta"].dump()
                << " iterations=" << j["best_iterations"].dump() << '\n';
    }
    if (fs::exists(dir / "trajectory.csv")) {
      runs.push_back({read_label(dir), read_trajectory_csv(dir / "trajectory.csv")});
    }
  }
  std::shared_ptr<const Objective> obj;
  if (!contour.empty()) obj = make_objective(contour);
  for (const auto& k : kinds) {
    const PlotKind kind = parse_plot_kind(k);
    const PlotOutput out = emit_plot_data(runs, kind, out_dir, svg, obj.get());
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& f : out.files) std::cout << f.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized energy-based adaptive gradient descent"};
  app.require_subcommand(1);

  SpecFlags run_flags, tune_flags, sweep_flags;
  GridFlags tune_grid, sweep_grid;

  auto* run = app.add_subcommand("run", "run one experiment");
  run_flags.attach(run);

  auto* tune = app.add_subcommand("tune", "learning-rate grid search");
  tune_flags.attach(tune);
  tune_grid.attach(tune);

  std::vector<double> c_values;
  auto* sweep = app.add_subcommand("sweep-c", "tune the step size for several c");
  sweep_flags.attach(sweep);
  sweep_grid.attach(sweep);
  sweep->add_option("--c-values", c_values, "comma separated shifts")->delimiter(',');

  std::vector<std::string> v_objectives{"quad100", "rosenbrock"}, v_energies;
  std::vector<double> v_etas{1e-3, 1.0, 1e3};
  std::size_t v_steps = 1000;
  double v_c = 1.0;
  bool v_quiet = false;
  auto* verify = app.add_subcommand("verify", "invariant suite over a configuration matrix");
  verify->add_option("--objectives", v_objectives)->delimiter(',');
  verify->add_option("--energies", v_energies, "default: power:0.1 ... power:1, log")
      ->delimiter(',');
  verify->add_option("--etas", v_etas)->delimiter(',');
  verify->add_option("--steps", v_steps);
  verify->add_option("--c", v_c);
  verify->add_flag("--quiet", v_quiet, "only print failing configurations");

  std::vector<std::string> r_inputs, r_kinds{"loss-curve"};
  std::string r_out = "report", r_contour;
  bool r_svg = false;
  auto* report = app.add_subcommand("report", "tables and plot data from stored results");
  report->add_option("inputs", r_inputs, "result directories")->required();
  report->add_option("--kind", r_kinds, "loss-curve, r-curve, eta-curve, trajectory-2d")
      ->delimiter(',');
  report->add_option("--out-dir", r_out);
  report->add_option("--contour", r_contour, "objective drawn under trajectory-2d");
  report->add_flag("--svg", r_svg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*tune) return cmd_tune(tune_flags, tune_grid);
    if (*sweep) return cmd_sweep(sweep_flags, sweep_grid, c_values);
    if (*verify) return cmd_verify(v_objectives, v_energies, v_etas, v_steps, v_c, v_quiet);
    if (*report) return cmd_report(r_inputs, r_kinds, r_out, r_contour, r_svg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnsupportedEnergyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
