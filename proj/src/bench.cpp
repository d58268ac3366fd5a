#include "gaegd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "gaegd/error.hpp"
#include "gaegd/numfmt.hpp"
#include "gaegd/serialize.hpp"

namespace gaegd::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Evaluates fn(i) for i in [0, n) on up to hardware_concurrency threads.
/// Results are keyed by index, so completion order does not matter.
template <class Fn>
auto parallel_map(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  std::vector<decltype(fn(std::size_t{}))> out(n);
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

RunOutput execute(const ExperimentSpec& spec, const ResolvedAlgorithm& algo, const Objective& obj,
                  const Vector& x0) {
  switch (algo.kind) {
    case Algorithm::Gaegd:
      return run(gaegd_config(spec), obj, x0);
    case Algorithm::AegdReference:
      return run_aegd_reference(gaegd_config(spec), obj, x0);
    case Algorithm::Gdm: {
      GdmConfig cfg;
      cfg.lr = spec.eta;
      cfg.beta = spec.gdm_beta;
      cfg.stop = {spec.metric, spec.target, spec.max_iters};
      cfg.snapshot_stride = spec.snapshot_stride;
      return run_gdm(cfg, obj, x0);
    }
  }
  throw ConfigError("unknown algorithm");
}

ExperimentOutcome run_once(const ExperimentSpec& spec, bool with_theory) {
  spec.validate();
  const auto obj = make_objective(spec.objective);
  const Vector x0 = spec.x0.value_or(obj->default_x0());
  const ResolvedAlgorithm algo = resolve_algorithm(spec);

  ExperimentOutcome out;
  out.label = algo.label;
  try {
    RunOutput ro = execute(spec, algo, *obj, x0);
    out.result = std::move(ro.result);
    out.trajectory = std::move(ro.trajectory);
  } catch (DivergenceError& e) {
    out.divergence = e.what();
    if (e.partial) out.trajectory = std::move(*e.partial);
    out.result.reason = StopReason::Divergence;
    const TerminalRecord& t = out.trajectory.terminal;
    out.result.final_state.x = t.x;
    out.result.final_state.k = t.k;
    out.result.final_state.f = t.f;
    out.result.final_state.grad_norm_sq = t.grad_norm_sq;
    out.result.final_state.r = {t.r};
    out.result.final_state.log_r = {t.log_r};
  }

  if (with_theory && algo.kind == Algorithm::Gaegd &&
      spec.energy_variable == EnergyVariable::Scalar) {
    try {
      std::optional<double> L = obj->lipschitz();
      if (!L) L = empirical_lipschitz(out.trajectory, *obj);
      const TheoryInputs in = theory_inputs(gaegd_config(spec), *obj, x0, L);
      out.theory = make_theory_report(in, spec.theory_eps, measured_r_star(out.trajectory));
    } catch (const DomainError&) {
    }
  }
  return out;
}

}  // namespace

std::vector<double> TuningGrid::coarse() const {
  std::vector<double> pts;
  if (values) {
    pts = *values;
  } else {
    if (!(lo > 0.0) || !(hi >= lo) || points_per_decade < 1) {
      throw ConfigError("tuning grid needs 0 < lo <= hi and points_per_decade >= 1");
    }
    const double decades = std::log10(hi / lo);
    const auto n = static_cast<std::size_t>(std::lround(decades * points_per_decade)) + 1;
    pts = n >= 2 ? log_grid(lo, hi, n) : std::vector<double>{lo};
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.empty()) throw ConfigError("tuning grid is empty");
  for (double p : pts) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("tuning grid values must be > 0");
  }
  return pts;
}

void ExperimentSpec::validate() const {
  const auto obj = make_objective(objective);
  const ResolvedAlgorithm algo = resolve_algorithm(*this);
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be > 0");
  if (algo.kind != Algorithm::Gdm && !(obj->f_star() + c > 0.0)) {
    throw ConfigError("c must satisfy f* + c > 0");
  }
  if (r0 && !(*r0 > 0.0)) throw ConfigError("r0 must be > 0");
  if (target && !(*target > 0.0)) throw ConfigError("target must be > 0");
  if (max_iters == 0) throw ConfigError("max_iters must be > 0");
  if (!(theory_eps > 0.0)) throw ConfigError("theory_eps must be > 0");
  if (!(gdm_beta >= 0.0 && gdm_beta < 1.0)) throw ConfigError("gdm_beta must lie in [0, 1)");
  if (x0 && x0->size() != obj->dimension()) throw ConfigError("x0 dimension mismatch");
}

ResolvedAlgorithm resolve_algorithm(const ExperimentSpec& spec) {
  ResolvedAlgorithm out;
  if (spec.algo == "gaegd") {
    out.kind = Algorithm::Gaegd;
    out.energy = EnergyFunction::parse(spec.energy);
    out.label = "gaegd-" + out.energy.name();
  } else if (spec.algo == "aegd" || spec.algo == "alegd") {
    out.kind = Algorithm::Gaegd;
    out.energy = EnergyFunction::parse(spec.algo);
    out.label = spec.algo;
  } else if (spec.algo == "aegd-ref") {
    out.kind = Algorithm::AegdReference;
    out.label = "aegd-ref";
  } else if (spec.algo == "gdm") {
    out.kind = Algorithm::Gdm;
    out.label = "gdm";
  } else {
    throw ConfigError("unknown algorithm '" + spec.algo +
                      "' (expected gaegd, aegd, alegd, aegd-ref or gdm)");
  }
  return out;
}

GaegdConfig gaegd_config(const ExperimentSpec& spec) {
  GaegdConfig cfg;
  cfg.eta = spec.eta;
  cfg.c = spec.c;
  cfg.r0 = spec.r0;
  cfg.energy = resolve_algorithm(spec).energy;
  cfg.stop = {spec.metric, spec.target, spec.max_iters};
  cfg.variable = spec.energy_variable;
  cfg.snapshot_stride = spec.snapshot_stride;
  cfg.probe_coordinate = spec.probe_coordinate;
  return cfg;
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  ExperimentOutcome out = run_once(spec, true);
  if (spec.timing_repeats > 0) {
    const auto obj = make_objective(spec.objective);
    const Vector x0 = spec.x0.value_or(obj->default_x0());
    const ResolvedAlgorithm algo = resolve_algorithm(spec);
    double total = 0.0;
    for (std::size_t i = 0; i < spec.timing_repeats; ++i) {
      try {
        total += execute(spec, algo, *obj, x0).result.wall_seconds;
      } catch (const DivergenceError&) {
      }
    }
    out.mean_wall_seconds = total / static_cast<double>(spec.timing_repeats);
  }

  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    write_text(spec.out_dir / "result.json", to_json(out, spec).dump(2) + "\n");
    std::ostringstream csv;
    write_trajectory_csv(csv, out.trajectory);
    write_text(spec.out_dir / "trajectory.csv", csv.str());
    if (out.theory) write_text(spec.out_dir / "theory.json", to_json(*out.theory).dump(2) + "\n");
  }
  return out;
}

TuneResult tune_lr(const ExperimentSpec& spec, const TuningGrid& grid) {
  ExperimentSpec base = spec;
  base.out_dir.clear();
  base.timing_repeats = 0;
  base.snapshot_stride = spec.max_iters + 1;
  base.grid.reset();
  base.validate();

  auto evaluate = [&](const std::vector<double>& etas, const std::string& stage) {
    return parallel_map(etas.size(), [&](std::size_t i) {
      ExperimentSpec cell = base;
      cell.eta = etas[i];
      const ExperimentOutcome o = run_once(cell, false);
      GridCell gc;
      gc.eta = etas[i];
      gc.iterations = o.result.iterations_to_target;
      gc.reason = o.result.reason;
      gc.stage = stage;
      return gc;
    });
  };
  auto best_of = [](const std::vector<GridCell>& cells) -> const GridCell* {
    const GridCell* best = nullptr;
    for (const auto& c : cells) {
      if (!c.iterations) continue;
      if (!best || *c.iterations < *best->iterations ||
          (*c.iterations == *best->iterations && c.eta < best->eta)) {
        best = &c;
      }
    }
    return best;
  };

  TuneResult out;
  const std::vector<double> coarse = grid.coarse();
  out.table = evaluate(coarse, "coarse");
  const GridCell* coarse_best = best_of(out.table);
  if (coarse_best && grid.refine_points > 1 && coarse.size() >= 2) {
    const auto idx = static_cast<std::size_t>(
        std::find(coarse.begin(), coarse.end(), coarse_best->eta) - coarse.begin());
    const double a = coarse[idx == 0 ? 0 : idx - 1];
    const double b = coarse[std::min(idx + 1, coarse.size() - 1)];
    std::vector<double> fine(static_cast<std::size_t>(grid.refine_points));
    for (std::size_t i = 0; i < fine.size(); ++i) {
      fine[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(fine.size() - 1);
    }
    const auto refined = evaluate(fine, "refine");
    out.table.insert(out.table.end(), refined.begin(), refined.end());
  }
  if (const GridCell* best = best_of(out.table)) {
    out.best_eta = best->eta;
    out.best_iterations = best->iterations;
  }

  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    std::ostringstream csv;
    csv << "stage,eta,iterations,stop_reason,best\n";
    for (const auto& c : out.table) {
      csv << c.stage << ',' << format_double(c.eta) << ','
          << (c.iterations ? std::to_string(*c.iterations) : "") << ',' << to_string(c.reason)
          << ',' << (out.best_eta && c.eta == *out.best_eta && c.iterations == out.best_iterations)
          << '\n';
    }
    write_text(spec.out_dir / "grid.csv", csv.str());
    Json j = to_json(out);
    j["spec"] = to_json(spec);
    write_text(spec.out_dir / "tune.json", j.dump(2) + "\n");
  }
  return out;
}

std::vector<SweepRow> sweep_c(const ExperimentSpec& spec, const TuningGrid& grid,
                              const std::vector<double>& c_values) {
  std::vector<SweepRow> rows;
  for (double c : c_values) {
    SweepRow row;
    row.c = c;
    ExperimentSpec cell = spec;
    cell.c = c;
    cell.out_dir.clear();
    if (!spec.out_dir.empty()) cell.out_dir = spec.out_dir / ("c_" + format_double(c));
    try {
      row.tune = tune_lr(cell, grid);
      if (row.tune.all_failed()) row.error = "every grid point failed to reach the target";
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  if (!spec.out_dir.empty()) {
    std::filesystem::create_directories(spec.out_dir);
    std::ostringstream csv;
    csv << "c,best_eta,iterations,grid,status\n";
    for (const auto& r : rows) {
      csv << format_double(r.c) << ','
          << (r.tune.best_eta ? format_double(*r.tune.best_eta) : "") << ','
          << (r.tune.best_iterations ? std::to_string(*r.tune.best_iterations) : "") << ','
          << "c_" + format_double(r.c) + "/grid.csv" << ',' << (r.error ? "failed" : "ok")
          << '\n';
    }
    write_text(spec.out_dir / "sweep.csv", csv.str());
  }
  return rows;
}

DiagnosticsReport diagnostics_report(const Trajectory& traj, const GaegdConfig& config,
                                     double f_star, double L,
                                     const std::optional<TheoryReport>& theory) {
  DiagnosticsReport rep;
  rep.two_over_L = 2.0 / L;
  rep.r_level = config.energy.value(f_star + config.c) / (L * config.eta);
  for (const auto& s : traj.steps) {
    rep.rows.push_back({s.k, s.f, s.grad_norm_sq, s.r, s.eta_eff});
    if (!rep.first_below_two_over_L && s.eta_eff <= rep.two_over_L) {
      rep.first_below_two_over_L = s.k;
    }
  }
  for (std::size_t i = traj.steps.size(); i-- > 0;) {
    if (traj.steps[i].eta_eff > rep.two_over_L) break;
    rep.settled_below_two_over_L = traj.steps[i].k;
  }
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& s = traj.steps[i];
    if (s.r_next > s.r || s.log_r_next > s.log_r) rep.r_non_increasing = false;
    if (i + 1 < traj.steps.size() && traj.steps[i + 1].r > s.r) rep.r_non_increasing = false;
  }
  const double r0 = traj.r0();
  rep.energy_identity_residual = verify_energy_identity(traj, config).energy;
  rep.energy_identity_ok = rep.energy_identity_residual <= 1e-9 * r0 * r0;
  if (theory && config.variable == EnergyVariable::Scalar) {
    rep.bounds_ok = check_stability_bounds(traj, theory->bounds, theory->inputs).holds(1e-9);
    rep.gap_violation = gap_bound_check(traj, theory->inputs);
    rep.gap_ok = rep.gap_violation <= 1e-9;
  }
  return rep;
}

void write_diagnostics_csv(std::ostream& out, const DiagnosticsReport& report) {
  out << "k,f,grad_norm_sq,r,eta_eff,two_over_L,r_level\n";
  for (const auto& row : report.rows) {
    out << row.k << ',' << format_double(row.f) << ',' << format_double(row.grad_norm_sq) << ','
        << format_double(row.r) << ',' << format_double(row.eta_eff) << ','
        << format_double(report.two_over_L) << ',' << format_double(report.r_level) << '\n';
  }
}

bool VerifyCase::passed() const noexcept {
  return r_monotone && r_positive && energy_residual_rel <= 1e-9 && eta_identity_rel <= 1e-15 &&
         (!gap_violation || *gap_violation <= 1e-9) &&
         (!bounds_violation || *bounds_violation <= 1e-9);
}

std::vector<std::string> default_energy_names() {
  std::vector<std::string> names;
  for (int i = 1; i <= 10; ++i) names.push_back(EnergyFunction::power(i / 10.0).name());
  names.push_back("log");
  return names;
}

std::vector<VerifyCase> verify_matrix(const std::vector<std::string>& objectives,
                                      const std::vector<std::string>& energies,
                                      const std::vector<double>& etas, std::size_t steps,
                                      double c) {
  struct Cell {
    std::string objective, energy;
    double eta;
  };
  std::vector<Cell> cells;
  for (const auto& o : objectives) {
    for (const auto& e : energies) {
      for (double eta : etas) cells.push_back({o, e, eta});
    }
  }
  return parallel_map(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    const auto obj = make_objective(cell.objective);
    GaegdConfig cfg;
    cfg.eta = cell.eta;
    cfg.c = c;
    cfg.energy = EnergyFunction::parse(cell.energy);
    cfg.stop = {AccuracyMetric::FGap, std::nullopt, steps};
    cfg.snapshot_stride = steps + 1;

    VerifyCase vc;
    vc.objective = cell.objective;
    vc.energy = cfg.energy.name();
    vc.eta = cell.eta;
    Trajectory traj;
    try {
      traj = run(cfg, *obj, obj->default_x0()).trajectory;
    } catch (DivergenceError& e) {
      vc.diverged = true;
      traj = std::move(e.partial.value());
    }
    vc.steps = traj.steps.size();
    for (const auto& s : traj.steps) {
      if (!(s.r_next <= s.r) || !(s.log_r_next <= s.log_r)) vc.r_monotone = false;
      // r itself may underflow to 0; positivity is judged on log r
      if (!std::isfinite(s.log_r) || !std::isfinite(s.log_r_next)) vc.r_positive = false;
      const double expected = cfg.eta * s.r_next / s.F;
      vc.eta_identity_rel = std::max(vc.eta_identity_rel, std::abs(s.eta_eff - expected) / expected);
    }
    const double r0 = traj.r0();
    vc.energy_residual_rel = verify_energy_identity(traj, cfg).energy / (r0 * r0);
    if (obj->lipschitz()) {
      const TheoryInputs in = theory_inputs(cfg, *obj, obj->default_x0());
      vc.gap_violation = gap_bound_check(traj, in);
      const BoundsViolation bv = check_stability_bounds(traj, stability_bounds(in), in);
      vc.bounds_violation = std::max({bv.F_upper, bv.F_lower, bv.f_upper, bv.f_lower,
                                      bv.Fp_upper, bv.Fp_lower});
    }
    return vc;
  });
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::size_t columns = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (line.rfind("k,f,grad_norm_sq,r,eta_eff", 0) != 0) {
    throw std::runtime_error(path.string() + " is not a trajectory CSV");
  }
  const std::size_t dim = columns - 5;

  struct Row {
    std::size_t k;
    double f, g, r, eta;
    std::optional<Vector> x;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    while (fields.size() < columns) fields.emplace_back();
    Row row{static_cast<std::size_t>(std::stoull(fields[0])), std::strtod(fields[1].c_str(), nullptr),
            std::strtod(fields[2].c_str(), nullptr), std::strtod(fields[3].c_str(), nullptr),
            std::strtod(fields[4].c_str(), nullptr), std::nullopt};
    if (dim > 0 && !fields[5].empty()) {
      Vector x(dim);
      for (std::size_t i = 0; i < dim; ++i) x[i] = std::strtod(fields[5 + i].c_str(), nullptr);
      row.x = std::move(x);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + " has no rows");

  Trajectory traj;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    StepRecord s;
    s.k = rows[i].k;
    s.f = rows[i].f;
    s.grad_norm_sq = rows[i].g;
    s.r = rows[i].r;
    s.r_next = rows[i + 1].r;
    s.log_r = std::log(s.r);
    s.log_r_next = std::log(s.r_next);
    s.eta_eff = rows[i].eta;
    s.F = kNaN;
    s.Fp = kNaN;
    s.step_sq = kNaN;
    s.x_snapshot = rows[i].x;
    traj.steps.push_back(std::move(s));
  }
  const Row& last = rows.back();
  traj.terminal = {last.k, last.f, last.g, last.r, kNaN, kNaN, last.x.value_or(Vector{}),
                   std::log(last.r)};
  if (traj.steps.size() >= 2) {
    std::size_t stride = 0;
    for (std::size_t i = 1; i < traj.steps.size(); ++i) {
      if (traj.steps[i].x_snapshot) {
        stride = i;
        break;
      }
    }
    traj.snapshot_stride = stride ? stride : traj.steps.size() + 1;
  }
  return traj;
}

}  // namespace gaegd::bench
