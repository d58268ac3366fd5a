#include "gaegd/serialize.hpp"

#include <cmath>

#include "gaegd/error.hpp"

namespace gaegd {

namespace {

// JSON has no inf/nan; those become strings so the files stay loadable.
Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

template <class T>
Json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    return num(*v);
  } else {
    return *v;
  }
}

Json vec(const Vector& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

}  // namespace

Json to_json(const TheoryReport& r) {
  Json j;
  const TheoryInputs& in = r.inputs;
  j["inputs"] = {{"eta", num(in.eta)},       {"c", num(in.c)},   {"r0", num(in.r0)},
                 {"f0", num(in.f0)},         {"f_star", num(in.f_star)},
                 {"L", num(in.L)},           {"energy", in.energy.name()}};
  const StabilityBounds& b = r.bounds;
  j["F_star"] = num(b.F_star);
  j["F0"] = num(b.F0);
  j["F_bar"] = num(b.F_bar);
  j["f_bar"] = num(b.f_bar);
  j["Fp_star"] = num(b.Fp_star);
  j["Fp_bar"] = num(b.Fp_bar);
  j["alpha_lower"] = num(b.alpha_lower);
  j["eta_r0"] = num(r.threshold.eta_r0);
  j["r_star_lb"] = num(r.threshold.r_star_lb);
  j["eta_guaranteed"] = r.threshold.guaranteed;
  j["r_star"] = num(r.r_star);
  j["r_star_source"] = to_string(r.r_star_source);
  if (r.c_star) {
    j["c_star"] = num(r.c_star->c_star);
    j["a_star"] = num(r.c_star->a_star);
    j["c_star_crossing_found"] = r.c_star->crossing_found;
  } else {
    j["c_star"] = nullptr;
    j["a_star"] = nullptr;
  }
  j["c_bar"] = num(r.guards.c_bar);
  j["c_tilde"] = num(r.guards.c_tilde);
  j["eps"] = num(r.eps);
  j["two_stage_level"] = num(r.two_stage_level);
  j["N0"] = num(r.N0);
  j["N_bound"] = num(r.N_bound.N);
  j["N_bound_branch"] = r.N_bound.branch == BoundBranch::SmallR0 ? "small_r0" : "large_r0";
  j["N_bound_preconditions_met"] = r.N_bound.preconditions_met;
  if (r.kl) {
    j["kl"] = {{"Q", num(r.kl->Q)},
               {"C1", opt(r.kl->C1)},
               {"C2", opt(r.kl->C2)},
               {"C3", opt(r.kl->C3)},
               {"finite_steps", opt(r.kl->finite_steps)},
               {"valid_from_k", opt(r.kl->valid_from_k)}};
  }
  return j;
}

namespace bench {

Json to_json(const ExperimentSpec& s) {
  Json j;
  j["objective"] = s.objective;
  j["algo"] = s.algo;
  j["energy"] = s.energy;
  j["eta"] = num(s.eta);
  j["c"] = num(s.c);
  j["r0"] = opt(s.r0);
  j["target"] = opt(s.target);
  j["metric"] = to_string(s.metric);
  j["max_iters"] = s.max_iters;
  j["energy_variable"] = to_string(s.energy_variable);
  j["probe_coordinate"] = s.probe_coordinate;
  j["snapshot_stride"] = s.snapshot_stride;
  j["gdm_beta"] = num(s.gdm_beta);
  j["theory_eps"] = num(s.theory_eps);
  j["seed"] = s.seed;
  j["timing_repeats"] = s.timing_repeats;
  j["x0"] = s.x0 ? vec(*s.x0) : Json(nullptr);
  if (s.grid) {
    Json g;
    g["lo"] = s.grid->lo;
    g["hi"] = s.grid->hi;
    g["points_per_decade"] = s.grid->points_per_decade;
    g["refine_points"] = s.grid->refine_points;
    if (s.grid->values) g["values"] = vec(*s.grid->values);
    j["grid"] = g;
  }
  if (!s.c_values.empty()) j["c_values"] = vec(s.c_values);
  return j;
}

ExperimentSpec spec_from_json(const Json& j, ExperimentSpec s) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const char* const known[] = {
      "objective", "algo",     "energy",          "eta",
      "c",         "r0",       "target",          "metric",
      "max_iters", "energy_variable", "probe_coordinate", "snapshot_stride",
      "gdm_beta",  "theory_eps", "seed",          "timing_repeats",
      "x0",        "grid",     "c_values",        "out_dir"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return key == k; }) == std::end(known)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  try {
    if (j.contains("objective")) s.objective = j["objective"].get<std::string>();
    if (j.contains("algo")) s.algo = j["algo"].get<std::string>();
    if (j.contains("energy")) s.energy = j["energy"].get<std::string>();
    if (j.contains("eta")) s.eta = j["eta"].get<double>();
    if (j.contains("c")) s.c = j["c"].get<double>();
    if (j.contains("r0")) {
      if (j["r0"].is_null()) s.r0.reset();
      else s.r0 = j["r0"].get<double>();
    }
    if (j.contains("target")) {
      if (j["target"].is_null()) s.target.reset();
      else s.target = j["target"].get<double>();
    }
    if (j.contains("metric")) s.metric = parse_metric(j["metric"].get<std::string>());
    if (j.contains("max_iters")) s.max_iters = j["max_iters"].get<std::size_t>();
    if (j.contains("energy_variable")) {
      s.energy_variable = parse_energy_variable(j["energy_variable"].get<std::string>());
    }
    if (j.contains("probe_coordinate")) s.probe_coordinate = j["probe_coordinate"].get<std::size_t>();
    if (j.contains("snapshot_stride")) s.snapshot_stride = j["snapshot_stride"].get<std::size_t>();
    if (j.contains("gdm_beta")) s.gdm_beta = j["gdm_beta"].get<double>();
    if (j.contains("theory_eps")) s.theory_eps = j["theory_eps"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("timing_repeats")) s.timing_repeats = j["timing_repeats"].get<std::size_t>();
    if (j.contains("x0")) {
      if (j["x0"].is_null()) s.x0.reset();
      else s.x0 = j["x0"].get<Vector>();
    }
    if (j.contains("grid")) {
      const Json& g = j["grid"];
      TuningGrid grid = s.grid.value_or(TuningGrid{});
      if (g.is_array()) {
        grid.values = g.get<std::vector<double>>();
      } else {
        if (g.contains("lo")) grid.lo = g["lo"].get<double>();
        if (g.contains("hi")) grid.hi = g["hi"].get<double>();
        if (g.contains("points_per_decade")) grid.points_per_decade = g["points_per_decade"].get<int>();
        if (g.contains("refine_points")) grid.refine_points = g["refine_points"].get<int>();
        if (g.contains("values")) grid.values = g["values"].get<std::vector<double>>();
      }
      s.grid = grid;
    }
    if (j.contains("c_values")) s.c_values = j["c_values"].get<std::vector<double>>();
    if (j.contains("out_dir")) s.out_dir = j["out_dir"].get<std::string>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return s;
}

Json to_json(const ExperimentOutcome& o, const ExperimentSpec& spec) {
  Json j;
  j["label"] = o.label;
  j["spec"] = to_json(spec);
  j["stop_reason"] = to_string(o.result.reason);
  j["iterations_to_target"] = opt(o.result.iterations_to_target);
  j["iterations"] = o.trajectory.iterations();
  const TerminalRecord& t = o.trajectory.terminal;
  j["final_f"] = num(t.f);
  j["final_grad_norm_sq"] = num(t.grad_norm_sq);
  j["final_r"] = num(t.r);
  j["r0"] = num(o.trajectory.r0());
  j["final_x"] = vec(t.x);
  j["wall_seconds"] = num(o.result.wall_seconds);
  j["mean_wall_seconds"] = opt(o.mean_wall_seconds);
  j["divergence"] = o.divergence ? Json(*o.divergence) : Json(nullptr);
  return j;
}

Json to_json(const TuneResult& t) {
  Json j;
  j["best_eta"] = opt(t.best_eta);
  j["best_iterations"] = opt(t.best_iterations);
  Json table = Json::array();
  for (const auto& c : t.table) {
    table.push_back({{"stage", c.stage},
                     {"eta", num(c.eta)},
                     {"iterations", opt(c.iterations)},
                     {"stop_reason", to_string(c.reason)}});
  }
  j["table"] = table;
  return j;
}

Json to_json(const DiagnosticsReport& r) {
  Json j;
  j["two_over_L"] = num(r.two_over_L);
  j["r_level"] = num(r.r_level);
  j["first_below_two_over_L"] = opt(r.first_below_two_over_L);
  j["settled_below_two_over_L"] = opt(r.settled_below_two_over_L);
  j["r_non_increasing"] = r.r_non_increasing;
  j["energy_identity_ok"] = r.energy_identity_ok;
  j["energy_identity_residual"] = num(r.energy_identity_residual);
  j["bounds_ok"] = opt(r.bounds_ok);
  j["gap_ok"] = opt(r.gap_ok);
  j["gap_violation"] = num(r.gap_violation);
  j["rows"] = r.rows.size();
  return j;
}

}  // namespace bench

}  // namespace gaegd
