#include "gaegd/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "gaegd/error.hpp"
#include "gaegd/numfmt.hpp"

namespace gaegd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool all_finite(const Vector& v) {
  for (double e : v) {
    if (!std::isfinite(e)) return false;
  }
  return true;
}

double squared_norm(const Vector& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

std::size_t probe_index(const OptimizerState& state, const GaegdConfig& config) {
  return state.r.size() == 1 ? 0 : config.probe_coordinate;
}

void refresh(OptimizerState& s, const Objective& obj, const EnergyFunction& energy, double c) {
  s.f = obj.value(s.x);
  obj.gradient(s.x, s.grad);
  s.grad_norm_sq = squared_norm(s.grad);
  const double shifted = s.f + c;
  if (std::isfinite(shifted) && shifted > 0.0) {
    s.F = energy.value(shifted);
    s.Fp = energy.derivative(shifted);
  } else {
    s.F = kNaN;
    s.Fp = kNaN;
  }
}

void check_finite(const OptimizerState& next, std::size_t k) {
  if (!std::isfinite(next.f) || !all_finite(next.x) || !all_finite(next.grad) ||
      !std::isfinite(next.grad_norm_sq)) {
    throw DivergenceError("non-finite iterate after step " + std::to_string(k), k);
  }
  for (std::size_t i = 0; i < next.r.size(); ++i) {
    if (!(next.r[i] >= 0.0) || !std::isfinite(next.r[i]) || !std::isfinite(next.log_r[i])) {
      throw DivergenceError("energy variable left (0, inf) after step " + std::to_string(k), k);
    }
  }
  if (!std::isfinite(next.F) || !std::isfinite(next.Fp)) {
    throw DivergenceError("energy undefined after step " + std::to_string(k), k);
  }
}

void validate(const GaegdConfig& config, const Objective& obj) {
  if (!(config.eta > 0.0) || !std::isfinite(config.eta)) {
    throw ConfigError("eta must be finite and > 0");
  }
  if (!(obj.f_star() + config.c > 0.0)) {
    throw ConfigError("shift c must satisfy f* + c > 0");
  }
  if (config.variable == EnergyVariable::Elementwise &&
      config.probe_coordinate >= obj.dimension()) {
    throw ConfigError("probe coordinate outside objective dimension");
  }
  static const Vector grid = log_grid(1e-6, 1e6, 50);
  if (!check_admissibility(config.energy, grid).admissible()) {
    throw ConfigError("energy " + config.energy.name() + " is not increasing and concave");
  }
}

StepRecord advance_reference(OptimizerState& state, double eta, double c, const Objective& obj,
                             std::size_t probe) {
  const std::size_t d = state.x.size();
  const double root = std::sqrt(state.f + c);
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = state.grad[i] / (2.0 * root);

  OptimizerState next;
  next.k = state.k + 1;
  next.r.resize(state.r.size());
  next.log_r.resize(state.r.size());
  next.x.resize(d);
  if (state.r.size() == 1) {
    const double a = 2.0 * eta * squared_norm(v);
    next.r[0] = state.r[0] / (1.0 + a);
    next.log_r[0] = state.log_r[0] - std::log1p(a);
    for (std::size_t i = 0; i < d; ++i) next.x[i] = state.x[i] - 2.0 * eta * next.r[0] * v[i];
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      const double a = 2.0 * eta * v[i] * v[i];
      next.r[i] = state.r[i] / (1.0 + a);
      next.log_r[i] = state.log_r[i] - std::log1p(a);
      next.x[i] = state.x[i] - 2.0 * eta * next.r[i] * v[i];
    }
  }
  next.grad.resize(d);
  next.f = obj.value(next.x);
  obj.gradient(next.x, next.grad);
  next.grad_norm_sq = squared_norm(next.grad);
  const double next_root = std::sqrt(next.f + c);
  next.F = next_root;
  next.Fp = 0.5 / next_root;
  check_finite(next, state.k);

  const std::size_t p = state.r.size() == 1 ? 0 : probe;
  StepRecord rec;
  rec.k = state.k;
  rec.f = state.f;
  rec.grad_norm_sq = state.grad_norm_sq;
  rec.r = state.r[p];
  rec.r_next = next.r[p];
  rec.log_r = state.log_r[p];
  rec.log_r_next = next.log_r[p];
  rec.eta_eff = eta * next.r[p] / root;
  rec.F = root;
  rec.Fp = 0.5 / root;
  const double dx = 2.0 * eta * next.r[p];
  rec.step_sq = state.r.size() == 1 ? dx * dx * squared_norm(v) : dx * dx * v[p] * v[p];
  state = std::move(next);
  return rec;
}

template <class StepFn>
RunOutput drive(OptimizerState state, const StopRule& stop, std::size_t stride, double eta,
                double c, double f_star, std::size_t probe, StepFn&& advance_fn) {
  const auto start = std::chrono::steady_clock::now();
  RunOutput out;
  out.trajectory.snapshot_stride = stride;
  out.trajectory.eta = eta;
  out.trajectory.c = c;

  auto make_terminal = [&](const OptimizerState& s) {
    TerminalRecord t;
    t.k = s.k;
    t.f = s.f;
    t.grad_norm_sq = s.grad_norm_sq;
    t.r = s.r.empty() ? kNaN : s.r[s.r.size() == 1 ? 0 : probe];
    t.log_r = s.log_r.empty() ? kNaN : s.log_r[s.log_r.size() == 1 ? 0 : probe];
    t.F = s.F;
    t.Fp = s.Fp;
    t.x = s.x;
    return t;
  };

  for (;;) {
    if (stop.threshold && stop_reached(stop, state.f - f_star, state.grad_norm_sq)) {
      out.result.reason = StopReason::Target;
      out.result.iterations_to_target = state.k;
      break;
    }
    if (state.k >= stop.max_iters) {
      out.result.reason = StopReason::MaxIters;
      break;
    }
    std::optional<Vector> snapshot;
    if (state.k % stride == 0) snapshot = state.x;
    StepRecord rec;
    try {
      rec = advance_fn(state);
    } catch (DivergenceError& e) {
      out.trajectory.terminal = make_terminal(state);
      if (!out.trajectory.steps.empty()) e.last_finite = out.trajectory.steps.back();
      e.partial = std::move(out.trajectory);
      throw;
    }
    rec.x_snapshot = std::move(snapshot);
    out.trajectory.steps.push_back(std::move(rec));
  }
  out.trajectory.terminal = make_terminal(state);
  out.result.final_state = std::move(state);
  out.result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

std::size_t default_snapshot_stride(std::size_t dimension) noexcept {
  return dimension <= 10 ? 1 : 100;
}

OptimizerState init(const GaegdConfig& config, const Objective& obj, const Vector& x0) {
  if (x0.size() != obj.dimension()) throw ConfigError("x0 dimension mismatch");
  validate(config, obj);

  OptimizerState s;
  s.x = x0;
  s.grad.resize(x0.size());
  s.f = obj.value(s.x);
  if (!(s.f + config.c > 0.0)) throw ConfigError("shift c must satisfy f(x0) + c > 0");
  refresh(s, obj, config.energy, config.c);

  double r0 = s.F;
  if (config.r0) {
    if (!(*config.r0 > 0.0)) throw ConfigError("explicit r0 must be > 0");
    r0 = *config.r0;
  }
  const std::size_t n = config.variable == EnergyVariable::Scalar ? 1 : x0.size();
  s.r.assign(n, r0);
  s.log_r.assign(n, std::log(r0));
  return s;
}

StepRecord advance(OptimizerState& state, const GaegdConfig& config, const Objective& obj) {
  const std::size_t d = state.x.size();
  const double eta = config.eta;
  const double ratio = state.Fp / state.F;

  OptimizerState next;
  next.k = state.k + 1;
  next.r.resize(state.r.size());
  next.log_r.resize(state.r.size());
  next.x.resize(d);
  next.grad.resize(d);
  // r_{k+1} from the current caches, then x_{k+1} with r_{k+1}.
  if (state.r.size() == 1) {
    const double a = eta * ratio * state.grad_norm_sq;
    next.r[0] = state.r[0] / (1.0 + a);
    next.log_r[0] = state.log_r[0] - std::log1p(a);
    const double step_size = eta * next.r[0] / state.F;
    for (std::size_t i = 0; i < d; ++i) next.x[i] = state.x[i] - step_size * state.grad[i];
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      const double g = state.grad[i];
      const double a = eta * ratio * g * g;
      next.r[i] = state.r[i] / (1.0 + a);
      next.log_r[i] = state.log_r[i] - std::log1p(a);
      next.x[i] = state.x[i] - eta * next.r[i] / state.F * g;
    }
  }
  refresh(next, obj, config.energy, config.c);
  check_finite(next, state.k);

  const std::size_t p = probe_index(state, config);
  StepRecord rec;
  rec.k = state.k;
  rec.f = state.f;
  rec.grad_norm_sq = state.grad_norm_sq;
  rec.r = state.r[p];
  rec.r_next = next.r[p];
  rec.log_r = state.log_r[p];
  rec.log_r_next = next.log_r[p];
  rec.eta_eff = eta * next.r[p] / state.F;
  rec.F = state.F;
  rec.Fp = state.Fp;
  rec.step_sq = state.r.size() == 1
                    ? rec.eta_eff * rec.eta_eff * state.grad_norm_sq
                    : rec.eta_eff * rec.eta_eff * state.grad[p] * state.grad[p];
  state = std::move(next);
  return rec;
}

OptimizerState step(const OptimizerState& state, const GaegdConfig& config,
                    const Objective& obj) {
  OptimizerState next = state;
  advance(next, config, obj);
  return next;
}

OptimizerState aegd_reference_step(const OptimizerState& state, double eta, double c,
                                   const Objective& obj, EnergyVariable variable) {
  OptimizerState next = state;
  const std::size_t n = variable == EnergyVariable::Scalar ? 1 : state.x.size();
  if (next.r.size() != n) throw ConfigError("energy variable shape does not match mode");
  advance_reference(next, eta, c, obj, 0);
  return next;
}

std::pair<Vector, Vector> gdm_step(const Vector& x, const Vector& velocity, double lr,
                                   double beta, const Objective& obj) {
  if (!(lr > 0.0)) throw ConfigError("GDM learning rate must be > 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("GDM beta must lie in [0, 1)");
  const Vector g = obj.gradient(x);
  Vector v(x.size());
  Vector next(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    v[i] = beta * velocity[i] + g[i];
    next[i] = x[i] - lr * v[i];
  }
  if (!all_finite(next) || !all_finite(v)) throw DivergenceError("GDM produced non-finite iterate", 0);
  return {std::move(next), std::move(v)};
}

bool stop_reached(const StopRule& stop, double f_gap, double grad_norm_sq) {
  if (!stop.threshold) return false;
  const double metric = stop.metric == AccuracyMetric::FGap ? f_gap : grad_norm_sq;
  return metric <= *stop.threshold;
}

RunOutput run(const GaegdConfig& config, const Objective& obj, const Vector& x0) {
  OptimizerState state = init(config, obj, x0);
  const std::size_t stride =
      config.snapshot_stride ? config.snapshot_stride : default_snapshot_stride(x0.size());
  return drive(std::move(state), config.stop, stride, config.eta, config.c, obj.f_star(),
               config.probe_coordinate,
               [&](OptimizerState& s) { return advance(s, config, obj); });
}

RunOutput run_aegd_reference(const GaegdConfig& config, const Objective& obj,
                             const Vector& x0) {
  GaegdConfig sqrt_config = config;
  sqrt_config.energy = EnergyFunction::power(0.5);
  OptimizerState state = init(sqrt_config, obj, x0);
  const std::size_t stride =
      config.snapshot_stride ? config.snapshot_stride : default_snapshot_stride(x0.size());
  const std::size_t probe =
      config.variable == EnergyVariable::Scalar ? 0 : config.probe_coordinate;
  return drive(std::move(state), config.stop, stride, config.eta, config.c, obj.f_star(), probe,
               [&](OptimizerState& s) {
                 return advance_reference(s, config.eta, config.c, obj, probe);
               });
}

RunOutput run_gdm(const GdmConfig& config, const Objective& obj, const Vector& x0) {
  if (x0.size() != obj.dimension()) throw ConfigError("x0 dimension mismatch");
  OptimizerState state;
  state.x = x0;
  state.grad = obj.gradient(x0);
  state.f = obj.value(x0);
  state.grad_norm_sq = squared_norm(state.grad);
  state.F = kNaN;
  state.Fp = kNaN;
  Vector velocity(x0.size(), 0.0);
  const std::size_t stride =
      config.snapshot_stride ? config.snapshot_stride : default_snapshot_stride(x0.size());
  return drive(std::move(state), config.stop, stride, config.lr, 0.0, obj.f_star(), 0,
               [&](OptimizerState& s) {
                 auto [x, v] = [&] {
                   try {
                     return gdm_step(s.x, velocity, config.lr, config.beta, obj);
                   } catch (DivergenceError&) {
                     throw DivergenceError("GDM produced non-finite iterate", s.k);
                   }
                 }();
                 StepRecord rec;
                 rec.k = s.k;
                 rec.f = s.f;
                 rec.grad_norm_sq = s.grad_norm_sq;
                 rec.r = kNaN;
                 rec.r_next = kNaN;
                 rec.log_r = kNaN;
                 rec.log_r_next = kNaN;
                 rec.eta_eff = config.lr;
                 rec.F = kNaN;
                 rec.Fp = kNaN;
                 rec.step_sq = config.lr * config.lr * squared_norm(v);
                 OptimizerState next;
                 next.k = s.k + 1;
                 next.x = std::move(x);
                 next.grad = obj.gradient(next.x);
                 next.f = obj.value(next.x);
                 next.grad_norm_sq = squared_norm(next.grad);
                 next.F = kNaN;
                 next.Fp = kNaN;
                 if (!std::isfinite(next.f) || !all_finite(next.grad) ||
                     !std::isfinite(next.grad_norm_sq)) {
                   throw DivergenceError("GDM produced non-finite iterate", s.k);
                 }
                 velocity = std::move(v);
                 s = std::move(next);
                 return rec;
               });
}

EnergyIdentityResidual verify_energy_identity(const Trajectory& traj,
                                              const GaegdConfig& config,
                                              DisplacementSource source) {
  if (source == DisplacementSource::Snapshots && traj.snapshot_stride != 1) {
    throw std::invalid_argument("snapshot displacements need snapshot stride 1");
  }
  const bool elementwise = config.variable == EnergyVariable::Elementwise;
  EnergyIdentityResidual res;
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const StepRecord& rec = traj.steps[k];
    double dx2 = rec.step_sq;
    if (source == DisplacementSource::Snapshots) {
      const Vector& from = rec.x_snapshot.value();
      const Vector& to = k + 1 < traj.steps.size() ? traj.steps[k + 1].x_snapshot.value()
                                                   : traj.terminal.x;
      dx2 = 0.0;
      for (std::size_t i = 0; i < from.size(); ++i) {
        if (elementwise && i != config.probe_coordinate) continue;
        const double d = to[i] - from[i];
        dx2 += d * d;
      }
    }
    const double dissipation = 2.0 / config.eta * rec.F * rec.Fp * dx2;
    const double dr = rec.r_next - rec.r;
    const double rhs = rec.r * rec.r - dr * dr - dissipation;
    res.energy = std::max(res.energy, std::abs(rec.r_next * rec.r_next - rhs));
    res.intermediate = std::max(res.intermediate, std::abs(2.0 * rec.r_next * dr + dissipation));
  }
  return res;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  std::size_t dim = 0;
  for (const auto& rec : traj.steps) {
    if (rec.x_snapshot) {
      dim = rec.x_snapshot->size();
      break;
    }
  }
  out << "k,f,grad_norm_sq,r,eta_eff";
  for (std::size_t i = 0; i < dim; ++i) out << ",x" << i;
  out << '\n';
  for (const auto& rec : traj.steps) {
    out << rec.k << ',' << format_double(rec.f) << ',' << format_double(rec.grad_norm_sq) << ','
        << format_double(rec.r) << ',' << format_double(rec.eta_eff);
    for (std::size_t i = 0; i < dim; ++i) {
      out << ',';
      if (rec.x_snapshot) out << format_double((*rec.x_snapshot)[i]);
    }
    out << '\n';
  }
  const TerminalRecord& t = traj.terminal;
  out << t.k << ',' << format_double(t.f) << ',' << format_double(t.grad_norm_sq) << ','
      << format_double(t.r) << ",nan";
  for (std::size_t i = 0; i < dim; ++i) {
    out << ',';
    if (i < t.x.size()) out << format_double(t.x[i]);
  }
  out << '\n';
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Target: return "target";
    case StopReason::MaxIters: return "max_iters";
    case StopReason::Divergence: return "divergence";
  }
  return "unknown";
}

std::string to_string(AccuracyMetric metric) {
  return metric == AccuracyMetric::FGap ? "f-gap" : "grad-norm-sq";
}

std::string to_string(EnergyVariable variable) {
  return variable == EnergyVariable::Scalar ? "scalar" : "elementwise";
}

AccuracyMetric parse_metric(std::string_view name) {
  if (name == "f-gap") return AccuracyMetric::FGap;
  if (name == "grad-norm-sq") return AccuracyMetric::GradNormSq;
  throw ConfigError("unknown accuracy metric '" + std::string(name) + "'");
}

EnergyVariable parse_energy_variable(std::string_view name) {
  if (name == "scalar") return EnergyVariable::Scalar;
  if (name == "elementwise") return EnergyVariable::Elementwise;
  throw ConfigError("unknown energy variable mode '" + std::string(name) + "'");
}

}  // namespace gaegd
