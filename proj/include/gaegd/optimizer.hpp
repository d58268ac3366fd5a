#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gaegd/energy.hpp"
#include "gaegd/objectives.hpp"

namespace gaegd {

/// Shape of the energy variable r.
///
/// Scalar is the analysed iteration: one r shared by all coordinates.
/// Elementwise keeps one r_i per coordinate, each updated with its own
/// squared partial derivative; this is the convention of the reference
/// AEGD code and the one that reproduces the published benchmark tables.
enum class EnergyVariable { Scalar, Elementwise };

enum class AccuracyMetric { FGap, GradNormSq };

struct StopRule {
  AccuracyMetric metric = AccuracyMetric::FGap;
  /// No threshold: run exactly max_iters steps.
  std::optional<double> threshold;
  std::size_t max_iters = 1000;
};

enum class StopReason { Target, MaxIters, Divergence };

struct GaegdConfig {
  double eta = 0.1;
  double c = 1.0;
  /// Explicit r0; when empty r0 = F(f(x0) + c).
  std::optional<double> r0;
  EnergyFunction energy = EnergyFunction::power(0.5);
  StopRule stop;
  EnergyVariable variable = EnergyVariable::Scalar;
  /// Keep x every `snapshot_stride` steps; 0 selects 1 for d <= 10, else 100.
  std::size_t snapshot_stride = 0;
  /// Coordinate reported in step records when r is elementwise.
  std::size_t probe_coordinate = 0;
};

struct OptimizerState {
  Vector x;
  /// Energy variable; one entry (Scalar) or one per coordinate (Elementwise).
  Vector r;
  /// log r, updated alongside r. It stays finite after r underflows to 0.
  Vector log_r;
  std::size_t k = 0;
  double f = 0.0;
  double F = 0.0;
  double Fp = 0.0;
  Vector grad;
  double grad_norm_sq = 0.0;
};

/// One transition x_k -> x_{k+1}. For elementwise r the scalar fields
/// r, r_next, eta_eff and step_sq refer to the probe coordinate.
struct StepRecord {
  std::size_t k = 0;
  double f = 0.0;
  double grad_norm_sq = 0.0;
  double r = 0.0;
  double r_next = 0.0;
  double log_r = 0.0;
  double log_r_next = 0.0;
  /// eta * r_next / F_k
  double eta_eff = 0.0;
  double F = 0.0;
  double Fp = 0.0;
  /// Squared length of the applied displacement ||x_{k+1} - x_k||^2.
  double step_sq = 0.0;
  std::optional<Vector> x_snapshot;
};

/// State at the last iterate of a run (no step taken from it).
struct TerminalRecord {
  std::size_t k = 0;
  double f = 0.0;
  double grad_norm_sq = 0.0;
  double r = 0.0;
  double F = 0.0;
  double Fp = 0.0;
  Vector x;
  double log_r = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  TerminalRecord terminal;
  std::size_t snapshot_stride = 1;
  double eta = 0.0;
  double c = 0.0;

  std::size_t iterations() const noexcept { return steps.size(); }
  double r0() const noexcept { return steps.empty() ? terminal.r : steps.front().r; }
};

struct RunResult {
  OptimizerState final_state;
  std::optional<std::size_t> iterations_to_target;
  StopReason reason = StopReason::MaxIters;
  double wall_seconds = 0.0;
};

struct RunOutput {
  RunResult result;
  Trajectory trajectory;
};

/// Raised when f, the gradient, x or r stop being finite, or r turns negative.
/// Underflow of r to 0 is not an error; log r carries on.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t k)
      : std::runtime_error(what), k_(k) {}

  /// Iteration whose step produced the non-finite value.
  std::size_t iteration() const noexcept { return k_; }

  /// Set by run(): everything recorded before the failing step.
  std::optional<Trajectory> partial;
  std::optional<StepRecord> last_finite;

 private:
  std::size_t k_;
};

OptimizerState init(const GaegdConfig& config, const Objective& obj, const Vector& x0);

/// Applies one gAEGD step in place: r first, then x with the new r.
/// On error the state is left untouched.
StepRecord advance(OptimizerState& state, const GaegdConfig& config, const Objective& obj);

OptimizerState step(const OptimizerState& state, const GaegdConfig& config,
                    const Objective& obj);

/// The original AEGD update with F(x) = sqrt(f(x) + c), written out directly
/// from grad F = grad f / (2 sqrt(f + c)). Independent of step().
OptimizerState aegd_reference_step(const OptimizerState& state, double eta, double c,
                                   const Objective& obj,
                                   EnergyVariable variable = EnergyVariable::Scalar);

/// Heavy-ball momentum: v' = beta v + grad f(x), x' = x - lr v'.
std::pair<Vector, Vector> gdm_step(const Vector& x, const Vector& velocity, double lr,
                                   double beta, const Objective& obj);

bool stop_reached(const StopRule& stop, double f_gap, double grad_norm_sq);

RunOutput run(const GaegdConfig& config, const Objective& obj, const Vector& x0);

/// Same loop as run() but stepping with aegd_reference_step.
RunOutput run_aegd_reference(const GaegdConfig& config, const Objective& obj,
                             const Vector& x0);

struct GdmConfig {
  double lr = 1e-3;
  double beta = 0.9;
  StopRule stop;
  std::size_t snapshot_stride = 0;
};

/// GDM run. Records carry eta_eff = lr and NaN for the energy columns.
RunOutput run_gdm(const GdmConfig& config, const Objective& obj, const Vector& x0);

std::size_t default_snapshot_stride(std::size_t dimension) noexcept;

enum class DisplacementSource { Recorded, Snapshots };

struct EnergyIdentityResidual {
  /// max_k |r_{k+1}^2 - r_k^2 + (r_{k+1} - r_k)^2 + (2/eta) F_k F'_k ||dx||^2|
  double energy = 0.0;
  /// max_k |2 r_{k+1}(r_{k+1} - r_k) + (2/eta) F_k F'_k ||dx||^2|
  double intermediate = 0.0;
};

/// Snapshots require stride 1 (and, in elementwise mode, project onto the
/// probe coordinate).
EnergyIdentityResidual verify_energy_identity(
    const Trajectory& traj, const GaegdConfig& config,
    DisplacementSource source = DisplacementSource::Recorded);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

std::string to_string(StopReason reason);
std::string to_string(AccuracyMetric metric);
std::string to_string(EnergyVariable variable);
AccuracyMetric parse_metric(std::string_view name);
EnergyVariable parse_energy_variable(std::string_view name);

}  // namespace gaegd
