#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gaegd/objectives.hpp"
#include "gaegd/optimizer.hpp"
#include "gaegd/theory.hpp"

namespace gaegd::bench {

/// Step-size grid for tuning. With explicit `values` those points form the
/// coarse stage; otherwise `points_per_decade` log-spaced points over
/// [lo, hi]. A linear refinement of `refine_points` points then spans the
/// neighbours of the coarse winner.
struct TuningGrid {
  double lo = 1e-1;
  double hi = 1e3;
  int points_per_decade = 25;
  int refine_points = 20;
  std::optional<std::vector<double>> values;

  std::vector<double> coarse() const;
};

struct ExperimentSpec {
  std::string objective = "quad100";
  /// "gaegd", "aegd-ref" or "gdm"; "aegd"/"alegd" select gaegd with that energy.
  std::string algo = "gaegd";
  std::string energy = "aegd";
  double eta = 0.1;
  std::optional<TuningGrid> grid;
  double c = 1.0;
  std::optional<double> r0;
  std::optional<double> target = 1e-7;
  AccuracyMetric metric = AccuracyMetric::FGap;
  std::size_t max_iters = 10000;
  EnergyVariable energy_variable = EnergyVariable::Scalar;
  std::size_t probe_coordinate = 0;
  std::size_t snapshot_stride = 0;
  double gdm_beta = 0.9;
  /// Gradient-norm accuracy used for the N0 / N bounds in theory.json.
  double theory_eps = 1e-3;
  std::uint64_t seed = 0;
  /// Repeat count for wall-clock timing; 0 disables timing repeats.
  std::size_t timing_repeats = 0;
  std::optional<Vector> x0;
  std::vector<double> c_values;
  std::filesystem::path out_dir;

  /// Throws ConfigError for unresolvable names or non-positive fields.
  void validate() const;
};

enum class Algorithm { Gaegd, AegdReference, Gdm };

struct ResolvedAlgorithm {
  Algorithm kind = Algorithm::Gaegd;
  EnergyFunction energy = EnergyFunction::power(0.5);
  std::string label;
};

ResolvedAlgorithm resolve_algorithm(const ExperimentSpec& spec);

GaegdConfig gaegd_config(const ExperimentSpec& spec);

struct ExperimentOutcome {
  RunResult result;
  Trajectory trajectory;
  std::string label;
  std::optional<std::string> divergence;
  std::optional<TheoryReport> theory;
  /// Mean wall time over `timing_repeats` repeats, when requested.
  std::optional<double> mean_wall_seconds;
};

/// Runs one experiment. Divergence becomes a stop reason. When out_dir is
/// set, writes result.json, trajectory.csv and (for gaegd) theory.json.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

struct GridCell {
  double eta = 0.0;
  std::optional<std::size_t> iterations;
  StopReason reason = StopReason::MaxIters;
  /// "coarse" or "refine"
  std::string stage;
};

struct TuneResult {
  std::optional<double> best_eta;
  std::optional<std::size_t> best_iterations;
  /// Every evaluated cell in evaluation order (coarse first).
  std::vector<GridCell> table;

  bool all_failed() const noexcept { return !best_eta; }
};

/// Fewest iterations to target wins; ties go to the smaller eta.
/// Writes grid.csv when out_dir is set.
TuneResult tune_lr(const ExperimentSpec& spec, const TuningGrid& grid);

struct SweepRow {
  double c = 0.0;
  TuneResult tune;
  std::optional<std::string> error;
};

/// tune_lr for every c. Writes sweep.csv plus c_<c>/grid.csv when out_dir is set.
std::vector<SweepRow> sweep_c(const ExperimentSpec& spec, const TuningGrid& grid,
                              const std::vector<double>& c_values);

struct DiagnosticsRow {
  std::size_t k = 0;
  double f = 0.0;
  double grad_norm_sq = 0.0;
  double r = 0.0;
  double eta_eff = 0.0;
};

struct DiagnosticsReport {
  std::vector<DiagnosticsRow> rows;
  double two_over_L = 0.0;
  /// F* / (L eta); r_k below it forces eta_k <= 1/L.
  double r_level = 0.0;
  /// First k with eta_k <= 2/L.
  std::optional<std::size_t> first_below_two_over_L;
  /// First k from which eta_j <= 2/L for every later recorded j.
  std::optional<std::size_t> settled_below_two_over_L;
  bool r_non_increasing = true;
  bool energy_identity_ok = true;
  /// Only evaluated for scalar-r runs with a theory report.
  std::optional<bool> bounds_ok;
  std::optional<bool> gap_ok;
  double energy_identity_residual = 0.0;
  double gap_violation = 0.0;
};

/// Verification flags use tolerances 1e-9 (relative to r0^2 for the energy
/// identity). Without a theory report only the r and eta columns are judged.
DiagnosticsReport diagnostics_report(const Trajectory& traj, const GaegdConfig& config,
                                     double f_star, double L,
                                     const std::optional<TheoryReport>& theory);

void write_diagnostics_csv(std::ostream& out, const DiagnosticsReport& report);

enum class PlotKind { LossCurve, RCurve, EtaCurve, Trajectory2d };

PlotKind parse_plot_kind(std::string_view name);
std::string to_string(PlotKind kind);

struct LabeledTrajectory {
  std::string label;
  Trajectory trajectory;
};

struct PlotOutput {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// One CSV series per run, plus an optional SVG. Trajectory2d requires
/// two-dimensional snapshots.
PlotOutput emit_plot_data(const std::vector<LabeledTrajectory>& runs, PlotKind kind,
                          const std::filesystem::path& out_dir, bool svg,
                          const Objective* contour = nullptr);

/// Result of the invariant suite over a configuration matrix.
struct VerifyCase {
  std::string objective;
  std::string energy;
  double eta = 0.0;
  std::size_t steps = 0;
  bool diverged = false;
  bool r_monotone = true;
  bool r_positive = true;
  double energy_residual_rel = 0.0;
  double eta_identity_rel = 0.0;
  std::optional<double> gap_violation;
  std::optional<double> bounds_violation;

  bool passed() const noexcept;
};

std::vector<VerifyCase> verify_matrix(const std::vector<std::string>& objectives,
                                      const std::vector<std::string>& energies,
                                      const std::vector<double>& etas, std::size_t steps,
                                      double c = 1.0);

/// Energies used in the invariant suite: power:0.1 ... power:1.0 and log.
std::vector<std::string> default_energy_names();

/// Reads a trajectory CSV written by write_trajectory_csv (scalar columns
/// and snapshots; energy caches are not stored and come back as NaN).
Trajectory read_trajectory_csv(const std::filesystem::path& path);

}  // namespace gaegd::bench
