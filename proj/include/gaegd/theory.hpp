#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gaegd/energy.hpp"
#include "gaegd/objectives.hpp"
#include "gaegd/optimizer.hpp"

namespace gaegd {

/// Configuration the closed-form bounds are evaluated for.
struct TheoryInputs {
  double eta = 0.0;
  double c = 0.0;
  double r0 = 0.0;
  double f0 = 0.0;
  double f_star = 0.0;
  double L = 0.0;
  EnergyFunction energy = EnergyFunction::power(0.5);

  /// Throws DomainError unless eta, r0, L > 0, f* + c > 0 and f0 >= f*.
  void validate() const;
};

/// Builds inputs for a run of `config` on `obj` from x0 (r0 resolved from the
/// r0 policy). L defaults to the objective's global constant.
TheoryInputs theory_inputs(const GaegdConfig& config, const Objective& obj, const Vector& x0,
                           std::optional<double> L = std::nullopt);

/// Bounds valid along every run: F* <= F_k <= F_bar, f* <= f_k <= f_bar,
/// Fp_bar <= F'_k <= Fp_star.
struct StabilityBounds {
  double F_star = 0.0;
  double F0 = 0.0;
  double F_bar = 0.0;
  double f_bar = 0.0;
  double Fp_star = 0.0;
  double Fp_bar = 0.0;
  /// Fp_bar / F_bar, the lower bound on F'_k / F_k.
  double alpha_lower = 0.0;
};

StabilityBounds stability_bounds(const TheoryInputs& in);

/// Largest excess of a trajectory over each bound (<= 0 means satisfied).
/// Upper bounds on F are relative to F_bar; the rest are absolute.
struct BoundsViolation {
  double F_upper = -1.0;
  double F_lower = -1.0;
  double f_upper = -1.0;
  double f_lower = -1.0;
  double Fp_upper = -1.0;
  double Fp_lower = -1.0;

  bool holds(double tol) const noexcept {
    return F_upper <= tol && F_lower <= tol && f_upper <= tol && f_lower <= tol &&
           Fp_upper <= tol && Fp_lower <= tol;
  }
};

BoundsViolation check_stability_bounds(const Trajectory& traj, const StabilityBounds& b,
                                       const TheoryInputs& in);

/// max of (e_k - e_m - L eta/(4 F*) (r_m^2 - r_k^2)) with e_k = F_k - r_k,
/// over m = 0 with every k and over `random_pairs` random pairs k > m.
double gap_bound_check(const Trajectory& traj, const TheoryInputs& in,
                       std::uint64_t seed = 20240917, std::size_t random_pairs = 100);

/// N0 = max{ ln(r0/C) / ln(1 + alpha_lower eta eps), 1 }.
double two_stage_threshold(double eps, double C, double r0, double eta, double alpha_lower);

/// C = F* / (L eta), the threshold that forces eta_k <= 1/L.
double default_two_stage_level(double F_star, double L, double eta);

/// Dichotomy at N = ceil(N0): min_{k<=N} ||grad f_k||^2 < eps or r_N <= C.
/// Throws std::invalid_argument if the trajectory is shorter than N.
bool two_stage_holds(const Trajectory& traj, double eps, double C, double N0);

struct EtaThreshold {
  double eta_r0 = 0.0;
  /// (L r0^2 / (4 F*)) (eta_r0 - eta)
  double r_star_lb = 0.0;
  /// r0 > F0 - F* and eta < eta_r0, i.e. r_star_lb > 0 is a valid bound.
  bool guaranteed = false;
};

EtaThreshold eta_threshold(const TheoryInputs& in);

/// The two shift requirements that are balanced to obtain c*.
struct RobustnessBranches {
  /// F'^{-1}(a r0 / (f0 - f*)) - f*, decreasing in a
  double c1 = 0.0;
  /// F^{-1}(L eta r0 / (4 (1 - a))) - f*, increasing in a
  double c2 = 0.0;
};

RobustnessBranches robustness_branches(double a, double eta, double r0, double f0,
                                       double f_star, double L, const EnergyFunction& energy);

struct CStar {
  double c_star = 0.0;
  double a_star = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  /// False when the branches do not cross inside the bracket; c_star is then
  /// the infimum at the bracket endpoint.
  bool crossing_found = false;
};

/// c* = min_{a in (0,1)} max{c1(a), c2(a)} by bisection on c1 - c2.
/// Throws UnsupportedEnergyError unless the energy is strictly concave.
CStar c_star(double eta, double r0, double f0, double f_star, double L,
             const EnergyFunction& energy);

struct CGuards {
  /// F^{-1}(L eta r*) - f0
  double c_bar = 0.0;
  /// F^{-1}(L eta r0) - f*
  double c_tilde = 0.0;
};

CGuards c_guards(const TheoryInputs& in, double r_star);

enum class BoundBranch { SmallR0, LargeR0 };

struct IterationBound {
  double N = 0.0;
  BoundBranch branch = BoundBranch::SmallR0;
  /// c >= max{c*, c_bar} and r* > 0. The bound is still computed otherwise.
  bool preconditions_met = false;
};

IterationBound iteration_bound(const TheoryInputs& in, double eps, double r_star,
                               const StabilityBounds& bounds);

struct KlConstants {
  double Q = 0.0;
  std::optional<double> C1;
  std::optional<double> C2;
  std::optional<double> C3;
  /// alpha < 1: iteration by which w_k must have reached zero.
  std::optional<double> finite_steps;
  /// alpha in (1,2): the rate (C3 + k)^{...} is defined for k > -C3.
  std::optional<double> valid_from_k;
};

/// Rate constants for the local KL condition with exponent alpha in (0, 2).
KlConstants kl_constants(double mu, double alpha, double eta, double r_star, double F0,
                         double w_N1, double N1);

/// max over k >= N1 of w_{k+1} - (1 - Q) w_k with w_k = f_k - f_tilde.
/// Throws DomainError when Q >= 1 (the bound is vacuous).
double kl_linear_rate_violation(const Trajectory& traj, double f_tilde, double Q,
                                std::size_t N1 = 0);

/// inf_k r_k over a run (r is non-increasing, so the last value).
double measured_r_star(const Trajectory& traj);

/// Largest Hessian spectral norm over the retained iterates; a surrogate L
/// for objectives without a global Lipschitz constant.
double empirical_lipschitz(const Trajectory& traj, const Objective& obj);

enum class RStarSource { APriori, Measured };

std::string to_string(RStarSource source);

struct TheoryReport {
  TheoryInputs inputs;
  StabilityBounds bounds;
  EtaThreshold threshold;
  double r_star = 0.0;
  RStarSource r_star_source = RStarSource::APriori;
  std::optional<CStar> c_star;
  CGuards guards;
  double eps = 0.0;
  double two_stage_level = 0.0;
  double N0 = 0.0;
  IterationBound N_bound;
  std::optional<KlConstants> kl;
};

struct KlParameters {
  double mu = 0.0;
  double alpha = 1.0;
  double w_N1 = 0.0;
  double N1 = 0.0;
};

/// Evaluates every constant for one configuration. With no r_star given the
/// a-priori bound r_star_lb is used.
TheoryReport make_theory_report(const TheoryInputs& in, double eps,
                                std::optional<double> measured_r_star = std::nullopt,
                                std::optional<KlParameters> kl = std::nullopt);

}  // namespace gaegd
