#include "gaegd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "gaegd/error.hpp"

namespace gaegd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// (F_k, r_k, f_k, F'_k) for iterate k, including the terminal point.
struct Iterate {
  double F, r, f, Fp, grad_norm_sq;
};

Iterate iterate_at(const Trajectory& traj, std::size_t k) {
  if (k < traj.steps.size()) {
    const StepRecord& s = traj.steps[k];
    return {s.F, s.r, s.f, s.Fp, s.grad_norm_sq};
  }
  if (k == traj.steps.size()) {
    const TerminalRecord& t = traj.terminal;
    return {t.F, t.r, t.f, t.Fp, t.grad_norm_sq};
  }
  throw std::out_of_range("iterate index beyond trajectory");
}

}  // namespace

void TheoryInputs::validate() const {
  if (!(eta > 0.0)) throw DomainError("theory inputs: eta must be > 0");
  if (!(r0 > 0.0)) throw DomainError("theory inputs: r0 must be > 0");
  if (!(L > 0.0)) throw DomainError("theory inputs: L must be > 0");
  if (!(f_star + c > 0.0)) throw DomainError("theory inputs: f* + c must be > 0");
  if (!(f0 >= f_star)) throw DomainError("theory inputs: f0 must be >= f*");
}

TheoryInputs theory_inputs(const GaegdConfig& config, const Objective& obj, const Vector& x0,
                           std::optional<double> L) {
  TheoryInputs in;
  in.eta = config.eta;
  in.c = config.c;
  in.f0 = obj.value(x0);
  in.f_star = obj.f_star();
  in.energy = config.energy;
  in.r0 = config.r0 ? *config.r0 : config.energy.value(in.f0 + config.c);
  if (L) {
    in.L = *L;
  } else if (obj.lipschitz()) {
    in.L = *obj.lipschitz();
  } else {
    throw DomainError("objective " + obj.name() + " has no global Lipschitz constant");
  }
  return in;
}

StabilityBounds stability_bounds(const TheoryInputs& in) {
  in.validate();
  StabilityBounds b;
  b.F_star = in.energy.value(in.f_star + in.c);
  b.F0 = in.energy.value(in.f0 + in.c);
  b.F_bar = b.F0 + in.L * in.eta * in.r0 * in.r0 / (4.0 * b.F_star);
  b.f_bar = in.energy.inverse(b.F_bar) - in.c;
  b.Fp_star = in.energy.derivative(in.f_star + in.c);
  // f_bar overflows for large eta (log energy); F' has limit 0 there, or 1 for p = 1.
  if (std::isfinite(b.f_bar)) {
    b.Fp_bar = in.energy.derivative(b.f_bar + in.c);
  } else {
    b.Fp_bar = in.energy.derivative_vanishes() ? 0.0 : in.energy.derivative(1.0);
  }
  b.alpha_lower = b.Fp_bar / b.F_bar;
  return b;
}

BoundsViolation check_stability_bounds(const Trajectory& traj, const StabilityBounds& b,
                                       const TheoryInputs& in) {
  BoundsViolation v;
  const double inf = -kInf;
  v.F_upper = v.F_lower = v.f_upper = v.f_lower = v.Fp_upper = v.Fp_lower = inf;
  for (std::size_t k = 0; k <= traj.steps.size(); ++k) {
    const Iterate it = iterate_at(traj, k);
    v.F_upper = std::max(v.F_upper, (it.F - b.F_bar) / b.F_bar);
    v.F_lower = std::max(v.F_lower, b.F_star - it.F);
    v.f_upper = std::max(v.f_upper, (it.f - b.f_bar) / std::max(1.0, std::abs(b.f_bar)));
    v.f_lower = std::max(v.f_lower, in.f_star - it.f);
    v.Fp_upper = std::max(v.Fp_upper, it.Fp - b.Fp_star);
    v.Fp_lower = std::max(v.Fp_lower, b.Fp_bar - it.Fp);
  }
  return v;
}

double gap_bound_check(const Trajectory& traj, const TheoryInputs& in, std::uint64_t seed,
                       std::size_t random_pairs) {
  const double F_star = in.energy.value(in.f_star + in.c);
  const double slope = in.L * in.eta / (4.0 * F_star);
  const std::size_t n = traj.steps.size();
  auto excess = [&](std::size_t m, std::size_t k) {
    const Iterate a = iterate_at(traj, m);
    const Iterate b = iterate_at(traj, k);
    const double em = a.F - a.r;
    const double ek = b.F - b.r;
    return ek - (em + slope * (a.r * a.r - b.r * b.r));
  };

  double worst = -kInf;
  for (std::size_t k = 1; k <= n; ++k) worst = std::max(worst, excess(0, k));
  if (n >= 2) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n);
    for (std::size_t i = 0; i < random_pairs; ++i) {
      std::size_t m = pick(rng);
      std::size_t k = pick(rng);
      while (k == m) k = pick(rng);
      if (m > k) std::swap(m, k);
      worst = std::max(worst, excess(m, k));
    }
  }
  return n == 0 ? 0.0 : worst;
}

double two_stage_threshold(double eps, double C, double r0, double eta, double alpha_lower) {
  if (!(eps > 0.0) || !(C > 0.0)) throw DomainError("two-stage threshold needs eps, C > 0");
  if (r0 <= C) return 1.0;
  const double ratio = std::log(r0 / C) / std::log1p(alpha_lower * eta * eps);
  return std::max(ratio, 1.0);
}

double default_two_stage_level(double F_star, double L, double eta) {
  return F_star / (L * eta);
}

bool two_stage_holds(const Trajectory& traj, double eps, double C, double N0) {
  const auto N = static_cast<std::size_t>(std::ceil(N0));
  if (N > traj.steps.size()) {
    throw std::invalid_argument("trajectory shorter than ceil(N0)");
  }
  double min_grad = kInf;
  for (std::size_t k = 0; k <= N; ++k) {
    min_grad = std::min(min_grad, iterate_at(traj, k).grad_norm_sq);
  }
  return min_grad < eps || iterate_at(traj, N).r <= C;
}

EtaThreshold eta_threshold(const TheoryInputs& in) {
  in.validate();
  const double F_star = in.energy.value(in.f_star + in.c);
  const double F0 = in.energy.value(in.f0 + in.c);
  EtaThreshold t;
  t.eta_r0 = 4.0 * F_star * (in.r0 - F0 + F_star) / (in.L * in.r0 * in.r0);
  t.r_star_lb = in.L * in.r0 * in.r0 / (4.0 * F_star) * (t.eta_r0 - in.eta);
  t.guaranteed = in.r0 > F0 - F_star && in.eta < t.eta_r0;
  return t;
}

RobustnessBranches robustness_branches(double a, double eta, double r0, double f0,
                                       double f_star, double L, const EnergyFunction& energy) {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("robustness branch parameter must lie in (0,1)");
  RobustnessBranches b;
  const double slope_target = a * r0 / (f0 - f_star);
  // Past the supremum of F' every shift already satisfies the first requirement.
  b.c1 = slope_target >= energy.derivative_sup() ? -f_star
                                                 : energy.derivative_inverse(slope_target) - f_star;
  b.c2 = energy.inverse(L * eta * r0 / (4.0 * (1.0 - a))) - f_star;
  return b;
}

CStar c_star(double eta, double r0, double f0, double f_star, double L,
             const EnergyFunction& energy) {
  if (!energy.strictly_concave() || !energy.derivative_vanishes() || !energy.unbounded()) {
    throw UnsupportedEnergyError("c* needs a strictly concave, unbounded energy with vanishing "
                                 "derivative; " + energy.name() + " is not");
  }
  if (!(f0 > f_star)) throw DomainError("c* needs f0 > f*");
  if (!(eta > 0.0) || !(r0 > 0.0) || !(L > 0.0)) throw DomainError("c* needs eta, r0, L > 0");

  auto branches = [&](double a) {
    return robustness_branches(a, eta, r0, f0, f_star, L, energy);
  };
  double lo = 1e-6;
  double hi = 1.0 - 1e-6;
  RobustnessBranches at_lo = branches(lo);
  RobustnessBranches at_hi = branches(hi);

  CStar out;
  if (at_lo.c1 <= at_lo.c2) {
    out = {at_lo.c2, lo, at_lo.c1, at_lo.c2, false};
    return out;
  }
  if (at_hi.c1 >= at_hi.c2) {
    out = {at_hi.c1, hi, at_hi.c1, at_hi.c2, false};
    return out;
  }
  double mid = 0.5 * (lo + hi);
  RobustnessBranches at_mid = branches(mid);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    at_mid = branches(mid);
    const double diff = at_mid.c1 - at_mid.c2;
    if (std::abs(diff) <= 1e-10 * (1.0 + std::abs(at_mid.c1))) break;
    if (diff > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.a_star = mid;
  out.c1 = at_mid.c1;
  out.c2 = at_mid.c2;
  out.c_star = std::max(at_mid.c1, at_mid.c2);
  out.crossing_found = true;
  return out;
}

CGuards c_guards(const TheoryInputs& in, double r_star) {
  in.validate();
  if (!(r_star > 0.0)) throw DomainError("c guards need r* > 0");
  CGuards g;
  g.c_bar = in.energy.inverse(in.L * in.eta * r_star) - in.f0;
  g.c_tilde = in.energy.inverse(in.L * in.eta * in.r0) - in.f_star;
  return g;
}

IterationBound iteration_bound(const TheoryInputs& in, double eps, double r_star,
                               const StabilityBounds& bounds) {
  in.validate();
  if (!(eps > 0.0)) throw DomainError("iteration bound needs eps > 0");
  IterationBound out;
  const double level = default_two_stage_level(bounds.F_star, in.L, in.eta);
  out.branch = in.r0 <= level ? BoundBranch::SmallR0 : BoundBranch::LargeR0;

  if (!(r_star > 0.0)) {
    out.N = kInf;
    out.preconditions_met = false;
    return out;
  }

  bool ok = true;
  try {
    const CStar cs = c_star(in.eta, in.r0, in.f0, in.f_star, in.L, in.energy);
    const CGuards g = c_guards(in, r_star);
    ok = in.c >= std::max(cs.c_star, g.c_bar);
  } catch (const UnsupportedEnergyError&) {
    ok = false;
  } catch (const DomainError&) {
    ok = false;
  }
  out.preconditions_met = ok;

  const double scale = 2.0 * bounds.F_bar / (in.eta * r_star * eps);
  if (out.branch == BoundBranch::SmallR0) {
    out.N = 1.0 + std::ceil(scale * (in.f0 - in.f_star));
  } else {
    const double stage =
        std::max(std::log(in.L * in.r0 * in.eta / bounds.F_star) /
                     std::log1p(bounds.alpha_lower * in.eta * eps),
                 1.0);
    out.N = 1.0 + std::ceil(stage + scale * (bounds.f_bar - in.f_star));
  }
  return out;
}

KlConstants kl_constants(double mu, double alpha, double eta, double r_star, double F0,
                         double w_N1, double N1) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("KL exponent must lie in (0, 2)");
  if (!(mu > 0.0) || !(r_star > 0.0) || !(eta > 0.0) || !(F0 > 0.0)) {
    throw DomainError("KL constants need mu, eta, r*, F0 > 0");
  }
  if (!(w_N1 >= 0.0)) throw DomainError("KL constants need w_N1 >= 0");
  KlConstants k;
  k.Q = mu * eta * r_star / F0;
  if (alpha == 1.0) {
    k.C1 = 2.0 * std::sqrt(2.0 * std::exp(k.Q * N1) * w_N1 / mu);
  } else if (alpha < 1.0) {
    k.finite_steps = N1 + std::ceil(std::pow(w_N1, 1.0 - alpha) / ((1.0 - alpha) * k.Q));
  } else {
    const double expo = (2.0 - alpha) / (2.0 * (alpha - 1.0));
    k.C2 = std::sqrt(2.0 / mu) * (2.0 / (2.0 - alpha)) * std::pow((alpha - 1.0) * k.Q, -expo);
    k.C3 = std::pow(w_N1, 1.0 - alpha) / ((alpha - 1.0) * k.Q) - N1;
    k.valid_from_k = std::max(N1, -*k.C3);
  }
  return k;
}

double kl_linear_rate_violation(const Trajectory& traj, double f_tilde, double Q,
                                std::size_t N1) {
  if (!(Q < 1.0)) throw DomainError("linear rate bound is vacuous for Q >= 1");
  double worst = -kInf;
  for (std::size_t k = N1; k < traj.steps.size(); ++k) {
    const double w = iterate_at(traj, k).f - f_tilde;
    const double w_next = iterate_at(traj, k + 1).f - f_tilde;
    worst = std::max(worst, w_next - (1.0 - Q) * w);
  }
  return traj.steps.size() > N1 ? worst : 0.0;
}

double measured_r_star(const Trajectory& traj) {
  double r = traj.terminal.r;
  for (const auto& s : traj.steps) r = std::min({r, s.r, s.r_next});
  return r;
}

double empirical_lipschitz(const Trajectory& traj, const Objective& obj) {
  double L = 0.0;
  auto visit = [&](const Vector& x) {
    if (auto h = obj.hessian_norm(x)) L = std::max(L, *h);
  };
  for (const auto& s : traj.steps) {
    if (s.x_snapshot) visit(*s.x_snapshot);
  }
  if (!traj.terminal.x.empty()) visit(traj.terminal.x);
  if (!(L > 0.0)) throw DomainError("no Hessian information along trajectory");
  return L;
}

std::string to_string(RStarSource source) {
  return source == RStarSource::APriori ? "a_priori" : "measured";
}

TheoryReport make_theory_report(const TheoryInputs& in, double eps,
                                std::optional<double> measured, std::optional<KlParameters> kl) {
  TheoryReport rep;
  rep.inputs = in;
  rep.eps = eps;
  rep.bounds = stability_bounds(in);
  rep.threshold = eta_threshold(in);
  if (measured) {
    rep.r_star = *measured;
    rep.r_star_source = RStarSource::Measured;
  } else {
    rep.r_star = rep.threshold.r_star_lb;
    rep.r_star_source = RStarSource::APriori;
  }
  try {
    rep.c_star = c_star(in.eta, in.r0, in.f0, in.f_star, in.L, in.energy);
  } catch (const UnsupportedEnergyError&) {
  } catch (const DomainError&) {
  }
  // c_tilde does not depend on r*; c_bar is only defined for r* > 0.
  rep.guards.c_tilde = in.energy.inverse(in.L * in.eta * in.r0) - in.f_star;
  rep.guards.c_bar = rep.r_star > 0.0
                         ? in.energy.inverse(in.L * in.eta * rep.r_star) - in.f0
                         : std::numeric_limits<double>::quiet_NaN();
  rep.two_stage_level = default_two_stage_level(rep.bounds.F_star, in.L, in.eta);
  rep.N0 = two_stage_threshold(eps, rep.two_stage_level, in.r0, in.eta, rep.bounds.alpha_lower);
  rep.N_bound = iteration_bound(in, eps, rep.r_star, rep.bounds);
  if (kl && rep.r_star > 0.0) {
    rep.kl = kl_constants(kl->mu, kl->alpha, in.eta, rep.r_star, rep.bounds.F0, kl->w_N1, kl->N1);
  }
  return rep;
}

}  // namespace gaegd
