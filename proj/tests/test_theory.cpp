#include <cmath>

#include "doctest.h"
#include "gaegd/error.hpp"
#include "gaegd/theory.hpp"

using namespace gaegd;
using doctest::Approx;

namespace {

TheoryInputs one_d_sqrt(double eta = 0.1) {
  TheoryInputs in;
  in.eta = eta;
  in.c = 1.0;
  in.r0 = std::sqrt(2.0);
  in.f0 = 1.0;
  in.f_star = 0.0;
  in.L = 2.0;
  in.energy = EnergyFunction::power(0.5);
  return in;
}

Trajectory run_for(const Objective& obj, const GaegdConfig& base, std::size_t steps) {
  GaegdConfig cfg = base;
  cfg.stop = {AccuracyMetric::FGap, std::nullopt, steps};
  return run(cfg, obj, obj.default_x0()).trajectory;
}

}  // namespace

TEST_CASE("stability bounds by hand") {
  const StabilityBounds b = stability_bounds(one_d_sqrt());
  CHECK(b.F_star == 1.0);
  CHECK(b.F0 == Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(b.F_bar == Approx(std::sqrt(2.0) + 0.1).epsilon(1e-15));
  CHECK(b.f_bar == Approx(1.292843).epsilon(1e-6));
  CHECK(b.Fp_star == 0.5);
  CHECK(b.Fp_bar == Approx(0.5 / b.F_bar).epsilon(1e-14));
  CHECK(b.alpha_lower == Approx(0.5 / (b.F_bar * b.F_bar)).epsilon(1e-14));

  const StabilityBounds tiny = stability_bounds(one_d_sqrt(1e-12));
  CHECK(tiny.F_bar == Approx(std::sqrt(2.0)).epsilon(1e-11));
  CHECK(tiny.f_bar == Approx(1.0).epsilon(1e-11));

  TheoryInputs q = one_d_sqrt(13.0);
  q.r0 = std::sqrt(51.5);
  q.f0 = 50.5;
  CHECK(stability_bounds(q).F_bar == Approx(std::sqrt(51.5) + 334.75).epsilon(1e-14));
}

TEST_CASE("stability bounds hold along runs") {
  const auto q = quadratic_100d();
  for (double eta : {0.1, 1.0, 13.0}) {
    for (const auto& e : {EnergyFunction::power(0.5), EnergyFunction::logarithmic()}) {
      CAPTURE(eta);
      CAPTURE(e.name());
      GaegdConfig cfg;
      cfg.eta = eta;
      cfg.energy = e;
      const Trajectory t = run_for(*q, cfg, 300);
      const TheoryInputs in = theory_inputs(cfg, *q, q->default_x0());
      CHECK(check_stability_bounds(t, stability_bounds(in), in).holds(1e-9));
    }
  }
}

TEST_CASE("gap bound") {
  SUBCASE("constant trajectory") {
    const auto q = quadratic_100d();
    GaegdConfig cfg;
    cfg.eta = 2.0;
    cfg.stop = {AccuracyMetric::FGap, std::nullopt, 30};
    const Trajectory t = run(cfg, *q, Vector(100, 0.0)).trajectory;
    TheoryInputs in = theory_inputs(cfg, *q, Vector(100, 0.0));
    CHECK(gap_bound_check(t, in) == 0.0);
  }
  SUBCASE("quad100, eta = 13") {
    const auto q = quadratic_100d();
    GaegdConfig cfg;
    cfg.eta = 13.0;
    const Trajectory t = run_for(*q, cfg, 1000);
    CHECK(gap_bound_check(t, theory_inputs(cfg, *q, q->default_x0())) <= 1e-9);
  }
  SUBCASE("rosenbrock with a trajectory surrogate for L") {
    const auto r = rosenbrock(100.0);
    GaegdConfig cfg;
    cfg.eta = 0.0007;
    cfg.energy = EnergyFunction::logarithmic();
    cfg.snapshot_stride = 1;
    const Trajectory t = run_for(*r, cfg, 3000);
    const double L = empirical_lipschitz(t, *r);
    CHECK(L > 1000.0);
    CHECK(gap_bound_check(t, theory_inputs(cfg, *r, r->default_x0(), L)) <= 1e-9);
  }
}

TEST_CASE("two-stage threshold") {
  CHECK(two_stage_threshold(1e-2, 5.0, 1.0, 0.1, 0.3) == 1.0);
  CHECK(two_stage_threshold(1e-2, 5.0, 5.0, 0.1, 0.3) == 1.0);
  const double C = 2.0, eta = 0.5, eps = 0.1;
  const double alpha = (std::exp(1.0) - 1.0) / (eta * eps);
  CHECK(two_stage_threshold(eps, C, std::exp(1.0) * C, eta, alpha) == Approx(1.0).epsilon(1e-12));
  // below the clamp
  CHECK(two_stage_threshold(eps, C, 1.5 * std::exp(1.0) * C, eta, alpha) > 1.0);
  CHECK(default_two_stage_level(1.0, 2.0, 0.1) == Approx(5.0));
}

TEST_CASE("two-stage dichotomy on quad100, eta = 0.1") {
  const auto q = quadratic_100d();
  GaegdConfig cfg;
  cfg.eta = 0.1;
  const TheoryInputs in = theory_inputs(cfg, *q, q->default_x0());
  const StabilityBounds b = stability_bounds(in);
  const double C = default_two_stage_level(b.F_star, in.L, in.eta);
  REQUIRE(in.r0 > C);
  for (double eps : {1.0, 0.1}) {
    const double N0 = two_stage_threshold(eps, C, in.r0, in.eta, b.alpha_lower);
    CAPTURE(N0);
    REQUIRE(N0 < 1e5);
    const Trajectory t = run_for(*q, cfg, static_cast<std::size_t>(std::ceil(N0)));
    CHECK(two_stage_holds(t, eps, C, N0));
  }
  CHECK_THROWS_AS(two_stage_holds(run_for(*q, cfg, 3), 1e-2, C, 10.0), std::invalid_argument);
}

TEST_CASE("step-size threshold") {
  const EtaThreshold t = eta_threshold(one_d_sqrt(0.5));
  CHECK(t.eta_r0 == Approx(1.0).epsilon(1e-14));
  CHECK(t.r_star_lb == Approx(0.5).epsilon(1e-14));
  CHECK(t.guaranteed);
  CHECK_FALSE(eta_threshold(one_d_sqrt(1.5)).guaranteed);

  TheoryInputs big_c = one_d_sqrt();
  big_c.c = 1e8;
  big_c.r0 = std::sqrt(1.0 + 1e8);
  CHECK(eta_threshold(big_c).eta_r0 == Approx(2.0).epsilon(1e-7));
}

TEST_CASE("c* for the log energy") {
  const auto e = EnergyFunction::logarithmic();
  const CStar cs = c_star(0.5, 1.0, 1.0, 0.0, 2.0, e);
  REQUIRE(cs.crossing_found);

  // independent bisection on 1/a - 1 = exp(0.25/(1-a)) - 1
  double lo = 0.56, hi = 0.57;
  auto g = [](double a) { return 1.0 / a - std::exp(0.25 / (1.0 - a)); };
  REQUIRE(g(lo) > 0.0);
  REQUIRE(g(hi) < 0.0);
  for (int i = 0; i < 100; ++i) {
    const double m = 0.5 * (lo + hi);
    (g(m) > 0.0 ? lo : hi) = m;
  }
  CHECK(cs.a_star == Approx(lo).epsilon(1e-8));
  CHECK(cs.a_star == Approx(0.5635).epsilon(1e-3));
  CHECK(cs.c_star == Approx(1.0 / lo - 1.0).epsilon(1e-8));
  CHECK(cs.c_star == Approx(0.775).epsilon(2e-3));
  CHECK(cs.c1 == Approx(cs.c2).epsilon(1e-9));

  const RobustnessBranches br = robustness_branches(0.3, 0.5, 1.0, 1.0, 0.0, 2.0, e);
  CHECK(br.c1 == Approx(1.0 / 0.3 - 1.0).epsilon(1e-14));
  CHECK(br.c2 == Approx(std::exp(0.25 / 0.7) - 1.0).epsilon(1e-14));
}

TEST_CASE("c* shrinks with eta") {
  for (const auto& e : {EnergyFunction::logarithmic(), EnergyFunction::power(0.5)}) {
    double prev = INFINITY;
    for (double eta : {1.0, 0.3, 0.1, 0.03, 0.01, 1e-3}) {
      const CStar cs = c_star(eta, 1.0, 1.0, 0.0, 2.0, e);
      CHECK(cs.c_star < prev);
      prev = cs.c_star;
    }
  }
}

TEST_CASE("c* rejects energies without a vanishing derivative") {
  CHECK_THROWS_AS(c_star(0.5, 1.0, 1.0, 0.0, 2.0, EnergyFunction::power(1.0)),
                  UnsupportedEnergyError);
}

TEST_CASE("c guards") {
  const TheoryInputs in = one_d_sqrt();
  const CGuards g = c_guards(in, 0.5);
  CHECK(g.c_bar == Approx(-0.99).epsilon(1e-14));
  CHECK(g.c_tilde == Approx(0.08).epsilon(1e-14));

  // L eta r* = F(f0 + c) gives back c exactly
  const double r_star = std::sqrt(in.f0 + in.c) / (in.L * in.eta);
  CHECK(c_guards(in, r_star).c_bar == Approx(in.c).epsilon(1e-14));
  CHECK_THROWS_AS(c_guards(in, 0.0), DomainError);
}

TEST_CASE("iteration bound") {
  SUBCASE("boundary goes to the small-r0 branch") {
    TheoryInputs in = one_d_sqrt();
    in.r0 = 1.0 / (in.L * in.eta);
    CHECK(iteration_bound(in, 1e-2, 1.0, stability_bounds(in)).branch == BoundBranch::SmallR0);
    in.r0 = std::nextafter(in.r0, 10.0);
    CHECK(iteration_bound(in, 1e-2, 1.0, stability_bounds(in)).branch == BoundBranch::LargeR0);
  }
  SUBCASE("x^2 plug-in and run") {
    const TheoryInputs in = one_d_sqrt();
    const StabilityBounds b = stability_bounds(in);
    const double r_star = eta_threshold(in).r_star_lb;
    REQUIRE(r_star > 0.0);
    const IterationBound N = iteration_bound(in, 1e-2, r_star, b);
    CHECK(N.branch == BoundBranch::SmallR0);
    const double expected =
        1.0 + std::ceil(100.0 * (2.0 * (std::sqrt(2.0) + 0.1) * 1.0) / (0.1 * r_star));
    CHECK(N.N == expected);

    const auto q1 = quadratic_1d();
    GaegdConfig cfg;
    cfg.eta = 0.1;
    cfg.stop = {AccuracyMetric::GradNormSq, 1e-2 * (1 - 1e-15), 100000};
    const auto res = run(cfg, *q1, Vector{1.0}).result;
    REQUIRE(res.iterations_to_target.has_value());
    CHECK(static_cast<double>(*res.iterations_to_target) <= N.N);

    const IterationBound half = iteration_bound(in, 5e-3, r_star, b);
    CHECK(half.N / N.N == Approx(2.0).epsilon(1e-3));
  }
  SUBCASE("non-positive r* gives no bound") {
    const TheoryInputs in = one_d_sqrt();
    const IterationBound N = iteration_bound(in, 1e-2, 0.0, stability_bounds(in));
    CHECK(std::isinf(N.N));
    CHECK_FALSE(N.preconditions_met);
  }
}

TEST_CASE("KL constants") {
  const KlConstants lin = kl_constants(0.5, 1.0, 0.1, 1.0, 2.0, 3.0, 0.0);
  CHECK(lin.Q == Approx(0.5 * 0.1 * 1.0 / 2.0));
  CHECK(*lin.C1 == Approx(2.0 * std::sqrt(2.0 * 3.0 / 0.5)).epsilon(1e-15));
  CHECK_FALSE(lin.C3.has_value());

  // mu eta r*/F0 = 0.1
  const KlConstants k = kl_constants(1.0, 1.5, 0.1, 1.0, 1.0, 1.0, 0.0);
  CHECK(k.Q == Approx(0.1));
  CHECK(*k.C3 == Approx(20.0).epsilon(1e-13));
  const double C2 = std::sqrt(2.0) * (2.0 / 0.5) * std::pow(0.05, -0.5);
  CHECK(*k.C2 == Approx(C2).epsilon(1e-13));

  const KlConstants neg = kl_constants(1.0, 1.5, 0.1, 1.0, 1.0, 1.0, 50.0);
  CHECK(*neg.C3 == Approx(-30.0).epsilon(1e-13));
  CHECK(*neg.valid_from_k == Approx(50.0));

  const KlConstants sub = kl_constants(1.0, 0.5, 0.1, 1.0, 1.0, 4.0, 3.0);
  CHECK(*sub.finite_steps == 3.0 + std::ceil(2.0 / (0.5 * 0.1)));

  CHECK_THROWS_AS(kl_constants(1.0, 2.0, 0.1, 1.0, 1.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(kl_constants(1.0, 0.0, 0.1, 1.0, 1.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(kl_constants(0.0, 1.0, 0.1, 1.0, 1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("linear rate on quad100 with measured r*") {
  const auto q = quadratic_100d();
  GaegdConfig cfg;
  cfg.eta = 0.1;
  const Trajectory t = run_for(*q, cfg, 2000);
  const double r_star = measured_r_star(t);
  CHECK(r_star == t.terminal.r);
  const double Q = 0.02 * 0.1 * r_star / std::sqrt(51.5);
  const KlConstants k = kl_constants(0.02, 1.0, 0.1, r_star, std::sqrt(51.5), 50.5, 0.0);
  CHECK(k.Q == Approx(Q).epsilon(1e-14));
  CHECK(kl_linear_rate_violation(t, 0.0, Q) <= 1e-12);
  CHECK_THROWS_AS(kl_linear_rate_violation(t, 0.0, 1.0), DomainError);
}

TEST_CASE("theory report") {
  const auto q = quadratic_100d();
  GaegdConfig cfg;
  cfg.eta = 0.1;
  const TheoryInputs in = theory_inputs(cfg, *q, q->default_x0());
  const TheoryReport a_priori = make_theory_report(in, 1e-3);
  CHECK(a_priori.r_star_source == RStarSource::APriori);
  CHECK(a_priori.r_star == a_priori.threshold.r_star_lb);
  CHECK(to_string(a_priori.r_star_source) == "a_priori");
  const TheoryReport measured = make_theory_report(in, 1e-3, 3.0, KlParameters{0.02, 1.0, 50.5, 0.0});
  CHECK(measured.r_star == 3.0);
  CHECK(to_string(measured.r_star_source) == "measured");
  REQUIRE(measured.kl.has_value());
  CHECK(measured.kl->Q == Approx(0.02 * 0.1 * 3.0 / std::sqrt(51.5)));
  CHECK(measured.c_star.has_value());
  CHECK(measured.guards.c_tilde == Approx(std::pow(2.0 * 0.1 * std::sqrt(51.5), 2)));

  CHECK_THROWS_AS(theory_inputs(cfg, *rosenbrock(), Vector{-3.0, -4.0}), DomainError);
}
