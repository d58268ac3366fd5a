#include <cmath>
#include <random>

#include "doctest.h"
#include "gaegd/error.hpp"
#include "gaegd/objectives.hpp"

using doctest::Approx;
using gaegd::Vector;

TEST_CASE("quad100 at the origin and at ones") {
  const auto q = gaegd::quadratic_100d();
  REQUIRE(q->dimension() == 100);
  const Vector zero(100, 0.0);
  CHECK(q->value(zero) == 0.0);
  for (double g : q->gradient(zero)) CHECK(g == 0.0);

  const Vector ones(100, 1.0);
  CHECK(q->value(ones) == Approx(50.5).epsilon(1e-14));
  CHECK(q->lipschitz().value() == 2.0);
  CHECK(q->pl_modulus() == Approx(0.02).epsilon(1e-15));
  CHECK(q->default_x0() == ones);
  // zero-based even indices carry weight 1
  CHECK(q->coefficients()[0] == 1.0);
  CHECK(q->coefficients()[1] == 0.01);
}

TEST_CASE("quad100 PL inequality holds on random points") {
  const auto q = gaegd::quadratic_100d();
  const double mu = 0.02;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 3.0);
  double worst = INFINITY;
  for (int t = 0; t < 10000; ++t) {
    Vector x(100);
    for (double& v : x) v = n(rng);
    const Vector g = q->gradient(x);
    double g2 = 0.0;
    for (double v : g) g2 += v * v;
    worst = std::min(worst, g2 / (2.0 * q->value(x)));
  }
  CHECK(worst >= mu * (1 - 1e-12));
  // equality along the weak coordinates
  Vector weak(100, 0.0);
  weak[1] = 1.0;
  const Vector g = q->gradient(weak);
  CHECK(g[1] * g[1] / (2.0 * q->value(weak)) == Approx(mu).epsilon(1e-14));
}

TEST_CASE("rosenbrock hand-evaluated points") {
  const auto r = gaegd::rosenbrock(100.0);
  const Vector x0{-3.0, -4.0};
  CHECK(r->value(x0) == 16916.0);
  const Vector g = r->gradient(x0);
  CHECK(g[0] == -15608.0);
  CHECK(g[1] == -2600.0);
  CHECK(r->value(Vector{0.0, 0.0}) == 1.0);
  CHECK(r->value(Vector{1.0, 1.0}) == 0.0);
  const Vector gmin = r->gradient(Vector{1.0, 1.0});
  CHECK(gmin[0] == 0.0);
  CHECK(gmin[1] == 0.0);
  CHECK_FALSE(r->lipschitz().has_value());
  CHECK(r->default_x0() == x0);
}

TEST_CASE("rosenbrock hessian norm matches the 2x2 eigenvalue by hand") {
  const auto r = gaegd::rosenbrock(100.0);
  // at (1,1): H = [[802, -400], [-400, 200]]
  const double tr = 1002.0, det = 802.0 * 200.0 - 400.0 * 400.0;
  const double lmax = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
  CHECK(r->hessian_norm(Vector{1.0, 1.0}).value() == Approx(lmax).epsilon(1e-12));
}

TEST_CASE("finite differences agree with analytic gradients") {
  SUBCASE("quad100 at a random point") {
    const auto q = gaegd::quadratic_100d();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5, 5);
    Vector x(100);
    for (double& v : x) v = u(rng);
    const Vector g = q->gradient(x);
    const Vector fd = gaegd::finite_difference_gradient(*q, x);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      err += (fd[i] - g[i]) * (fd[i] - g[i]);
      norm += g[i] * g[i];
    }
    CHECK(std::sqrt(err / norm) <= 1e-6);
  }
  SUBCASE("rosenbrock at (-3,-4)") {
    const auto r = gaegd::rosenbrock(100.0);
    const Vector fd = gaegd::finite_difference_gradient(*r, Vector{-3.0, -4.0});
    CHECK(fd[0] == Approx(-15608.0).epsilon(1e-6));
    CHECK(fd[1] == Approx(-2600.0).epsilon(1e-6));
  }
  SUBCASE("minimizers") {
    for (const char* name : {"quad100", "quad1d", "rosenbrock"}) {
      const auto obj = gaegd::make_objective(name);
      const Vector fd = gaegd::finite_difference_gradient(*obj, obj->minimizer().value());
      for (double v : fd) CHECK(std::abs(v) < 1e-6);
    }
  }
}

TEST_CASE("objective names") {
  CHECK(gaegd::make_objective("quad100")->dimension() == 100);
  CHECK(gaegd::make_objective("quad1d")->dimension() == 1);
  CHECK(gaegd::make_objective("rosenbrock:10")->value(Vector{0.0, 1.0}) == Approx(11.0));
  CHECK_THROWS_AS(gaegd::make_objective("sphere"), gaegd::ConfigError);
  CHECK_THROWS_AS(gaegd::make_objective("rosenbrock:x"), gaegd::ConfigError);
}
