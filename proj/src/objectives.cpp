#include "gaegd/objectives.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "gaegd/error.hpp"

namespace gaegd {

Vector Objective::gradient(std::span<const double> x) const {
  Vector g(dimension());
  gradient(x, g);
  return g;
}

namespace {

void check_size(std::span<const double> x, std::size_t d) {
  if (x.size() != d) {
    throw std::invalid_argument("point has dimension " + std::to_string(x.size()) +
                                ", objective expects " + std::to_string(d));
  }
}

}  // namespace

DiagonalQuadratic::DiagonalQuadratic(std::string name, Vector coefficients, Vector x0)
    : Objective(0.0, 2.0 * *std::max_element(coefficients.begin(), coefficients.end()),
                std::move(x0), Vector(coefficients.size(), 0.0)),
      name_(std::move(name)),
      coefficients_(std::move(coefficients)) {
  if (coefficients_.empty() ||
      std::any_of(coefficients_.begin(), coefficients_.end(), [](double a) { return !(a > 0); })) {
    throw ConfigError("quadratic coefficients must be positive");
  }
}

double DiagonalQuadratic::value(std::span<const double> x) const {
  check_size(x, coefficients_.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += coefficients_[i] * x[i] * x[i];
  return sum;
}

void DiagonalQuadratic::gradient(std::span<const double> x, std::span<double> out) const {
  check_size(x, coefficients_.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = 2.0 * coefficients_[i] * x[i];
}

std::optional<double> DiagonalQuadratic::hessian_norm(std::span<const double>) const {
  return lipschitz();
}

double DiagonalQuadratic::pl_modulus() const noexcept {
  return 2.0 * *std::min_element(coefficients_.begin(), coefficients_.end());
}

Rosenbrock::Rosenbrock(double b)
    : Objective(0.0, std::nullopt, Vector{-3.0, -4.0}, Vector{1.0, 1.0}), b_(b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("rosenbrock b must be > 0");
}

std::string Rosenbrock::name() const {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), b_);
  return "rosenbrock:" + std::string(buf, ptr);
}

double Rosenbrock::value(std::span<const double> x) const {
  check_size(x, 2);
  const double u = 1.0 - x[0];
  const double v = x[1] - x[0] * x[0];
  return u * u + b_ * v * v;
}

void Rosenbrock::gradient(std::span<const double> x, std::span<double> out) const {
  check_size(x, 2);
  const double v = x[1] - x[0] * x[0];
  out[0] = -2.0 * (1.0 - x[0]) - 4.0 * b_ * x[0] * v;
  out[1] = 2.0 * b_ * v;
}

std::optional<double> Rosenbrock::hessian_norm(std::span<const double> x) const {
  check_size(x, 2);
  const double h11 = 2.0 - 4.0 * b_ * x[1] + 12.0 * b_ * x[0] * x[0];
  const double h12 = -4.0 * b_ * x[0];
  const double h22 = 2.0 * b_;
  const double mean = 0.5 * (h11 + h22);
  const double radius = std::hypot(0.5 * (h11 - h22), h12);
  return std::max(std::abs(mean + radius), std::abs(mean - radius));
}

std::shared_ptr<const DiagonalQuadratic> quadratic_100d() {
  Vector coefficients(100);
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    // Zero-based even index = 1-based odd position.
    coefficients[i] = (i % 2 == 0) ? 1.0 : 1.0 / 100.0;
  }
  return std::make_shared<const DiagonalQuadratic>("quad100", std::move(coefficients),
                                                   Vector(100, 1.0));
}

std::shared_ptr<const DiagonalQuadratic> quadratic_1d() {
  return std::make_shared<const DiagonalQuadratic>("quad1d", Vector{1.0}, Vector{1.0});
}

std::shared_ptr<const Rosenbrock> rosenbrock(double b) {
  return std::make_shared<const Rosenbrock>(b);
}

std::shared_ptr<const Objective> make_objective(std::string_view name) {
  if (name == "quad100") return quadratic_100d();
  if (name == "quad1d") return quadratic_1d();
  if (name == "rosenbrock") return rosenbrock(100.0);
  constexpr std::string_view prefix = "rosenbrock:";
  if (name.starts_with(prefix)) {
    std::string_view rest = name.substr(prefix.size());
    double b = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), b);
    if (ec != std::errc() || ptr != rest.data() + rest.size()) {
      throw ConfigError("malformed rosenbrock parameter in '" + std::string(name) + "'");
    }
    return rosenbrock(b);
  }
  throw ConfigError("unknown objective '" + std::string(name) +
                    "' (expected quad100, quad1d or rosenbrock:<b>)");
}

Vector finite_difference_gradient(const Objective& obj, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be > 0");
  Vector probe(x.begin(), x.end());
  Vector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double step = h * (1.0 + std::abs(x[j]));
    probe[j] = x[j] + step;
    const double up = obj.value(probe);
    probe[j] = x[j] - step;
    const double down = obj.value(probe);
    probe[j] = x[j];
    g[j] = (up - down) / (2.0 * step);
  }
  return g;
}

}  // namespace gaegd
