#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gaegd {

using Vector = std::vector<double>;

/// Differentiable test objective with analytic gradient and known minimum.
///
/// Implementations are immutable; value/gradient are pure and may be called
/// concurrently.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;

  /// Spectral norm of the Hessian at x, when a closed form is available.
  virtual std::optional<double> hessian_norm(std::span<const double> x) const = 0;

  double f_star() const noexcept { return f_star_; }
  /// Global gradient Lipschitz constant L, when one exists.
  std::optional<double> lipschitz() const noexcept { return lipschitz_; }
  const Vector& default_x0() const noexcept { return x0_; }
  const std::optional<Vector>& minimizer() const noexcept { return minimizer_; }

  Vector gradient(std::span<const double> x) const;

 protected:
  Objective(double f_star, std::optional<double> lipschitz, Vector x0,
            std::optional<Vector> minimizer)
      : f_star_(f_star),
        lipschitz_(lipschitz),
        x0_(std::move(x0)),
        minimizer_(std::move(minimizer)) {}

 private:
  double f_star_;
  std::optional<double> lipschitz_;
  Vector x0_;
  std::optional<Vector> minimizer_;
};

/// f(x) = sum_i a_i x_i^2 with positive coefficients a_i.
class DiagonalQuadratic final : public Objective {
 public:
  DiagonalQuadratic(std::string name, Vector coefficients, Vector x0);

  std::string name() const override { return name_; }
  std::size_t dimension() const override { return coefficients_.size(); }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> out) const override;
  std::optional<double> hessian_norm(std::span<const double> x) const override;
  using Objective::gradient;

  const Vector& coefficients() const noexcept { return coefficients_; }
  /// Polyak-Lojasiewicz modulus: 2 * min_i a_i.
  double pl_modulus() const noexcept;

 private:
  std::string name_;
  Vector coefficients_;
};

/// f(x) = (1 - x1)^2 + b (x2 - x1^2)^2.
class Rosenbrock final : public Objective {
 public:
  explicit Rosenbrock(double b);

  std::string name() const override;
  std::size_t dimension() const override { return 2; }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> out) const override;
  std::optional<double> hessian_norm(std::span<const double> x) const override;
  using Objective::gradient;

  double b() const noexcept { return b_; }

 private:
  double b_;
};

/// The 100-dimensional benchmark: unit coefficients on odd positions
/// (1-based), 1/100 on even positions. L = 2, x0 = (1, ..., 1).
std::shared_ptr<const DiagonalQuadratic> quadratic_100d();

/// One-dimensional f(x) = x^2 with x0 = 1, used for worked examples.
std::shared_ptr<const DiagonalQuadratic> quadratic_1d();

std::shared_ptr<const Rosenbrock> rosenbrock(double b = 100.0);

/// Resolves "quad100", "quad1d", "rosenbrock" or "rosenbrock:<b>".
std::shared_ptr<const Objective> make_objective(std::string_view name);

/// Central differences with per-coordinate step h * (1 + |x_j|).
Vector finite_difference_gradient(const Objective& obj, std::span<const double> x,
                                  double h = 1e-6);

}  // namespace gaegd
