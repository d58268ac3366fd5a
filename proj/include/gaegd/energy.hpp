#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gaegd {

/// Energy map F: R+ -> R+ used to deform the shifted objective f + c.
///
/// Two families are provided: power energies s^p and the logarithmic energy
/// log(s + 1). Values are immutable after construction.
class EnergyFunction {
 public:
  enum class Kind { Power, Logarithmic };

  /// Power energy with exponent p in (0, 1]. Throws ConfigError otherwise.
  static EnergyFunction power(double p);
  /// Power energy with any p > 0. Only meant for admissibility negative tests.
  static EnergyFunction power_unchecked(double p);
  static EnergyFunction logarithmic();

  /// Parses "power:<p>", "log", "aegd" (= power:0.5) or "alegd" (= log).
  static EnergyFunction parse(std::string_view name);

  Kind kind() const noexcept { return kind_; }
  /// Exponent of a power energy; 0 for the logarithmic energy.
  double exponent() const noexcept { return p_; }

  bool strictly_concave() const noexcept;
  bool derivative_vanishes() const noexcept;
  bool unbounded() const noexcept;

  double value(double s) const;
  double derivative(double s) const;
  double inverse(double y) const;
  /// Inverse of the derivative. Requires a strictly decreasing derivative.
  double derivative_inverse(double y) const;

  /// Supremum of the derivative over s > 0 (infinity for p < 1).
  double derivative_sup() const noexcept;

  /// Canonical configuration name, e.g. "power:0.5" or "log".
  std::string name() const;

  friend bool operator==(const EnergyFunction&, const EnergyFunction&) = default;

 private:
  EnergyFunction(Kind kind, double p) : kind_(kind), p_(p) {}

  Kind kind_;
  double p_;
};

struct AdmissibilityReport {
  bool monotone_increasing = false;
  bool derivative_positive = false;
  bool concave = false;
  bool strictly_concave = false;
  bool derivative_vanishes = false;
  bool unbounded = false;

  /// Optimizers accept an energy only when it is increasing and concave.
  bool admissible() const noexcept {
    return monotone_increasing && derivative_positive && concave;
  }
};

/// Numerical admissibility check on a sorted, strictly positive grid of at
/// least three points. Concavity is judged from finite-difference slopes.
AdmissibilityReport check_admissibility(const EnergyFunction& e,
                                        std::span<const double> grid);

/// n log-spaced points over [lo, hi], endpoints included.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace gaegd
