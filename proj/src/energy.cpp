#include "gaegd/energy.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gaegd/error.hpp"

namespace gaegd {

namespace {

void require_positive(double s, const char* what) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError(std::string(what) + ": argument must be finite and > 0, got " +
                      std::to_string(s));
  }
}

}  // namespace

EnergyFunction EnergyFunction::power(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw ConfigError("power energy exponent must lie in (0, 1], got " + std::to_string(p));
  }
  return {Kind::Power, p};
}

EnergyFunction EnergyFunction::power_unchecked(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw ConfigError("power energy exponent must be > 0");
  }
  return {Kind::Power, p};
}

EnergyFunction EnergyFunction::logarithmic() { return {Kind::Logarithmic, 0.0}; }

EnergyFunction EnergyFunction::parse(std::string_view name) {
  if (name == "log" || name == "alegd") return logarithmic();
  if (name == "aegd") return power(0.5);
  constexpr std::string_view prefix = "power:";
  if (name.starts_with(prefix)) {
    std::string_view rest = name.substr(prefix.size());
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), p);
    if (ec != std::errc() || ptr != rest.data() + rest.size()) {
      throw ConfigError("malformed power exponent in energy name '" + std::string(name) + "'");
    }
    return power(p);
  }
  throw ConfigError("unknown energy '" + std::string(name) +
                    "' (expected power:<p>, log, aegd or alegd)");
}

bool EnergyFunction::strictly_concave() const noexcept {
  return kind_ == Kind::Logarithmic || p_ < 1.0;
}

bool EnergyFunction::derivative_vanishes() const noexcept {
  return kind_ == Kind::Logarithmic || p_ < 1.0;
}

bool EnergyFunction::unbounded() const noexcept { return true; }

double EnergyFunction::value(double s) const {
  require_positive(s, "energy value");
  if (kind_ == Kind::Logarithmic) return std::log1p(s);
  if (p_ == 0.5) return std::sqrt(s);
  return std::pow(s, p_);
}

double EnergyFunction::derivative(double s) const {
  require_positive(s, "energy derivative");
  if (kind_ == Kind::Logarithmic) return 1.0 / (s + 1.0);
  if (p_ == 0.5) return 0.5 / std::sqrt(s);
  if (p_ == 1.0) return 1.0;
  return p_ * std::pow(s, p_ - 1.0);
}

double EnergyFunction::inverse(double y) const {
  // Both families map (0, inf) onto (0, inf).
  require_positive(y, "energy inverse");
  if (kind_ == Kind::Logarithmic) return std::expm1(y);
  if (p_ == 0.5) return y * y;
  return std::pow(y, 1.0 / p_);
}

double EnergyFunction::derivative_inverse(double y) const {
  if (!strictly_concave()) {
    throw UnsupportedEnergyError("derivative of " + name() +
                                 " is not strictly decreasing and cannot be inverted");
  }
  require_positive(y, "energy derivative inverse");
  if (kind_ == Kind::Logarithmic) {
    if (y >= 1.0) {
      throw DomainError("log energy derivative takes values in (0, 1), got " +
                        std::to_string(y));
    }
    return 1.0 / y - 1.0;
  }
  if (p_ == 0.5) return 0.25 / (y * y);
  return std::pow(y / p_, 1.0 / (p_ - 1.0));
}

double EnergyFunction::derivative_sup() const noexcept {
  if (kind_ == Kind::Logarithmic || p_ == 1.0) return 1.0;
  return std::numeric_limits<double>::infinity();
}

std::string EnergyFunction::name() const {
  if (kind_ == Kind::Logarithmic) return "log";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), p_);
  return "power:" + std::string(buf, ptr);
}

AdmissibilityReport check_admissibility(const EnergyFunction& e,
                                        std::span<const double> grid) {
  if (grid.size() < 3) throw std::invalid_argument("admissibility grid needs >= 3 points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw std::invalid_argument("admissibility grid must be strictly increasing and positive");
    }
  }

  AdmissibilityReport report;
  report.strictly_concave = e.strictly_concave();
  report.derivative_vanishes = e.derivative_vanishes();
  report.unbounded = e.unbounded();

  std::vector<double> values(grid.size());
  report.derivative_positive = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = e.value(grid[i]);
    const double d = e.derivative(grid[i]);
    if (!(d > 0.0) || !std::isfinite(d) || !std::isfinite(values[i])) {
      report.derivative_positive = false;
    }
  }

  report.monotone_increasing = true;
  report.concave = true;
  double previous_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(values[i + 1] > values[i])) report.monotone_increasing = false;
    const double slope = (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
    // Relative slack absorbs rounding in the divided differences.
    if (slope > previous_slope + 1e-9 * std::abs(previous_slope)) report.concave = false;
    previous_slope = slope;
  }
  return report;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw std::invalid_argument("log_grid requires 0 < lo < hi and n >= 2");
  }
  std::vector<double> grid(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

}  // namespace gaegd
