#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ergodic/expression.hpp"

namespace ergodic {

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lo && x < hi; }
  bool empty() const { return !(lo < hi); }

  static Interval positive() { return {0.0, std::numeric_limits<double>::infinity()}; }
  static Interval real_line() { return {}; }
};

/// Template the diffusion matched: sigma (additive), sigma*x (multiplicative),
/// sigma*x^gamma (power). `scale` holds sigma, `gamma` the exponent.
struct FamilyHint {
  enum class Kind { additive, multiplicative, power, custom };
  Kind kind = Kind::custom;
  double scale = 0.0;
  double gamma = 0.0;

  bool has_closed_form() const { return kind != Kind::custom; }
};

std::string to_string(FamilyHint::Kind kind);

/// dx = a(x) dt + b(x) dW on an open domain, with b > 0 there.
class ItoDynamics {
 public:
  const Expression& drift() const { return drift_; }
  const Expression& diffusion() const { return diffusion_; }
  const Interval& domain() const { return domain_; }
  const FamilyHint& family() const { return family_; }

  double drift_at(double x) const { return drift_(x); }
  double diffusion_at(double x) const { return diffusion_(x); }

  /// Stable text form used for fingerprints.
  std::string canonical() const;

 private:
  friend ItoDynamics build_ito(const Expression&, const Expression&, Interval);
  ItoDynamics(Expression drift, Expression diffusion, Interval domain, FamilyHint family)
      : drift_(std::move(drift)),
        diffusion_(std::move(diffusion)),
        domain_(domain),
        family_(family) {}

  Expression drift_;
  Expression diffusion_;
  Interval domain_;
  FamilyHint family_;
};

/// The 201 points on which build_ito validates a domain: interior linear
/// spacing for bounded domains, log spacing from the finite end otherwise.
std::vector<double> validation_grid(const Interval& domain, int points = 201);

/// Validates and classifies. Throws ConfigError when the domain is empty,
/// either function is non-finite on the validation grid, or the diffusion is
/// not strictly positive there (the message carries the offending x).
ItoDynamics build_ito(const Expression& drift, const Expression& diffusion, Interval domain);

/// Convenience overload parsing both expressions.
ItoDynamics build_ito(std::string_view drift, std::string_view diffusion, Interval domain);

/// i.i.d. per-step wealth changes: additive deltas or multiplicative factors.
class DiscreteDynamics {
 public:
  enum class Mode { additive, multiplicative };

  /// Throws ConfigError unless probabilities are nonnegative, sum to 1 within
  /// 1e-12, and multiplicative factors are strictly positive.
  DiscreteDynamics(Mode mode, std::vector<double> outcomes, std::vector<double> probabilities);

  Mode mode() const { return mode_; }
  const std::vector<double>& outcomes() const { return outcomes_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  double apply(double wealth, std::size_t outcome) const {
    return mode_ == Mode::additive ? wealth + outcomes_[outcome] : wealth * outcomes_[outcome];
  }

  std::string canonical() const;

 private:
  Mode mode_;
  std::vector<double> outcomes_;
  std::vector<double> probabilities_;
};

std::string to_string(DiscreteDynamics::Mode mode);

}  // namespace ergodic
