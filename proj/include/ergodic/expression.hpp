#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ergodic {

/// One term c * x^p of a power sum.
struct PowerTerm {
  double coefficient;
  double exponent;
};

/// A scalar function of one variable `x`, parsed from text.
///
/// Grammar: numbers, `x`, `pi`, `+ - * / ^` (right-associative `^`), unary
/// minus, parentheses and the calls exp, log/ln, sqrt, abs. Expressions that
/// reduce to a finite sum of power terms (every template the dynamics module
/// recognises) are evaluated through that reduced form.
class Expression {
 public:
  /// Throws ConfigError naming the column of the first offending character.
  static Expression parse(std::string_view source);

  /// The constant function.
  static Expression constant(double value);

  double operator()(double x) const;

  /// out[i] = f(x[i]); spans must have equal length.
  void evaluate(std::span<const double> x, std::span<double> out) const;

  const std::string& source() const { return source_; }

  /// Sorted by exponent, like terms merged, zero coefficients dropped.
  /// Empty optional when the expression is not a power sum.
  const std::optional<std::vector<PowerTerm>>& power_terms() const { return terms_; }

  struct Node;

 private:
  Expression(std::string source, std::shared_ptr<const Node> root);

  std::string source_;
  std::shared_ptr<const Node> root_;
  std::optional<std::vector<PowerTerm>> terms_;
};

}  // namespace ergodic
