#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ergodic/ensemble.hpp"
#include "ergodic/growth.hpp"
#include "ergodic/transform_spec.hpp"

namespace ergodic {

/// h(x, x'; alpha) = alpha x_t + (1 - alpha) x'_t, path by path (paths are
/// paired by index, i.e. by shared randomness). alpha must lie in (0, 1).
/// Throws PreconditionError on a grid or path-count mismatch.
Ensemble mixture(const Ensemble& x, const Ensemble& x_prime, double alpha);

/// Process whose f-growth is exactly `rate`: x_t = f^-1(f(x0) + rate t) on
/// a uniform grid over [0, t_max].
Ensemble deterministic_rate_process(double rate, const TransformSpec& f, double x0 = 1.0,
                                    double t_max = 100.0, Eigen::Index n_times = 1001);

struct Thresholds {
  double agree_se = kAgreeSe;
  double disagree_se = kDisagreeSe;
};

enum class Preference { left_preferred, right_preferred, indifferent, inconclusive };
std::string to_string(Preference p);

struct RankingResult {
  Preference verdict = Preference::inconclusive;
  TimeAverageEstimate left;
  TimeAverageEstimate right;
  double left_growth = 0.0;
  double right_growth = 0.0;
  double difference = 0.0;  ///< left_growth - right_growth
  double pooled_se = 0.0;
};

/// Compares the time-average growth of f(x) and f(x'). INDIFFERENT when both
/// converged and the gap is within agree_se pooled s.e.; a strict preference
/// beyond disagree_se; INCONCLUSIVE otherwise or when either side has not
/// converged.
RankingResult rank(const Ensemble& x, const Ensemble& x_prime, const TransformSpec& f,
                   const Thresholds& thresholds = {});

inline constexpr int kBisectionIterations = 16;

/// Bisection for alpha with h(upper, lower; alpha) ~ target.
struct AlphaSearch {
  double alpha = 0.0;
  double lo = 0.0;  ///< bracket; width <= 2^-iterations unless stopped early
  double hi = 1.0;
  int iterations = 0;
  bool conclusive = true;  ///< false when a rank during the search was INCONCLUSIVE
  /// Range of evaluated alphas at which rank could not separate the mixture
  /// from the target (empty, lo > hi, when every evaluation was decisive).
  double band_lo = 1.0;
  double band_hi = 0.0;
  RankingResult certificate;  ///< rank(h(upper, lower; alpha), target)
};

/// Anchors of the representation: L(high) = 1, L(low) = 0.
struct RepresentationFrame {
  Ensemble anchor_high;
  Ensemble anchor_low;
  Thresholds thresholds;
  int iterations = kBisectionIterations;
};

struct RepresentationValue {
  /// Which relation fixed alpha:
  ///   above:   x'' > high,  h(x'', low; a) ~ high,  L = 1/a
  ///   between: high >= x'' >= low, h(high, low; a) ~ x'', L = a
  ///   below:   low > x'',   h(high, x''; a) ~ low,  L = a/(a-1)
  enum class Case { above, between, below };
  Case which = Case::between;
  double value = 0.0;
  bool conclusive = true;
  AlphaSearch search;
};

std::string to_string(RepresentationValue::Case c);

/// L(x'') relative to the frame. Throws PreconditionError unless the high
/// anchor is strictly preferred to the low one.
RepresentationValue representation_value(const Ensemble& x_query, const RepresentationFrame& frame,
                                         const TransformSpec& f);

/// alpha* with x' ~ h(x, x''; alpha*), for x >= x' >= x'' and x > x''.
/// Throws PreconditionError when rank does not confirm the ordering.
AlphaSearch unique_alpha_star(const Ensemble& x, const Ensemble& x_prime,
                              const Ensemble& x_double_prime, const TransformSpec& f,
                              const Thresholds& thresholds = {},
                              int iterations = kBisectionIterations);

/// crra(lambda * gamma) for crra(gamma) or log (gamma = 1), log when the
/// product is 1, tagged as a utility. Throws DomainRefusal for other forms.
TransformSpec risk_adjusted_transform(const TransformSpec& f, double lambda);

struct CertaintyGrowthEquivalent {
  double rate = 0.0;
  double se = 0.0;
  Convergence status = Convergence::insufficient_data;
  bool conclusive() const { return status == Convergence::converged; }
};

/// The constant f-growth rate indifferent to x, i.e. its time-average rate.
CertaintyGrowthEquivalent certainty_growth_equivalent(const Ensemble& x, const TransformSpec& f);

struct DiscountFit {
  double alpha = 0.0;  ///< decay rate
  double beta = 0.0;   ///< scale
  double alpha_se = 0.0;
  double log_beta_se = 0.0;
  double rms = 0.0;  ///< residual RMS of ln V
  std::size_t n = 0;
};

/// Least squares on ln V = ln beta - alpha dt. Needs two distinct dt and
/// V > 0, else PreconditionError. Standard errors are NaN with two points.
DiscountFit fit_discount(const std::vector<std::pair<double, double>>& dt_value);

}  // namespace ergodic
