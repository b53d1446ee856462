#include "ergodic/preference.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Dense>

#include "ergodic/errors.hpp"
#include "ergodic/rng.hpp"

namespace ergodic {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double slack(double a, double b) { return 1e-12 * (1.0 + std::max(std::abs(a), std::abs(b))); }

std::string bits_of(double v) {
  char buf[sizeof v];
  std::memcpy(buf, &v, sizeof v);
  return std::string(buf, sizeof v);
}

bool same_grid(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index k = 0; k < a.size(); ++k)
    if (std::abs(a(k) - b(k)) > 1e-12 * std::max(1.0, std::abs(a(k)))) return false;
  return true;
}

bool is_exact_tie(const RankingResult& r) {
  return std::abs(r.difference) <= slack(r.left_growth, r.right_growth) && r.pooled_se == 0.0;
}

AlphaSearch bisect(const Ensemble& upper, const Ensemble& lower, const Ensemble& target,
                   const TransformSpec& f, const Thresholds& th, int iterations,
                   bool stop_on_inconclusive) {
  AlphaSearch s;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (s.lo + s.hi);
    const RankingResult r = rank(mixture(upper, lower, mid), target, f, th);
    ++s.iterations;
    if (r.verdict == Preference::indifferent || r.verdict == Preference::inconclusive) {
      s.band_lo = std::min(s.band_lo, mid);
      s.band_hi = std::max(s.band_hi, mid);
    }
    if (r.verdict == Preference::inconclusive && stop_on_inconclusive) {
      s.conclusive = false;
      s.alpha = mid;
      s.certificate = r;
      return s;
    }
    if (is_exact_tie(r)) {
      s.lo = s.hi = mid;
      break;
    }
    if (r.difference > 0.0) {
      s.hi = mid;
    } else {
      s.lo = mid;
    }
  }
  s.alpha = 0.5 * (s.lo + s.hi);
  s.certificate = rank(mixture(upper, lower, s.alpha), target, f, th);
  return s;
}

bool at_least(Preference p) { return p == Preference::left_preferred || p == Preference::indifferent; }

}  // namespace

std::string to_string(Preference p) {
  switch (p) {
    case Preference::left_preferred: return "LEFT_PREFERRED";
    case Preference::right_preferred: return "RIGHT_PREFERRED";
    case Preference::indifferent: return "INDIFFERENT";
    case Preference::inconclusive: return "INCONCLUSIVE";
  }
  return "";
}

std::string to_string(RepresentationValue::Case c) {
  switch (c) {
    case RepresentationValue::Case::above: return "above";
    case RepresentationValue::Case::between: return "between";
    case RepresentationValue::Case::below: return "below";
  }
  return "";
}

Ensemble mixture(const Ensemble& x, const Ensemble& x_prime, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw PreconditionError("mixture: alpha must lie in the open interval (0, 1)");
  if (x.n_paths() != x_prime.n_paths() || !same_grid(x.time_grid(), x_prime.time_grid()))
    throw PreconditionError("mixture: time grids and path counts must match");
  Eigen::MatrixXd paths = alpha * x.paths() + (1.0 - alpha) * x_prime.paths();
  std::vector<bool> flags(static_cast<std::size_t>(x.n_paths()));
  for (Eigen::Index i = 0; i < x.n_paths(); ++i)
    flags[static_cast<std::size_t>(i)] = x.flagged(i) || x_prime.flagged(i);
  const std::uint64_t fp =
      mix64(fnv1a(bits_of(alpha), fnv1a("mixture")) ^ x.fingerprint()) ^ mix64(x_prime.fingerprint() + 1);
  return Ensemble(x.time_grid(), std::move(paths), alpha * x.x0() + (1.0 - alpha) * x_prime.x0(),
                  x.seed(), fp, std::move(flags));
}

Ensemble deterministic_rate_process(double rate, const TransformSpec& f, double x0, double t_max,
                                    Eigen::Index n_times) {
  if (!(t_max > 0.0) || n_times < 2)
    throw PreconditionError("deterministic_rate_process: need t_max > 0 and at least two times");
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(n_times, 0.0, t_max);
  const double f0 = f(x0);
  Eigen::VectorXd values(n_times);
  for (Eigen::Index k = 0; k < n_times; ++k) values(k) = f.inverse(f0 + rate * grid(k));
  values(0) = x0;
  return deterministic_ensemble(grid, values);
}

RankingResult rank(const Ensemble& x, const Ensemble& x_prime, const TransformSpec& f,
                   const Thresholds& th) {
  RankingResult r;
  r.left = time_average_rate(x, f);
  r.right = time_average_rate(x_prime, f);
  r.left_growth = r.left.value;
  r.right_growth = r.right.value;
  r.difference = r.left_growth - r.right_growth;
  r.pooled_se = std::hypot(r.left.se, r.right.se);
  const double gap = std::abs(r.difference);
  const double eps = slack(r.left_growth, r.right_growth);
  if (r.left.status != Convergence::converged || r.right.status != Convergence::converged ||
      !std::isfinite(r.pooled_se) || !std::isfinite(gap)) {
    r.verdict = Preference::inconclusive;
  } else if (gap <= th.agree_se * r.pooled_se + eps) {
    r.verdict = Preference::indifferent;
  } else if (gap > th.disagree_se * r.pooled_se + eps) {
    r.verdict = r.difference > 0.0 ? Preference::left_preferred : Preference::right_preferred;
  } else {
    r.verdict = Preference::inconclusive;
  }
  return r;
}

RepresentationValue representation_value(const Ensemble& x_query, const RepresentationFrame& frame,
                                         const TransformSpec& f) {
  const auto& high = frame.anchor_high;
  const auto& low = frame.anchor_low;
  const auto& th = frame.thresholds;
  if (rank(high, low, f, th).verdict != Preference::left_preferred)
    throw PreconditionError("representation_value: high anchor must be strictly preferred to the low anchor");

  RepresentationValue out;
  const RankingResult vs_high = rank(x_query, high, f, th);
  const RankingResult vs_low = rank(x_query, low, f, th);
  if (vs_high.verdict == Preference::inconclusive || vs_low.verdict == Preference::inconclusive) {
    out.conclusive = false;
    out.value = kNan;
    out.search.conclusive = false;
    out.search.certificate =
        vs_high.verdict == Preference::inconclusive ? vs_high : vs_low;
    return out;
  }
  if (vs_high.verdict == Preference::indifferent) {
    out.value = 1.0;
    out.search.alpha = out.search.lo = out.search.hi = 1.0;
    out.search.certificate = vs_high;
    return out;
  }
  if (vs_low.verdict == Preference::indifferent) {
    out.value = 0.0;
    out.search.alpha = out.search.lo = out.search.hi = 0.0;
    out.search.certificate = vs_low;
    return out;
  }

  if (vs_high.verdict == Preference::left_preferred) {
    out.which = RepresentationValue::Case::above;
    out.search = bisect(x_query, low, high, f, th, frame.iterations, true);
    out.value = 1.0 / out.search.alpha;
  } else if (vs_low.verdict == Preference::right_preferred) {
    out.which = RepresentationValue::Case::below;
    out.search = bisect(high, x_query, low, f, th, frame.iterations, true);
    out.value = out.search.alpha / (out.search.alpha - 1.0);
  } else {
    out.which = RepresentationValue::Case::between;
    out.search = bisect(high, low, x_query, f, th, frame.iterations, true);
    out.value = out.search.alpha;
  }
  out.conclusive = out.search.conclusive;
  if (!out.conclusive) out.value = kNan;
  return out;
}

AlphaSearch unique_alpha_star(const Ensemble& x, const Ensemble& x_prime,
                              const Ensemble& x_double_prime, const TransformSpec& f,
                              const Thresholds& th, int iterations) {
  if (!at_least(rank(x, x_prime, f, th).verdict) || !at_least(rank(x_prime, x_double_prime, f, th).verdict) ||
      rank(x, x_double_prime, f, th).verdict != Preference::left_preferred)
    throw PreconditionError("unique_alpha_star: rank does not confirm x >= x' >= x'' with x > x''");
  return bisect(x, x_double_prime, x_prime, f, th, iterations, false);
}

TransformSpec risk_adjusted_transform(const TransformSpec& f, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw PreconditionError("risk_adjusted_transform: lambda must be positive");
  double gamma = 0.0;
  if (f.form() == TransformSpec::Form::crra) {
    gamma = f.gamma();
  } else if (f.form() == TransformSpec::Form::log) {
    gamma = 1.0;
  } else {
    throw DomainRefusal("risk_adjusted_transform: only crra and log transforms have a risk-adjusted utility, got " +
                        f.id());
  }
  return TransformSpec::crra(lambda * gamma).with_role(TransformSpec::Role::utility);
}

CertaintyGrowthEquivalent certainty_growth_equivalent(const Ensemble& x, const TransformSpec& f) {
  const TimeAverageEstimate ta = time_average_rate(x, f);
  CertaintyGrowthEquivalent c;
  c.status = ta.status;
  c.rate = ta.status == Convergence::converged ? ta.value : kNan;
  c.se = ta.se;
  return c;
}

DiscountFit fit_discount(const std::vector<std::pair<double, double>>& dt_value) {
  const auto n = static_cast<Eigen::Index>(dt_value.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [dt, v] = dt_value[static_cast<std::size_t>(i)];
    if (!(v > 0.0) || !std::isfinite(v) || !std::isfinite(dt))
      throw PreconditionError("fit_discount: value at row " + std::to_string(i) +
                              " must be positive and finite (log undefined)");
    design(i, 0) = 1.0;
    design(i, 1) = -dt;
    y(i) = std::log(v);
  }
  bool distinct = false;
  for (Eigen::Index i = 1; i < n && !distinct; ++i) distinct = design(i, 1) != design(0, 1);
  if (!distinct) throw PreconditionError("fit_discount: need at least two distinct dt values");

  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - design * coef;
  DiscountFit fit;
  fit.n = dt_value.size();
  fit.alpha = coef(1);
  fit.beta = std::exp(coef(0));
  fit.rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  if (n > 2) {
    const double s2 = resid.squaredNorm() / static_cast<double>(n - 2);
    const Eigen::Matrix2d cov = s2 * (design.transpose() * design).inverse();
    fit.log_beta_se = std::sqrt(cov(0, 0));
    fit.alpha_se = std::sqrt(cov(1, 1));
  } else {
    fit.log_beta_se = fit.alpha_se = kNan;
  }
  return fit;
}

}  // namespace ergodic
