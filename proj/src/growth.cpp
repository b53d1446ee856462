#include "ergodic/growth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "ergodic/errors.hpp"

namespace ergodic {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kMedianEfficiency = 1.2533141373155003;  // sqrt(pi / 2)
constexpr double kIqrPerSigma = 1.3489795003921634;

double slack(double scale) { return 1e-12 * (1.0 + std::abs(scale)); }

std::vector<Eigen::Index> unflagged(const Ensemble& ens) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(ens.n_paths()));
  for (Eigen::Index i = 0; i < ens.n_paths(); ++i)
    if (!ens.flagged(i)) idx.push_back(i);
  if (idx.empty()) throw PreconditionError("every path is flagged for a domain exit");
  return idx;
}

double rate_at(const Ensemble& ens, Eigen::Index i, Eigen::Index k, const TransformSpec& f) {
  return rate_of_change(ens.path(i), k, ens.time_grid()(k), f);
}

RateEstimate mean_rate(const Ensemble& ens, const std::vector<Eigen::Index>& idx, std::size_t n,
                       Eigen::Index k, const TransformSpec& f) {
  RateEstimate est;
  est.n_used = static_cast<Eigen::Index>(n);
  if (n == 0) {
    est.value = kNan;
    est.se = kNan;
    return est;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += rate_at(ens, idx[j], k, f);
  est.value = sum / static_cast<double>(n);
  if (n < 2) {
    est.se = kNan;
    return est;
  }
  double ss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = rate_at(ens, idx[j], k, f) - est.value;
    ss += d * d;
  }
  est.se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  return est;
}

bool agree(const RateEstimate& a, const RateEstimate& b, double n_se) {
  const double pooled = std::hypot(a.se, b.se);
  if (!std::isfinite(pooled)) return false;
  return std::abs(a.value - b.value) <= n_se * pooled + slack(std::max(std::abs(a.value), std::abs(b.value)));
}

}  // namespace

double transform_checked(const TransformSpec& f, double x) {
  if (!f.in_domain(x)) {
    std::ostringstream os;
    os << "wealth " << x << " is outside the domain of transform " << f.id();
    throw NumericError(os.str());
  }
  return f(x);
}

void throw_undefined_rate(double t) {
  std::ostringstream os;
  os << "rate of change is undefined at t=" << t;
  throw PreconditionError(os.str());
}

std::string to_string(Convergence c) {
  switch (c) {
    case Convergence::converged: return "converged";
    case Convergence::non_convergent: return "NON_CONVERGENT";
    case Convergence::insufficient_data: return "INSUFFICIENT_DATA";
  }
  return "";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ergodic: return "ERGODIC";
    case Verdict::non_ergodic: return "NON_ERGODIC";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "";
}

double rate_of_change(const Ensemble& ens, Eigen::Index i, double t, const TransformSpec& f) {
  if (!(t > 0.0)) throw_undefined_rate(t);
  return rate_at(ens, i, ens.index_of(t), f);
}

Eigen::VectorXd finite_t_rates(const Ensemble& ens, double t, const TransformSpec& f) {
  if (!(t > 0.0)) throw_undefined_rate(t);
  const Eigen::Index k = ens.index_of(t);
  Eigen::VectorXd rates(ens.n_paths());
  for (Eigen::Index i = 0; i < ens.n_paths(); ++i) rates(i) = rate_at(ens, i, k, f);
  return rates;
}

RateEstimate sample_average_rate(const Ensemble& ens, double t, const TransformSpec& f) {
  if (!(t > 0.0)) throw_undefined_rate(t);
  const Eigen::Index k = ens.index_of(t);
  const auto idx = unflagged(ens);
  return mean_rate(ens, idx, idx.size(), k, f);
}

std::pair<double, double> median_with_se(std::vector<double> values) {
  if (values.empty()) return {kNan, kNan};
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double median =
      n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  const double half_width = std::sqrt(static_cast<double>(n)) / 2.0;
  const double lo_rank = std::floor(static_cast<double>(n) / 2.0 - half_width);
  const double hi_rank = std::ceil(static_cast<double>(n) / 2.0 + half_width);
  const auto lo = static_cast<std::size_t>(std::clamp(lo_rank, 0.0, static_cast<double>(n - 1)));
  const auto hi = static_cast<std::size_t>(std::clamp(hi_rank, 0.0, static_cast<double>(n - 1)));
  double se = 0.5 * (values[hi] - values[lo]);
  // On a lattice (discrete gambles) the two order statistics often coincide;
  // the interquartile normal-equivalent error keeps se from collapsing to 0.
  const double iqr = values[std::min(n - 1, (3 * n) / 4)] - values[n / 4];
  se = std::max(se, kMedianEfficiency * (iqr / kIqrPerSigma) / std::sqrt(static_cast<double>(n)));
  return {median, se};
}

TimeAverageEstimate time_average_rate(const Ensemble& ens, const TransformSpec& f) {
  TimeAverageEstimate est;
  const auto idx = unflagged(ens);
  est.n_used = static_cast<Eigen::Index>(idx.size());
  const Eigen::Index last = ens.n_times() - 1;
  if (last < 1) {
    est.value = kNan;
    est.se = kNan;
    return est;
  }

  const double t_max = ens.t_max();
  const double t_start = std::max(ens.time_grid()(1), t_max / 1000.0);
  std::vector<Eigen::Index> cols;
  for (int j = 0; j < kCheckpointCount; ++j) {
    const double t = t_start * std::pow(t_max / t_start, static_cast<double>(j) / (kCheckpointCount - 1));
    const Eigen::Index k = std::max<Eigen::Index>(1, ens.nearest_index(t));
    if (cols.empty() || cols.back() != k) cols.push_back(k);
  }
  if (cols.back() != last) cols.push_back(last);

  std::vector<double> rates(idx.size());
  for (Eigen::Index k : cols) {
    for (std::size_t j = 0; j < idx.size(); ++j) rates[j] = rate_at(ens, idx[j], k, f);
    const auto [median, se] = median_with_se(rates);
    est.checkpoints.push_back({ens.time_grid()(k), median, se});
  }
  const Checkpoint& final_cp = est.checkpoints.back();
  est.value = final_cp.median_rate;
  est.se = final_cp.se;

  const auto n_cp = static_cast<Eigen::Index>(est.checkpoints.size());
  if (n_cp >= 2) {
    Eigen::MatrixXd design(n_cp, 2);
    Eigen::VectorXd rhs(n_cp);
    for (Eigen::Index j = 0; j < n_cp; ++j) {
      const auto& cp = est.checkpoints[static_cast<std::size_t>(j)];
      design(j, 0) = 1.0;
      design(j, 1) = 1.0 / cp.t;
      rhs(j) = cp.median_rate;
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
    est.intercept = coef(0);
    est.slope_inv_t = coef(1);
  }

  if (n_cp < kMinCheckpoints) {
    est.status = Convergence::insufficient_data;
    return est;
  }
  est.status = Convergence::converged;
  for (const auto& cp : est.checkpoints) {
    if (cp.t < t_max / 8.0) continue;
    const double tol = kCauchyTolSe * std::hypot(cp.se, final_cp.se) + slack(final_cp.median_rate);
    if (!(std::abs(cp.median_rate - final_cp.median_rate) <= tol)) {
      est.status = Convergence::non_convergent;
      break;
    }
  }
  return est;
}

EnsembleRateEstimate ensemble_rate(const Ensemble& ens, double t, const TransformSpec& f) {
  if (!(t > 0.0)) throw_undefined_rate(t);
  const Eigen::Index k = ens.index_of(t);
  const auto idx = unflagged(ens);
  EnsembleRateEstimate est;
  est.full = mean_rate(ens, idx, idx.size(), k, f);
  est.half = mean_rate(ens, idx, idx.size() / 2, k, f);
  est.quarter = mean_rate(ens, idx, idx.size() / 4, k, f);
  est.n_converged = agree(est.quarter, est.half, kAgreeSe) && agree(est.half, est.full, kAgreeSe) &&
                    agree(est.quarter, est.full, kAgreeSe);
  return est;
}

GrowthReport ergodicity_diagnostic(const Ensemble& ens, const TransformSpec& f) {
  GrowthReport report;
  report.transform_id = f.id();
  report.t_used = ens.t_max();
  report.time_avg = time_average_rate(ens, f);
  report.n_used = report.time_avg.n_used;
  if (ens.n_times() < 2) {
    report.verdict = Verdict::inconclusive;
    return report;
  }
  report.finite_t_rate = finite_t_rates(ens, report.t_used, f);
  report.sample_avg = sample_average_rate(ens, report.t_used, f);
  report.ensemble = ensemble_rate(ens, report.t_used, f);
  report.gap = std::abs(report.time_avg.value - report.ensemble.full.value);
  report.pooled_se = std::hypot(report.time_avg.se, report.ensemble.full.se);

  const auto& ta = report.time_avg;
  if (ta.status == Convergence::insufficient_data || !std::isfinite(report.pooled_se) ||
      report.ensemble.quarter.n_used < 2) {
    report.verdict = Verdict::inconclusive;
  } else if (ta.status == Convergence::non_convergent || !report.ensemble.n_converged) {
    report.verdict = Verdict::non_ergodic;
  } else if (report.gap <= kAgreeSe * report.pooled_se + slack(ta.value)) {
    report.verdict = Verdict::ergodic;
  } else if (report.gap > kDisagreeSe * report.pooled_se + slack(ta.value)) {
    report.verdict = Verdict::non_ergodic;
  } else {
    report.verdict = Verdict::inconclusive;
  }
  return report;
}

GrowthReport ergodicity_diagnostic(const ItoDynamics& dyn, double x0, const TransformSpec& f,
                                   const DiagnosticBudget& budget) {
  SimulationBudget sim;
  sim.dt = budget.dt;
  sim.t_max = budget.t_max;
  sim.n_paths = budget.n_paths;
  sim.seed = budget.seed;
  sim.record_interval = budget.record_interval <= budget.t_max ? budget.record_interval : 0.0;
  return ergodicity_diagnostic(simulate_ito(dyn, x0, sim), f);
}

GrowthReport ergodicity_diagnostic(const DiscreteDynamics& dyn, double x0, const TransformSpec& f,
                                   Eigen::Index n_steps, Eigen::Index n_paths, std::uint64_t seed) {
  return ergodicity_diagnostic(simulate_discrete(dyn, x0, n_steps, n_paths, seed), f);
}

}  // namespace ergodic
