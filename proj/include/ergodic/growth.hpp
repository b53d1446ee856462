#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ergodic/ensemble.hpp"
#include "ergodic/transform_spec.hpp"

namespace ergodic {

/// f(x), throwing NumericError when x is outside f's domain.
double transform_checked(const TransformSpec& f, double x);

[[noreturn]] void throw_undefined_rate(double t);

/// (f(x_t) - f(x_0)) / t for a single trajectory, where x_t = path(k).
/// Throws PreconditionError when t is not positive (the rate is undefined at t = 0).
template <typename Derived>
double rate_of_change(const Eigen::DenseBase<Derived>& path, Eigen::Index k, double t,
                      const TransformSpec& f) {
  if (!(t > 0.0)) throw_undefined_rate(t);
  return (transform_checked(f, path(k)) - transform_checked(f, path(0))) / t;
}

/// Path i of an ensemble at grid time t.
double rate_of_change(const Ensemble& ens, Eigen::Index i, double t, const TransformSpec& f);

/// Per-path rates at time t (flagged paths included).
Eigen::VectorXd finite_t_rates(const Ensemble& ens, double t, const TransformSpec& f);

struct RateEstimate {
  double value = 0.0;
  double se = 0.0;  ///< NaN when fewer than two paths were used
  Eigen::Index n_used = 0;
};

/// Mean over unflagged paths of rate_of_change, with s.e. = sample std / sqrt(N).
/// Throws PreconditionError when every path is flagged.
RateEstimate sample_average_rate(const Ensemble& ens, double t, const TransformSpec& f);

enum class Convergence { converged, non_convergent, insufficient_data };
std::string to_string(Convergence c);

struct Checkpoint {
  double t;
  double median_rate;
  double se;
};

/// Long-horizon growth estimate from one ensemble.
struct TimeAverageEstimate {
  double value = 0.0;  ///< median across paths of the rate at t_max
  double se = 0.0;     ///< order-statistic standard error of that median
  double intercept = 0.0;
  double slope_inv_t = 0.0;  ///< fitted rate ~ intercept + slope / t
  Convergence status = Convergence::insufficient_data;
  std::vector<Checkpoint> checkpoints;
  Eigen::Index n_used = 0;
};

inline constexpr int kCheckpointCount = 16;
inline constexpr int kMinCheckpoints = 10;
inline constexpr double kCauchyTolSe = 4.0;

/// Median rate over unflagged paths at geometrically spaced grid
/// checkpoints between max(t_1, t_max/1000) and t_max. The sequence is
/// declared converged when every checkpoint with t >= t_max/8 lies within
/// 4 pooled standard errors of the final one; fewer than 10 distinct
/// checkpoints gives insufficient_data.
TimeAverageEstimate time_average_rate(const Ensemble& ens, const TransformSpec& f);

/// sample_average_rate plus the N-doubling check: the estimates from the
/// first N/4, N/2 and all N unflagged paths must pairwise agree within
/// 3 pooled standard errors.
struct EnsembleRateEstimate {
  RateEstimate full;
  RateEstimate quarter;
  RateEstimate half;
  bool n_converged = false;
};

EnsembleRateEstimate ensemble_rate(const Ensemble& ens, double t, const TransformSpec& f);

enum class Verdict { ergodic, non_ergodic, inconclusive };
std::string to_string(Verdict v);

inline constexpr double kAgreeSe = 3.0;
inline constexpr double kDisagreeSe = 5.0;

struct GrowthReport {
  Eigen::VectorXd finite_t_rate;
  RateEstimate sample_avg;
  TimeAverageEstimate time_avg;
  EnsembleRateEstimate ensemble;
  std::string transform_id;
  double t_used = 0.0;
  Eigen::Index n_used = 0;
  double gap = 0.0;        ///< |time average - ensemble rate|
  double pooled_se = 0.0;  ///< sqrt(se_time^2 + se_ensemble^2)
  Verdict verdict = Verdict::inconclusive;
};

/// Compares the time-average and ensemble rates at t_max. ERGODIC when both
/// converged and the gap is within 3 pooled s.e.; NON_ERGODIC when either
/// diverges or the gap exceeds 5 pooled s.e.; INCONCLUSIVE otherwise.
GrowthReport ergodicity_diagnostic(const Ensemble& ens, const TransformSpec& f);

struct DiagnosticBudget {
  double t_max = 100.0;
  Eigen::Index n_paths = 2000;
  double dt = 1e-2;
  std::uint64_t seed = 1;
  double record_interval = 0.5;
};

GrowthReport ergodicity_diagnostic(const ItoDynamics& dyn, double x0, const TransformSpec& f,
                                   const DiagnosticBudget& budget = {});
GrowthReport ergodicity_diagnostic(const DiscreteDynamics& dyn, double x0, const TransformSpec& f,
                                   Eigen::Index n_steps, Eigen::Index n_paths, std::uint64_t seed);

/// Median and its standard error: half the spread between the order
/// statistics at ranks N/2 -/+ sqrt(N)/2, floored by sqrt(pi/2) IQR/1.349/sqrt(N)
/// so that tied lattice values do not give a zero error.
std::pair<double, double> median_with_se(std::vector<double> values);

}  // namespace ergodic
