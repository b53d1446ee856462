#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ergodic/dynamics.hpp"
#include "ergodic/ensemble.hpp"
#include "ergodic/transform_spec.hpp"

namespace ergodic {

inline constexpr double kErgodizableTolRel = 1e-6;

/// Outcome of testing a(x) = (alpha/beta) b(x) + b(x) b'(x) / 2 on a grid.
struct ErgodizabilityCheck {
  bool admits = false;
  double alpha_over_beta = 0.0;  ///< median of q(x) = (a - b b' / 2) / b
  double residual = 0.0;         ///< max |q(x) - median q|
  double tolerance = 0.0;        ///< 1e-6 * (1 + |median q|)
  std::vector<double> grid_used;
  std::vector<std::string> warnings;
};

/// 101 points: log spaced over [0.01, 100] on the positive half-line,
/// linear over [-100, 100] on the real line, interior linear spacing on a
/// bounded domain.
std::vector<double> default_check_grid(const Interval& domain, int points = 101);

/// b' comes from a central difference with step 1e-6 * max(|x|, 1). Grid
/// points whose stencil leaves the domain are dropped with a warning.
/// Throws PreconditionError when fewer than 51 usable points remain.
ErgodizabilityCheck check_ergodizable(const ItoDynamics& dyn, std::span<const double> grid);
ErgodizabilityCheck check_ergodizable(const ItoDynamics& dyn);

/// Where derive_transform tabulates f.
struct TableRange {
  double lo = 0.0;
  double hi = 0.0;
  bool log_spaced = false;
  int nodes = 513;
};

/// [x_ref/1e3, x_ref*1e3] log spaced for multiplicative, power and custom
/// positive-domain dynamics; x_ref -/+ 100 linear otherwise; clipped to the
/// domain interior.
TableRange default_table_range(const ItoDynamics& dyn, double x_ref);

/// Solves f' = 1/b with f(x_ref) = 0 (beta normalised to 1) by adaptive
/// Gauss-Kronrod quadrature between consecutive table nodes. When b matches
/// a template the closed form is returned with the table attached:
/// sigma -> affine, sigma x -> log, sigma x^gamma -> crra(gamma).
/// alpha = alpha_over_beta from check_ergodizable.
/// Throws DomainRefusal for a non-admitting dynamic, PreconditionError when
/// x_ref lies outside the domain, NumericError when quadrature fails.
TransformSpec derive_transform(const ItoDynamics& dyn, double x_ref);
TransformSpec derive_transform(const ItoDynamics& dyn, double x_ref, const TableRange& range);

/// Elementwise f over every path. The result keeps the grid, seed and flags;
/// x0 becomes f(x0). Throws NumericError naming path and step for a value
/// outside f's domain. Numeric-table lookups outside the table are extended
/// linearly and reported through `warnings`.
Ensemble apply_transform(const TransformSpec& f, const Ensemble& ens,
                         std::vector<std::string>* warnings = nullptr);

/// Per-window increment statistics used by verify_levy.
struct IncrementWindow {
  double t_begin;
  double t_end;
  double mean;
  double mean_se;
  double variance;
  double variance_se;
  Eigen::Index n;
};

struct LevyReport {
  bool stationary = false;
  bool independent = false;
  double drift_hat = 0.0;  ///< mean increment / dt
  double drift_se = 0.0;
  double vol_hat = 0.0;    ///< increment std / sqrt(dt)
  double lag1_autocorrelation = 0.0;
  double autocorrelation_bound = 0.0;  ///< 4 / sqrt(n_pairs)
  Eigen::Index n_samples = 0;
  std::vector<IncrementWindow> windows;
};

inline constexpr int kLevyWindows = 10;
inline constexpr double kLevyTolSe = 4.0;

/// Stationary when increment mean and variance agree pairwise across 10
/// equal time windows within 4 pooled s.e.; independent when the pooled
/// lag-1 autocorrelation lies within 4/sqrt(n). Needs >= 100 unflagged
/// paths and >= 100 steps on a uniform grid, else PreconditionError.
LevyReport verify_levy(const Ensemble& transformed);

}  // namespace ergodic
