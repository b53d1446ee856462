#include "ergodic/transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ergodic/errors.hpp"
#include "ergodic/rng.hpp"

namespace ergodic {

namespace {

constexpr int kMinCheckPoints = 51;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> spaced(double lo, double hi, int n, bool log_spaced) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / (n - 1);
    out[static_cast<std::size_t>(i)] =
        log_spaced ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u;
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

double segment_integral(const ItoDynamics& dyn, double a, double b) {
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto inverse_b = [&](double u) { return 1.0 / dyn.diffusion_at(u); };
  double error = 0.0;
  double l1 = 0.0;
  // One 31-point panel is exact to rounding for smooth 1/b on a short
  // segment; fall back to adaptive bisection only when it is not. Boost's
  // estimate carries a rounding floor near 1e-11 relative, and repeated
  // bisection inflates that floor, so the adaptive pass gets a looser bar.
  double value = Rule::integrate(inverse_b, a, b, 0, 0.0, &error, &l1);
  if (std::isfinite(value) && error <= 1e-10 * l1) return value;
  value = Rule::integrate(inverse_b, a, b, 15, 1e-12, &error, &l1);
  if (!std::isfinite(value) || error > 1e-7 * l1) {
    std::ostringstream os;
    os << "derive_transform: quadrature did not converge on [" << a << ", " << b
       << "] (error estimate " << error << ")";
    throw NumericError(os.str());
  }
  return value;
}

}  // namespace

std::vector<double> default_check_grid(const Interval& domain, int points) {
  const bool lo_finite = std::isfinite(domain.lo);
  const bool hi_finite = std::isfinite(domain.hi);
  if (lo_finite && hi_finite) {
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
      g[static_cast<std::size_t>(i)] = domain.lo + (domain.hi - domain.lo) * (i + 1) / (points + 1);
    return g;
  }
  if (lo_finite) return spaced(domain.lo + 0.01, domain.lo + 100.0, points, domain.lo == 0.0);
  if (hi_finite) return spaced(domain.hi - 100.0, domain.hi - 0.01, points, false);
  return spaced(-100.0, 100.0, points, false);
}

ErgodizabilityCheck check_ergodizable(const ItoDynamics& dyn, std::span<const double> grid) {
  ErgodizabilityCheck out;
  std::vector<double> q;
  q.reserve(grid.size());
  std::size_t dropped = 0;
  for (double x : grid) {
    const double h = 1e-6 * std::max(std::abs(x), 1.0);
    if (!dyn.domain().contains(x - h) || !dyn.domain().contains(x + h)) {
      ++dropped;
      continue;
    }
    const double b = dyn.diffusion_at(x);
    const double db = (dyn.diffusion_at(x + h) - dyn.diffusion_at(x - h)) / (2.0 * h);
    q.push_back((dyn.drift_at(x) - 0.5 * b * db) / b);
    out.grid_used.push_back(x);
  }
  if (dropped > 0) {
    out.warnings.push_back("check_ergodizable: dropped " + std::to_string(dropped) +
                           " grid points whose difference stencil leaves the domain");
  }
  if (q.size() < static_cast<std::size_t>(kMinCheckPoints))
    throw PreconditionError("check_ergodizable: need at least 51 grid points inside the domain");

  const double m = median_of(q);
  double residual = 0.0;
  for (double v : q) residual = std::max(residual, std::abs(v - m));
  if (!std::isfinite(residual)) residual = std::numeric_limits<double>::infinity();
  out.alpha_over_beta = m;
  out.residual = residual;
  out.tolerance = kErgodizableTolRel * (1.0 + std::abs(m));
  out.admits = residual <= out.tolerance;
  return out;
}

ErgodizabilityCheck check_ergodizable(const ItoDynamics& dyn) {
  const auto grid = default_check_grid(dyn.domain());
  return check_ergodizable(dyn, grid);
}

TableRange default_table_range(const ItoDynamics& dyn, double x_ref) {
  const auto& d = dyn.domain();
  const auto kind = dyn.family().kind;
  const bool positive = d.lo >= 0.0 && x_ref > 0.0;
  TableRange r;
  r.log_spaced = positive && kind != FamilyHint::Kind::additive;
  if (r.log_spaced) {
    r.lo = std::max(x_ref * 1e-3, d.lo + kDomainClipOffset);
    r.hi = std::min(x_ref * 1e3, d.hi - kDomainClipOffset);
  } else {
    r.lo = std::max(x_ref - 100.0, d.lo + kDomainClipOffset);
    r.hi = std::min(x_ref + 100.0, d.hi - kDomainClipOffset);
  }
  return r;
}

TransformSpec derive_transform(const ItoDynamics& dyn, double x_ref) {
  return derive_transform(dyn, x_ref, default_table_range(dyn, x_ref));
}

TransformSpec derive_transform(const ItoDynamics& dyn, double x_ref, const TableRange& range) {
  if (!dyn.domain().contains(x_ref))
    throw PreconditionError("derive_transform: x_ref lies outside the domain");
  const auto check = check_ergodizable(dyn);
  if (!check.admits) {
    std::ostringstream os;
    os << "derive_transform: dynamic admits no ergodic transformation (residual "
       << check.residual << " > tolerance " << check.tolerance << ")";
    throw DomainRefusal(os.str());
  }
  if (!(range.lo < range.hi) || range.nodes < 4 || (range.log_spaced && !(range.lo > 0.0)))
    throw PreconditionError("derive_transform: invalid table range");

  const std::vector<double> nodes = spaced(range.lo, range.hi, range.nodes, range.log_spaced);
  std::vector<double> values(nodes.size());
  const auto above = static_cast<std::size_t>(
      std::lower_bound(nodes.begin(), nodes.end(), x_ref) - nodes.begin());
  double acc = 0.0;
  double from = x_ref;
  for (std::size_t k = above; k < nodes.size(); ++k) {
    acc += from == nodes[k] ? 0.0 : segment_integral(dyn, from, nodes[k]);
    values[k] = acc;
    from = nodes[k];
  }
  acc = 0.0;
  from = x_ref;
  for (std::size_t k = above; k-- > 0;) {
    acc -= segment_integral(dyn, nodes[k], from);
    values[k] = acc;
    from = nodes[k];
  }

  const FamilyHint fam = dyn.family();
  TransformSpec f = TransformSpec::identity();
  switch (fam.kind) {
    case FamilyHint::Kind::additive:
      f = TransformSpec::affine(1.0 / fam.scale, -x_ref / fam.scale);
      break;
    case FamilyHint::Kind::multiplicative:
      f = TransformSpec::log(1.0 / fam.scale, -std::log(x_ref) / fam.scale);
      break;
    case FamilyHint::Kind::power: {
      const double s = 1.0 / fam.scale;
      f = TransformSpec::crra(fam.gamma, s, -s * std::pow(x_ref, 1.0 - fam.gamma) / (1.0 - fam.gamma));
      break;
    }
    case FamilyHint::Kind::custom:
      break;
  }
  if (fam.kind == FamilyHint::Kind::custom) {
    f = TransformSpec::numeric(nodes, values, dyn.domain());
  } else {
    f = f.with_table(nodes, values, dyn.domain());
  }
  f.alpha = check.alpha_over_beta;
  f.beta = 1.0;
  f.x_ref = x_ref;
  return f;
}

Ensemble apply_transform(const TransformSpec& f, const Ensemble& ens,
                         std::vector<std::string>* warnings) {
  if (f.form() == TransformSpec::Form::identity) return ens;
  const Eigen::MatrixXd& x = ens.paths();
  Eigen::MatrixXd y(x.rows(), x.cols());
  Eigen::Index outside_table = 0;
  const bool tabled = f.form() == TransformSpec::Form::numeric_table;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, k);
      if (!f.in_domain(v)) {
        std::ostringstream os;
        os << "apply_transform: value " << v << " on path " << i << " at step " << k
           << " is below the domain infimum " << f.domain_infimum() << " of " << f.id();
        throw NumericError(os.str());
      }
      if (tabled && !f.table_covers(v)) ++outside_table;
      y(i, k) = f(v);
    }
  }
  if (outside_table > 0 && warnings) {
    warnings->push_back("apply_transform: " + std::to_string(outside_table) +
                        " values fell outside the quadrature table and were extended linearly");
  }
  const std::uint64_t fp = fnv1a(f.id(), ens.fingerprint());
  return Ensemble(ens.time_grid(), std::move(y), f(ens.x0()), ens.seed(), fp, ens.flags());
}

LevyReport verify_levy(const Ensemble& ens) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < ens.n_paths(); ++i)
    if (!ens.flagged(i)) rows.push_back(i);
  const Eigen::Index steps = ens.n_times() - 1;
  if (rows.size() < 100 || steps < 100)
    throw PreconditionError("verify_levy: insufficient data (need >= 100 unflagged paths and >= 100 steps)");

  const Eigen::VectorXd& grid = ens.time_grid();
  const double dt = grid(1) - grid(0);
  for (Eigen::Index k = 1; k <= steps; ++k)
    if (std::abs((grid(k) - grid(k - 1)) - dt) > 1e-9 * dt)
      throw PreconditionError("verify_levy: time grid must be uniform");

  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd inc(n_rows, steps);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const auto p = ens.path(rows[static_cast<std::size_t>(r)]);
    inc.row(r) = p.tail(steps) - p.head(steps);
  }

  LevyReport rep;
  for (int w = 0; w < kLevyWindows; ++w) {
    const Eigen::Index c0 = steps * w / kLevyWindows;
    const Eigen::Index c1 = steps * (w + 1) / kLevyWindows;
    const auto block = inc.middleCols(c0, c1 - c0);
    const auto n = static_cast<double>(block.size());
    const double mean = block.mean();
    const Eigen::ArrayXXd centred = block.array() - mean;
    const double var = centred.square().sum() / (n - 1.0);
    const double m4 = centred.square().square().sum() / n;
    rep.windows.push_back({grid(c0), grid(c1), mean, std::sqrt(var / n), var,
                           std::sqrt(std::max(m4 - var * var, 0.0) / n), block.size()});
  }
  rep.stationary = true;
  for (std::size_t a = 0; a < rep.windows.size(); ++a) {
    for (std::size_t b = a + 1; b < rep.windows.size(); ++b) {
      const auto& u = rep.windows[a];
      const auto& v = rep.windows[b];
      if (std::abs(u.mean - v.mean) > kLevyTolSe * std::hypot(u.mean_se, v.mean_se) ||
          std::abs(u.variance - v.variance) > kLevyTolSe * std::hypot(u.variance_se, v.variance_se))
        rep.stationary = false;
    }
  }

  const auto n_all = static_cast<double>(inc.size());
  const double mu = inc.mean();
  const Eigen::ArrayXXd c = inc.array() - mu;
  const double denom = c.square().sum();
  const double numer = (c.leftCols(steps - 1) * c.rightCols(steps - 1)).sum();
  const auto n_pairs = static_cast<double>(n_rows * (steps - 1));
  rep.lag1_autocorrelation = denom > 0.0 ? numer / denom : 0.0;
  rep.autocorrelation_bound = kLevyTolSe / std::sqrt(n_pairs);
  rep.independent = std::abs(rep.lag1_autocorrelation) <= rep.autocorrelation_bound;

  const double var_all = denom / (n_all - 1.0);
  rep.drift_hat = mu / dt;
  rep.drift_se = std::sqrt(var_all / n_all) / dt;
  rep.vol_hat = std::sqrt(var_all / dt);
  rep.n_samples = inc.size();
  return rep;
}

}  // namespace ergodic
