#include <cmath>
#include <numeric>

#include <doctest.h>

#include "ergodic/errors.hpp"
#include "ergodic/growth.hpp"
#include "ergodic/transform.hpp"

using namespace ergodic;

namespace {

Eigen::VectorXd grid(double t_max, Eigen::Index n) { return Eigen::VectorXd::LinSpaced(n, 0.0, t_max); }

const Ensemble& gbm_t10() {
  static const Ensemble ens = [] {
    SimulationBudget b;
    b.dt = 1e-3;
    b.t_max = 10.0;
    b.n_paths = 10000;
    b.record_interval = 0.5;
    // Log growth 0.05: Ito drift (0.05 + 0.2^2/2) x.
    return simulate_ito(build_ito("0.07*x", "0.2*x", Interval::positive()), 1.0, b);
  }();
  return ens;
}

DiagnosticBudget default_budget(std::uint64_t seed) {
  DiagnosticBudget b;
  b.seed = seed;
  return b;
}

}  // namespace

TEST_SUITE("growth") {

TEST_CASE("rate of change of single paths") {
  const Eigen::VectorXd g = grid(7.0, 8);
  const Ensemble constant = deterministic_ensemble(g, Eigen::VectorXd::Constant(8, 5.0));
  CHECK(rate_of_change(constant, 0, 7.0, TransformSpec::identity()) == 0.0);

  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(11, 0.0, 0.5).array().exp();
  const Ensemble expo = deterministic_ensemble(grid(10.0, 11), v);
  CHECK(rate_of_change(expo, 0, 10.0, TransformSpec::log()) == doctest::Approx(0.05).epsilon(1e-12));

  CHECK_THROWS_AS(rate_of_change(expo, 0, 0.0, TransformSpec::log()), PreconditionError);
  CHECK_THROWS_AS(sample_average_rate(expo, 0.0, TransformSpec::log()), PreconditionError);
}

TEST_CASE("single-shock GBM rate") {
  // x_t = e^{g t + sigma eps} with one terminal shock eps.
  const double g = 0.05, sigma = 0.2, eps = 0.7, t = 4.0;
  Eigen::VectorXd v(2);
  v << 1.0, std::exp(g * t + sigma * eps);
  const Ensemble ens = deterministic_ensemble(grid(t, 2), v);
  CHECK(rate_of_change(ens, 0, t, TransformSpec::identity()) ==
        doctest::Approx((std::exp(g * t + sigma * eps) - 1.0) / t));
  CHECK(rate_of_change(ens, 0, t, TransformSpec::log()) == doctest::Approx(g + sigma * eps / t));
}

TEST_CASE("sample average of two paths") {
  Eigen::MatrixXd p(2, 2);
  p << 0.0, 0.1, 0.0, 0.3;
  const Ensemble ens(grid(1.0, 2), p, 0.0, 0, 0);
  const auto r = sample_average_rate(ens, 1.0, TransformSpec::identity());
  CHECK(r.value == doctest::Approx(0.2));
  CHECK(r.n_used == 2);
}

TEST_CASE("flagged paths are excluded and all-flagged is an error") {
  Eigen::MatrixXd p(2, 2);
  p << 0.0, 0.1, 0.0, 0.3;
  const Ensemble one_flag(grid(1.0, 2), p, 0.0, 0, 0, {true, false});
  CHECK(sample_average_rate(one_flag, 1.0, TransformSpec::identity()).value == doctest::Approx(0.3));
  const Ensemble all_flag(grid(1.0, 2), p, 0.0, 0, 0, {true, true});
  CHECK_THROWS_AS(sample_average_rate(all_flag, 1.0, TransformSpec::identity()), PreconditionError);
}

TEST_CASE("GBM ensemble rates at t=10") {
  const Ensemble& ens = gbm_t10();
  const auto id = ensemble_rate(ens, 10.0, TransformSpec::identity());
  CHECK(std::abs(id.full.value - (std::exp(0.7) - 1.0) / 10.0) <= 3.0 * id.full.se);
  CHECK(id.n_converged);
  const auto lg = ensemble_rate(ens, 10.0, TransformSpec::log());
  CHECK(std::abs(lg.full.value - 0.05) <= 3.0 * lg.full.se);
  CHECK(lg.n_converged);
}

TEST_CASE("sample average is the mean of the per-path rates") {
  const Ensemble& ens = gbm_t10();
  for (const auto& f : {TransformSpec::identity(), TransformSpec::log(), TransformSpec::crra(0.5)}) {
    const Eigen::VectorXd r = finite_t_rates(ens, 7.5, f);
    const double mean = std::accumulate(r.data(), r.data() + r.size(), 0.0) / static_cast<double>(r.size());
    CHECK(sample_average_rate(ens, 7.5, f).value == mean);
  }
}

TEST_CASE("affine equivariance of every estimate") {
  const Ensemble& ens = gbm_t10();
  const TransformSpec f = TransformSpec::log();
  const TransformSpec g = f.then_affine(3.0, 7.0);
  const auto a = ergodicity_diagnostic(ens, f);
  const auto b = ergodicity_diagnostic(ens, g);
  CHECK(b.sample_avg.value == doctest::Approx(3.0 * a.sample_avg.value).epsilon(1e-12));
  CHECK(b.sample_avg.se == doctest::Approx(3.0 * a.sample_avg.se).epsilon(1e-10));
  CHECK(b.time_avg.value == doctest::Approx(3.0 * a.time_avg.value).epsilon(1e-12));
  CHECK(b.time_avg.se == doctest::Approx(3.0 * a.time_avg.se).epsilon(1e-10));
  CHECK(b.ensemble.full.value == doctest::Approx(3.0 * a.ensemble.full.value).epsilon(1e-12));
  CHECK(b.verdict == a.verdict);
}

TEST_CASE("time average of GBM under log converges to the log growth") {
  const auto dyn = build_ito("0.07*x", "0.2*x", Interval::positive());
  SimulationBudget b;
  b.dt = 1e-2;
  b.t_max = 100.0;
  b.n_paths = 2000;
  b.record_interval = 0.5;
  const Ensemble ens = simulate_ito(dyn, 1.0, b);
  const auto ta = time_average_rate(ens, TransformSpec::log());
  CHECK(ta.status == Convergence::converged);
  CHECK(std::abs(ta.value - 0.05) <= 2.0 * ta.se);
  CHECK(ta.checkpoints.size() >= static_cast<std::size_t>(kMinCheckpoints));

  const auto id = time_average_rate(ens, TransformSpec::identity());
  CHECK(id.status == Convergence::non_convergent);
}

TEST_CASE("time average of drifted Brownian motion is the drift") {
  const auto dyn = build_ito("1", "0.5", Interval::real_line());
  SimulationBudget b;
  b.dt = 1e-2;
  b.t_max = 100.0;
  b.n_paths = 2000;
  b.record_interval = 0.5;
  const auto ta = time_average_rate(simulate_ito(dyn, 0.0, b), TransformSpec::identity());
  CHECK(ta.status == Convergence::converged);
  CHECK(std::abs(ta.value - 1.0) <= 2.0 * ta.se);
}

TEST_CASE("diagnostic verdicts") {
  const auto gbm = build_ito("0.05*x", "0.2*x", Interval::positive());
  CHECK(ergodicity_diagnostic(gbm, 1.0, TransformSpec::log()).verdict == Verdict::ergodic);
  CHECK(ergodicity_diagnostic(gbm, 1.0, TransformSpec::identity()).verdict == Verdict::non_ergodic);
  const auto bm = build_ito("1", "0.5", Interval::real_line());
  CHECK(ergodicity_diagnostic(bm, 0.0, TransformSpec::identity()).verdict == Verdict::ergodic);

  DiagnosticBudget tiny;
  tiny.t_max = 0.05;
  tiny.dt = 0.01;
  tiny.n_paths = 3;
  const auto rep = ergodicity_diagnostic(gbm, 1.0, TransformSpec::log(), tiny);
  CHECK(rep.verdict == Verdict::inconclusive);
  CHECK(rep.time_avg.status == Convergence::insufficient_data);
}

TEST_CASE("discrete multiplicative gamble is ergodic under log only") {
  const DiscreteDynamics dyn(DiscreteDynamics::Mode::multiplicative, {1.5, 0.6}, {0.5, 0.5});
  CHECK(ergodicity_diagnostic(dyn, 1.0, TransformSpec::log(), 400, 2000, 5).verdict == Verdict::ergodic);
  CHECK(ergodicity_diagnostic(dyn, 1.0, TransformSpec::identity(), 400, 2000, 5).verdict ==
        Verdict::non_ergodic);
}

TEST_CASE("closed-form transforms give ERGODIC across 10 seeds at the default budget") {
  struct Case {
    const char* drift;
    const char* diffusion;
    Interval domain;
    double x0;
  };
  const Case cases[] = {
      {"0.05*x", "0.2*x", Interval::positive(), 1.0},
      {"1", "0.5", Interval::real_line(), 0.0},
      {"x^0.5 + 0.25", "x^0.5", Interval::positive(), 1.0},
  };
  for (const auto& c : cases) {
    const auto dyn = build_ito(c.drift, c.diffusion, c.domain);
    const TransformSpec f = derive_transform(dyn, c.x0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      CAPTURE(c.drift);
      CAPTURE(seed);
      const auto rep = ergodicity_diagnostic(dyn, c.x0, f, default_budget(seed));
      CHECK(to_string(rep.verdict) == "ERGODIC");
    }
  }
}

TEST_CASE("median standard error") {
  const auto [m, se] = median_with_se({1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(m == 3.0);
  CHECK(se > 0.0);
  const auto [m2, se2] = median_with_se({2.0});
  CHECK(m2 == 2.0);
  CHECK(se2 == 0.0);

  // A lattice with a heavy atom at the median still has a positive error.
  std::vector<double> lattice(1000, 0.0);
  for (std::size_t i = 0; i < lattice.size(); ++i) lattice[i] = i < 300 ? -1.0 : (i < 700 ? 0.0 : 1.0);
  const auto [m3, se3] = median_with_se(lattice);
  CHECK(m3 == 0.0);
  CHECK(se3 > 0.0);
}

}
