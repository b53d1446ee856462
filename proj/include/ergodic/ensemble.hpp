#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "ergodic/dynamics.hpp"

namespace ergodic {

/// N trajectories on a shared time grid. Row i of `paths()` is path i,
/// column k is time `time_grid()[k]`. Immutable once built.
class Ensemble {
 public:
  /// Throws PreconditionError when the grid does not start at 0, is not
  /// strictly increasing, shapes disagree, or a value is non-finite.
  Ensemble(Eigen::VectorXd time_grid, Eigen::MatrixXd paths, double x0, std::uint64_t seed,
           std::uint64_t fingerprint, std::vector<bool> flagged = {});

  const Eigen::VectorXd& time_grid() const { return time_grid_; }
  const Eigen::MatrixXd& paths() const { return paths_; }
  auto path(Eigen::Index i) const { return paths_.row(i); }

  Eigen::Index n_paths() const { return paths_.rows(); }
  Eigen::Index n_times() const { return paths_.cols(); }
  double t_max() const { return time_grid_(time_grid_.size() - 1); }
  double x0() const { return x0_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  /// Path i left the domain at some step and was clipped back.
  bool flagged(Eigen::Index i) const { return flagged_[static_cast<std::size_t>(i)]; }
  const std::vector<bool>& flags() const { return flagged_; }
  Eigen::Index n_flagged() const;

  /// Column of time t; t must lie on the grid (relative tolerance 1e-9).
  /// Throws PreconditionError otherwise.
  Eigen::Index index_of(double t) const;

  /// Column nearest to t.
  Eigen::Index nearest_index(double t) const;

 private:
  Eigen::VectorXd time_grid_;
  Eigen::MatrixXd paths_;
  double x0_;
  std::uint64_t seed_;
  std::uint64_t fingerprint_;
  std::vector<bool> flagged_;
};

/// Discretisation and sampling budget for simulate_ito.
struct SimulationBudget {
  double dt = 1e-3;
  double t_max = 10.0;
  Eigen::Index n_paths = 1000;
  std::uint64_t seed = 1;
  /// Spacing of the stored grid; 0 stores every step. Must be a whole
  /// number of steps.
  double record_interval = 0.0;
  /// Worker threads; 0 uses the hardware concurrency. Results do not depend on it.
  unsigned workers = 0;
};

inline constexpr double kDomainClipOffset = 1e-9;

/// Euler-Maruyama: x_{k+1} = x_k + a(x_k) dt + b(x_k) sqrt(dt) Z, with Z drawn
/// from the counter stream keyed by (seed, path index). A step that leaves
/// the domain is clipped to boundary +/- 1e-9 and the path is flagged.
/// Throws PreconditionError on a bad budget or x0 outside the domain and
/// NumericError naming path and step if a value turns NaN.
Ensemble simulate_ito(const ItoDynamics& dyn, double x0, const SimulationBudget& budget);

/// x_{k+1} = x_k + delta or x_k * m with outcomes drawn i.i.d. per
/// step; unit time steps.
Ensemble simulate_discrete(const DiscreteDynamics& dyn, double x0, Eigen::Index n_steps,
                           Eigen::Index n_paths, std::uint64_t seed);

/// Deterministic ensemble: every path equals `values` on `time_grid`.
Ensemble deterministic_ensemble(const Eigen::VectorXd& time_grid, const Eigen::VectorXd& values,
                                Eigen::Index n_paths = 1);

/// Rows "path_id,t,x" after a header, shortest round-trip number formatting.
void write_csv(std::ostream& os, const Ensemble& ens);

/// Binary cache. `cache_path` names the file `<fingerprint hex>.ens` inside dir.
std::filesystem::path cache_path(const std::filesystem::path& dir, std::uint64_t fingerprint);
void write_cache(const std::filesystem::path& file, const Ensemble& ens);
Ensemble read_cache(const std::filesystem::path& file);

/// Fingerprint of a simulation request (spec text plus every budget field
/// that affects values).
std::uint64_t simulation_fingerprint(const ItoDynamics& dyn, double x0,
                                     const SimulationBudget& budget);

}  // namespace ergodic
