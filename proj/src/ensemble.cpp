#include "ergodic/ensemble.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <boost/random/normal_distribution.hpp>

#include "ergodic/errors.hpp"
#include "ergodic/rng.hpp"

namespace ergodic {

namespace {

constexpr std::size_t kBlock = 64;
constexpr char kCacheMagic[8] = {'E', 'R', 'G', 'E', 'N', 'S', '0', '1'};

std::string shortest(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

Eigen::Index whole_steps(double span, double dt, const char* what) {
  const double ratio = span / dt;
  const auto n = static_cast<Eigen::Index>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-6)
    throw PreconditionError(std::string(what) + " must be a positive whole number of steps dt");
  return n;
}

// Runs fn(first, last) over [0, n) split into kBlock-aligned chunks.
template <typename Fn>
void parallel_blocks(Eigen::Index n, unsigned workers, Fn&& fn) {
  const auto n_blocks = static_cast<unsigned>((n + kBlock - 1) / kBlock);
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max(1U, n_blocks));
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](unsigned w) {
    try {
      for (unsigned b = w; b < n_blocks; b += workers) {
        const Eigen::Index first = static_cast<Eigen::Index>(b) * kBlock;
        fn(first, std::min<Eigen::Index>(n, first + kBlock));
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("ensemble cache: truncated file");
  return v;
}

}  // namespace

Ensemble::Ensemble(Eigen::VectorXd time_grid, Eigen::MatrixXd paths, double x0,
                   std::uint64_t seed, std::uint64_t fingerprint, std::vector<bool> flagged)
    : time_grid_(std::move(time_grid)),
      paths_(std::move(paths)),
      x0_(x0),
      seed_(seed),
      fingerprint_(fingerprint),
      flagged_(std::move(flagged)) {
  if (time_grid_.size() < 1 || time_grid_(0) != 0.0)
    throw PreconditionError("ensemble: time grid must start at t=0");
  for (Eigen::Index k = 1; k < time_grid_.size(); ++k)
    if (!(time_grid_(k) > time_grid_(k - 1)))
      throw PreconditionError("ensemble: time grid must be strictly increasing");
  if (paths_.cols() != time_grid_.size() || paths_.rows() < 1)
    throw PreconditionError("ensemble: paths shape does not match the time grid");
  if (!paths_.allFinite()) throw PreconditionError("ensemble: non-finite wealth value");
  if (flagged_.empty()) flagged_.assign(static_cast<std::size_t>(paths_.rows()), false);
  if (flagged_.size() != static_cast<std::size_t>(paths_.rows()))
    throw PreconditionError("ensemble: flag count does not match path count");
}

Eigen::Index Ensemble::n_flagged() const {
  return static_cast<Eigen::Index>(std::count(flagged_.begin(), flagged_.end(), true));
}

Eigen::Index Ensemble::nearest_index(double t) const {
  const double* begin = time_grid_.data();
  const double* end = begin + time_grid_.size();
  const double* it = std::lower_bound(begin, end, t);
  if (it == end) return time_grid_.size() - 1;
  if (it != begin && (t - *(it - 1)) < (*it - t)) --it;
  return it - begin;
}

Eigen::Index Ensemble::index_of(double t) const {
  const Eigen::Index k = nearest_index(t);
  if (std::abs(time_grid_(k) - t) > 1e-9 * std::max(1.0, std::abs(t))) {
    std::ostringstream os;
    os << "time " << t << " is not on the ensemble grid";
    throw PreconditionError(os.str());
  }
  return k;
}

std::uint64_t simulation_fingerprint(const ItoDynamics& dyn, double x0,
                                     const SimulationBudget& budget) {
  std::ostringstream os;
  os.precision(17);
  os << dyn.canonical() << "|x0=" << x0 << "|dt=" << budget.dt << "|t_max=" << budget.t_max
     << "|n=" << budget.n_paths << "|seed=" << budget.seed << "|rec=" << budget.record_interval;
  return fnv1a(os.str());
}

Ensemble simulate_ito(const ItoDynamics& dyn, double x0, const SimulationBudget& budget) {
  if (!(budget.dt > 0.0)) throw PreconditionError("simulate_ito: dt must be positive");
  if (!(budget.t_max >= budget.dt)) throw PreconditionError("simulate_ito: t_max must be >= dt");
  if (budget.n_paths < 1) throw PreconditionError("simulate_ito: n_paths must be >= 1");
  if (!dyn.domain().contains(x0)) throw PreconditionError("simulate_ito: x0 outside the domain");

  const Eigen::Index n_steps = whole_steps(budget.t_max, budget.dt, "t_max");
  const Eigen::Index stride =
      budget.record_interval > 0.0 ? whole_steps(budget.record_interval, budget.dt, "record_interval")
                                   : 1;
  if (n_steps % stride != 0)
    throw PreconditionError("simulate_ito: t_max must be a whole number of record intervals");
  const Eigen::Index n_rec = n_steps / stride + 1;

  Eigen::VectorXd grid(n_rec);
  for (Eigen::Index k = 0; k < n_rec; ++k)
    grid(k) = static_cast<double>(k * stride) * budget.dt;

  Eigen::MatrixXd paths(budget.n_paths, n_rec);
  std::vector<char> flags(static_cast<std::size_t>(budget.n_paths), 0);
  const double dt = budget.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double lo = dyn.domain().lo;
  const double hi = dyn.domain().hi;

  parallel_blocks(budget.n_paths, budget.workers, [&](Eigen::Index first, Eigen::Index last) {
    const auto m = static_cast<std::size_t>(last - first);
    std::array<double, kBlock> x{};
    std::array<double, kBlock> a{};
    std::array<double, kBlock> b{};
    std::vector<CounterStream> streams;
    streams.reserve(m);
    for (std::size_t i = 0; i < m; ++i)
      streams.emplace_back(budget.seed, static_cast<std::uint64_t>(first) + i);
    boost::random::normal_distribution<double> normal;
    std::fill_n(x.begin(), m, x0);
    for (std::size_t i = 0; i < m; ++i) paths(first + static_cast<Eigen::Index>(i), 0) = x0;
    const std::span<const double> xs(x.data(), m);

    for (Eigen::Index s = 1; s <= n_steps; ++s) {
      dyn.drift().evaluate(xs, std::span<double>(a.data(), m));
      dyn.diffusion().evaluate(xs, std::span<double>(b.data(), m));
      for (std::size_t i = 0; i < m; ++i) {
        double next = x[i] + a[i] * dt + b[i] * sqrt_dt * normal(streams[i]);
        if (!std::isfinite(next)) {
          std::ostringstream os;
          os << "simulate_ito: non-finite wealth on path " << (first + static_cast<Eigen::Index>(i))
             << " at step " << s << " (t=" << static_cast<double>(s) * dt << ")";
          throw NumericError(os.str());
        }
        if (next <= lo) {
          next = lo + kDomainClipOffset;
          flags[static_cast<std::size_t>(first) + i] = 1;
        } else if (next >= hi) {
          next = hi - kDomainClipOffset;
          flags[static_cast<std::size_t>(first) + i] = 1;
        }
        x[i] = next;
      }
      if (s % stride == 0) {
        const Eigen::Index col = s / stride;
        for (std::size_t i = 0; i < m; ++i) paths(first + static_cast<Eigen::Index>(i), col) = x[i];
      }
    }
  });

  return Ensemble(std::move(grid), std::move(paths), x0, budget.seed,
                  simulation_fingerprint(dyn, x0, budget),
                  std::vector<bool>(flags.begin(), flags.end()));
}

Ensemble simulate_discrete(const DiscreteDynamics& dyn, double x0, Eigen::Index n_steps,
                           Eigen::Index n_paths, std::uint64_t seed) {
  if (n_steps < 1) throw PreconditionError("simulate_discrete: n_steps must be >= 1");
  if (n_paths < 1) throw PreconditionError("simulate_discrete: n_paths must be >= 1");
  if (dyn.mode() == DiscreteDynamics::Mode::multiplicative && !(x0 > 0.0))
    throw PreconditionError("simulate_discrete: multiplicative mode requires x0 > 0");

  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(n_steps + 1, 0.0, static_cast<double>(n_steps));
  Eigen::MatrixXd paths(n_paths, n_steps + 1);
  for (Eigen::Index i = 0; i < n_paths; ++i) {
    CounterStream stream(seed, static_cast<std::uint64_t>(i));
    std::discrete_distribution<std::size_t> pick(dyn.probabilities().begin(),
                                                 dyn.probabilities().end());
    double x = x0;
    paths(i, 0) = x;
    for (Eigen::Index s = 1; s <= n_steps; ++s) {
      x = dyn.apply(x, pick(stream));
      paths(i, s) = x;
    }
  }
  std::ostringstream os;
  os.precision(17);
  os << dyn.canonical() << "|x0=" << x0 << "|steps=" << n_steps << "|n=" << n_paths
     << "|seed=" << seed;
  return Ensemble(std::move(grid), std::move(paths), x0, seed, fnv1a(os.str()));
}

Ensemble deterministic_ensemble(const Eigen::VectorXd& time_grid, const Eigen::VectorXd& values,
                                Eigen::Index n_paths) {
  if (values.size() != time_grid.size())
    throw PreconditionError("deterministic_ensemble: values and grid differ in length");
  Eigen::MatrixXd paths = values.transpose().replicate(n_paths, 1);
  std::ostringstream os;
  os.precision(17);
  os << "deterministic|";
  for (Eigen::Index k = 0; k < values.size(); ++k) os << time_grid(k) << ":" << values(k) << ";";
  return Ensemble(time_grid, std::move(paths), values(0), 0, fnv1a(os.str()));
}

void write_csv(std::ostream& os, const Ensemble& ens) {
  os << "path_id,t,x\n";
  std::vector<std::string> times;
  times.reserve(static_cast<std::size_t>(ens.n_times()));
  for (Eigen::Index k = 0; k < ens.n_times(); ++k) times.push_back(shortest(ens.time_grid()(k)));
  for (Eigen::Index i = 0; i < ens.n_paths(); ++i) {
    for (Eigen::Index k = 0; k < ens.n_times(); ++k)
      os << i << ',' << times[static_cast<std::size_t>(k)] << ',' << shortest(ens.paths()(i, k))
         << '\n';
  }
}

std::filesystem::path cache_path(const std::filesystem::path& dir, std::uint64_t fingerprint) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fingerprint << ".ens";
  return dir / os.str();
}

void write_cache(const std::filesystem::path& file, const Ensemble& ens) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ConfigError("ensemble cache: cannot open " + file.string());
  os.write(kCacheMagic, sizeof kCacheMagic);
  put(os, ens.fingerprint());
  put(os, ens.seed());
  put(os, ens.x0());
  put(os, static_cast<std::int64_t>(ens.n_paths()));
  put(os, static_cast<std::int64_t>(ens.n_times()));
  os.write(reinterpret_cast<const char*>(ens.time_grid().data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(ens.n_times())));
  for (bool f : ens.flags()) put(os, static_cast<std::uint8_t>(f ? 1 : 0));
  os.write(reinterpret_cast<const char*>(ens.paths().data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(ens.paths().size())));
}

Ensemble read_cache(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw ConfigError("ensemble cache: cannot open " + file.string());
  char magic[sizeof kCacheMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kCacheMagic, sizeof magic) != 0)
    throw ConfigError("ensemble cache: bad magic in " + file.string());
  const auto fingerprint = get<std::uint64_t>(is);
  const auto seed = get<std::uint64_t>(is);
  const auto x0 = get<double>(is);
  const auto rows = get<std::int64_t>(is);
  const auto cols = get<std::int64_t>(is);
  if (rows < 1 || cols < 1) throw ConfigError("ensemble cache: bad dimensions");
  Eigen::VectorXd grid(cols);
  is.read(reinterpret_cast<char*>(grid.data()), static_cast<std::streamsize>(sizeof(double) * cols));
  std::vector<bool> flags(static_cast<std::size_t>(rows));
  for (std::int64_t i = 0; i < rows; ++i) flags[static_cast<std::size_t>(i)] = get<std::uint8_t>(is) != 0;
  Eigen::MatrixXd paths(rows, cols);
  is.read(reinterpret_cast<char*>(paths.data()),
          static_cast<std::streamsize>(sizeof(double) * rows * cols));
  if (!is) throw ConfigError("ensemble cache: truncated file");
  return Ensemble(std::move(grid), std::move(paths), x0, seed, fingerprint, std::move(flags));
}

}  // namespace ergodic
