#include "ergodic/gamble_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/random/uniform_int_distribution.hpp>

#include "ergodic/errors.hpp"
#include "ergodic/rng.hpp"

namespace ergodic {

namespace {

// Stream indices under the game seed.
constexpr std::uint64_t kTrialStream = 0;
constexpr std::uint64_t kCoinStream = 1;
constexpr std::uint64_t kSettlementStream = 2;
constexpr std::uint64_t kPassiveStream = 3;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Gamble pair_from_index(int index, int n) {
  int a = 0;
  int row = n - 1;
  while (index >= row) {
    index -= row;
    ++a;
    --row;
  }
  return {a, a + 1 + index};
}

std::string short_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double log_cosh(double y) {
  y = std::abs(y);
  return y + std::log1p(std::exp(-2.0 * y)) - std::log(2.0);
}

const Gamble& chosen(const Trial& t, Choice c) { return c == Choice::left ? t.left : t.right; }

double subtree_value(std::span<const Trial> trials, const GameConfig& cfg, double wealth, int depth,
                     int horizon, const Utility& u) {
  if (depth == horizon) return u(wealth);
  const Trial& t = trials[static_cast<std::size_t>(depth)];
  double v[2];
  for (int c = 0; c < 2; ++c) {
    const Gamble& g = c == 0 ? t.left : t.right;
    v[c] = 0.5 * (subtree_value(trials, cfg, apply_effect(cfg, wealth, g.first), depth + 1, horizon, u) +
                  subtree_value(trials, cfg, apply_effect(cfg, wealth, g.second), depth + 1, horizon, u));
  }
  return break_ties(t, v[0], v[1]) == Choice::left ? v[0] : v[1];
}

void fill_plan(std::span<const Trial> trials, const GameConfig& cfg, double wealth, int depth,
               int horizon, std::uint32_t history, const Utility& u, InductionPlan& out) {
  if (depth == horizon) return;
  const Trial& t = trials[static_cast<std::size_t>(depth)];
  double v[2];
  for (int c = 0; c < 2; ++c) {
    const Gamble& g = c == 0 ? t.left : t.right;
    v[c] = 0.5 * (subtree_value(trials, cfg, apply_effect(cfg, wealth, g.first), depth + 1, horizon, u) +
                  subtree_value(trials, cfg, apply_effect(cfg, wealth, g.second), depth + 1, horizon, u));
  }
  const Choice c = break_ties(t, v[0], v[1]);
  out.plan[static_cast<std::size_t>(depth)][history] = c;
  if (depth == 0) {
    out.root = c;
    out.value = c == Choice::left ? v[0] : v[1];
  }
  const Gamble& g = chosen(t, c);
  fill_plan(trials, cfg, apply_effect(cfg, wealth, g.first), depth + 1, horizon, history, u, out);
  fill_plan(trials, cfg, apply_effect(cfg, wealth, g.second), depth + 1, horizon,
            history | (1u << depth), u, out);
}

void check_horizon(std::span<const Trial> trials, int horizon) {
  if (horizon < 1 || horizon > kMaxHorizon)
    throw PreconditionError("backward induction: horizon must lie in [1, 12], got " + std::to_string(horizon));
  if (trials.size() < static_cast<std::size_t>(horizon))
    throw PreconditionError("backward induction: fewer known trials than the horizon");
}

}  // namespace

std::string to_string(GameMode mode) {
  return mode == GameMode::additive ? "additive" : "multiplicative";
}

std::string to_string(Choice c) { return c == Choice::left ? "left" : "right"; }

std::vector<double> GameConfig::default_effects(GameMode mode, int n_images) {
  std::vector<double> e(static_cast<std::size_t>(n_images));
  for (int i = 0; i < n_images; ++i) {
    const double u = n_images > 1 ? static_cast<double>(i) / (n_images - 1) : 0.5;
    e[static_cast<std::size_t>(i)] = mode == GameMode::additive
                                         ? -428.0 + 856.0 * u
                                         : std::exp(std::log(0.447) + (std::log(2.236) - std::log(0.447)) * u);
  }
  return e;
}

GameConfig GameConfig::defaults(GameMode mode) {
  GameConfig cfg;
  cfg.mode = mode;
  cfg.image_effects = default_effects(mode);
  return cfg;
}

void GameConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("ce." + field + ": " + why);
  };
  if (n_images < 4) fail("n_images", "need at least 4 images to form two different gambles");
  if (images_per_game < 1 || images_per_game > n_images)
    fail("images_per_game", "must lie in [1, n_images]");
  if (passive_repetitions < 0) fail("passive_repetitions", "must be nonnegative");
  if (n_trials < 1) fail("n_trials", "must be positive");
  if (settlement_draws < 0 || settlement_draws > n_trials)
    fail("settlement_draws", "must lie in [0, n_trials]");
  if (image_effects.size() != static_cast<std::size_t>(n_images))
    fail("image_effects", "expected " + std::to_string(n_images) + " entries, got " +
                              std::to_string(image_effects.size()));
  for (double e : image_effects) {
    if (!std::isfinite(e)) fail("image_effects", "entries must be finite");
    if (mode == GameMode::multiplicative && !(e > 0.0))
      fail("image_effects", "multiplicative factors must be positive");
  }
  if (!std::isfinite(initial_endowment)) fail("initial_endowment", "must be finite");
  if (mode == GameMode::multiplicative && !(initial_endowment > 0.0))
    fail("initial_endowment", "must be positive in the multiplicative game");
}

std::vector<Trial> generate_trials(const GameConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_images;
  const int pairs = n * (n - 1) / 2;
  CounterStream gen(cfg.seed, kTrialStream);
  boost::random::uniform_int_distribution<int> first_pick(0, pairs - 1);
  boost::random::uniform_int_distribution<int> second_pick(0, pairs - 2);
  std::vector<Trial> trials;
  trials.reserve(static_cast<std::size_t>(cfg.n_trials));
  for (int id = 0; id < cfg.n_trials; ++id) {
    const int a = first_pick(gen);
    int b = second_pick(gen);
    if (b >= a) ++b;
    trials.push_back({id, pair_from_index(a, n), pair_from_index(b, n)});
  }
  return trials;
}

double apply_effect(const GameConfig& cfg, double wealth, int image) {
  const double e = cfg.image_effects[static_cast<std::size_t>(image)];
  return cfg.mode == GameMode::additive ? wealth + e : wealth * e;
}

Choice break_ties(const Trial& t, double left_score, double right_score) {
  // An infinite score (log or sqrt of ruin) would make the relative band infinite.
  const bool finite = std::isfinite(left_score) && std::isfinite(right_score);
  const bool tie =
      left_score == right_score ||
      (finite && std::abs(left_score - right_score) <=
                     1e-12 * (1.0 + std::max(std::abs(left_score), std::abs(right_score))));
  if (!tie) return left_score > right_score ? Choice::left : Choice::right;
  const auto l = std::pair(t.left.first, t.left.second);
  const auto r = std::pair(t.right.first, t.right.second);
  return r < l ? Choice::right : Choice::left;
}

Choice decide_ergodicity(const Trial& t, const GameConfig& cfg, double wealth) {
  (void)wealth;
  auto score = [&](const Gamble& g) {
    const double e1 = cfg.image_effects[static_cast<std::size_t>(g.first)];
    const double e2 = cfg.image_effects[static_cast<std::size_t>(g.second)];
    return cfg.mode == GameMode::additive ? 0.5 * (e1 + e2) : 0.5 * (std::log(e1) + std::log(e2));
  };
  return break_ties(t, score(t.left), score(t.right));
}

Choice decide_static_exponential(const Trial& t, const GameConfig& cfg, double wealth, double lambda) {
  if (!(lambda > 0.0)) throw PreconditionError("static exponential agent: lambda must be positive");
  // E[-exp(-l z)] = -exp(-l mean) cosh(l half_spread), so ranking by
  // l mean - ln cosh(l half_spread) is equivalent and overflow free.
  auto score = [&](const Gamble& g) {
    const double z1 = apply_effect(cfg, wealth, g.first);
    const double z2 = apply_effect(cfg, wealth, g.second);
    return lambda * 0.5 * (z1 + z2) - log_cosh(lambda * 0.5 * (z1 - z2));
  };
  return break_ties(t, score(t.left), score(t.right));
}

Choice decide_expected_wealth(const Trial& t, const GameConfig& cfg, double wealth) {
  auto score = [&](const Gamble& g) {
    return 0.5 * (apply_effect(cfg, wealth, g.first) + apply_effect(cfg, wealth, g.second));
  };
  return break_ties(t, score(t.left), score(t.right));
}

double Utility::operator()(double w) const {
  switch (kind) {
    case Kind::identity: return w;
    case Kind::log: return w > 0.0 ? std::log(w) : kNegInf;
    case Kind::sqrt: return w >= 0.0 ? std::sqrt(w) : kNegInf;
    case Kind::neg_exponential: return -std::exp(-lambda * w);
  }
  return w;
}

std::string Utility::id() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::log: return "log";
    case Kind::sqrt: return "sqrt";
    case Kind::neg_exponential: return "neg_exponential(" + short_num(lambda) + ")";
  }
  return "";
}

InductionPlan decide_backward_induction(std::span<const Trial> trials, const GameConfig& cfg,
                                        double wealth, int horizon, const Utility& u) {
  check_horizon(trials, horizon);
  InductionPlan out;
  out.plan.resize(static_cast<std::size_t>(horizon));
  for (int d = 0; d < horizon; ++d) out.plan[static_cast<std::size_t>(d)].assign(std::size_t{1} << d, Choice::left);
  fill_plan(trials, cfg, wealth, 0, horizon, 0u, u, out);
  return out;
}

OpenLoopPlan decide_terminal_resolution(std::span<const Trial> trials, const GameConfig& cfg,
                                        double wealth, int horizon, const Utility& u) {
  check_horizon(trials, horizon);
  const std::uint32_t n_plans = 1u << horizon;
  OpenLoopPlan best;
  best.value = kNegInf;
  for (std::uint32_t mask = 0; mask < n_plans; ++mask) {
    double total = 0.0;
    for (std::uint32_t coins = 0; coins < n_plans; ++coins) {
      double w = wealth;
      for (int d = 0; d < horizon; ++d) {
        const Trial& t = trials[static_cast<std::size_t>(d)];
        const Gamble& g = (mask >> d) & 1u ? t.right : t.left;
        w = apply_effect(cfg, w, (coins >> d) & 1u ? g.second : g.first);
      }
      total += u(w);
    }
    const double value = total / n_plans;
    const bool better = best.choices.empty() ||
                        (value > best.value &&
                         (!std::isfinite(best.value) ||
                          value - best.value > 1e-12 * (1.0 + std::max(std::abs(value), std::abs(best.value)))));
    if (better) {
      best.value = value;
      best.choices.clear();
      for (int d = 0; d < horizon; ++d)
        best.choices.push_back((mask >> d) & 1u ? Choice::right : Choice::left);
    }
  }
  return best;
}

AgentSpec AgentSpec::static_exponential(double lambda) {
  AgentSpec a;
  a.kind = Kind::static_exponential;
  a.lambda = lambda;
  return a;
}

AgentSpec AgentSpec::expected_wealth() {
  AgentSpec a;
  a.kind = Kind::expected_wealth;
  return a;
}

AgentSpec AgentSpec::backward_induction(int horizon, Utility u) {
  AgentSpec a;
  a.kind = Kind::backward_induction;
  a.horizon = horizon;
  a.utility = u;
  return a;
}

void AgentSpec::validate() const {
  if (kind == Kind::static_exponential && !(lambda > 0.0))
    throw ConfigError("agent.lambda: must be positive for a static exponential agent");
  if (kind == Kind::backward_induction && (horizon < 1 || horizon > kMaxHorizon))
    throw ConfigError("agent.horizon: must lie in [1, 12], got " + std::to_string(horizon));
}

std::string AgentSpec::label() const {
  switch (kind) {
    case Kind::ergodicity: return "ergodicity";
    case Kind::static_exponential: return "static_exponential(" + short_num(lambda) + ")";
    case Kind::expected_wealth: return "expected_wealth";
    case Kind::backward_induction:
      return "backward_induction(" + std::to_string(horizon) + ":" + utility.id() + ")";
  }
  return "";
}

GameResult run_game(const GameConfig& cfg, const std::vector<AgentSpec>& agents) {
  cfg.validate();
  for (const auto& a : agents) a.validate();

  GameResult res;
  res.config = cfg;
  res.agents = agents;
  res.trials = generate_trials(cfg);
  const auto n_trials = static_cast<std::size_t>(cfg.n_trials);

  {
    CounterStream gen(cfg.seed, kPassiveStream);
    std::vector<int> images(static_cast<std::size_t>(cfg.n_images));
    std::iota(images.begin(), images.end(), 0);
    for (int i = 0; i < cfg.images_per_game; ++i) {
      boost::random::uniform_int_distribution<int> pick(i, cfg.n_images - 1);
      std::swap(images[static_cast<std::size_t>(i)], images[static_cast<std::size_t>(pick(gen))]);
    }
    for (int r = 0; r < cfg.passive_repetitions; ++r)
      res.passive_sequence.insert(res.passive_sequence.end(), images.begin(),
                                  images.begin() + cfg.images_per_game);
  }
  {
    CounterStream gen(cfg.seed, kCoinStream);
    for (std::size_t i = 0; i < n_trials; ++i) res.coin.push_back(static_cast<int>(gen() >> 63));
  }
  {
    CounterStream gen(cfg.seed, kSettlementStream);
    std::vector<int> idx(n_trials);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < cfg.settlement_draws; ++i) {
      boost::random::uniform_int_distribution<int> pick(i, cfg.n_trials - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(gen))]);
    }
    res.settlement_trials.assign(idx.begin(), idx.begin() + cfg.settlement_draws);
  }

  auto step = [&](double w, int image, bool& floored) {
    w = apply_effect(cfg, w, image);
    if (cfg.mode == GameMode::multiplicative && w < kWealthFloor) {
      w = kWealthFloor;
      floored = true;
    }
    return w;
  };

  for (const auto& agent : agents) {
    AgentOutcome out;
    double wealth = cfg.initial_endowment;
    for (std::size_t i = 0; i < n_trials; ++i) {
      const Trial& t = res.trials[i];
      Choice c = Choice::left;
      switch (agent.kind) {
        case AgentSpec::Kind::ergodicity: c = decide_ergodicity(t, cfg, wealth); break;
        case AgentSpec::Kind::static_exponential:
          c = decide_static_exponential(t, cfg, wealth, agent.lambda);
          break;
        case AgentSpec::Kind::expected_wealth: c = decide_expected_wealth(t, cfg, wealth); break;
        case AgentSpec::Kind::backward_induction: {
          const int h = std::min<int>(agent.horizon, static_cast<int>(n_trials - i));
          c = decide_backward_induction(std::span(res.trials).subspan(i), cfg, wealth, h, agent.utility).root;
          break;
        }
      }
      const Gamble& g = chosen(t, c);
      const int image = res.coin[i] ? g.second : g.first;
      out.choices.push_back(c);
      out.assigned.push_back(image);
      if (cfg.update_per_trial) wealth = step(wealth, image, out.floored);
      out.wealth_after.push_back(wealth);
    }
    double terminal = cfg.initial_endowment;
    for (int idx : res.settlement_trials) {
      const int image = out.assigned[static_cast<std::size_t>(idx)];
      out.settled_images.push_back(image);
      terminal = step(terminal, image, out.floored);
    }
    out.terminal_wealth = terminal;
    res.outcomes.push_back(std::move(out));
  }

  const std::size_t n_agents = agents.size();
  res.agreement.assign(n_agents, std::vector<int>(n_agents, 0));
  for (std::size_t a = 0; a < n_agents; ++a)
    for (std::size_t b = 0; b < n_agents; ++b)
      for (std::size_t i = 0; i < n_trials; ++i)
        if (res.outcomes[a].choices[i] == res.outcomes[b].choices[i]) ++res.agreement[a][b];
  return res;
}

void write_trials_csv(std::ostream& os, const GameResult& result) {
  os << "trial_id,agent,choice,assigned,wealth_after\n";
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    for (std::size_t a = 0; a < result.agents.size(); ++a) {
      const auto& o = result.outcomes[a];
      os << result.trials[i].id << ',' << result.agents[a].label() << ',' << to_string(o.choices[i]) << ','
         << o.assigned[i] << ',' << o.wealth_after[i] << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace ergodic
