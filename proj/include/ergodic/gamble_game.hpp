#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ergodic {

enum class GameMode { additive, multiplicative };
std::string to_string(GameMode mode);

/// Protocol of one game: images map to wealth changes (deltas or factors),
/// a passive exposure phase, an active phase of two-gamble trials, and a
/// settlement that applies a random subset of the assigned images.
struct GameConfig {
  int n_images = 18;
  int images_per_game = 9;
  int passive_repetitions = 37;
  int n_trials = 312;
  int settlement_draws = 10;
  GameMode mode = GameMode::additive;
  std::vector<double> image_effects;
  double initial_endowment = 1000.0;
  std::uint64_t seed = 1;
  /// false: wealth seen by the agents stays at the endowment until
  /// settlement. true: the assigned image is applied after every trial.
  bool update_per_trial = false;

  /// Default effects: 18 deltas evenly spaced over [-428, 428], or 18
  /// factors log-evenly spaced over [0.447, 2.236].
  static GameConfig defaults(GameMode mode);
  static std::vector<double> default_effects(GameMode mode, int n_images = 18);

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

inline constexpr double kWealthFloor = 1e-9;

/// Two different images, each assigned with probability 1/2. Stored with first < second.
struct Gamble {
  int first;
  int second;
  bool operator==(const Gamble&) const = default;
};

struct Trial {
  int id;
  Gamble left;
  Gamble right;
};

enum class Choice { left, right };
std::string to_string(Choice c);

/// n_trials trials; each draws an unordered image pair uniformly, then a
/// second pair uniformly from the remaining pairs; the first goes left.
/// Throws ConfigError when n_images < 4.
std::vector<Trial> generate_trials(const GameConfig& cfg);

/// Wealth after applying image `image` once.
double apply_effect(const GameConfig& cfg, double wealth, int image);

/// Two choices tie when their scores differ by at most 1e-12 (1 + max |score|).
/// Ties go to the lexicographically smaller image pair, and to the left when
/// the pairs are identical.
Choice break_ties(const Trial& t, double left_score, double right_score);

/// Maximises the expected change of the mode's ergodic transform: mean
/// delta (additive) or mean log factor (multiplicative). Wealth-free.
Choice decide_ergodicity(const Trial& t, const GameConfig& cfg, double wealth);

/// Maximises the mean of -exp(-lambda z) over the two reachable wealths z,
/// evaluated as lambda * mean(z) - ln cosh(lambda * half-spread) so that
/// neither tiny nor large lambda * z overflows.
Choice decide_static_exponential(const Trial& t, const GameConfig& cfg, double wealth, double lambda);

/// Expected-wealth maximiser (risk neutral), used as a contrast agent.
Choice decide_expected_wealth(const Trial& t, const GameConfig& cfg, double wealth);

struct Utility {
  enum class Kind { identity, log, sqrt, neg_exponential };
  Kind kind = Kind::identity;
  double lambda = 0.0;

  /// -inf where the utility is undefined (log or sqrt of nonpositive wealth).
  double operator()(double wealth) const;
  std::string id() const;
};

inline constexpr int kMaxHorizon = 12;

/// Contingent plan from backward induction over `horizon` trials with
/// known menus. plan[d][h] is the choice at depth d after outcome history h
/// (bit j of h is the coin of trial j: 0 first image, 1 second image).
struct InductionPlan {
  Choice root = Choice::left;
  double value = 0.0;  ///< expected terminal utility under the plan
  std::vector<std::vector<Choice>> plan;
};

/// Exact expected-utility recursion over the 4^horizon tree of choices and
/// coins, starting at trials[0]. Throws PreconditionError when horizon
/// exceeds 12 or the trial list is shorter than horizon.
InductionPlan decide_backward_induction(std::span<const Trial> trials, const GameConfig& cfg,
                                        double wealth, int horizon, const Utility& u);

/// Open-loop variant: every choice is fixed before any coin resolves, as
/// when payoffs only become known at the end. Returns the best choice vector.
struct OpenLoopPlan {
  std::vector<Choice> choices;
  double value = 0.0;
};
OpenLoopPlan decide_terminal_resolution(std::span<const Trial> trials, const GameConfig& cfg,
                                        double wealth, int horizon, const Utility& u);

struct AgentSpec {
  enum class Kind { ergodicity, static_exponential, expected_wealth, backward_induction };
  Kind kind = Kind::ergodicity;
  double lambda = 0.0;  ///< static_exponential
  int horizon = 1;      ///< backward_induction
  Utility utility;      ///< backward_induction

  static AgentSpec ergodicity() { return {}; }
  static AgentSpec static_exponential(double lambda);
  static AgentSpec expected_wealth();
  static AgentSpec backward_induction(int horizon, Utility u);

  /// Throws ConfigError for lambda <= 0 or horizon outside [1, 12].
  void validate() const;
  std::string label() const;
};

struct AgentOutcome {
  std::vector<Choice> choices;
  std::vector<int> assigned;
  std::vector<double> wealth_after;  ///< wealth seen after each trial
  std::vector<int> settled_images;
  double terminal_wealth = 0.0;
  bool floored = false;  ///< multiplicative wealth hit the 1e-9 floor
};

struct GameResult {
  GameConfig config;
  std::vector<AgentSpec> agents;
  std::vector<Trial> trials;
  std::vector<int> passive_sequence;     ///< images_per_game * passive_repetitions exposures
  std::vector<int> coin;                 ///< per trial, shared by all agents
  std::vector<int> settlement_trials;    ///< trial indices settled, shared by all agents
  std::vector<AgentOutcome> outcomes;    ///< one per agent
  std::vector<std::vector<int>> agreement;  ///< trials on which agents i and j chose alike
};

/// Plays the game for every agent on the same trials, coins and settlement draws.
GameResult run_game(const GameConfig& cfg, const std::vector<AgentSpec>& agents);

/// Rows "trial_id,agent,choice,assigned,wealth_after".
void write_trials_csv(std::ostream& os, const GameResult& result);

}  // namespace ergodic
