#pragma once

// Brute force over every contingent strategy of a short trial sequence.
// Independent of the library's recursion: a strategy is a bit per decision
// node, node (depth d, coin history h) having index 2^d - 1 + h.

#include <cstdint>
#include <span>

#include "ergodic/gamble_game.hpp"

namespace oracle {

inline double strategy_value(std::span<const ergodic::Trial> trials, const ergodic::GameConfig& cfg,
                             double wealth, int horizon, const ergodic::Utility& u, std::uint64_t strategy) {
  const std::uint32_t n_paths = 1u << horizon;
  double total = 0.0;
  for (std::uint32_t coins = 0; coins < n_paths; ++coins) {
    double w = wealth;
    std::uint32_t history = 0;
    for (int d = 0; d < horizon; ++d) {
      const std::uint32_t node = (1u << d) - 1 + history;
      const auto& t = trials[static_cast<std::size_t>(d)];
      const ergodic::Gamble& g = (strategy >> node) & 1u ? t.right : t.left;
      const std::uint32_t coin = (coins >> d) & 1u;
      w = ergodic::apply_effect(cfg, w, coin ? g.second : g.first);
      history |= coin << d;
    }
    total += u(w);
  }
  return total / n_paths;
}

struct Best {
  double value;
  std::uint64_t strategy;
};

inline Best best_strategy(std::span<const ergodic::Trial> trials, const ergodic::GameConfig& cfg,
                          double wealth, int horizon, const ergodic::Utility& u) {
  const std::uint64_t n_nodes = (1u << horizon) - 1;
  Best best{-1.0 / 0.0, 0};
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n_nodes); ++s) {
    const double v = strategy_value(trials, cfg, wealth, horizon, u, s);
    if (v > best.value) best = {v, s};
  }
  return best;
}

}  // namespace oracle
