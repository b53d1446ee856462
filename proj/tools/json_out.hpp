#pragma once

#include <cmath>

#include <json.hpp>

#include "ergodic/gamble_game.hpp"
#include "ergodic/growth.hpp"
#include "ergodic/preference.hpp"
#include "ergodic/transform.hpp"

namespace ergodic::out {

using json = nlohmann::ordered_json;

// NaN and infinities become null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const RateEstimate& r) {
  return {{"value", num(r.value)}, {"se", num(r.se)}, {"n_used", r.n_used}};
}

inline json to_json(const TimeAverageEstimate& t) {
  json cps = json::array();
  for (const auto& c : t.checkpoints) cps.push_back({{"t", c.t}, {"median_rate", num(c.median_rate)}, {"se", num(c.se)}});
  return {{"value", num(t.value)},
          {"se", num(t.se)},
          {"status", to_string(t.status)},
          {"intercept", num(t.intercept)},
          {"slope_inv_t", num(t.slope_inv_t)},
          {"n_used", t.n_used},
          {"checkpoints", cps}};
}

inline json to_json(const GrowthReport& g) {
  json finite = nullptr;
  if (g.finite_t_rate.size() > 0) {
    finite = {{"mean", num(g.finite_t_rate.mean())},
              {"min", num(g.finite_t_rate.minCoeff())},
              {"max", num(g.finite_t_rate.maxCoeff())},
              {"n", g.finite_t_rate.size()}};
  }
  return {{"verdict", to_string(g.verdict)},
          {"transform", g.transform_id},
          {"t_used", g.t_used},
          {"n_used", g.n_used},
          {"gap", num(g.gap)},
          {"pooled_se", num(g.pooled_se)},
          {"time_average", to_json(g.time_avg)},
          {"ensemble",
           {{"full", to_json(g.ensemble.full)},
            {"half", to_json(g.ensemble.half)},
            {"quarter", to_json(g.ensemble.quarter)},
            {"n_converged", g.ensemble.n_converged}}},
          {"sample_average", to_json(g.sample_avg)},
          {"finite_t_rates", finite}};
}

inline json to_json(const TransformSpec& f) {
  return {{"form", to_string(f.form())},
          {"id", f.id()},
          {"expression", f.describe()},
          {"role", f.role() == TransformSpec::Role::utility ? "utility" : "ergodic_transform"},
          {"scale", f.scale()},
          {"offset", f.offset()},
          {"gamma", f.gamma()},
          {"lambda", f.lambda()},
          {"alpha", num(f.alpha)},
          {"beta", num(f.beta)},
          {"x_ref", num(f.x_ref)},
          {"table",
           f.has_table() ? json{{"nodes", f.table_nodes()}, {"values", f.table_values()}} : json(nullptr)}};
}

inline json to_json(const ErgodizabilityCheck& c) {
  return {{"admits", c.admits},
          {"alpha_over_beta", num(c.alpha_over_beta)},
          {"residual", num(c.residual)},
          {"tolerance", c.tolerance},
          {"grid_points", c.grid_used.size()},
          {"warnings", c.warnings}};
}

inline json to_json(const RankingResult& r) {
  return {{"verdict", to_string(r.verdict)},
          {"left_growth", num(r.left_growth)},
          {"right_growth", num(r.right_growth)},
          {"left_se", num(r.left.se)},
          {"right_se", num(r.right.se)},
          {"left_status", to_string(r.left.status)},
          {"right_status", to_string(r.right.status)},
          {"difference", num(r.difference)},
          {"pooled_se", num(r.pooled_se)}};
}

inline json to_json(const AlphaSearch& s) {
  json band = s.band_lo <= s.band_hi ? json::array({s.band_lo, s.band_hi}) : json(nullptr);
  return {{"alpha", num(s.alpha)},
          {"bracket", {s.lo, s.hi}},
          {"iterations", s.iterations},
          {"conclusive", s.conclusive},
          {"indifference_band", band},
          {"certificate", to_json(s.certificate)}};
}

inline json to_json(const DiscountFit& d) {
  return {{"alpha", d.alpha},
          {"beta", d.beta},
          {"alpha_se", num(d.alpha_se)},
          {"log_beta_se", num(d.log_beta_se)},
          {"rms", d.rms},
          {"n", d.n}};
}

inline json summary_json(const GameResult& r) {
  json agents = json::array();
  for (std::size_t a = 0; a < r.agents.size(); ++a) {
    const auto& o = r.outcomes[a];
    agents.push_back({{"agent", r.agents[a].label()},
                      {"terminal_wealth", o.terminal_wealth},
                      {"settled_images", o.settled_images},
                      {"floored", o.floored}});
  }
  return {{"mode", to_string(r.config.mode)},
          {"n_trials", r.trials.size()},
          {"passive_exposures", r.passive_sequence.size()},
          {"settlement_draws", r.settlement_trials.size()},
          {"settlement_trials", r.settlement_trials},
          {"update_per_trial", r.config.update_per_trial},
          {"agents", agents},
          {"agreement", r.agreement}};
}

}  // namespace ergodic::out
