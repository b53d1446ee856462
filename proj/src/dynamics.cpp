#include "ergodic/dynamics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "ergodic/errors.hpp"

namespace ergodic {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

FamilyHint classify(const Expression& diffusion) {
  const auto& terms = diffusion.power_terms();
  if (!terms || terms->size() != 1 || terms->front().coefficient <= 0.0) return {};
  const PowerTerm t = terms->front();
  if (t.exponent == 0.0) return {FamilyHint::Kind::additive, t.coefficient, 0.0};
  if (t.exponent == 1.0) return {FamilyHint::Kind::multiplicative, t.coefficient, 1.0};
  return {FamilyHint::Kind::power, t.coefficient, t.exponent};
}

}  // namespace

std::string to_string(FamilyHint::Kind kind) {
  switch (kind) {
    case FamilyHint::Kind::additive: return "additive";
    case FamilyHint::Kind::multiplicative: return "multiplicative";
    case FamilyHint::Kind::power: return "power";
    case FamilyHint::Kind::custom: return "custom";
  }
  return "custom";
}

std::string to_string(DiscreteDynamics::Mode mode) {
  return mode == DiscreteDynamics::Mode::additive ? "additive" : "multiplicative";
}

std::string ItoDynamics::canonical() const {
  return "ito|drift=" + drift_.source() + "|diffusion=" + diffusion_.source() + "|domain=(" +
         format_double(domain_.lo) + "," + format_double(domain_.hi) + ")";
}

std::vector<double> validation_grid(const Interval& domain, int points) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  const bool lo_finite = std::isfinite(domain.lo);
  const bool hi_finite = std::isfinite(domain.hi);
  auto log_offset = [](int i, int n) { return std::pow(10.0, -6.0 + 12.0 * i / (n - 1)); };
  if (lo_finite && hi_finite) {
    for (int i = 0; i < points; ++i)
      grid.push_back(domain.lo + (domain.hi - domain.lo) * (i + 1) / (points + 1));
  } else if (lo_finite) {
    for (int i = 0; i < points; ++i) grid.push_back(domain.lo + log_offset(i, points));
  } else if (hi_finite) {
    for (int i = points - 1; i >= 0; --i) grid.push_back(domain.hi - log_offset(i, points));
  } else {
    const int half = (points - 1) / 2;
    for (int i = half - 1; i >= 0; --i) grid.push_back(-log_offset(i, half));
    grid.push_back(0.0);
    for (int i = 0; i < half; ++i) grid.push_back(log_offset(i, half));
  }
  return grid;
}

ItoDynamics build_ito(const Expression& drift, const Expression& diffusion, Interval domain) {
  if (domain.empty()) throw ConfigError("dynamics.domain: empty interval");
  for (double x : validation_grid(domain)) {
    const double a = drift(x);
    const double b = diffusion(x);
    if (!std::isfinite(a)) {
      throw ConfigError("dynamics.drift: non-finite value " + format_double(a) +
                        " at x=" + format_double(x));
    }
    if (!std::isfinite(b) || !(b > 0.0)) {
      throw ConfigError("dynamics.diffusion: must be strictly positive, got b(x)=" +
                        format_double(b) + " at x=" + format_double(x));
    }
  }
  return ItoDynamics(drift, diffusion, domain, classify(diffusion));
}

ItoDynamics build_ito(std::string_view drift, std::string_view diffusion, Interval domain) {
  return build_ito(Expression::parse(drift), Expression::parse(diffusion), domain);
}

DiscreteDynamics::DiscreteDynamics(Mode mode, std::vector<double> outcomes,
                                   std::vector<double> probabilities)
    : mode_(mode), outcomes_(std::move(outcomes)), probabilities_(std::move(probabilities)) {
  if (outcomes_.empty()) throw ConfigError("dynamics.outcomes: at least one outcome required");
  if (outcomes_.size() != probabilities_.size())
    throw ConfigError("dynamics.probabilities: length must match outcomes");
  for (double p : probabilities_)
    if (!(p >= 0.0)) throw ConfigError("dynamics.probabilities: negative probability");
  const double total = std::accumulate(probabilities_.begin(), probabilities_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("dynamics.probabilities: sum " + format_double(total) + " is not 1");
  for (double v : outcomes_) {
    if (!std::isfinite(v)) throw ConfigError("dynamics.outcomes: non-finite outcome");
    if (mode_ == Mode::multiplicative && !(v > 0.0))
      throw ConfigError("dynamics.outcomes: multiplicative factor " + format_double(v) +
                        " is not positive");
  }
}

std::string DiscreteDynamics::canonical() const {
  std::string s = "discrete|" + to_string(mode_) + "|";
  for (std::size_t i = 0; i < outcomes_.size(); ++i)
    s += format_double(outcomes_[i]) + ":" + format_double(probabilities_[i]) + ";";
  return s;
}

}  // namespace ergodic
