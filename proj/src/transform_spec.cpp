#include "ergodic/transform_spec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

// pchip.hpp calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "ergodic/errors.hpp"

namespace ergodic {

struct TransformSpec::Table {
  using Pchip = boost::math::interpolators::pchip<std::vector<double>>;

  Table(std::vector<double> x, std::vector<double> y)
      : nodes(x), values(y), forward(std::move(x), std::move(y)) {}

  static double eval(const Pchip& p, const std::vector<double>& xs, const std::vector<double>& ys,
                     double x) {
    if (x < xs.front()) return ys.front() + p.prime(xs.front()) * (x - xs.front());
    if (x > xs.back()) return ys.back() + p.prime(xs.back()) * (x - xs.back());
    return p(x);
  }

  double at(double x) const { return eval(forward, nodes, values, x); }
  // Exact inverse of `at`: linear outside the table, a bracketed root inside.
  double inverse(double y) const {
    if (y <= values.front()) return nodes.front() + (y - values.front()) / forward.prime(nodes.front());
    if (y >= values.back()) return nodes.back() + (y - values.back()) / forward.prime(nodes.back());
    const auto k = static_cast<std::size_t>(std::upper_bound(values.begin(), values.end(), y) - values.begin());
    double lo = nodes[k - 1], hi = nodes[k];
    if (values[k - 1] == y) return lo;
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve([&](double x) { return forward(x) - y; }, lo, hi,
                                                     values[k - 1] - y, values[k] - y,
                                                     boost::math::tools::eps_tolerance<double>(), iters);
    return 0.5 * (r.first + r.second);
  }

  std::vector<double> nodes;
  std::vector<double> values;
  Pchip forward;
};

namespace {

void require_positive_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw PreconditionError("transform: scale must be positive and finite");
}

void require_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1]))
      throw PreconditionError(std::string("transform table: ") + what + " not strictly increasing");
}

std::string num(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(TransformSpec::Form form) {
  switch (form) {
    case TransformSpec::Form::identity: return "identity";
    case TransformSpec::Form::affine: return "affine";
    case TransformSpec::Form::log: return "log";
    case TransformSpec::Form::crra: return "crra";
    case TransformSpec::Form::exponential: return "exponential";
    case TransformSpec::Form::numeric_table: return "numeric_table";
  }
  return "identity";
}

TransformSpec TransformSpec::identity() { return TransformSpec(); }

TransformSpec TransformSpec::affine(double scale, double offset) {
  require_positive_scale(scale);
  TransformSpec f;
  f.form_ = Form::affine;
  f.scale_ = scale;
  f.offset_ = offset;
  return f;
}

TransformSpec TransformSpec::log(double scale, double offset) {
  require_positive_scale(scale);
  TransformSpec f;
  f.form_ = Form::log;
  f.scale_ = scale;
  f.offset_ = offset;
  f.gamma_ = 1.0;
  return f;
}

TransformSpec TransformSpec::crra(double gamma, double scale, double offset) {
  if (!std::isfinite(gamma) || gamma < 0.0)
    throw PreconditionError("transform: crra gamma must be finite and nonnegative");
  if (gamma == 1.0) return log(scale, offset);
  require_positive_scale(scale);
  TransformSpec f;
  f.form_ = Form::crra;
  f.gamma_ = gamma;
  f.scale_ = scale;
  f.offset_ = offset;
  return f;
}

TransformSpec TransformSpec::exponential(double lambda, double scale, double offset) {
  if (!(lambda > 0.0)) throw PreconditionError("transform: exponential lambda must be positive");
  require_positive_scale(scale);
  TransformSpec f;
  f.form_ = Form::exponential;
  f.lambda_ = lambda;
  f.scale_ = scale;
  f.offset_ = offset;
  return f;
}

TransformSpec TransformSpec::numeric(std::vector<double> nodes, std::vector<double> values,
                                     Interval domain) {
  TransformSpec f = identity().with_table(std::move(nodes), std::move(values), domain);
  f.form_ = Form::numeric_table;
  return f;
}

TransformSpec TransformSpec::with_table(std::vector<double> nodes, std::vector<double> values,
                                        Interval domain) const {
  if (nodes.size() != values.size() || nodes.size() < 4)
    throw PreconditionError("transform table: need at least 4 (x, f) pairs of equal length");
  require_increasing(nodes, "nodes");
  require_increasing(values, "values");
  TransformSpec f = *this;
  f.table_ = std::make_shared<const Table>(std::move(nodes), std::move(values));
  f.table_domain_ = domain;
  return f;
}

TransformSpec TransformSpec::with_role(Role role) const {
  TransformSpec f = *this;
  f.role_ = role;
  return f;
}

const std::vector<double>& TransformSpec::table_nodes() const {
  if (!table_) throw PreconditionError("transform: no table attached");
  return table_->nodes;
}

const std::vector<double>& TransformSpec::table_values() const {
  if (!table_) throw PreconditionError("transform: no table attached");
  return table_->values;
}

double TransformSpec::table_at(double x) const {
  if (!table_) throw PreconditionError("transform: no table attached");
  if (form_ == Form::numeric_table) return scale_ * table_->at(x) + offset_;
  return table_->at(x);
}

bool TransformSpec::table_covers(double x) const {
  return table_ && x >= table_->nodes.front() && x <= table_->nodes.back();
}

double TransformSpec::operator()(double x) const {
  switch (form_) {
    case Form::identity: return x;
    case Form::affine: return scale_ * x + offset_;
    case Form::log: return scale_ * std::log(x) + offset_;
    case Form::crra: return scale_ * std::pow(x, 1.0 - gamma_) / (1.0 - gamma_) + offset_;
    case Form::exponential: return scale_ * -std::expm1(-lambda_ * x) + offset_;
    case Form::numeric_table: return scale_ * table_->at(x) + offset_;
  }
  return x;
}

double TransformSpec::inverse(double y) const {
  const double u = (y - offset_) / scale_;
  switch (form_) {
    case Form::identity: return y;
    case Form::affine: return u;
    case Form::log: return std::exp(u);
    case Form::crra: return std::pow(u * (1.0 - gamma_), 1.0 / (1.0 - gamma_));
    case Form::exponential: return -std::log1p(-u) / lambda_;
    case Form::numeric_table: return table_->inverse(u);
  }
  return y;
}

bool TransformSpec::in_domain(double x) const {
  switch (form_) {
    case Form::log: return x > 0.0;
    case Form::crra: return gamma_ < 1.0 ? x >= 0.0 : x > 0.0;
    case Form::numeric_table: return table_domain_.contains(x);
    default: return std::isfinite(x);
  }
}

double TransformSpec::domain_infimum() const {
  switch (form_) {
    case Form::log:
    case Form::crra: return 0.0;
    case Form::numeric_table: return table_domain_.lo;
    default: return -std::numeric_limits<double>::infinity();
  }
}

TransformSpec TransformSpec::then_affine(double c, double d) const {
  require_positive_scale(c);
  TransformSpec f = *this;
  if (f.form_ == Form::identity) f.form_ = Form::affine;
  f.scale_ = c * scale_;
  f.offset_ = c * offset_ + d;
  if (table_ && form_ != Form::numeric_table) {
    // Closed-form tables store f itself; keep them consistent with the new f.
    std::vector<double> values = table_->values;
    for (double& v : values) v = c * v + d;
    f.table_ = std::make_shared<const Table>(table_->nodes, std::move(values));
  }
  f.alpha = c * alpha;
  f.beta = c * beta;
  return f;
}

std::string TransformSpec::id() const {
  switch (form_) {
    case Form::identity: return "identity";
    case Form::affine: return "affine(" + num(scale_) + "," + num(offset_) + ")";
    case Form::log: return scale_ == 1.0 && offset_ == 0.0 ? "log" : "log(" + num(scale_) + "," + num(offset_) + ")";
    case Form::crra: return "crra(" + num(gamma_) + ")";
    case Form::exponential: return "exponential(" + num(lambda_) + ")";
    case Form::numeric_table: return "numeric_table";
  }
  return "identity";
}

std::string TransformSpec::describe() const {
  auto affine_wrap = [&](const std::string& base) {
    std::string s = "f(x) = ";
    if (scale_ != 1.0) s += num(scale_) + " * ";
    s += base;
    if (offset_ > 0.0) s += " + " + num(offset_);
    if (offset_ < 0.0) s += " - " + num(-offset_);
    return s;
  };
  switch (form_) {
    case Form::identity: return "f(x) = x";
    case Form::affine: return affine_wrap("x");
    case Form::log: return affine_wrap("ln(x)");
    case Form::crra:
      return affine_wrap("x^" + num(1.0 - gamma_) + " / " + num(1.0 - gamma_));
    case Form::exponential: return affine_wrap("(1 - exp(-" + num(lambda_) + " * x))");
    case Form::numeric_table:
      return "f(x) = monotone cubic interpolation of " + std::to_string(table_->nodes.size()) +
             " quadrature nodes";
  }
  return "";
}

}  // namespace ergodic
