#include "ergodic/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ergodic/errors.hpp"

namespace ergodic {

struct Expression::Node {
  enum class Op { constant, variable, add, sub, mul, div, pow, neg, exp, log, sqrt, abs };
  Op op = Op::constant;
  double value = 0.0;
  std::unique_ptr<Node> lhs;
  std::unique_ptr<Node> rhs;
};

namespace {

using Node = Expression::Node;
using Op = Node::Op;
using NodePtr = std::unique_ptr<Node>;

NodePtr make_leaf(Op op, double value = 0.0) {
  auto n = std::make_unique<Node>();
  n->op = op;
  n->value = value;
  return n;
}

NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs = nullptr) {
  auto n = std::make_unique<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto root = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "expression '" << text_ << "': " << what << " at column " << (pos_ + 1);
    throw ConfigError(os.str());
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (accept("+")) {
        lhs = make_node(Op::add, std::move(lhs), parse_product());
      } else if (accept("-")) {
        lhs = make_node(Op::sub, std::move(lhs), parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      // U+00B7 middle dot is accepted as multiplication.
      if (accept("*") || accept("\xC2\xB7")) {
        lhs = make_node(Op::mul, std::move(lhs), parse_unary());
      } else if (accept("/")) {
        lhs = make_node(Op::div, std::move(lhs), parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept("-")) return make_node(Op::neg, parse_unary());
    if (accept("+")) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (accept("^") || accept("**")) return make_node(Op::pow, std::move(base), parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_sum();
      if (!accept(")")) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string_view ident = text_.substr(start, pos_ - start);
      if (ident == "x") return make_leaf(Op::variable);
      if (ident == "pi") return make_leaf(Op::constant, std::numbers::pi);
      Op fn;
      if (ident == "exp") {
        fn = Op::exp;
      } else if (ident == "log" || ident == "ln") {
        fn = Op::log;
      } else if (ident == "sqrt") {
        fn = Op::sqrt;
      } else if (ident == "abs") {
        fn = Op::abs;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(ident) + "'");
      }
      if (!accept("(")) fail("expected '(' after " + std::string(ident));
      auto arg = parse_sum();
      if (!accept(")")) fail("expected ')'");
      return make_node(fn, std::move(arg));
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    double value = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{}) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return make_leaf(Op::constant, value);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double eval(const Node& n, double x) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return x;
    case Op::add: return eval(*n.lhs, x) + eval(*n.rhs, x);
    case Op::sub: return eval(*n.lhs, x) - eval(*n.rhs, x);
    case Op::mul: return eval(*n.lhs, x) * eval(*n.rhs, x);
    case Op::div: return eval(*n.lhs, x) / eval(*n.rhs, x);
    case Op::pow: return std::pow(eval(*n.lhs, x), eval(*n.rhs, x));
    case Op::neg: return -eval(*n.lhs, x);
    case Op::exp: return std::exp(eval(*n.lhs, x));
    case Op::log: return std::log(eval(*n.lhs, x));
    case Op::sqrt: return std::sqrt(eval(*n.lhs, x));
    case Op::abs: return std::abs(eval(*n.lhs, x));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

using Terms = std::vector<PowerTerm>;

Terms normalize(Terms terms) {
  std::sort(terms.begin(), terms.end(),
            [](const PowerTerm& a, const PowerTerm& b) { return a.exponent < b.exponent; });
  Terms merged;
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().exponent == t.exponent) {
      merged.back().coefficient += t.coefficient;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const PowerTerm& t) { return t.coefficient == 0.0; });
  return merged;
}

std::optional<double> as_constant(const Terms& t) {
  if (t.empty()) return 0.0;
  if (t.size() == 1 && t.front().exponent == 0.0) return t.front().coefficient;
  return std::nullopt;
}

Terms multiply(const Terms& a, const Terms& b) {
  Terms out;
  for (const auto& p : a)
    for (const auto& q : b) out.push_back({p.coefficient * q.coefficient, p.exponent + q.exponent});
  return normalize(std::move(out));
}

std::optional<Terms> reduce(const Node& n) {
  switch (n.op) {
    case Op::constant: return normalize({{n.value, 0.0}});
    case Op::variable: return Terms{{1.0, 1.0}};
    case Op::add:
    case Op::sub: {
      auto l = reduce(*n.lhs);
      auto r = reduce(*n.rhs);
      if (!l || !r) return std::nullopt;
      const double sign = n.op == Op::add ? 1.0 : -1.0;
      for (auto t : *r) l->push_back({sign * t.coefficient, t.exponent});
      return normalize(std::move(*l));
    }
    case Op::neg: {
      auto l = reduce(*n.lhs);
      if (!l) return std::nullopt;
      for (auto& t : *l) t.coefficient = -t.coefficient;
      return l;
    }
    case Op::mul: {
      auto l = reduce(*n.lhs);
      auto r = reduce(*n.rhs);
      if (!l || !r) return std::nullopt;
      return multiply(*l, *r);
    }
    case Op::div: {
      auto l = reduce(*n.lhs);
      auto r = reduce(*n.rhs);
      if (!l || !r || r->size() != 1) return std::nullopt;
      const PowerTerm d = r->front();
      return multiply(*l, {{1.0 / d.coefficient, -d.exponent}});
    }
    case Op::pow: {
      auto base = reduce(*n.lhs);
      auto ex = reduce(*n.rhs);
      if (!base || !ex) return std::nullopt;
      const auto e = as_constant(*ex);
      if (!e) return std::nullopt;
      const bool integral = std::floor(*e) == *e;
      if (base->size() == 1) {
        const PowerTerm t = base->front();
        if (t.coefficient < 0.0 && !integral) return std::nullopt;
        // (x^2)^0.5 is |x|, not x: only fold a fractional power onto x^1 or constants.
        if (!integral && t.exponent != 1.0 && t.exponent != 0.0) return std::nullopt;
        return normalize({{std::pow(t.coefficient, *e), t.exponent * *e}});
      }
      if (base->empty()) return *e > 0.0 ? std::optional<Terms>(Terms{}) : std::nullopt;
      if (!integral || *e < 0.0 || *e > 8.0) return std::nullopt;
      Terms acc{{1.0, 0.0}};
      for (int k = 0; k < static_cast<int>(*e); ++k) acc = multiply(acc, *base);
      return acc;
    }
    case Op::exp:
    case Op::log:
    case Op::sqrt:
    case Op::abs: {
      auto arg = reduce(*n.lhs);
      if (!arg) return std::nullopt;
      if (auto c = as_constant(*arg)) return normalize({{eval(n, 0.0), 0.0}});
      if (n.op == Op::sqrt && arg->size() == 1 && arg->front().coefficient > 0.0 &&
          arg->front().exponent == 1.0)
        return Terms{{std::sqrt(arg->front().coefficient), 0.5}};
      return std::nullopt;
    }
  }
  return std::nullopt;
}

inline double eval_term(const PowerTerm& t, double x) {
  const double p = t.exponent;
  if (p == 0.0) return t.coefficient;
  if (p == 1.0) return t.coefficient * x;
  if (p == 2.0) return t.coefficient * x * x;
  if (p == 0.5) return t.coefficient * std::sqrt(x);
  if (p == -1.0) return t.coefficient / x;
  return t.coefficient * std::pow(x, p);
}

}  // namespace

Expression::Expression(std::string source, std::shared_ptr<const Node> root)
    : source_(std::move(source)), root_(std::move(root)), terms_(reduce(*root_)) {}

Expression Expression::parse(std::string_view source) {
  Parser parser(source);
  std::shared_ptr<const Node> root = parser.parse();
  return Expression(std::string(source), std::move(root));
}

Expression Expression::constant(double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  return parse(os.str());
}

double Expression::operator()(double x) const {
  if (terms_) {
    double sum = 0.0;
    for (const auto& t : *terms_) sum += eval_term(t, x);
    return sum;
  }
  return eval(*root_, x);
}

void Expression::evaluate(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = std::min(x.size(), out.size());
  if (!terms_) {
    for (std::size_t i = 0; i < n; ++i) out[i] = eval(*root_, x[i]);
    return;
  }
  std::fill_n(out.begin(), n, 0.0);
  for (const auto& t : *terms_) {
    const double c = t.coefficient;
    const double p = t.exponent;
    if (p == 0.0) {
      for (std::size_t i = 0; i < n; ++i) out[i] += c;
    } else if (p == 1.0) {
      for (std::size_t i = 0; i < n; ++i) out[i] += c * x[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] += eval_term(t, x[i]);
    }
  }
}

}  // namespace ergodic
