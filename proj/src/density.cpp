#include "lpdm/density.hpp"

#include "lpdm/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

namespace lpdm {

struct Expression::Node {
  enum class Kind { kNumber, kVar, kNeg, kAdd, kSub, kMul, kDiv, kPow, kCall };
  Kind kind = Kind::kNumber;
  double number = 0.0;
  int var = 0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;

  double eval(const Eigen::Vector3d& x) const {
    switch (kind) {
      case Kind::kNumber: return number;
      case Kind::kVar: return x[var];
      case Kind::kNeg: return -a->eval(x);
      case Kind::kAdd: return a->eval(x) + b->eval(x);
      case Kind::kSub: return a->eval(x) - b->eval(x);
      case Kind::kMul: return a->eval(x) * b->eval(x);
      case Kind::kDiv: return a->eval(x) / b->eval(x);
      case Kind::kPow: {
        const double base = a->eval(x);
        const double e = b->eval(x);
        // Small integer powers by repeated multiplication: exact signs for
        // negative bases and bitwise-stable results.
        if (e == std::round(e) && std::abs(e) <= 16) {
          double out = 1.0;
          for (int k = 0; k < static_cast<int>(std::abs(e)); ++k) out *= base;
          return e < 0 ? 1.0 / out : out;
        }
        return std::pow(base, e);
      }
      case Kind::kCall: return fn(a->eval(x));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

double fabs_fn(double v) { return std::fabs(v); }
double sqrt_fn(double v) { return std::sqrt(v); }
double exp_fn(double v) { return std::exp(v); }
double log_fn(double v) { return std::log(v); }
double sin_fn(double v) { return std::sin(v); }
double cos_fn(double v) { return std::cos(v); }
double tan_fn(double v) { return std::tan(v); }

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw PreconditionError("expression \"" + s_ + "\": " + what + " at position " +
                            std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr left = term();
    for (;;) {
      if (accept('+')) {
        left = make(Kind::kAdd, left, term());
      } else if (accept('-')) {
        left = make(Kind::kSub, left, term());
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      if (accept('*')) {
        left = make(Kind::kMul, left, unary());
      } else if (accept('/')) {
        left = make(Kind::kDiv, left, unary());
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::kNeg, unary());
    if (accept('+')) return unary();
    return power();
  }

  // '^' is right associative and binds tighter than unary minus on its left:
  // -x^2 = -(x^2).
  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::kPow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Expression::Node>();
    n->number = v;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name = s_.substr(start, pos_ - start);
    if (name == "x1" || name == "x2" || name == "x3") {
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::kVar;
      n->var = name[1] - '1';
      return n;
    }
    if (name == "pi") {
      auto n = std::make_shared<Expression::Node>();
      n->number = std::numbers::pi;
      return n;
    }
    double (*fn)(double) = nullptr;
    if (name == "sqrt") fn = sqrt_fn;
    if (name == "exp") fn = exp_fn;
    if (name == "log") fn = log_fn;
    if (name == "sin") fn = sin_fn;
    if (name == "cos") fn = cos_fn;
    if (name == "tan") fn = tan_fn;
    if (name == "abs") fn = fabs_fn;
    if (fn == nullptr) {
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    if (!accept('(')) fail("expected '(' after " + name);
    NodePtr arg = expr();
    if (!accept(')')) fail("expected ')'");
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::kCall;
    n->fn = fn;
    n->a = arg;
    return n;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

double parse_parameter(const std::string& name, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || !std::isfinite(v)) {
    throw PreconditionError("preset " + name + ": malformed parameter '" + text + "'");
  }
  return v;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).parse();
  return e;
}

double Expression::operator()(const Eigen::Vector3d& x) const { return root_->eval(x); }

std::vector<PresetInfo> presets() {
  return {
      {"constant:<c>", "f = c (c >= 0)", "A_grad = A_lap = A_II = 0 for c > 0"},
      {"equator2", "f = x3^2, zero on the equator",
       "A_grad = 1, A_lap = 4, A_II = 6 at q = 1 (sup approached at the equator)"},
      {"twocircle", "f = x1^2 x2^2, zero on two great circles", ""},
      {"bump:<a>", "f = 1 + a x3^2 (a >= 0)", "A_grad = a, A_lap = 4a"},
  };
}

DensityFn preset(const std::string& name) {
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const bool has_arg = colon != std::string::npos;
  const std::string arg = has_arg ? name.substr(colon + 1) : "";

  if (head == "constant") {
    if (!has_arg) throw PreconditionError("preset constant needs a value, e.g. constant:4");
    const double c = parse_parameter(name, arg);
    return [c](const Eigen::Vector3d&) { return c; };
  }
  if (head == "bump") {
    if (!has_arg) throw PreconditionError("preset bump needs an amplitude, e.g. bump:0.5");
    const double a = parse_parameter(name, arg);
    return [a](const Eigen::Vector3d& x) { return 1.0 + a * x[2] * x[2]; };
  }
  if (has_arg) throw PreconditionError("preset " + head + " takes no parameter");
  if (head == "equator2") {
    return [](const Eigen::Vector3d& x) { return x[2] * x[2]; };
  }
  if (head == "twocircle") {
    return [](const Eigen::Vector3d& x) { return x[0] * x[0] * x[1] * x[1]; };
  }
  throw PreconditionError("unknown preset '" + name + "'");
}

}  // namespace lpdm
