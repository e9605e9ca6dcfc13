#pragma once

// Scalar coefficient expressions over x1..xn: parsing, rendering, plain
// evaluation and second-order forward-mode differentiation.
//
//   expr    := term (("+"|"-") term)*
//   term    := unary (("*"|"/") unary)*
//   unary   := "-" unary | power
//   power   := primary ("^" unary)?
//   primary := number | "x" digits | func "(" expr ")" | "(" expr ")"
//   func    := abs | sgn | sin | cos | exp | log | sqrt
//
// ^ binds tighter than unary minus and is right-associative, so "-x1^2" is
// -(x1^2) and "2^3^2" is 2^(3^2). A minus applied directly to a literal is
// folded into a negative constant.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slf/errors.hpp"
#include "slf/linalg.hpp"

namespace slf {

enum class Op : std::uint8_t {
  Constant,
  Variable,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Abs,
  Sgn,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Constant;
  double value = 0.0;  // Constant
  int index = 0;       // Variable, zero-based
  NodePtr lhs;         // also the operand of unary ops
  NodePtr rhs;
  bool has_variable = false;
};

/// Value, gradient and Hessian of an expression at a point. When smooth is
/// false the gradient and Hessian are NaN-filled and must not be used.
struct Jet2 {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
  bool smooth = true;
};

namespace detail {

inline bool is_unary(Op op) {
  return op == Op::Neg || op == Op::Abs || op == Op::Sgn || op == Op::Sin ||
         op == Op::Cos || op == Op::Exp || op == Op::Log || op == Op::Sqrt;
}

inline bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

inline double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
      if (b == 0.0) throw DomainError("division by zero");
      return a / b;
    case Op::Pow:
      if (a < 0.0 && !is_integer(b))
        throw DomainError("negative base with non-integer exponent");
      if (a == 0.0 && b < 0.0) throw DomainError("zero raised to a negative power");
      return std::pow(a, b);
    default: break;
  }
  throw Error("apply_binary: not a binary operator");
}

inline double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Abs: return std::abs(a);
    case Op::Sgn: return static_cast<double>((a > 0.0) - (a < 0.0));
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Log:
      if (a <= 0.0) throw DomainError("log of a non-positive argument");
      return std::log(a);
    case Op::Sqrt:
      if (a < 0.0) throw DomainError("sqrt of a negative argument");
      return std::sqrt(a);
    default: break;
  }
  throw Error("apply_unary: not a unary operator");
}

struct Instr {
  Op op;
  int index;
  double value;
};

inline NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->has_variable = (lhs && lhs->has_variable) || (rhs && rhs->has_variable);
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return node;
}

inline NodePtr make_constant_node(double v) {
  if (!std::isfinite(v)) throw DomainError("expression constants must be finite");
  auto node = std::make_shared<Node>();
  node->op = Op::Constant;
  node->value = v;
  return node;
}

inline NodePtr make_variable_node(int index) {
  auto node = std::make_shared<Node>();
  node->op = Op::Variable;
  node->index = index;
  node->has_variable = true;
  return node;
}

inline NodePtr negate_node(NodePtr operand) {
  if (operand->op == Op::Constant) return make_constant_node(-operand->value);
  return make_node(Op::Neg, std::move(operand), nullptr);
}

inline bool same_structure(const Node& a, const Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Constant: return a.value == b.value;
    case Op::Variable: return a.index == b.index;
    default: break;
  }
  if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
  if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
  if (a.lhs && !same_structure(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !same_structure(*a.rhs, *b.rhs)) return false;
  return true;
}

inline int max_variable_index(const Node& node) {
  int best = node.op == Op::Variable ? node.index : -1;
  if (node.lhs) best = std::max(best, max_variable_index(*node.lhs));
  if (node.rhs) best = std::max(best, max_variable_index(*node.rhs));
  return best;
}

// Postfix program; returns the maximum stack depth reached.
inline int compile(const Node& node, std::vector<Instr>& out, int depth = 0) {
  switch (node.op) {
    case Op::Constant:
      out.push_back({Op::Constant, 0, node.value});
      return depth + 1;
    case Op::Variable:
      out.push_back({Op::Variable, node.index, 0.0});
      return depth + 1;
    default: break;
  }
  if (is_unary(node.op)) {
    const int d = compile(*node.lhs, out, depth);
    out.push_back({node.op, 0, 0.0});
    return d;
  }
  const int dl = compile(*node.lhs, out, depth);
  const int dr = compile(*node.rhs, out, depth + 1);
  out.push_back({node.op, 0, 0.0});
  return std::max(dl, dr);
}

inline std::string_view function_name(Op op) {
  switch (op) {
    case Op::Abs: return "abs";
    case Op::Sgn: return "sgn";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    default: return "";
  }
}

inline int precedence(const Node& node) {
  switch (node.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Constant: return std::signbit(node.value) ? 3 : 5;
    case Op::Pow: return 4;
    default: return 5;
  }
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline void render_into(const Node& node, std::string& out) {
  auto wrapped = [&out](const Node& child, bool parens) {
    if (parens) out += '(';
    render_into(child, out);
    if (parens) out += ')';
  };
  switch (node.op) {
    case Op::Constant: out += format_number(node.value); return;
    case Op::Variable:
      out += 'x';
      out += std::to_string(node.index + 1);
      return;
    case Op::Neg:
      out += '-';
      wrapped(*node.lhs, precedence(*node.lhs) < 3);
      return;
    case Op::Pow:
      wrapped(*node.lhs, precedence(*node.lhs) <= 4);
      out += '^';
      wrapped(*node.rhs, precedence(*node.rhs) < 3);
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(node);
      wrapped(*node.lhs, precedence(*node.lhs) < p);
      out += node.op == Op::Add   ? " + "
             : node.op == Op::Sub ? " - "
             : node.op == Op::Mul ? "*"
                                  : "/";
      wrapped(*node.rhs, precedence(*node.rhs) <= p);
      return;
    }
    default:
      out += function_name(node.op);
      out += '(';
      render_into(*node.lhs, out);
      out += ')';
      return;
  }
}

class Parser {
 public:
  Parser(std::string_view src, int dimension) : src_(src), n_(dimension) {}

  NodePtr parse() {
    NodePtr node = expr();
    skip_space();
    if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
    return node;
  }

 private:
  std::string_view src_;
  int n_;
  std::size_t pos_ = 0;

  void skip_space() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_node(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make_node(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_node(Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make_node(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return negate_node(unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make_node(Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      expect(')');
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [this] {
      while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      const std::size_t exp_start = pos_;
      digits();
      if (pos_ == exp_start) pos_ = save;  // not an exponent after all
    }
    double v = 0.0;
    auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_)
      throw ParseError("malformed number", start);
    return make_constant_node(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           ((src_[pos_] >= 'a' && src_[pos_] <= 'z') || (src_[pos_] >= 'A' && src_[pos_] <= 'Z') ||
            (src_[pos_] >= '0' && src_[pos_] <= '9') || src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name.size() > 1 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string_view::npos) {
      long index = 0;
      auto res = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (res.ec != std::errc() || index < 1)
        throw ParseError("variable index must be at least 1", start);
      if (index > n_) {
        throw ParseError("variable index exceeds dimension (x" + std::to_string(index) +
                             " with n=" + std::to_string(n_) + ")",
                         start);
      }
      return make_variable_node(static_cast<int>(index - 1));
    }
    static constexpr std::array<std::pair<std::string_view, Op>, 7> functions{{
        {"abs", Op::Abs},
        {"sgn", Op::Sgn},
        {"sin", Op::Sin},
        {"cos", Op::Cos},
        {"exp", Op::Exp},
        {"log", Op::Log},
        {"sqrt", Op::Sqrt},
    }};
    for (const auto& [fname, op] : functions) {
      if (fname == name) {
        expect('(');
        NodePtr arg = expr();
        expect(')');
        return make_node(op, arg, nullptr);
      }
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }
};

}  // namespace detail

class Expr {
 public:
  Expr() : Expr(detail::make_constant_node(0.0), 0) {}

  Expr(NodePtr root, int dimension) : root_(std::move(root)), n_(dimension) {
    if (n_ < 0) throw DimensionError("expression dimension must be non-negative");
    if (detail::max_variable_index(*root_) >= n_) {
      throw DimensionError("expression references a variable beyond dimension " +
                           std::to_string(n_));
    }
    stack_depth_ = detail::compile(*root_, program_);
  }

  static Expr constant(double v, int dimension) {
    return Expr(detail::make_constant_node(v), dimension);
  }

  /// index is one-based, matching the x1..xn surface syntax.
  static Expr variable(int index, int dimension) {
    if (index < 1 || index > dimension)
      throw DimensionError("variable index out of range: x" + std::to_string(index));
    return Expr(detail::make_variable_node(index - 1), dimension);
  }

  int dimension() const noexcept { return n_; }
  const Node& root() const noexcept { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }
  bool depends_on_state() const noexcept { return root_->has_variable; }

  /// Same expression with a larger declared dimension.
  Expr with_dimension(int dimension) const { return Expr(root_, dimension); }

  double eval(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_) {
      throw DimensionError("eval: point has dimension " + std::to_string(x.size()) +
                           ", expected " + std::to_string(n_));
    }
    std::array<double, 64> small;
    small[0] = 0.0;
    std::vector<double> large;
    double* stack = small.data();
    if (stack_depth_ > static_cast<int>(small.size())) {
      large.resize(static_cast<std::size_t>(stack_depth_));
      stack = large.data();
    }
    int top = 0;
    for (const auto& ins : program_) {
      switch (ins.op) {
        case Op::Constant: stack[top++] = ins.value; break;
        case Op::Variable: stack[top++] = x[static_cast<std::size_t>(ins.index)]; break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow:
          --top;
          stack[top - 1] = detail::apply_binary(ins.op, stack[top - 1], stack[top]);
          break;
        default: stack[top - 1] = detail::apply_unary(ins.op, stack[top - 1]); break;
      }
    }
    return stack[0];
  }

  double eval(const Vector& x) const {
    return eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }

  Jet2 eval_jet(const Vector& x) const {
    if (x.size() != n_) {
      throw DimensionError("eval_jet: point has dimension " + std::to_string(x.size()) +
                           ", expected " + std::to_string(n_));
    }
    Jet2 jet = jet_of(*root_, x);
    if (!jet.smooth) invalidate(jet);
    return jet;
  }

  std::string render() const {
    std::string out;
    detail::render_into(*root_, out);
    return out;
  }

  friend bool operator==(const Expr& a, const Expr& b) {
    return detail::same_structure(*a.root_, *b.root_);
  }

 private:
  NodePtr root_;
  int n_ = 0;
  std::vector<detail::Instr> program_;
  int stack_depth_ = 0;

  Jet2 zero_jet(double value) const {
    return Jet2{value, Vector::Zero(n_), Matrix::Zero(n_, n_), true};
  }

  static void invalidate(Jet2& jet) {
    const double nan = std::nan("");
    jet.gradient.setConstant(nan);
    jet.hessian.setConstant(nan);
    jet.smooth = false;
  }

  // v = f(u): gradient f' du, Hessian f' Hu + f'' du du^T.
  static Jet2 chain(const Jet2& u, double value, double d1, double d2) {
    Jet2 out;
    out.value = value;
    out.smooth = u.smooth;
    if (!u.smooth) {
      out.gradient = u.gradient;
      out.hessian = u.hessian;
      return out;
    }
    out.gradient = d1 * u.gradient;
    out.hessian = d1 * u.hessian + d2 * (u.gradient * u.gradient.transpose());
    out.hessian = symmetrize(out.hessian);
    return out;
  }

  // Evaluates a variable-free subtree with the same primitives as eval().
  static double constant_value(const Node& node) {
    switch (node.op) {
      case Op::Constant: return node.value;
      case Op::Variable: throw Error("constant_value: subtree depends on the state");
      default: break;
    }
    if (detail::is_unary(node.op)) return detail::apply_unary(node.op, constant_value(*node.lhs));
    const double a = constant_value(*node.lhs);
    const double b = constant_value(*node.rhs);
    return detail::apply_binary(node.op, a, b);
  }

  Jet2 jet_of(const Node& node, const Vector& x) const {
    using detail::apply_binary;
    using detail::apply_unary;
    switch (node.op) {
      case Op::Constant: return zero_jet(node.value);
      case Op::Variable: {
        Jet2 j = zero_jet(x(node.index));
        j.gradient(node.index) = 1.0;
        return j;
      }
      case Op::Add:
      case Op::Sub: {
        Jet2 a = jet_of(*node.lhs, x);
        Jet2 b = jet_of(*node.rhs, x);
        const double s = node.op == Op::Add ? 1.0 : -1.0;
        Jet2 out{apply_binary(node.op, a.value, b.value), a.gradient + s * b.gradient,
                 a.hessian + s * b.hessian, a.smooth && b.smooth};
        return out;
      }
      case Op::Mul: {
        Jet2 a = jet_of(*node.lhs, x);
        Jet2 b = jet_of(*node.rhs, x);
        Jet2 out;
        out.value = a.value * b.value;
        out.smooth = a.smooth && b.smooth;
        out.gradient = a.value * b.gradient + b.value * a.gradient;
        const Matrix cross = a.gradient * b.gradient.transpose();
        out.hessian = a.value * b.hessian + b.value * a.hessian + cross + cross.transpose();
        return out;
      }
      case Op::Div: {
        Jet2 a = jet_of(*node.lhs, x);
        Jet2 b = jet_of(*node.rhs, x);
        const double q = apply_binary(Op::Div, a.value, b.value);
        // a/b = a * r(b) with r = 1/b.
        const double inv = 1.0 / b.value;
        Jet2 r = chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
        Jet2 out;
        out.value = q;
        out.smooth = a.smooth && r.smooth;
        out.gradient = a.value * r.gradient + r.value * a.gradient;
        const Matrix cross = a.gradient * r.gradient.transpose();
        out.hessian = a.value * r.hessian + r.value * a.hessian + cross + cross.transpose();
        return out;
      }
      case Op::Pow: return pow_jet(node, x);
      case Op::Neg: {
        Jet2 a = jet_of(*node.lhs, x);
        return Jet2{-a.value, -a.gradient, -a.hessian, a.smooth};
      }
      default: break;
    }

    Jet2 u = jet_of(*node.lhs, x);
    const double a = u.value;
    const double v = apply_unary(node.op, a);
    switch (node.op) {
      case Op::Abs:
        if (a == 0.0) return mark_kink(u, v);
        return chain(u, v, a > 0.0 ? 1.0 : -1.0, 0.0);
      case Op::Sgn:
        if (a == 0.0) return mark_kink(u, v);
        return chain(u, v, 0.0, 0.0);
      case Op::Sin: return chain(u, v, std::cos(a), -std::sin(a));
      case Op::Cos: return chain(u, v, -std::sin(a), -std::cos(a));
      case Op::Exp: return chain(u, v, v, v);
      case Op::Log: return chain(u, v, 1.0 / a, -1.0 / (a * a));
      case Op::Sqrt:
        if (a == 0.0) return mark_kink(u, v);
        return chain(u, v, 0.5 / v, -0.25 / (v * a));
      default: break;
    }
    throw Error("eval_jet: unhandled operator");
  }

  static Jet2 mark_kink(const Jet2& u, double value) {
    Jet2 out{value, u.gradient, u.hessian, false};
    return out;
  }

  Jet2 pow_jet(const Node& node, const Vector& x) const {
    Jet2 base = jet_of(*node.lhs, x);
    if (!node.rhs->has_variable) {
      const double c = constant_value(*node.rhs);
      const double a = base.value;
      const double v = detail::apply_binary(Op::Pow, a, c);
      const bool integral = detail::is_integer(c);
      if (a == 0.0 && !integral && c < 2.0) return mark_kink(base, v);
      const double d1 = c == 0.0 ? 0.0 : c * std::pow(a, c - 1.0);
      const double d2 = (c == 0.0 || c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(a, c - 2.0);
      return chain(base, v, d1, d2);
    }
    Jet2 expo = jet_of(*node.rhs, x);
    const double v = detail::apply_binary(Op::Pow, base.value, expo.value);
    if (base.value <= 0.0) {
      // d/db a^b involves log(a): undefined here.
      return Jet2{v, base.gradient, base.hessian, false};
    }
    // a^b = exp(b log a); w = b log a.
    const double la = std::log(base.value);
    Jet2 log_a = chain(base, la, 1.0 / base.value, -1.0 / (base.value * base.value));
    Jet2 w;
    w.value = expo.value * la;
    w.smooth = log_a.smooth && expo.smooth;
    w.gradient = expo.value * log_a.gradient + la * expo.gradient;
    const Matrix cross = expo.gradient * log_a.gradient.transpose();
    w.hessian = expo.value * log_a.hessian + la * expo.hessian + cross + cross.transpose();
    Jet2 out = chain(w, v, v, v);
    return out;
  }
};

inline Expr parse(std::string_view source, int dimension) {
  if (dimension < 0) throw DimensionError("parse: negative dimension");
  detail::Parser parser(source, dimension);
  return Expr(parser.parse(), dimension);
}

inline double eval(const Expr& e, const Vector& x) { return e.eval(x); }
inline Jet2 eval_jet(const Expr& e, const Vector& x) { return e.eval_jet(x); }
inline std::string render(const Expr& e) { return e.render(); }

// Builders. Results take the larger declared dimension of the operands.
inline Expr operator+(const Expr& a, const Expr& b) {
  return Expr(detail::make_node(Op::Add, a.root_ptr(), b.root_ptr()),
              std::max(a.dimension(), b.dimension()));
}
inline Expr operator-(const Expr& a, const Expr& b) {
  return Expr(detail::make_node(Op::Sub, a.root_ptr(), b.root_ptr()),
              std::max(a.dimension(), b.dimension()));
}
inline Expr operator*(const Expr& a, const Expr& b) {
  return Expr(detail::make_node(Op::Mul, a.root_ptr(), b.root_ptr()),
              std::max(a.dimension(), b.dimension()));
}
inline Expr operator/(const Expr& a, const Expr& b) {
  return Expr(detail::make_node(Op::Div, a.root_ptr(), b.root_ptr()),
              std::max(a.dimension(), b.dimension()));
}
inline Expr operator-(const Expr& a) {
  return Expr(detail::negate_node(a.root_ptr()), a.dimension());
}
inline Expr pow(const Expr& a, const Expr& b) {
  return Expr(detail::make_node(Op::Pow, a.root_ptr(), b.root_ptr()),
              std::max(a.dimension(), b.dimension()));
}
inline Expr apply(Op func, const Expr& a) {
  if (!detail::is_unary(func) || func == Op::Neg)
    throw InvalidArgument("apply: not a function operator");
  return Expr(detail::make_node(func, a.root_ptr(), nullptr), a.dimension());
}

/// sum_j coeffs[j] * x_{j+1} + offset, skipping zero coefficients.
inline Expr linear_form(const Vector& coeffs, double offset = 0.0) {
  const int n = static_cast<int>(coeffs.size());
  Expr acc;
  bool any = false;
  for (int j = 0; j < n; ++j) {
    if (coeffs(j) == 0.0) continue;
    Expr term = Expr::constant(coeffs(j), n) * Expr::variable(j + 1, n);
    acc = any ? acc + term : term;
    any = true;
  }
  if (!any) return Expr::constant(offset, n);
  if (offset != 0.0) acc = acc + Expr::constant(offset, n);
  return acc.with_dimension(n);
}

}  // namespace slf
