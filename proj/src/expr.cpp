#include "hofilt/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <bit>

#include "hofilt/error.hpp"

namespace hofilt {

struct Expr::Node {
  Op op = Op::Constant;
  double value = 0.0;
  int index = 0;     // Var
  int exponent = 0;  // Pow
  std::vector<Expr> children;
  int max_var = 0;
  std::size_t size = 1;
};

namespace {

double ipow(double base, int k) {
  if (k == 0) return 1.0;
  double r = base;
  for (int i = 1; i < k; ++i) r *= base;
  return r;
}

double apply_func(Op op, double v) {
  switch (op) {
    case Op::Sin: return std::sin(v);
    case Op::Cos: return std::cos(v);
    case Op::Exp: return std::exp(v);
    case Op::Tanh: return std::tanh(v);
    default: return v;
  }
}

bool is_func(Op op) { return op == Op::Sin || op == Op::Cos || op == Op::Exp || op == Op::Tanh; }

const char* func_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Tanh: return "tanh";
    default: return "?";
  }
}

}  // namespace

Expr Expr::make_node(Op op, std::vector<Expr> children, int exponent) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->exponent = exponent;
  for (const auto& c : children) {
    n->max_var = std::max(n->max_var, c.max_var());
    n->size += c.node_count();
  }
  n->children = std::move(children);
  return Expr(std::move(n));
}

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::var(int index) {
  if (index < 1) throw DomainError("variable index must be >= 1");
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  n->max_var = index;
  return Expr(std::move(n));
}

Expr Expr::add(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  double c = 0.0;
  bool has_c = false;
  auto take = [&](const Expr& t) {
    if (t.is_constant()) {
      c += t.value();
      has_c = true;
    } else {
      flat.push_back(t);
    }
  };
  for (const auto& t : terms) {
    if (t.op() == Op::Add) {
      for (const auto& s : t.children()) take(s);
    } else {
      take(t);
    }
  }
  if (flat.empty()) return constant(has_c ? c : 0.0);
  if (c != 0.0) flat.push_back(constant(c));
  if (flat.size() == 1) return flat.front();
  return make_node(Op::Add, std::move(flat));
}

Expr Expr::mul(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  double c = 1.0;
  auto take = [&](const Expr& f, auto& self) -> void {
    switch (f.op()) {
      case Op::Constant: c *= f.value(); break;
      case Op::Neg:
        c = -c;
        self(f.children()[0], self);
        break;
      case Op::Mul:
        for (const auto& s : f.children()) self(s, self);
        break;
      default: flat.push_back(f);
    }
  };
  for (const auto& f : factors) take(f, take);
  if (c == 0.0 || flat.empty()) return constant(c);
  if (c == -1.0) {
    return neg(flat.size() == 1 ? flat.front() : make_node(Op::Mul, std::move(flat)));
  }
  if (c != 1.0) flat.insert(flat.begin(), constant(c));
  if (flat.size() == 1) return flat.front();
  return make_node(Op::Mul, std::move(flat));
}

Expr Expr::pow(Expr base, int exponent) {
  if (exponent < 0) throw NonIntegerExponent("negative exponent " + std::to_string(exponent));
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) return constant(ipow(base.value(), exponent));
  if (base.op() == Op::Pow) return pow(base.children()[0], base.exponent() * exponent);
  return make_node(Op::Pow, {std::move(base)}, exponent);
}

Expr Expr::neg(Expr operand) {
  switch (operand.op()) {
    case Op::Constant: return constant(-operand.value());
    case Op::Neg: return operand.children()[0];
    case Op::Mul: {
      auto ch = operand.children();
      if (ch[0].is_constant()) {
        std::vector<Expr> f(ch.begin(), ch.end());
        f[0] = constant(-ch[0].value());
        return make_node(Op::Mul, std::move(f));
      }
      break;
    }
    default: break;
  }
  return make_node(Op::Neg, {std::move(operand)});
}

Expr Expr::func(Op op, Expr operand) {
  if (!is_func(op)) throw DomainError("not a unary primitive");
  if (operand.is_constant()) return constant(apply_func(op, operand.value()));
  return make_node(op, {std::move(operand)});
}

Op Expr::op() const noexcept { return node_->op; }
double Expr::value() const noexcept { return node_->value; }
int Expr::index() const noexcept { return node_->index; }
int Expr::exponent() const noexcept { return node_->exponent; }
std::span<const Expr> Expr::children() const noexcept { return node_->children; }
int Expr::max_var() const noexcept { return node_->max_var; }
std::size_t Expr::node_count() const noexcept { return node_->size; }

namespace {

double eval_node(const Expr& e, std::span<const double> x) {
  switch (e.op()) {
    case Op::Constant: return e.value();
    case Op::Var: return x[static_cast<std::size_t>(e.index() - 1)];
    case Op::Add: {
      auto ch = e.children();
      double s = eval_node(ch[0], x);
      for (std::size_t i = 1; i < ch.size(); ++i) s += eval_node(ch[i], x);
      return s;
    }
    case Op::Mul: {
      auto ch = e.children();
      double p = eval_node(ch[0], x);
      for (std::size_t i = 1; i < ch.size(); ++i) p *= eval_node(ch[i], x);
      return p;
    }
    case Op::Pow: return ipow(eval_node(e.children()[0], x), e.exponent());
    case Op::Neg: return -eval_node(e.children()[0], x);
    default: return apply_func(e.op(), eval_node(e.children()[0], x));
  }
}

}  // namespace

double Expr::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) < max_var()) {
    throw LengthMismatch("expression uses x" + std::to_string(max_var()) + " but point has " +
                         std::to_string(x.size()) + " components");
  }
  return eval_node(*this, x);
}

bool Expr::structurally_equal(const Expr& other) const {
  if (node_ == other.node_) return true;
  if (op() != other.op()) return false;
  switch (op()) {
    case Op::Constant: return value() == other.value();
    case Op::Var: return index() == other.index();
    case Op::Pow:
      if (exponent() != other.exponent()) return false;
      break;
    default: break;
  }
  auto a = children();
  auto b = other.children();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].structurally_equal(b[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// diff

Expr diff(const Expr& e, int k) {
  if (k < 1) throw DomainError("variable index must be >= 1");
  if (e.max_var() < k) return Expr::constant(0.0);
  switch (e.op()) {
    case Op::Constant: return Expr::constant(0.0);
    case Op::Var: return Expr::constant(e.index() == k ? 1.0 : 0.0);
    case Op::Add: {
      std::vector<Expr> terms;
      for (const auto& c : e.children()) terms.push_back(diff(c, k));
      return Expr::add(std::move(terms));
    }
    case Op::Mul: {
      auto ch = e.children();
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < ch.size(); ++i) {
        Expr d = diff(ch[i], k);
        if (d.is_constant(0.0)) continue;
        std::vector<Expr> f(ch.begin(), ch.end());
        f[i] = d;
        terms.push_back(Expr::mul(std::move(f)));
      }
      return Expr::add(std::move(terms));
    }
    case Op::Pow: {
      const Expr& b = e.children()[0];
      return Expr::mul({Expr::constant(e.exponent()), Expr::pow(b, e.exponent() - 1), diff(b, k)});
    }
    case Op::Neg: return Expr::neg(diff(e.children()[0], k));
    case Op::Sin: {
      const Expr& u = e.children()[0];
      return Expr::mul({Expr::func(Op::Cos, u), diff(u, k)});
    }
    case Op::Cos: {
      const Expr& u = e.children()[0];
      return Expr::neg(Expr::mul({Expr::func(Op::Sin, u), diff(u, k)}));
    }
    case Op::Exp: return Expr::mul({e, diff(e.children()[0], k)});
    case Op::Tanh: {
      // tanh' = 1 - tanh^2
      const Expr& u = e.children()[0];
      return Expr::mul({Expr::add({Expr::constant(1.0), Expr::neg(Expr::pow(e, 2))}), diff(u, k)});
    }
  }
  return Expr::constant(0.0);
}

bool is_bounded(const Expr& e) {
  switch (e.op()) {
    case Op::Constant: return true;
    case Op::Var: return false;
    case Op::Sin:
    case Op::Cos:
    case Op::Tanh: return true;
    default:
      return std::all_of(e.children().begin(), e.children().end(),
                         [](const Expr& c) { return is_bounded(c); });
  }
}

// ---------------------------------------------------------------------------
// print

namespace {

constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecUnary = 3;
constexpr int kPrecPow = 4;
constexpr int kPrecAtom = 5;

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), end);
  if (s == "inf" || s == "-inf" || s == "nan" || s == "-nan") {
    throw DomainError("cannot print non-finite constant");
  }
  return s;
}

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Constant: return e.value() < 0 || std::signbit(e.value()) ? kPrecUnary : kPrecAtom;
    case Op::Var: return kPrecAtom;
    case Op::Add: return kPrecAdd;
    case Op::Mul: return e.children()[0].is_constant() && e.children()[0].value() < 0 ? kPrecUnary
                                                                                       : kPrecMul;
    case Op::Pow: return kPrecPow;
    case Op::Neg: return kPrecUnary;
    default: return kPrecAtom;
  }
}

void print_to(std::string& out, const Expr& e, int min_prec);

void print_raw(std::string& out, const Expr& e) {
  switch (e.op()) {
    case Op::Constant: out += format_number(e.value()); break;
    case Op::Var:
      out += 'x';
      out += std::to_string(e.index());
      break;
    case Op::Add: {
      auto ch = e.children();
      print_to(out, ch[0], kPrecAdd);
      for (std::size_t i = 1; i < ch.size(); ++i) {
        const Expr& t = ch[i];
        if (t.op() == Op::Neg) {
          out += " - ";
          print_to(out, t.children()[0], kPrecMul);
        } else if (t.is_constant() && t.value() < 0) {
          out += " - ";
          out += format_number(-t.value());
        } else if (t.op() == Op::Mul && t.children()[0].is_constant() &&
                   t.children()[0].value() < 0) {
          out += " - ";
          print_to(out, Expr::neg(t), kPrecMul);
        } else {
          out += " + ";
          print_to(out, t, kPrecMul);
        }
      }
      break;
    }
    case Op::Mul: {
      auto ch = e.children();
      print_to(out, ch[0], kPrecUnary);
      for (std::size_t i = 1; i < ch.size(); ++i) {
        out += '*';
        print_to(out, ch[i], kPrecPow);
      }
      break;
    }
    case Op::Pow:
      print_to(out, e.children()[0], kPrecAtom);
      out += '^';
      out += std::to_string(e.exponent());
      break;
    case Op::Neg:
      out += '-';
      print_to(out, e.children()[0], kPrecPow);
      break;
    default:
      out += func_name(e.op());
      out += '(';
      print_to(out, e.children()[0], 0);
      out += ')';
  }
}

void print_to(std::string& out, const Expr& e, int min_prec) {
  if (precedence(e) < min_prec) {
    out += '(';
    print_raw(out, e);
    out += ')';
  } else {
    print_raw(out, e);
  }
}

}  // namespace

std::string print(const Expr& e) {
  std::string out;
  print_to(out, e, 0);
  return out;
}

// ---------------------------------------------------------------------------
// parse

namespace {

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Expr run() {
    Expr e = expression();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) const {
    std::string found = pos_ < text_.size() ? std::string("'") + text_[pos_] + "'" : "end of input";
    throw SyntaxError(pos_, "expected " + expected + ", found " + found);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("'") + c + "'");
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::add({lhs, term()});
      } else if (accept('-')) {
        lhs = Expr::add({lhs, Expr::neg(term())});
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::mul({lhs, unary()});
      } else if (accept('/')) {
        std::size_t at = pos_;
        Expr rhs = unary();
        if (!rhs.is_constant() || rhs.value() == 0.0) {
          throw SyntaxError(at, "division is only allowed by a nonzero constant");
        }
        lhs = Expr::mul({lhs, Expr::constant(1.0 / rhs.value())});
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::neg(unary());
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!accept('^')) return base;
    std::size_t at = pos_;
    skip_ws();
    at = pos_;
    Expr ex = exponent_operand();
    if (!ex.is_constant()) throw NonIntegerExponent("exponent at position " + std::to_string(at) +
                                                    " is not a constant");
    double v = ex.value();
    if (v < 0 || v != std::floor(v) || v > 1024) {
      throw NonIntegerExponent("exponent " + format_number(v) + " at position " +
                               std::to_string(at) + " is not a non-negative integer");
    }
    return Expr::pow(base, static_cast<int>(v));
  }

  // Right-associative; a leading sign is accepted so that x^-1 gets a
  // precise error instead of a syntax error.
  Expr exponent_operand() {
    if (accept('-')) return Expr::neg(exponent_operand());
    if (accept('+')) return exponent_operand();
    return power();
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("operand");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("operand");
  }

  Expr number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("number");
    }
    return Expr::constant(v);
  }

  Expr identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);
    for (Op op : {Op::Sin, Op::Cos, Op::Exp, Op::Tanh}) {
      if (name == func_name(op)) {
        expect('(');
        Expr arg = expression();
        expect(')');
        return Expr::func(op, arg);
      }
    }
    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int idx = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec == std::errc() && idx >= 1 && idx <= dim_) return Expr::var(idx);
      throw UnknownVariable(std::string(name), dim_);
    }
    std::size_t next = pos_;
    while (next < text_.size() && std::isspace(static_cast<unsigned char>(text_[next]))) ++next;
    if (next < text_.size() && text_[next] == '(') throw SyntaxError(start, "unknown function '" + std::string(name) + "'");
    pos_ = start;
    throw UnknownVariable(std::string(name), dim_);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text, int dim) {
  if (dim < 1) throw DomainError("state dimension must be positive");
  return Parser(text, dim).run();
}

// ---------------------------------------------------------------------------
// CompiledExpr

CompiledExpr::CompiledExpr(const Expr& e) : max_var_(e.max_var()) {
  // Key: op, payload bits and operand registers.
  std::map<std::vector<std::uint64_t>, std::uint32_t> seen;
  auto emit = [&](const Expr& n, auto& self) -> std::uint32_t {
    Instr in{n.op(), 0, 0, 0.0};
    std::vector<std::uint64_t> key{static_cast<std::uint64_t>(n.op())};
    std::vector<std::uint32_t> operands;
    switch (n.op()) {
      case Op::Constant:
        in.value = n.value();
        key.push_back(std::bit_cast<std::uint64_t>(in.value));
        break;
      case Op::Var:
        in.arg = static_cast<std::uint32_t>(n.index() - 1);
        key.push_back(in.arg);
        break;
      case Op::Add:
      case Op::Mul:
        for (const auto& c : n.children()) operands.push_back(self(c, self));
        in.arg = static_cast<std::uint32_t>(args_.size());
        in.count = static_cast<std::uint32_t>(operands.size());
        key.insert(key.end(), operands.begin(), operands.end());
        break;
      case Op::Pow:
        operands.push_back(self(n.children()[0], self));
        in.arg = static_cast<std::uint32_t>(n.exponent());
        key.push_back(in.arg);
        key.push_back(operands[0]);
        break;
      default:
        operands.push_back(self(n.children()[0], self));
        key.push_back(operands[0]);
        break;
    }
    if (auto it = seen.find(key); it != seen.end()) return it->second;
    if (n.op() == Op::Add || n.op() == Op::Mul) {
      args_.insert(args_.end(), operands.begin(), operands.end());
    } else if (!operands.empty()) {
      in.count = operands[0];
    }
    const auto reg = static_cast<std::uint32_t>(code_.size());
    code_.push_back(in);
    seen.emplace(std::move(key), reg);
    return reg;
  };
  emit(e, emit);
}

double CompiledExpr::eval(std::span<const double> x) const {
  constexpr std::size_t kInline = 256;
  std::array<double, kInline> small;
  std::vector<double> big;
  double* r = small.data();
  if (code_.size() > kInline) {
    big.resize(code_.size());
    r = big.data();
  }
  for (std::size_t k = 0; k < code_.size(); ++k) {
    const Instr& in = code_[k];
    switch (in.op) {
      case Op::Constant: r[k] = in.value; break;
      case Op::Var: r[k] = x[in.arg]; break;
      case Op::Add: {
        const std::uint32_t* a = args_.data() + in.arg;
        double s = r[a[0]];
        for (std::uint32_t i = 1; i < in.count; ++i) s += r[a[i]];
        r[k] = s;
        break;
      }
      case Op::Mul: {
        const std::uint32_t* a = args_.data() + in.arg;
        double p = r[a[0]];
        for (std::uint32_t i = 1; i < in.count; ++i) p *= r[a[i]];
        r[k] = p;
        break;
      }
      case Op::Pow: r[k] = ipow(r[in.count], static_cast<int>(in.arg)); break;
      case Op::Neg: r[k] = -r[in.count]; break;
      default: r[k] = apply_func(in.op, r[in.count]); break;
    }
  }
  return code_.empty() ? 0.0 : r[code_.size() - 1];
}

}  // namespace hofilt
