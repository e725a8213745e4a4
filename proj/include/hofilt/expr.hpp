#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hofilt {

enum class Op : std::uint8_t { Constant, Var, Add, Mul, Pow, Neg, Sin, Cos, Exp, Tanh };

/// Immutable expression tree over state variables x1..xd.
///
/// Nodes are shared between trees, so copying an Expr is cheap and values may
/// be handed to other threads freely. All construction goes through the
/// factory functions below, which apply light simplification: constant
/// folding, absorption of 0 and 1, and flattening of nested sums and products.
/// Nothing beyond that is canonicalized, so two mathematically equal
/// expressions may have different trees; compare them with eval.
class Expr {
 public:
  /// The constant 0.
  Expr();

  static Expr constant(double value);
  /// `index` is 1-based.
  static Expr var(int index);
  static Expr add(std::vector<Expr> terms);
  static Expr mul(std::vector<Expr> factors);
  static Expr pow(Expr base, int exponent);
  static Expr neg(Expr operand);
  /// One of Sin, Cos, Exp, Tanh.
  static Expr func(Op op, Expr operand);

  Op op() const noexcept;
  double value() const noexcept;
  int index() const noexcept;
  int exponent() const noexcept;
  std::span<const Expr> children() const noexcept;

  bool is_constant() const noexcept { return op() == Op::Constant; }
  bool is_constant(double v) const noexcept { return is_constant() && value() == v; }

  /// Largest variable index referenced, 0 for closed expressions.
  int max_var() const noexcept;
  std::size_t node_count() const noexcept;

  /// Left-to-right evaluation; bit-identical to CompiledExpr::eval.
  double eval(std::span<const double> x) const;

  bool structurally_equal(const Expr& other) const;

  friend Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
  friend Expr operator-(const Expr& a, const Expr& b) { return add({a, neg(b)}); }
  friend Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
  friend Expr operator-(const Expr& a) { return neg(a); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make_node(Op op, std::vector<Expr> children, int exponent = 0);
  std::shared_ptr<const Node> node_;
};

/// Parses standard infix text over x1..x{dim}. `^` is right-associative,
/// takes only non-negative integer exponents and binds tighter than unary
/// minus. Division is allowed by nonzero constant subexpressions only.
Expr parse(std::string_view text, int dim);

/// Emits text that `parse` accepts and that evaluates to the same values.
std::string print(const Expr& e);

/// Exact partial derivative with respect to x{k} (1-based).
Expr diff(const Expr& e, int k);

/// True when the expression is bounded on all of R^d (no bare variable
/// escapes a bounded primitive). Used to warn about polynomial components.
bool is_bounded(const Expr& e);

/// Register program compiled from an Expr for fast repeated evaluation.
/// Structurally equal subtrees share one register. Produces results
/// bit-identical to Expr::eval.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double eval(std::span<const double> x) const;
  int max_var() const noexcept { return max_var_; }
  /// Number of distinct subexpressions.
  std::size_t registers() const noexcept { return code_.size(); }

 private:
  struct Instr {
    Op op;
    std::uint32_t arg;    // 0-based index for Var, exponent for Pow, else first operand register
    std::uint32_t count;  // operand count for Add/Mul (operands listed in args_)
    double value;
  };
  std::vector<Instr> code_;
  std::vector<std::uint32_t> args_;
  int max_var_ = 0;
};

}  // namespace hofilt
