#pragma once

// Small arithmetic language for writing f+, f-, g and h in config files.
//
//   expr   := term   (('+' | '-') term)*
//   term   := unary  (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' INTEGER)?
//   atom   := NUMBER | VARIABLE | FUNC '(' expr ')' | '(' expr ')'
//
// Variables are x1..xn, y1..ym and eps; functions are sin, cos, exp, tanh.
// Exponents are non-negative integer literals so that derivatives stay closed.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include "sfslide/linalg.hpp"

namespace sfslide::expr {

enum class VarKind { X, Y, Eps };

/// A variable reference; `index` is zero-based (x1 has index 0).
struct VarId {
  VarKind kind = VarKind::Eps;
  int index = 0;

  static VarId x(int i) { return {VarKind::X, i}; }
  static VarId y(int i) { return {VarKind::Y, i}; }
  static VarId eps() { return {VarKind::Eps, 0}; }

  std::string name() const;
  friend bool operator==(const VarId&, const VarId&) = default;
};

enum class Func { Sin, Cos, Exp, Tanh };
enum class BinOp { Add, Sub, Mul, Div };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Type { Const, Var, Neg, Call, Binary, Pow };

  Type type = Type::Const;
  std::size_t offset = 0;  // byte offset of the construct in the source text
  double value = 0.0;      // Const
  VarId var{};             // Var
  Func func = Func::Sin;   // Call
  BinOp op = BinOp::Add;   // Binary
  int exponent = 0;        // Pow
  NodePtr lhs;             // operand of Neg/Call/Pow, left side of Binary
  NodePtr rhs;             // right side of Binary
};

/// Immutable expression tree bound to slow/fast dimensions (n, m).
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, int n, int m) : root_(std::move(root)), n_(n), m_(m) {}

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  int n() const { return n_; }
  int m() const { return m_; }
  bool empty() const { return !root_; }

  /// Minimal-parenthesis rendering; parse(to_string()) gives the same tree.
  std::string to_string() const;

  /// Number of nodes; useful for depth/size bookkeeping in tests.
  std::size_t size() const;
  std::size_t depth() const;

 private:
  NodePtr root_;
  int n_ = 0;
  int m_ = 0;
};

struct EvalEnv {
  const Vec& x;
  const Vec& y;
  double eps = 0.0;
};

/// Parses `source` for a system with n slow and m fast variables.
/// Throws Error{SyntaxError | UnknownIdentifier | IndexOutOfRange}.
Expr parse(std::string_view source, int n, int m);

/// Evaluates in IEEE double. A non-finite result throws Error{NonFinite} whose
/// details carry the source offset of the first node that produced it.
double eval(const Expr& e, const EvalEnv& env);

/// Exact symbolic derivative with constant folding and 0/1 elimination.
Expr differentiate(const Expr& e, VarId var);

/// Compares trees ignoring source offsets.
bool structurally_equal(const Expr& a, const Expr& b);

// Node builders with the folding rules used by differentiate(). Exposed for
// tests and for assembling affine systems programmatically.
NodePtr make_const(double v, std::size_t offset = 0);
NodePtr make_var(VarId v, std::size_t offset = 0);
NodePtr make_neg(NodePtr a, std::size_t offset = 0);
NodePtr make_call(Func f, NodePtr a, std::size_t offset = 0);
NodePtr make_binary(BinOp op, NodePtr a, NodePtr b, std::size_t offset = 0);
NodePtr make_pow(NodePtr base, int exponent, std::size_t offset = 0);

}  // namespace sfslide::expr
