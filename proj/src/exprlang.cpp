#include "sfslide/exprlang.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

#include "sfslide/error.hpp"

namespace sfslide::expr {

namespace {

constexpr int kMaxDepth = 512;

NodePtr raw_const(double v, std::size_t off) {
  auto n = std::make_shared<Node>();
  n->type = Node::Type::Const;
  n->value = v;
  n->offset = off;
  return n;
}

NodePtr raw_var(VarId v, std::size_t off) {
  auto n = std::make_shared<Node>();
  n->type = Node::Type::Var;
  n->var = v;
  n->offset = off;
  return n;
}

NodePtr raw_neg(NodePtr a, std::size_t off) {
  auto n = std::make_shared<Node>();
  n->type = Node::Type::Neg;
  n->lhs = std::move(a);
  n->offset = off;
  return n;
}

NodePtr raw_call(Func f, NodePtr a, std::size_t off) {
  auto n = std::make_shared<Node>();
  n->type = Node::Type::Call;
  n->func = f;
  n->lhs = std::move(a);
  n->offset = off;
  return n;
}

NodePtr raw_binary(BinOp op, NodePtr a, NodePtr b, std::size_t off) {
  auto n = std::make_shared<Node>();
  n->type = Node::Type::Binary;
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  n->offset = off;
  return n;
}

NodePtr raw_pow(NodePtr base, int k, std::size_t off) {
  auto n = std::make_shared<Node>();
  n->type = Node::Type::Pow;
  n->lhs = std::move(base);
  n->exponent = k;
  n->offset = off;
  return n;
}

const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Exp: return "exp";
    case Func::Tanh: return "tanh";
  }
  return "?";
}

std::optional<Func> func_from_name(std::string_view s) {
  if (s == "sin") return Func::Sin;
  if (s == "cos") return Func::Cos;
  if (s == "exp") return Func::Exp;
  if (s == "tanh") return Func::Tanh;
  return std::nullopt;
}

double apply(Func f, double v) {
  switch (f) {
    case Func::Sin: return std::sin(v);
    case Func::Cos: return std::cos(v);
    case Func::Exp: return std::exp(v);
    case Func::Tanh: return std::tanh(v);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double apply(BinOp op, double a, double b) {
  switch (op) {
    case BinOp::Add: return a + b;
    case BinOp::Sub: return a - b;
    case BinOp::Mul: return a * b;
    case BinOp::Div: return a / b;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double int_pow(double base, int k) {
  double result = 1.0;
  double b = base;
  unsigned e = static_cast<unsigned>(k);
  while (e) {
    if (e & 1u) result *= b;
    b *= b;
    e >>= 1u;
  }
  return result;
}

// ---------------------------------------------------------------- lexer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind = Tok::End;
  std::size_t offset = 0;
  std::string_view text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
    Token t;
    t.offset = pos_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::End;
      return t;
    }
    const char c = src_[pos_];
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) return lex_number();
    if (is_alpha(c)) {
      std::size_t end = pos_ + 1;
      while (end < src_.size() && (is_alpha(src_[end]) || is_digit(src_[end]))) ++end;
      t.kind = Tok::Ident;
      t.text = src_.substr(pos_, end - pos_);
      pos_ = end;
      return t;
    }
    ++pos_;
    t.text = src_.substr(t.offset, 1);
    switch (c) {
      case '+': t.kind = Tok::Plus; return t;
      case '-': t.kind = Tok::Minus; return t;
      case '*': t.kind = Tok::Star; return t;
      case '/': t.kind = Tok::Slash; return t;
      case '^': t.kind = Tok::Caret; return t;
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      default:
        throw Error(ErrorKind::SyntaxError, "unexpected character '" + std::string(1, c) + "'",
                    {{"offset", t.offset}, {"expected", "operand or operator"}});
    }
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }

  Token lex_number() {
    Token t;
    t.offset = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && is_digit(src_[end])) ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && is_digit(src_[end])) ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
      if (e < src_.size() && is_digit(src_[e])) {
        while (e < src_.size() && is_digit(src_[e])) ++e;
        end = e;
      }
    }
    t.kind = Tok::Number;
    t.text = src_.substr(pos_, end - pos_);
    const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
    if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size()) {
      throw Error(ErrorKind::SyntaxError, "malformed number '" + std::string(t.text) + "'",
                  {{"offset", t.offset}, {"expected", "number"}});
    }
    pos_ = end;
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- parser

class Parser {
 public:
  Parser(std::string_view src, int n, int m) : lex_(src), n_(n), m_(m) { tok_ = lex_.next(); }

  NodePtr parse_all() {
    NodePtr e = parse_expr();
    if (tok_.kind != Tok::End) fail("end of input");
    return e;
  }

 private:
  [[noreturn]] void fail(const char* expected) const {
    const std::string got = tok_.kind == Tok::End ? "end of input" : "'" + std::string(tok_.text) + "'";
    throw Error(ErrorKind::SyntaxError,
                "syntax error at offset " + std::to_string(tok_.offset) + ": expected " + expected + ", got " + got,
                {{"offset", tok_.offset}, {"expected", expected}});
  }

  void advance() { tok_ = lex_.next(); }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > kMaxDepth) p_.fail("shallower nesting");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  NodePtr parse_expr() {
    DepthGuard guard(*this);
    NodePtr lhs = parse_term();
    while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
      const BinOp op = tok_.kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
      const std::size_t off = tok_.offset;
      advance();
      lhs = raw_binary(op, lhs, parse_term(), off);
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
      const BinOp op = tok_.kind == Tok::Star ? BinOp::Mul : BinOp::Div;
      const std::size_t off = tok_.offset;
      advance();
      lhs = raw_binary(op, lhs, parse_unary(), off);
    }
    return lhs;
  }

  NodePtr parse_unary() {
    if (tok_.kind == Tok::Minus) {
      DepthGuard guard(*this);
      const std::size_t off = tok_.offset;
      advance();
      return raw_neg(parse_unary(), off);
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (tok_.kind != Tok::Caret) return base;
    const std::size_t off = tok_.offset;
    advance();
    if (tok_.kind != Tok::Number || tok_.text.find_first_not_of("0123456789") != std::string_view::npos) {
      fail("non-negative integer exponent");
    }
    if (tok_.number > static_cast<double>(std::numeric_limits<int>::max())) fail("exponent within int range");
    const int k = static_cast<int>(tok_.number);
    advance();
    if (tok_.kind == Tok::Caret) fail("operator other than '^' (parenthesize repeated powers)");
    return raw_pow(base, k, off);
  }

  NodePtr parse_atom() {
    const Token t = tok_;
    switch (t.kind) {
      case Tok::Number:
        advance();
        return raw_const(t.number, t.offset);
      case Tok::LParen: {
        advance();
        NodePtr inner = parse_expr();
        if (tok_.kind != Tok::RParen) fail("')'");
        advance();
        return inner;
      }
      case Tok::Ident: {
        advance();
        if (auto f = func_from_name(t.text)) {
          if (tok_.kind != Tok::LParen) fail("'(' after function name");
          advance();
          NodePtr arg = parse_expr();
          if (tok_.kind != Tok::RParen) fail("')'");
          advance();
          return raw_call(*f, arg, t.offset);
        }
        return raw_var(resolve_variable(t), t.offset);
      }
      default:
        fail("number, variable, function call or '('");
    }
  }

  VarId resolve_variable(const Token& t) const {
    const std::string_view s = t.text;
    if (s == "eps") return VarId::eps();
    if (s.size() >= 2 && (s[0] == 'x' || s[0] == 'y') &&
        s.substr(1).find_first_not_of("0123456789") == std::string_view::npos) {
      int idx = 0;
      const auto res = std::from_chars(s.data() + 1, s.data() + s.size(), idx);
      const int limit = s[0] == 'x' ? n_ : m_;
      if (res.ec != std::errc() || idx < 1 || idx > limit) {
        throw Error(ErrorKind::IndexOutOfRange,
                    "variable '" + std::string(s) + "' out of range (" + s[0] + "1.." + s[0] +
                        std::to_string(limit) + ")",
                    {{"offset", t.offset}, {"variable", std::string(s)}, {"limit", limit}});
      }
      return s[0] == 'x' ? VarId::x(idx - 1) : VarId::y(idx - 1);
    }
    throw Error(ErrorKind::UnknownIdentifier, "unknown identifier '" + std::string(s) + "'",
                {{"offset", t.offset}, {"name", std::string(s)}});
  }

  Lexer lex_;
  Token tok_;
  int n_;
  int m_;
  int depth_ = 0;
};

// ---------------------------------------------------------------- printing

int precedence(const Node& n) {
  switch (n.type) {
    case Node::Type::Binary: return (n.op == BinOp::Add || n.op == BinOp::Sub) ? 1 : 2;
    case Node::Type::Neg: return 3;
    case Node::Type::Pow: return 4;
    case Node::Type::Const: return n.value < 0 || std::signbit(n.value) ? 3 : 5;
    default: return 5;
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void print(const Node& n, std::string& out);

void print_operand(const Node& n, int min_prec, std::string& out) {
  if (precedence(n) < min_prec) {
    out += '(';
    print(n, out);
    out += ')';
  } else {
    print(n, out);
  }
}

void print(const Node& n, std::string& out) {
  switch (n.type) {
    case Node::Type::Const:
      out += format_number(n.value);
      return;
    case Node::Type::Var:
      out += n.var.name();
      return;
    case Node::Type::Neg:
      out += '-';
      print_operand(*n.lhs, 3, out);
      return;
    case Node::Type::Call:
      out += func_name(n.func);
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
    case Node::Type::Pow:
      print_operand(*n.lhs, 5, out);
      out += '^';
      out += std::to_string(n.exponent);
      return;
    case Node::Type::Binary: {
      const int p = precedence(n);
      print_operand(*n.lhs, p, out);
      switch (n.op) {
        case BinOp::Add: out += " + "; break;
        case BinOp::Sub: out += " - "; break;
        case BinOp::Mul: out += '*'; break;
        case BinOp::Div: out += '/'; break;
      }
      print_operand(*n.rhs, p + 1, out);
      return;
    }
  }
}

// ---------------------------------------------------------------- evaluation

struct Evaluator {
  const EvalEnv& env;
  const Node* first_bad = nullptr;

  double run(const Node& n) {
    const double v = value(n);
    if (!std::isfinite(v) && first_bad == nullptr) first_bad = &n;
    return v;
  }

  double value(const Node& n) {
    switch (n.type) {
      case Node::Type::Const: return n.value;
      case Node::Type::Var:
        switch (n.var.kind) {
          case VarKind::X: return env.x[n.var.index];
          case VarKind::Y: return env.y[n.var.index];
          case VarKind::Eps: return env.eps;
        }
        return 0.0;
      case Node::Type::Neg: return -run(*n.lhs);
      case Node::Type::Call: return apply(n.func, run(*n.lhs));
      case Node::Type::Pow: return int_pow(run(*n.lhs), n.exponent);
      case Node::Type::Binary: {
        const double a = run(*n.lhs);
        const double b = run(*n.rhs);
        return apply(n.op, a, b);
      }
    }
    return 0.0;
  }
};

// ---------------------------------------------------------------- derivative

bool is_const(const NodePtr& n, double v) { return n->type == Node::Type::Const && n->value == v; }
bool is_const(const NodePtr& n) { return n->type == Node::Type::Const; }

NodePtr derive(const NodePtr& n, VarId var) {
  const std::size_t off = n->offset;
  switch (n->type) {
    case Node::Type::Const: return make_const(0.0, off);
    case Node::Type::Var: return make_const(n->var == var ? 1.0 : 0.0, off);
    case Node::Type::Neg: return make_neg(derive(n->lhs, var), off);
    case Node::Type::Call: {
      const NodePtr& u = n->lhs;
      const NodePtr du = derive(u, var);
      if (is_const(du, 0.0)) return make_const(0.0, off);
      NodePtr outer;
      switch (n->func) {
        case Func::Sin: outer = make_call(Func::Cos, u, off); break;
        case Func::Cos: outer = make_neg(make_call(Func::Sin, u, off), off); break;
        case Func::Exp: outer = n; break;
        case Func::Tanh:
          outer = make_binary(BinOp::Sub, make_const(1.0, off), make_pow(make_call(Func::Tanh, u, off), 2, off), off);
          break;
      }
      return make_binary(BinOp::Mul, outer, du, off);
    }
    case Node::Type::Pow: {
      const NodePtr& u = n->lhs;
      const int k = n->exponent;
      if (k == 0) return make_const(0.0, off);
      const NodePtr du = derive(u, var);
      NodePtr outer = make_binary(BinOp::Mul, make_const(static_cast<double>(k), off), make_pow(u, k - 1, off), off);
      return make_binary(BinOp::Mul, outer, du, off);
    }
    case Node::Type::Binary: {
      const NodePtr& a = n->lhs;
      const NodePtr& b = n->rhs;
      const NodePtr da = derive(a, var);
      const NodePtr db = derive(b, var);
      switch (n->op) {
        case BinOp::Add: return make_binary(BinOp::Add, da, db, off);
        case BinOp::Sub: return make_binary(BinOp::Sub, da, db, off);
        case BinOp::Mul:
          return make_binary(BinOp::Add, make_binary(BinOp::Mul, da, b, off), make_binary(BinOp::Mul, a, db, off),
                             off);
        case BinOp::Div: {
          NodePtr num = make_binary(BinOp::Sub, make_binary(BinOp::Mul, da, b, off),
                                    make_binary(BinOp::Mul, a, db, off), off);
          return make_binary(BinOp::Div, num, make_pow(b, 2, off), off);
        }
      }
    }
  }
  return make_const(0.0, off);
}

bool equal_nodes(const Node& a, const Node& b) {
  if (a.type != b.type) return false;
  switch (a.type) {
    case Node::Type::Const: return a.value == b.value && std::signbit(a.value) == std::signbit(b.value);
    case Node::Type::Var: return a.var == b.var;
    case Node::Type::Neg: return equal_nodes(*a.lhs, *b.lhs);
    case Node::Type::Call: return a.func == b.func && equal_nodes(*a.lhs, *b.lhs);
    case Node::Type::Pow: return a.exponent == b.exponent && equal_nodes(*a.lhs, *b.lhs);
    case Node::Type::Binary: return a.op == b.op && equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
  }
  return false;
}

std::size_t count(const Node& n) {
  std::size_t c = 1;
  if (n.lhs) c += count(*n.lhs);
  if (n.rhs) c += count(*n.rhs);
  return c;
}

std::size_t tree_depth(const Node& n) {
  std::size_t d = 0;
  if (n.lhs) d = std::max(d, tree_depth(*n.lhs));
  if (n.rhs) d = std::max(d, tree_depth(*n.rhs));
  return d + 1;
}

}  // namespace

std::string VarId::name() const {
  switch (kind) {
    case VarKind::X: return "x" + std::to_string(index + 1);
    case VarKind::Y: return "y" + std::to_string(index + 1);
    case VarKind::Eps: return "eps";
  }
  return "?";
}

NodePtr make_const(double v, std::size_t offset) { return raw_const(v, offset); }
NodePtr make_var(VarId v, std::size_t offset) { return raw_var(v, offset); }

NodePtr make_neg(NodePtr a, std::size_t offset) {
  if (is_const(a)) return raw_const(a->value == 0.0 ? 0.0 : -a->value, offset);
  return raw_neg(std::move(a), offset);
}

NodePtr make_call(Func f, NodePtr a, std::size_t offset) {
  if (is_const(a)) return raw_const(apply(f, a->value), offset);
  return raw_call(f, std::move(a), offset);
}

NodePtr make_binary(BinOp op, NodePtr a, NodePtr b, std::size_t offset) {
  if (is_const(a) && is_const(b) && !(op == BinOp::Div && b->value == 0.0)) {
    return raw_const(apply(op, a->value, b->value), offset);
  }
  switch (op) {
    case BinOp::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case BinOp::Sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_neg(b, offset);
      break;
    case BinOp::Mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return raw_const(0.0, offset);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case BinOp::Div:
      if (is_const(a, 0.0) && !is_const(b, 0.0)) return raw_const(0.0, offset);
      if (is_const(b, 1.0)) return a;
      break;
  }
  return raw_binary(op, std::move(a), std::move(b), offset);
}

NodePtr make_pow(NodePtr base, int exponent, std::size_t offset) {
  if (exponent == 0) return raw_const(1.0, offset);
  if (exponent == 1) return base;
  if (is_const(base)) return raw_const(int_pow(base->value, exponent), offset);
  return raw_pow(std::move(base), exponent, offset);
}

std::string Expr::to_string() const {
  std::string out;
  if (root_) print(*root_, out);
  return out;
}

std::size_t Expr::size() const { return root_ ? count(*root_) : 0; }
std::size_t Expr::depth() const { return root_ ? tree_depth(*root_) : 0; }

Expr parse(std::string_view source, int n, int m) {
  if (n < 1 || m < 1) {
    throw Error(ErrorKind::InvalidArgument, "expression dimensions must satisfy n >= 1 and m >= 1",
                {{"n", n}, {"m", m}});
  }
  if (source.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorKind::SyntaxError, "empty expression", {{"offset", 0}, {"expected", "expression"}});
  }
  Parser p(source, n, m);
  return Expr(p.parse_all(), n, m);
}

double eval(const Expr& e, const EvalEnv& env) {
  if (env.x.size() != e.n() || env.y.size() != e.m()) {
    throw Error(ErrorKind::DimensionMismatch, "evaluation environment does not match expression dimensions",
                {{"expected_n", e.n()}, {"expected_m", e.m()}, {"got_n", env.x.size()}, {"got_m", env.y.size()}});
  }
  Evaluator ev{env};
  const double v = ev.run(e.root());
  if (!std::isfinite(v)) {
    const std::size_t off = ev.first_bad ? ev.first_bad->offset : e.root().offset;
    throw Error(ErrorKind::NonFinite, "expression evaluated to a non-finite value (source offset " +
                                          std::to_string(off) + ")",
                {{"offset", off}, {"value", std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf")}});
  }
  return v;
}

Expr differentiate(const Expr& e, VarId var) { return Expr(derive(e.root_ptr(), var), e.n(), e.m()); }

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return equal_nodes(a.root(), b.root());
}

}  // namespace sfslide::expr
