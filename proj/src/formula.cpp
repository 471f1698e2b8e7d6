#include "tabula/formula.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <sstream>

namespace tabula {

std::string_view to_string(Function fn) {
  switch (fn) {
    case Function::Sum: return "SUM";
    case Function::Average: return "AVERAGE";
    case Function::Count: return "COUNT";
    case Function::Min: return "MIN";
    case Function::Max: return "MAX";
  }
  return "SUM";
}

std::optional<Function> function_from_name(std::string_view name) {
  std::string upper(name);
  for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (auto fn : {Function::Sum, Function::Average, Function::Count, Function::Min, Function::Max})
    if (to_string(fn) == upper) return fn;
  return std::nullopt;
}

char to_char(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
  }
  return '+';
}

// ---------------------------------------------------------------------------
// A1 notation

std::string column_name(int col) {
  std::string s;
  for (int c = col + 1; c > 0; c = (c - 1) / 26)
    s.insert(s.begin(), static_cast<char>('A' + (c - 1) % 26));
  return s;
}

std::string to_a1(CellAddr addr) { return column_name(addr.col) + std::to_string(addr.row + 1); }

std::string to_a1(const CellRange& range) {
  if (range.single()) return to_a1(range.start);
  return to_a1(range.start) + ":" + to_a1(range.end);
}

std::optional<CellAddr> parse_a1(std::string_view text) {
  std::size_t i = 0;
  int col = 0;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
    if (i >= 3) return std::nullopt;
    col = col * 26 + (std::toupper(static_cast<unsigned char>(text[i])) - 'A' + 1);
    ++i;
  }
  if (i == 0 || i == text.size() || text[i] == '0') return std::nullopt;
  int row = 0;
  for (; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
    row = row * 10 + (text[i] - '0');
    if (row > 10'000'000) return std::nullopt;
  }
  return CellAddr{col - 1, row - 1};
}

// ---------------------------------------------------------------------------
// Lexing

namespace {

enum class Tok { End, Number, String, Ident, LParen, RParen, Comma, Dot, Colon, Plus, Minus, Star, Slash, And, RelOp };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0;
  std::size_t pos = 0;  // zero-based offset into the source
};

[[noreturn]] void fail_at(std::size_t pos, const std::string& message) {
  throw ParseError(pos, message);
}

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }
  bool accept(Tok kind) {
    if (tok_.kind != kind) return false;
    advance();
    return true;
  }
  Token expect(Tok kind, const char* what) {
    if (tok_.kind != kind) fail_at(tok_.pos, std::string("expected ") + what + describe());
    return take();
  }
  std::string describe() const {
    if (tok_.kind == Tok::End) return ", found end of input";
    return ", found '" + tok_.text + "'";
  }

private:
  void advance() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    tok_ = Token{};
    tok_.pos = i_;
    if (i_ >= src_.size()) return;
    const char c = src_[i_];
    const auto single = [&](Tok k) {
      tok_.kind = k;
      tok_.text = std::string(1, c);
      ++i_;
    };
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i_;
      while (j < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
        ++j;
      tok_.kind = Tok::Ident;
      tok_.text = std::string(src_.substr(i_, j - i_));
      i_ = j;
      return;
    }
    switch (c) {
      case '"': lex_string(); return;
      case '(': single(Tok::LParen); return;
      case ')': single(Tok::RParen); return;
      case ',': single(Tok::Comma); return;
      case '.': single(Tok::Dot); return;
      case ':': single(Tok::Colon); return;
      case '+': single(Tok::Plus); return;
      case '-': single(Tok::Minus); return;
      case '*': single(Tok::Star); return;
      case '/': single(Tok::Slash); return;
      default: break;
    }
    const auto two = i_ + 1 < src_.size() ? src_.substr(i_, 2) : std::string_view{};
    if (two == "&&") {
      tok_.kind = Tok::And;
      tok_.text = "&&";
      i_ += 2;
      return;
    }
    if (two == ">=" || two == "<=" || two == "==" || two == "!=") {
      tok_.kind = Tok::RelOp;
      tok_.text = std::string(two);
      i_ += 2;
      return;
    }
    if (c == '>' || c == '<') {
      single(Tok::RelOp);
      return;
    }
    fail_at(i_, std::string("unexpected character '") + c + "'");
  }

  void lex_number() {
    std::size_t j = i_;
    while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    if (j < src_.size() && src_[j] == '.') {
      ++j;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    }
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
        while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
        j = k;
      }
    }
    tok_.kind = Tok::Number;
    tok_.text = std::string(src_.substr(i_, j - i_));
    const auto* first = tok_.text.data();
    auto [ptr, ec] = std::from_chars(first, first + tok_.text.size(), tok_.number);
    if (ec != std::errc{} || ptr != first + tok_.text.size())
      fail_at(i_, "malformed number '" + tok_.text + "'");
    if (!std::isfinite(tok_.number)) fail_at(i_, "number out of range");
    i_ = j;
  }

  void lex_string() {
    std::size_t j = i_ + 1;
    std::string out;
    while (true) {
      if (j >= src_.size()) fail_at(i_, "unterminated string");
      const char c = src_[j];
      if (c == '"') break;
      if (c == '\\') {
        if (j + 1 < src_.size() && (src_[j + 1] == '"' || src_[j + 1] == '\\')) {
          out.push_back(src_[j + 1]);
          j += 2;
          continue;
        }
        fail_at(j, "invalid escape (only \\\" and \\\\ are allowed)");
      }
      out.push_back(c);
      ++j;
    }
    tok_.kind = Tok::String;
    tok_.text = std::move(out);
    i_ = j + 1;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  Token tok_;
};

// ---------------------------------------------------------------------------
// Parsing

struct AttrLeaf {
  static AttrRef parse(Lexer& lex, const Token& first, bool) {
    AttrRef ref;
    if (lex.accept(Tok::Dot)) {
      ref.qualifier = first.text;
      ref.name = lex.expect(Tok::Ident, "attribute name after '.'").text;
    } else {
      ref.name = first.text;
    }
    return ref;
  }
};

struct A1Leaf {
  static CellRange parse(Lexer& lex, const Token& first, bool rangeAllowed) {
    const auto start = parse_a1(first.text);
    if (!start) fail_at(first.pos, "expected cell address, found '" + first.text + "'");
    CellRange range{*start, *start};
    if (lex.peek().kind == Tok::Colon) {
      if (!rangeAllowed) fail_at(lex.peek().pos, "cell ranges are only allowed as function arguments");
      lex.take();
      const auto endTok = lex.expect(Tok::Ident, "cell address after ':'");
      const auto end = parse_a1(endTok.text);
      if (!end) fail_at(endTok.pos, "expected cell address, found '" + endTok.text + "'");
      range.start = {std::min(start->col, end->col), std::min(start->row, end->row)};
      range.end = {std::max(start->col, end->col), std::max(start->row, end->row)};
    }
    return range;
  }
};

template <class Leaf, class LeafParser>
class Parser {
public:
  using E = BasicExpr<Leaf>;

  explicit Parser(std::string_view src) : lex_(src) {}

  E parse_all() {
    E e = parse_expr();
    if (lex_.peek().kind != Tok::End)
      fail_at(lex_.peek().pos, "unexpected '" + lex_.peek().text + "' after expression");
    return e;
  }

private:
  E parse_expr() {
    E lhs = parse_term();
    while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
      const auto op = lex_.take().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      lhs = E::make_binary(op, std::move(lhs), parse_term());
    }
    return lhs;
  }

  E parse_term() {
    E lhs = parse_unary();
    while (lex_.peek().kind == Tok::Star || lex_.peek().kind == Tok::Slash) {
      const auto op = lex_.take().kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      lhs = E::make_binary(op, std::move(lhs), parse_unary());
    }
    return lhs;
  }

  E parse_unary(bool inArgs = false) {
    if (lex_.accept(Tok::Minus)) {
      if (lex_.peek().kind == Tok::Number) return E::make_number(-lex_.take().number);
      return E::make_binary(BinaryOp::Sub, E::make_number(0), parse_unary());
    }
    return parse_primary(inArgs);
  }

  E parse_primary(bool inArgs) {
    const Token t = lex_.peek();
    switch (t.kind) {
      case Tok::Number: lex_.take(); return E::make_number(t.number);
      case Tok::String: lex_.take(); return E::make_text(t.text);
      case Tok::LParen: {
        lex_.take();
        E inner = parse_expr();
        lex_.expect(Tok::RParen, "')'");
        return inner;
      }
      case Tok::Ident: {
        lex_.take();
        if (lex_.peek().kind == Tok::LParen) return parse_call(t);
        return E::make_ref(LeafParser::parse(lex_, t, inArgs));
      }
      default:
        if (t.kind == Tok::End) fail_at(t.pos, "unexpected end of formula");
        fail_at(t.pos, "unexpected '" + t.text + "'");
    }
  }

  E parse_call(const Token& name) {
    const auto fn = function_from_name(name.text);
    if (!fn) fail_at(name.pos, "unknown function '" + name.text + "'");
    lex_.expect(Tok::LParen, "'('");
    std::vector<E> args;
    if (!lex_.accept(Tok::RParen)) {
      do args.push_back(parse_arg());
      while (lex_.accept(Tok::Comma));
      lex_.expect(Tok::RParen, "')' or ','");
    }
    return E::make_apply(*fn, std::move(args));
  }

  // An argument that is a bare leaf may be a range; anything else is an expression.
  E parse_arg() {
    const Token t = lex_.peek();
    if (t.kind == Tok::Ident) {
      lex_.take();
      if (lex_.peek().kind == Tok::LParen) return continue_expr(parse_call(t));
      return continue_expr(E::make_ref(LeafParser::parse(lex_, t, true)));
    }
    return parse_expr();
  }

  // Resumes operator parsing after an already parsed primary.
  E continue_expr(E first) {
    E lhs = std::move(first);
    while (lex_.peek().kind == Tok::Star || lex_.peek().kind == Tok::Slash) {
      const auto op = lex_.take().kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      lhs = E::make_binary(op, std::move(lhs), parse_unary());
    }
    while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
      const auto op = lex_.take().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      lhs = E::make_binary(op, std::move(lhs), parse_term());
    }
    if constexpr (std::is_same_v<Leaf, CellRange>) {
      // A multi-cell range must stand alone as an argument.
      if (lhs.kind == E::Kind::Binary) {
        bool nested = false;
        lhs.for_each_ref([&](const CellRange& r) { nested = nested || !r.single(); });
        if (nested) fail_at(0, "cell ranges are only allowed as function arguments");
      }
    }
    return lhs;
  }

  Lexer lex_;
};

int precedence(const Expr& e) { return e.kind == Expr::Kind::Binary ? (e.op == BinaryOp::Add || e.op == BinaryOp::Sub ? 1 : 2) : 3; }
int precedence(const A1Expr& e) { return e.kind == A1Expr::Kind::Binary ? (e.op == BinaryOp::Add || e.op == BinaryOp::Sub ? 1 : 2) : 3; }

std::string leaf_text(const AttrRef& r) { return r.qualifier ? *r.qualifier + "." + r.name : r.name; }
std::string leaf_text(const CellRange& r) { return to_a1(r); }

template <class E>
void print(std::ostream& out, const E& e) {
  switch (e.kind) {
    case E::Kind::Number: out << format_number(e.number); return;
    case E::Kind::Text: out << quote(e.text); return;
    case E::Kind::Ref: out << leaf_text(e.ref); return;
    case E::Kind::Apply: {
      out << to_string(e.fn) << '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out << ',';
        print(out, e.args[i]);
      }
      out << ')';
      return;
    }
    case E::Kind::Binary: {
      const int p = precedence(e);
      const bool parenL = precedence(e.lhs()) < p;
      const bool parenR = precedence(e.rhs()) <= p;
      if (parenL) out << '(';
      print(out, e.lhs());
      if (parenL) out << ')';
      out << to_char(e.op);
      if (parenR) out << '(';
      print(out, e.rhs());
      if (parenR) out << ')';
      return;
    }
  }
}

}  // namespace

Expr parse_formula(std::string_view text) {
  return Parser<AttrRef, AttrLeaf>(text).parse_all();
}

A1Expr parse_a1_formula(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i < text.size() && text[i] == '=') text.remove_prefix(i + 1);
  return Parser<CellRange, A1Leaf>(text).parse_all();
}

std::string to_string(const Expr& e) {
  std::ostringstream out;
  print(out, e);
  return out.str();
}

std::string to_string(const A1Expr& e) {
  std::ostringstream out;
  print(out, e);
  return out.str();
}

// ---------------------------------------------------------------------------
// Constraints

std::string_view to_string(RelOp op) {
  switch (op) {
    case RelOp::Ge: return ">=";
    case RelOp::Le: return "<=";
    case RelOp::Gt: return ">";
    case RelOp::Lt: return "<";
    case RelOp::Eq: return "==";
    case RelOp::Ne: return "!=";
  }
  return ">=";
}

Constraint parse_constraint(std::string_view text) {
  Lexer lex(text);
  Constraint c;
  do {
    const auto opTok = lex.expect(Tok::RelOp, "comparison operator");
    ConstraintAtom atom;
    for (auto op : {RelOp::Ge, RelOp::Le, RelOp::Gt, RelOp::Lt, RelOp::Eq, RelOp::Ne})
      if (to_string(op) == opTok.text) atom.op = op;
    const bool negative = lex.accept(Tok::Minus);
    atom.bound = lex.expect(Tok::Number, "numeric bound").number;
    if (negative) atom.bound = -atom.bound;
    c.atoms.push_back(atom);
  } while (lex.accept(Tok::And));
  if (lex.peek().kind != Tok::End) fail_at(lex.peek().pos, "expected '&&'" + lex.describe());
  return c;
}

std::string to_string(const Constraint& c) {
  std::string out;
  for (std::size_t i = 0; i < c.atoms.size(); ++i) {
    if (i) out += " && ";
    out += to_string(c.atoms[i].op);
    out += format_number(c.atoms[i].bound);
  }
  return out;
}

bool check_constraint(const Constraint& c, const Value& v) {
  if (!v.is_number()) return false;
  const double x = v.as_number();
  for (const auto& a : c.atoms) {
    bool ok = false;
    switch (a.op) {
      case RelOp::Ge: ok = x >= a.bound; break;
      case RelOp::Le: ok = x <= a.bound; break;
      case RelOp::Gt: ok = x > a.bound; break;
      case RelOp::Lt: ok = x < a.bound; break;
      case RelOp::Eq: ok = x == a.bound; break;
      case RelOp::Ne: ok = x != a.bound; break;
    }
    if (!ok) return false;
  }
  return true;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_literal(const Value& v) {
  return v.is_number() ? format_number(v.as_number()) : quote(v.as_text());
}

}  // namespace tabula
