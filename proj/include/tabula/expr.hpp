#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tabula {

enum class Function { Sum, Average, Count, Min, Max };
enum class BinaryOp { Add, Sub, Mul, Div };

std::string_view to_string(Function fn);
std::optional<Function> function_from_name(std::string_view name);  // case-insensitive
char to_char(BinaryOp op);

/// Attribute reference inside a model formula: `name` or `Class.name`.
struct AttrRef {
  std::optional<std::string> qualifier;
  std::string name;

  friend bool operator==(const AttrRef&, const AttrRef&) = default;
};

/// Instance-side cell address, zero-based; rendered in A1 notation.
struct CellAddr {
  int col = 0;
  int row = 0;

  friend bool operator==(const CellAddr&, const CellAddr&) = default;
  // Row-major order.
  friend auto operator<=>(const CellAddr& a, const CellAddr& b) {
    if (a.row != b.row) return a.row <=> b.row;
    return a.col <=> b.col;
  }
};

/// Axis-aligned block of cells; a single cell when start == end.
struct CellRange {
  CellAddr start;
  CellAddr end;

  bool single() const { return start == end; }

  friend bool operator==(const CellRange&, const CellRange&) = default;
};

/// Expression tree shared by model formulas (leaves are attribute references)
/// and instance formulas (leaves are cell ranges).
template <class Leaf>
struct BasicExpr {
  enum class Kind { Number, Text, Ref, Apply, Binary };

  Kind kind = Kind::Number;
  double number = 0;
  std::string text;
  Leaf ref{};
  Function fn = Function::Sum;
  BinaryOp op = BinaryOp::Add;
  std::vector<BasicExpr> args;  // Apply arguments, or {lhs, rhs} for Binary

  static BasicExpr make_number(double v) {
    BasicExpr e;
    e.kind = Kind::Number;
    e.number = v;
    return e;
  }
  static BasicExpr make_text(std::string s) {
    BasicExpr e;
    e.kind = Kind::Text;
    e.text = std::move(s);
    return e;
  }
  static BasicExpr make_ref(Leaf leaf) {
    BasicExpr e;
    e.kind = Kind::Ref;
    e.ref = std::move(leaf);
    return e;
  }
  static BasicExpr make_apply(Function f, std::vector<BasicExpr> arguments) {
    BasicExpr e;
    e.kind = Kind::Apply;
    e.fn = f;
    e.args = std::move(arguments);
    return e;
  }
  static BasicExpr make_binary(BinaryOp o, BasicExpr lhs, BasicExpr rhs) {
    BasicExpr e;
    e.kind = Kind::Binary;
    e.op = o;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
  }

  const BasicExpr& lhs() const { return args[0]; }
  const BasicExpr& rhs() const { return args[1]; }

  friend bool operator==(const BasicExpr& a, const BasicExpr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Number: return a.number == b.number;
      case Kind::Text: return a.text == b.text;
      case Kind::Ref: return a.ref == b.ref;
      case Kind::Apply: return a.fn == b.fn && a.args == b.args;
      case Kind::Binary: return a.op == b.op && a.args == b.args;
    }
    return false;
  }

  /// Visits every leaf reference, depth first, left to right.
  template <class F>
  void for_each_ref(F&& f) const {
    if (kind == Kind::Ref) {
      f(ref);
      return;
    }
    for (const auto& a : args) a.for_each_ref(f);
  }
};

using Expr = BasicExpr<AttrRef>;
using A1Expr = BasicExpr<CellRange>;

}  // namespace tabula
