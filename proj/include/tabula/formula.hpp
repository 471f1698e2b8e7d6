#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tabula/expr.hpp"
#include "tabula/model.hpp"

namespace tabula {

// Formula grammar, shared by both leaf kinds:
//   expr    = term (("+"|"-") term)*
//   term    = unary (("*"|"/") unary)*
//   unary   = "-" unary | primary
//   primary = NUMBER | STRING | call | leaf | "(" expr ")"
//   call    = FNAME "(" [arg ("," arg)*] ")"
// Model leaves are `name` or `Class.name`; A1 leaves are `B4` or `B4:B6`.
// Ranges are only allowed as direct arguments of a call.

/// Parses a model formula such as `SUM(stock)` or `Income.total-total`.
Expr parse_formula(std::string_view text);

/// Parses an instance formula such as `SUM(B4:B6,B9:B10)`; a leading `=` is accepted.
A1Expr parse_a1_formula(std::string_view text);

/// Canonical text: uppercase function names, no spaces, minimal parentheses.
std::string to_string(const Expr& e);
std::string to_string(const A1Expr& e);

// A1 notation
std::string column_name(int col);
std::string to_a1(CellAddr addr);
std::string to_a1(const CellRange& range);
std::optional<CellAddr> parse_a1(std::string_view text);

Constraint parse_constraint(std::string_view text);
std::string to_string(const Constraint& c);
std::string_view to_string(RelOp op);

/// True iff `v` is numeric and satisfies every atom.
bool check_constraint(const Constraint& c, const Value& v);

/// Literal in model/op syntax: a number or a quoted, escaped string.
std::string format_literal(const Value& v);
std::string quote(std::string_view s);

}  // namespace tabula
