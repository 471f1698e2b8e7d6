#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tabula/error.hpp"
#include "tabula/expr.hpp"

namespace tabula {

// Model coordinates are (col, row), zero-based.
struct Point {
  int col = 0;
  int row = 0;

  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point& a, const Point& b) {
    if (a.row != b.row) return a.row <=> b.row;
    return a.col <=> b.col;
  }
};

struct RangeRect {
  Point topLeft;
  Point bottomRight;

  int left() const { return topLeft.col; }
  int right() const { return bottomRight.col; }
  int top() const { return topLeft.row; }
  int bottom() const { return bottomRight.row; }
  int width() const { return right() - left() + 1; }
  int height() const { return bottom() - top() + 1; }
  long area() const { return static_cast<long>(width()) * height(); }

  bool contains(Point p) const {
    return p.col >= left() && p.col <= right() && p.row >= top() && p.row <= bottom();
  }
  bool contains(const RangeRect& o) const {
    return o.left() >= left() && o.right() <= right() && o.top() >= top() &&
           o.bottom() <= bottom();
  }
  bool intersects(const RangeRect& o) const {
    return o.left() <= right() && left() <= o.right() && o.top() <= bottom() &&
           top() <= o.bottom();
  }
  RangeRect intersection(const RangeRect& o) const;

  friend bool operator==(const RangeRect&, const RangeRect&) = default;
};

enum class Expansion { None, Down, Right, Both };

std::string_view to_string(Expansion e);
std::optional<Expansion> expansion_from_string(std::string_view s);

struct ClassDef {
  std::string name;
  RangeRect range;
  Expansion expansion = Expansion::None;

  bool repeats() const { return expansion != Expansion::None; }

  friend bool operator==(const ClassDef&, const ClassDef&) = default;
};

enum class ValueType { Number, Text };

/// Concrete cell value: a finite number or a (possibly empty) text.
class Value {
public:
  Value() : data_(0.0) {}
  static Value number(double v);
  static Value text(std::string s) { return Value(std::move(s)); }

  bool is_number() const { return std::holds_alternative<double>(data_); }
  bool is_text() const { return std::holds_alternative<std::string>(data_); }
  double as_number() const { return std::get<double>(data_); }
  const std::string& as_text() const { return std::get<std::string>(data_); }

  ValueType type() const { return is_number() ? ValueType::Number : ValueType::Text; }

  friend bool operator==(const Value&, const Value&) = default;

private:
  explicit Value(double v) : data_(v) {}
  explicit Value(std::string s) : data_(std::move(s)) {}
  std::variant<double, std::string> data_;
};

ValueType infer_type(const Value& v);
std::string_view to_string(ValueType t);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

enum class RelOp { Ge, Le, Gt, Lt, Eq, Ne };

struct ConstraintAtom {
  RelOp op = RelOp::Ge;
  double bound = 0;

  friend bool operator==(const ConstraintAtom&, const ConstraintAtom&) = default;
};

/// Conjunction of comparisons against numeric bounds; never empty.
struct Constraint {
  std::vector<ConstraintAtom> atoms;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct LabelCell {
  std::string text;
  friend bool operator==(const LabelCell&, const LabelCell&) = default;
};

struct InputCell {
  std::string name;
  Value defaultValue;
  std::optional<Constraint> constraint;
  friend bool operator==(const InputCell&, const InputCell&) = default;
};

struct FormulaCell {
  std::string name;
  Expr expr;
  friend bool operator==(const FormulaCell&, const FormulaCell&) = default;
};

using TCell = std::variant<LabelCell, InputCell, FormulaCell>;

bool is_attribute(const TCell& cell);
/// Attribute name of an input or formula cell; empty for labels.
const std::string& attribute_name(const TCell& cell);

class TabulaModel {
public:
  TabulaModel() = default;
  TabulaModel(std::string name, int width, int height);

  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  int width() const { return width_; }
  int height() const { return height_; }
  RangeRect bounds() const { return {{0, 0}, {width_ - 1, height_ - 1}}; }
  bool in_bounds(Point p) const {
    return p.col >= 0 && p.row >= 0 && p.col < width_ && p.row < height_;
  }

  const std::vector<ClassDef>& classes() const { return classes_; }
  std::vector<ClassDef>& classes() { return classes_; }
  const ClassDef* find_class(std::string_view name) const;
  std::optional<std::size_t> class_index(std::string_view name) const;

  const TCell& at(Point p) const;
  TCell& at(Point p);
  void set(Point p, TCell cell) { at(p) = std::move(cell); }

  void insert_row(int row);
  void erase_row(int row);
  void insert_column(int col);
  void erase_column(int col);

  friend bool operator==(const TabulaModel&, const TabulaModel&) = default;

private:
  std::string name_;
  int width_ = 0;
  int height_ = 0;
  std::vector<ClassDef> classes_;
  std::vector<TCell> cells_;  // row-major
};

/// Bounds-checked model cell lookup.
const TCell& cell_at(const TabulaModel& model, Point p);

struct Metrics {
  int width = 0;
  int height = 0;
  int classCount = 0;
  int attributeCount = 0;
  int inputCount = 0;
  int formulaCount = 0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics metrics(const TabulaModel& model);

/// "width height classes attributes input formulas"
std::string format_metrics(const Metrics& m);

}  // namespace tabula
