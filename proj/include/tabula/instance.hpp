#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tabula/expr.hpp"
#include "tabula/layout_rules.hpp"
#include "tabula/model.hpp"

namespace tabula {

/// One object of a repeating class together with the objects nested in it.
struct ObjectNode {
  std::uint64_t id = 0;
  std::map<std::size_t, std::vector<ObjectNode>> children;  // class index -> objects, in order

  friend bool operator==(const ObjectNode&, const ObjectNode&) = default;
};

/// Objects of every repeating horizontal and vertical class. Relation classes have no
/// entries: their objects are the pairs of their components' objects.
///
/// Objects of a class hang under the nearest enclosing repeating class on the same
/// axis, or under the root. Ids never repeat within a tree; they give cells an
/// identity that survives insertions and removals.
struct ObjectTree {
  ObjectNode root;
  std::uint64_t nextId = 1;

  friend bool operator==(const ObjectTree&, const ObjectTree&) = default;
};

/// Selects objects by position: {"Category": 1, "Item": 0} is the first item of the
/// second category.
using ObjectCtx = std::map<std::string, std::size_t>;

struct AxisStep {
  std::size_t cls = 0;
  std::size_t index = 0;
  std::uint64_t id = 0;

  friend bool operator==(const AxisStep&, const AxisStep&) = default;
};

/// A physical row (or column): the model row it copies and the objects it belongs to.
struct AxisSlot {
  int model = 0;
  std::vector<AxisStep> path;  // outermost first

  std::uint64_t key() const { return path.empty() ? 0 : path.back().id; }
};

struct InstanceLayout {
  std::vector<AxisSlot> rows;
  std::vector<AxisSlot> cols;
};

InstanceLayout compute_layout(const TabulaModel& model, const ClassStructure& cs,
                              const ObjectTree& objects);

/// A tree with one object for every repeating class, recursively.
ObjectTree default_objects(const TabulaModel& model, const ClassStructure& cs);

/// Messages for nodes that do not match the model's repeating classes.
std::vector<std::string> validate_objects(const TabulaModel& model, const ClassStructure& cs,
                                          const ObjectTree& objects);

/// Resolves an object-context key: exact class name, else a unique case-insensitive prefix.
std::size_t find_class_key(const TabulaModel& model, std::string_view key);

enum class CellKind { Empty, Constant, Formula };

struct InstanceCell {
  CellKind kind = CellKind::Empty;
  Value value;        // the constant, or the last computed result of a formula
  A1Expr formula;
  std::string error;  // formulas only: "#DIV/0!", "#VALUE!", ... when evaluation failed

  static InstanceCell constant(Value v);
  static InstanceCell make_formula(A1Expr e);

  bool has_error() const { return kind == CellKind::Formula && !error.empty(); }

  friend bool operator==(const InstanceCell&, const InstanceCell&) = default;
};

/// A spreadsheet produced from a model: the model it was laid out from, the objects,
/// and the physical grid. Values are semantic; all operations return new documents.
struct InstanceDoc {
  TabulaModel model;
  ObjectTree objects;
  int width = 0;
  int height = 0;
  std::vector<InstanceCell> cells;  // row-major

  bool in_bounds(CellAddr a) const {
    return a.col >= 0 && a.row >= 0 && a.col < width && a.row < height;
  }
  const InstanceCell& at(CellAddr a) const;
  InstanceCell& at(CellAddr a);

  /// Constant cells.
  std::map<CellAddr, Value> values() const;
  /// Results of formula cells that evaluated without error.
  std::map<CellAddr, Value> computed() const;

  friend bool operator==(const InstanceDoc&, const InstanceDoc&) = default;
};

/// The instance of `model` with one object per repeating class and default values.
/// Throws Error(Layout) or Error(Formula) if the model is invalid.
InstanceDoc create(const TabulaModel& model);

/// Every cell position: (model point, object context) -> address. A bijection onto
/// the grid.
std::map<std::pair<Point, ObjectCtx>, CellAddr> layout(const InstanceDoc& doc);

struct CellOrigin {
  Point point;
  ObjectCtx ctx;
};

/// Model point and object context of a physical cell.
CellOrigin origin_of(const InstanceDoc& doc, CellAddr addr);

/// All physical copies of a model point, row-major.
std::vector<CellAddr> addresses_of(const InstanceDoc& doc, Point p);

/// A place where objects of `cls` hang: under the object selected by `parent`.
struct ObjectSlot {
  std::string cls;
  ObjectCtx parent;
  std::size_t count = 0;  // objects currently there

  friend bool operator==(const ObjectSlot&, const ObjectSlot&) = default;
};

/// Every slot of the tree, parents before children.
std::vector<ObjectSlot> object_slots(const InstanceDoc& doc);

/// Inserts a default object of `cls` under the objects selected by `parent`
/// (one index per enclosing repeating class) at position `at`, or last.
InstanceDoc add_object(const InstanceDoc& doc, std::string_view cls, const ObjectCtx& parent,
                       std::optional<std::size_t> at = std::nullopt);

/// Removes the object selected by `ctx`, which names `cls` and its enclosing classes.
InstanceDoc remove_object(const InstanceDoc& doc, std::string_view cls, const ObjectCtx& ctx);

enum class DiagnosticKind { LabelMismatch, TypeError, ConstraintViolation, FormulaMismatch, StructureError };

std::string_view to_string(DiagnosticKind k);

struct Diagnostic {
  DiagnosticKind kind = DiagnosticKind::StructureError;
  CellAddr addr;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// "KIND addr message"
std::string to_string(const Diagnostic& d);

struct EditResult {
  InstanceDoc doc;
  std::vector<Diagnostic> diagnostics;

  bool applied() const { return diagnostics.empty(); }
};

/// Sets an input cell. A value of the wrong type or violating the constraint leaves
/// the document unchanged and is reported.
EditResult set_value(const InstanceDoc& doc, CellAddr addr, const Value& v);

/// Conformance of `doc` to `model`, ordered by address then kind. Empty iff conforming.
std::vector<Diagnostic> check(const TabulaModel& model, const InstanceDoc& doc);

/// Re-evaluates every formula. Throws Error(Cycle) naming a cell on a cycle.
InstanceDoc recalc(const InstanceDoc& doc);

/// Evaluates an instance formula against the current cell values.
Value evaluate(const InstanceDoc& doc, const A1Expr& e);

/// Instance formula for the model formula `e` written at `formulaCell` in the object
/// context `ctx`.
A1Expr translate(const TabulaModel& model, const InstanceDoc& doc, Point formulaCell,
                 const ObjectCtx& ctx, const Expr& e);

/// Translation of the model formula cell at `addr`, using `model` for the formula and
/// `doc` for the objects. Throws if `addr` is not a formula cell of the model.
A1Expr expected_formula(const TabulaModel& model, const InstanceDoc& doc, CellAddr addr);

enum class CsvMode { Values, Formulas };

/// RFC 4180 text with CRLF line ends. Formula cells show their result, or `=formula`.
std::string export_csv(const InstanceDoc& doc, CsvMode mode);

/// Display text of a cell's value: computed result, error code, or empty.
std::string display_value(const InstanceCell& cell);

// Low-level rebuilding used by the evolution layer.

/// Maps old model points to new ones; nullopt for points that disappear.
using PointMap = std::function<std::optional<Point>(Point)>;

/// Lays out `model`/`objects` and carries over every cell whose identity (model point
/// through `map`, row object, column object) existed in `doc`. New cells take the
/// model's defaults, model formulas are retranslated and everything is recalculated;
/// cycles become error cells.
InstanceDoc rebuild(const InstanceDoc& doc, TabulaModel model, ObjectTree objects,
                    const PointMap& map = {});

/// Recalculates in place, marking cycles and evaluation failures as error cells.
/// Returns the cells left on or behind a cycle.
std::vector<CellAddr> recalc_marking_errors(InstanceDoc& doc);

}  // namespace tabula
