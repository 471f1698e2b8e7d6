#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tabula/instance.hpp"
#include "tabula/model.hpp"

namespace tabula {

// Model edits. Offsets count from the top row (left column) of the named class.

struct SetLabel {
  Point cell;
  std::string text;
  friend bool operator==(const SetLabel&, const SetLabel&) = default;
};
struct SetDefault {
  Point cell;
  Value value;
  friend bool operator==(const SetDefault&, const SetDefault&) = default;
};
struct SetConstraint {
  Point cell;
  std::optional<Constraint> constraint;
  friend bool operator==(const SetConstraint&, const SetConstraint&) = default;
};
struct SetFormula {
  Point cell;
  Expr expr;
  friend bool operator==(const SetFormula&, const SetFormula&) = default;
};
struct AddAttribute {
  Point cell;
  std::string name;
  Value defaultValue;
  friend bool operator==(const AddAttribute&, const AddAttribute&) = default;
};
struct AddRow {
  std::string cls;
  int offset = 0;  // 0..height: the new row's position inside the class
  friend bool operator==(const AddRow&, const AddRow&) = default;
};
struct AddColumn {
  std::string cls;
  int offset = 0;
  friend bool operator==(const AddColumn&, const AddColumn&) = default;
};
struct DeleteRow {
  std::string cls;
  int offset = 0;
  friend bool operator==(const DeleteRow&, const DeleteRow&) = default;
};
struct DeleteColumn {
  std::string cls;
  int offset = 0;
  friend bool operator==(const DeleteColumn&, const DeleteColumn&) = default;
};
/// `from` is `name` or `Class.name`; the class picks among equally named attributes.
struct RenameAttribute {
  std::string from;
  std::string to;
  friend bool operator==(const RenameAttribute&, const RenameAttribute&) = default;
};
struct RenameClass {
  std::string from;
  std::string to;
  friend bool operator==(const RenameClass&, const RenameClass&) = default;
};

using ModelOp = std::variant<SetLabel, SetDefault, SetConstraint, SetFormula, AddAttribute, AddRow, AddColumn,
                             DeleteRow, DeleteColumn, RenameAttribute, RenameClass>;

// Instance edits.

struct SetValue {
  CellAddr addr;
  Value value;
  friend bool operator==(const SetValue&, const SetValue&) = default;
};
struct SetFormulaAt {
  CellAddr addr;
  A1Expr formula;
  friend bool operator==(const SetFormulaAt&, const SetFormulaAt&) = default;
};
struct SetLabelAt {
  CellAddr addr;
  std::string text;
  friend bool operator==(const SetLabelAt&, const SetLabelAt&) = default;
};
struct AddObject {
  std::string cls;
  ObjectCtx parent;
  std::optional<std::size_t> at;  // nullopt appends
  friend bool operator==(const AddObject&, const AddObject&) = default;
};
struct RemoveObject {
  std::string cls;
  ObjectCtx ctx;
  friend bool operator==(const RemoveObject&, const RemoveObject&) = default;
};
// Structural edits repeated in every object block of the class.
struct InsertRowAll {
  std::string cls;
  int offset = 0;
  friend bool operator==(const InsertRowAll&, const InsertRowAll&) = default;
};
struct InsertColumnAll {
  std::string cls;
  int offset = 0;
  friend bool operator==(const InsertColumnAll&, const InsertColumnAll&) = default;
};
struct DeleteRowAll {
  std::string cls;
  int offset = 0;
  friend bool operator==(const DeleteRowAll&, const DeleteRowAll&) = default;
};
struct DeleteColumnAll {
  std::string cls;
  int offset = 0;
  friend bool operator==(const DeleteColumnAll&, const DeleteColumnAll&) = default;
};

using InstanceOp = std::variant<SetValue, SetFormulaAt, SetLabelAt, AddObject, RemoveObject, InsertRowAll,
                                InsertColumnAll, DeleteRowAll, DeleteColumnAll>;

/// A refused edit. `rule` is a layout rule id ("R1".."R6"), "FORMULA" for formula
/// problems, or empty when the instance diagnostics say why.
class OpRejected : public Error {
public:
  OpRejected(ErrorKind kind, std::string rule, const std::string& message, std::vector<Diagnostic> diags = {})
      : Error(kind, message), rule_(std::move(rule)), diagnostics_(std::move(diags)) {}

  const std::string& rule() const noexcept { return rule_; }
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
  std::string rule_;
  std::vector<Diagnostic> diagnostics_;
};

/// The edited model. Throws OpRejected when the op is malformed or the result breaks a
/// layout rule or leaves a formula that no longer resolves.
TabulaModel apply_model_op(const TabulaModel& model, const ModelOp& op);

/// Raw instance edit against the document's own model; conformance is not checked.
/// Structural ops reshape `doc.model` and relayout.
InstanceDoc apply_instance_op(const InstanceDoc& doc, const InstanceOp& op);

/// Instance edits that carry a model edit over to `doc`.
std::vector<InstanceOp> to(const TabulaModel& model, const InstanceDoc& doc, const ModelOp& op);

/// The model edit that legitimizes an instance edit, or nullopt when the edit already
/// conforms. Throws OpRejected for edits that cannot be expressed on the model.
std::optional<ModelOp> from(const TabulaModel& model, const InstanceDoc& doc, const InstanceOp& op);

struct SyncResult {
  TabulaModel model;
  InstanceDoc doc;
  std::vector<Diagnostic> diagnostics;  // only with force
};

/// Applies a model edit and co-evolves the instance. With `force`, value diagnostics
/// (type or constraint) left by the edit are returned instead of rejecting it.
SyncResult sync_apply_model(const TabulaModel& model, const InstanceDoc& doc, const ModelOp& op,
                            bool force = false);

/// Applies an instance edit, lifting it to the model when it would break conformance.
SyncResult sync_apply_instance(const TabulaModel& model, const InstanceDoc& doc, const InstanceOp& op);

}  // namespace tabula
