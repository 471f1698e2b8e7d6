#pragma once

#include <string>
#include <vector>

#include "tabula/expr.hpp"
#include "tabula/layout_rules.hpp"
#include "tabula/model.hpp"

namespace tabula {

/// Where an attribute reference points and how it varies with the formula's object.
///
/// Repetition axes shared by the formula's class and the target class are fixed (the
/// formula sees the target in its own object); the target's other axes are free and
/// the reference denotes every object along them.
struct RefBinding {
  std::string targetClass;
  Point targetCell;
  std::vector<std::string> fixedAxes;  // ordered as in the model's class list
  std::vector<std::string> freeAxes;

  bool aggregates() const { return !freeAxes.empty(); }

  friend bool operator==(const RefBinding&, const RefBinding&) = default;
};

/// Resolves `ref` as seen from the formula at `fromCell`.
///
/// Candidates are the attributes named `ref.name`, restricted to the qualifying
/// class and its descendants when a qualifier is given. An attribute of the formula's
/// own class wins; otherwise a unique candidate; otherwise the candidate whose
/// horizontal and vertical components best match the formula's class.
RefBinding resolve_ref(const TabulaModel& model, Point fromCell, const AttrRef& ref);
RefBinding resolve_ref(const TabulaModel& model, const ClassStructure& structure,
                       Point fromCell, const AttrRef& ref);

struct FormulaIssue {
  Point cell;
  std::string message;

  friend bool operator==(const FormulaIssue&, const FormulaIssue&) = default;
};

/// Checks a layout-valid model's formulas: every reference resolves, multi-object
/// references appear only as direct aggregate arguments, attribute names are unique
/// per class, and attributes do not depend on themselves.
std::vector<FormulaIssue> check_formulas(const TabulaModel& model);

}  // namespace tabula
