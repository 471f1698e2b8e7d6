#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tabula/model.hpp"

namespace tabula {

enum class ClassRole { Base, Vertical, Horizontal, Relation };

std::string_view to_string(ClassRole role);

struct LayoutViolation {
  std::string rule;  // R1..R6
  std::string className;
  std::string message;

  friend bool operator==(const LayoutViolation&, const LayoutViolation&) = default;
};

/// Checks the six class-layout rules. Empty iff the layout is valid.
///
/// R1 a base class covers the whole grid (when this fails no other rule is checked)
/// R2 inner classes span the full width or full height of the class below, and
///    expand along their axis only
/// R3 horizontal classes leave a row above and below inside their parent;
///    vertical classes leave a column on each side
/// R4 classes overlap only by containment or as a vertical/horizontal cross
/// R5 every cross has a relation class on the intersection
/// R6 only relation classes expand both ways
std::vector<LayoutViolation> validate_layout(const TabulaModel& model);

/// Role of a class in a model whose layout is valid.
ClassRole classify(const TabulaModel& model, const ClassDef& cls);

/// Hasse diagram of strict range containment: A->B means B is laid over A.
struct ClassOrder {
  std::vector<std::string> classes;
  std::vector<std::pair<std::string, std::string>> edges;

  std::vector<std::string> parents(const std::string& name) const;
  std::vector<std::string> children(const std::string& name) const;
  bool has_edge(const std::string& from, const std::string& to) const;
};

ClassOrder class_order(const TabulaModel& model);

/// The top-most class over `p`: the covering class contained in all others.
const ClassDef& owner_of(const TabulaModel& model, Point p);

/// Minimal-area class containing `p`; usable on models that are not yet validated.
std::size_t owner_index(const TabulaModel& model, Point p);

/// Derived class structure of a validated model, used to lay out instances.
///
/// Rows are organised by the tree of horizontal classes and columns by the tree of
/// vertical classes, both rooted at the base class. A relation class is the product
/// of one horizontal and one vertical component.
class ClassStructure {
public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  /// Throws Error(Layout) listing the violations if the layout is invalid.
  explicit ClassStructure(const TabulaModel& model);

  std::size_t base() const { return base_; }
  std::size_t size() const { return roles_.size(); }
  ClassRole role(std::size_t cls) const { return roles_[cls]; }

  // Horizontal and vertical components; the base for the axis a class does not cover.
  std::size_t row_component(std::size_t cls) const { return hcomp_[cls]; }
  std::size_t col_component(std::size_t cls) const { return vcomp_[cls]; }

  /// Enclosing class on the same axis (horizontal or vertical classes only).
  std::size_t axis_parent(std::size_t cls) const { return axisParent_[cls]; }

  /// Direct sub-blocks along the row axis (for the base or a horizontal class),
  /// sorted top to bottom.
  const std::vector<std::size_t>& row_children(std::size_t cls) const { return rowChildren_[cls]; }
  const std::vector<std::size_t>& col_children(std::size_t cls) const { return colChildren_[cls]; }

  /// True for horizontal classes expanding down and vertical classes expanding right.
  bool is_axis_repeating(std::size_t cls) const { return axisRepeating_[cls]; }

  /// Nearest repeating ancestor on the same axis, or npos for the root.
  std::size_t repeating_parent(std::size_t cls) const { return repeatingParent_[cls]; }

  /// Repeating axis classes that select the objects of `cls` (ancestors included), sorted.
  const std::vector<std::size_t>& chain(std::size_t cls) const { return chains_[cls]; }

  std::size_t owner(Point p) const { return owners_[static_cast<std::size_t>(p.row) * width_ + p.col]; }

  bool contains_class(std::size_t outer, std::size_t inner) const;

private:
  int width_ = 0;
  std::size_t base_ = 0;
  std::vector<RangeRect> ranges_;
  std::vector<ClassRole> roles_;
  std::vector<std::size_t> hcomp_, vcomp_, axisParent_, repeatingParent_;
  std::vector<std::vector<std::size_t>> rowChildren_, colChildren_, chains_;
  std::vector<bool> axisRepeating_;
  std::vector<std::size_t> owners_;
};

}  // namespace tabula
