#include "tabula/layout_rules.hpp"

#include <algorithm>
#include <optional>

namespace tabula {

std::string_view to_string(ClassRole role) {
  switch (role) {
    case ClassRole::Base: return "base";
    case ClassRole::Vertical: return "vertical";
    case ClassRole::Horizontal: return "horizontal";
    case ClassRole::Relation: return "relation";
  }
  return "base";
}

namespace {

constexpr auto npos = ClassStructure::npos;

// A vertical/horizontal cross: one range is taller and narrower than the other.
bool is_cross(const RangeRect& a, const RangeRect& b) {
  const auto crosses = [](const RangeRect& tall, const RangeRect& wide) {
    return tall.top() <= wide.top() && tall.bottom() >= wide.bottom() &&
           tall.left() >= wide.left() && tall.right() <= wide.right();
  };
  return a.intersects(b) && !a.contains(b) && !b.contains(a) && (crosses(a, b) || crosses(b, a));
}

struct Roles {
  std::size_t base = npos;
  std::vector<std::optional<ClassRole>> roles;
};

Roles compute_roles(const TabulaModel& model) {
  const auto& classes = model.classes();
  const auto bounds = model.bounds();
  Roles out;
  out.roles.resize(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i].range == bounds) {
      out.base = i;
      out.roles[i] = ClassRole::Base;
      break;
    }
  if (out.base == npos) return out;

  const auto fullWidth = [&](const RangeRect& r) { return r.left() == 0 && r.right() == bounds.right(); };
  const auto fullHeight = [&](const RangeRect& r) { return r.top() == 0 && r.bottom() == bounds.bottom(); };

  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& r = classes[i].range;
    if (i == out.base || r == bounds) continue;
    if (fullWidth(r)) {
      out.roles[i] = ClassRole::Horizontal;
    } else if (fullHeight(r)) {
      out.roles[i] = ClassRole::Vertical;
    } else {
      bool rows = false, cols = false;
      for (std::size_t j = 0; j < classes.size(); ++j) {
        const auto& o = classes[j].range;
        if (j == i || o == bounds) continue;
        if (fullWidth(o) && o.top() == r.top() && o.bottom() == r.bottom()) rows = true;
        if (fullHeight(o) && o.left() == r.left() && o.right() == r.right()) cols = true;
      }
      if (rows && cols) out.roles[i] = ClassRole::Relation;
    }
  }
  return out;
}

// Smallest base-or-same-role class strictly containing `cls`.
std::size_t axis_parent_of(const TabulaModel& model, const Roles& roles, std::size_t cls) {
  const auto& classes = model.classes();
  std::size_t best = roles.base;
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (j == cls || roles.roles[j] != roles.roles[cls]) continue;
    const auto& o = classes[j].range;
    if (o.contains(classes[cls].range) && o != classes[cls].range &&
        o.area() < classes[best].range.area())
      best = j;
  }
  return best;
}

}  // namespace

std::vector<LayoutViolation> validate_layout(const TabulaModel& model) {
  const auto& classes = model.classes();
  std::vector<std::pair<std::size_t, LayoutViolation>> found;
  const auto add = [&](const char* rule, std::size_t cls, std::string message) {
    found.push_back({cls, {rule, classes[cls].name, std::move(message)}});
  };

  const Roles roles = compute_roles(model);
  if (roles.base == npos) {
    if (classes.empty()) return {{"R1", "", "base class must cover grid"}};
    std::size_t largest = 0;
    for (std::size_t i = 1; i < classes.size(); ++i)
      if (classes[i].range.area() > classes[largest].range.area()) largest = i;
    return {{"R1", classes[largest].name, "base class must cover grid"}};
  }

  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& cls = classes[i];
    const auto role = roles.roles[i];
    const bool both = cls.expansion == Expansion::Both;
    if (both && role != ClassRole::Relation)
      add("R6", i, "only relation classes can expand both ways");
    if (!role) {
      if (cls.range != model.bounds())
        add("R2", i, "must span the whole width or the whole height of the class below");
      continue;
    }
    switch (*role) {
      case ClassRole::Base:
        if (cls.expansion != Expansion::None && !both) add("R2", i, "base class must not expand");
        break;
      case ClassRole::Horizontal:
      case ClassRole::Vertical: {
        const bool horizontal = *role == ClassRole::Horizontal;
        if (cls.expansion == (horizontal ? Expansion::Right : Expansion::Down))
          add("R2", i, horizontal ? "horizontal class may only expand down"
                                  : "vertical class may only expand right");
        const auto parent = axis_parent_of(model, roles, i);
        const auto& p = classes[parent].range;
        if (horizontal && !(p.top() < cls.range.top() && cls.range.bottom() < p.bottom()))
          add("R3", i, "must leave a row above and a row below inside " + classes[parent].name);
        if (!horizontal && !(p.left() < cls.range.left() && cls.range.right() < p.right()))
          add("R3", i, "must leave a column left and a column right inside " + classes[parent].name);
        break;
      }
      case ClassRole::Relation: break;
    }
  }

  for (std::size_t i = 0; i < classes.size(); ++i)
    for (std::size_t j = i + 1; j < classes.size(); ++j) {
      const auto& a = classes[i].range;
      const auto& b = classes[j].range;
      if (a == b) {
        add("R4", j, "has the same range as " + classes[i].name);
        continue;
      }
      if (!a.intersects(b) || a.contains(b) || b.contains(a)) continue;
      if (!is_cross(a, b)) {
        add("R4", j, "partially overlaps " + classes[i].name);
        continue;
      }
      const auto meet = a.intersection(b);
      const bool related = std::any_of(classes.begin(), classes.end(),
                                       [&](const ClassDef& c) { return c.range == meet; });
      if (!related)
        add("R5", i, "intersects " + classes[j].name + " without a relation class on the intersection");
    }

  std::stable_sort(found.begin(), found.end(), [](const auto& x, const auto& y) {
    if (x.second.rule != y.second.rule) return x.second.rule < y.second.rule;
    return x.first < y.first;
  });
  std::vector<LayoutViolation> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

ClassRole classify(const TabulaModel& model, const ClassDef& cls) {
  const auto idx = model.class_index(cls.name);
  if (!idx) throw Error(ErrorKind::UnknownClass, "unknown class " + cls.name);
  const auto roles = compute_roles(model);
  if (!roles.roles[*idx])
    throw Error(ErrorKind::Structure, "class " + cls.name + " has no layout role");
  return *roles.roles[*idx];
}

std::vector<std::string> ClassOrder::parents(const std::string& name) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges)
    if (to == name) out.push_back(from);
  return out;
}

std::vector<std::string> ClassOrder::children(const std::string& name) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges)
    if (from == name) out.push_back(to);
  return out;
}

bool ClassOrder::has_edge(const std::string& from, const std::string& to) const {
  return std::find(edges.begin(), edges.end(), std::pair{from, to}) != edges.end();
}

ClassOrder class_order(const TabulaModel& model) {
  const auto& classes = model.classes();
  const auto strictly = [&](std::size_t a, std::size_t b) {
    return classes[a].range.contains(classes[b].range) && classes[a].range != classes[b].range;
  };
  ClassOrder order;
  for (const auto& c : classes) order.classes.push_back(c.name);
  for (std::size_t a = 0; a < classes.size(); ++a)
    for (std::size_t b = 0; b < classes.size(); ++b) {
      if (a == b || !strictly(a, b)) continue;
      bool covered = false;
      for (std::size_t c = 0; c < classes.size() && !covered; ++c)
        covered = c != a && c != b && strictly(a, c) && strictly(c, b);
      if (!covered) order.edges.emplace_back(classes[a].name, classes[b].name);
    }
  return order;
}

std::size_t owner_index(const TabulaModel& model, Point p) {
  const auto& classes = model.classes();
  std::size_t best = npos;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!classes[i].range.contains(p)) continue;
    if (best == npos || classes[i].range.area() < classes[best].range.area()) best = i;
  }
  if (best == npos) throw Error(ErrorKind::Structure, "no class covers the point");
  return best;
}

const ClassDef& owner_of(const TabulaModel& model, Point p) {
  cell_at(model, p);
  return model.classes()[owner_index(model, p)];
}

ClassStructure::ClassStructure(const TabulaModel& model) : width_(model.width()) {
  const auto violations = validate_layout(model);
  if (!violations.empty()) {
    std::string message = "invalid layout:";
    for (const auto& v : violations) message += " " + v.rule + " " + v.className + " " + v.message + ";";
    throw Error(ErrorKind::Layout, message);
  }
  const auto& classes = model.classes();
  const std::size_t n = classes.size();
  const Roles roles = compute_roles(model);
  base_ = roles.base;
  for (const auto& c : classes) ranges_.push_back(c.range);
  roles_.resize(n);
  hcomp_.assign(n, base_);
  vcomp_.assign(n, base_);
  axisParent_.assign(n, npos);
  repeatingParent_.assign(n, npos);
  rowChildren_.resize(n);
  colChildren_.resize(n);
  chains_.resize(n);
  axisRepeating_.assign(n, false);

  for (std::size_t i = 0; i < n; ++i) roles_[i] = *roles.roles[i];

  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = classes[i].range;
    switch (roles_[i]) {
      case ClassRole::Base: break;
      case ClassRole::Horizontal:
        hcomp_[i] = i;
        axisParent_[i] = axis_parent_of(model, roles, i);
        axisRepeating_[i] = classes[i].expansion == Expansion::Down;
        break;
      case ClassRole::Vertical:
        vcomp_[i] = i;
        axisParent_[i] = axis_parent_of(model, roles, i);
        axisRepeating_[i] = classes[i].expansion == Expansion::Right;
        break;
      case ClassRole::Relation:
        for (std::size_t j = 0; j < n; ++j) {
          const auto& o = classes[j].range;
          if (roles_[j] == ClassRole::Horizontal && o.top() == r.top() && o.bottom() == r.bottom())
            hcomp_[i] = j;
          if (roles_[j] == ClassRole::Vertical && o.left() == r.left() && o.right() == r.right())
            vcomp_[i] = j;
        }
        break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (roles_[i] == ClassRole::Horizontal) rowChildren_[axisParent_[i]].push_back(i);
    if (roles_[i] == ClassRole::Vertical) colChildren_[axisParent_[i]].push_back(i);
    if (roles_[i] == ClassRole::Horizontal || roles_[i] == ClassRole::Vertical) {
      auto p = axisParent_[i];
      while (p != base_ && !axisRepeating_[p]) p = axisParent_[p];
      repeatingParent_[i] = p == base_ ? npos : p;
    }
  }
  for (auto& kids : rowChildren_)
    std::sort(kids.begin(), kids.end(), [&](auto a, auto b) { return ranges_[a].top() < ranges_[b].top(); });
  for (auto& kids : colChildren_)
    std::sort(kids.begin(), kids.end(), [&](auto a, auto b) { return ranges_[a].left() < ranges_[b].left(); });

  for (std::size_t i = 0; i < n; ++i) {
    auto& chain = chains_[i];
    for (auto c : {hcomp_[i], vcomp_[i]})
      for (; c != base_; c = axisParent_[c])
        if (axisRepeating_[c]) chain.push_back(c);
    std::sort(chain.begin(), chain.end());
  }

  owners_.resize(static_cast<std::size_t>(model.width()) * model.height());
  for (int r = 0; r < model.height(); ++r)
    for (int c = 0; c < model.width(); ++c)
      owners_[static_cast<std::size_t>(r) * width_ + c] = owner_index(model, {c, r});
}

bool ClassStructure::contains_class(std::size_t outer, std::size_t inner) const {
  return ranges_[outer].contains(ranges_[inner]);
}

}  // namespace tabula
