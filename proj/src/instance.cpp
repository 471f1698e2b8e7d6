#include "tabula/instance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <tuple>

#include "tabula/formula.hpp"
#include "tabula/resolve.hpp"

namespace tabula {

namespace {

constexpr auto npos = ClassStructure::npos;

void add_default_children(const ClassStructure& cs, std::size_t parent, ObjectNode& node,
                          ObjectTree& tree) {
  for (std::size_t k = 0; k < cs.size(); ++k) {
    if (!cs.is_axis_repeating(k) || cs.repeating_parent(k) != parent) continue;
    ObjectNode child;
    child.id = tree.nextId++;
    add_default_children(cs, k, child, tree);
    node.children[k].push_back(std::move(child));
  }
}

void expand(const TabulaModel& m, const ClassStructure& cs, bool rows, std::size_t cls,
            const ObjectNode& node, std::vector<AxisStep>& path, std::vector<AxisSlot>& out) {
  const auto& range = m.classes()[cls].range;
  const auto lo = [&](const RangeRect& r) { return rows ? r.top() : r.left(); };
  const auto hi = [&](const RangeRect& r) { return rows ? r.bottom() : r.right(); };
  const auto emit = [&](int from, int to) {
    for (int i = from; i <= to; ++i) out.push_back({i, path});
  };
  int next = lo(range);
  for (auto k : rows ? cs.row_children(cls) : cs.col_children(cls)) {
    const auto& kr = m.classes()[k].range;
    emit(next, lo(kr) - 1);
    if (cs.is_axis_repeating(k)) {
      if (auto it = node.children.find(k); it != node.children.end())
        for (std::size_t i = 0; i < it->second.size(); ++i) {
          path.push_back({k, i, it->second[i].id});
          expand(m, cs, rows, k, it->second[i], path, out);
          path.pop_back();
        }
    } else {
      expand(m, cs, rows, k, node, path, out);
    }
    next = hi(kr) + 1;
  }
  emit(next, hi(range));
}

ObjectCtx ctx_of(const TabulaModel& m, const AxisSlot& row, const AxisSlot& col) {
  ObjectCtx ctx;
  for (const auto* s : {&row, &col})
    for (const auto& step : s->path) ctx[m.classes()[step.cls].name] = step.index;
  return ctx;
}

bool matches(const TabulaModel& m, const AxisSlot& slot, const ObjectCtx& ctx) {
  for (const auto& step : slot.path) {
    auto it = ctx.find(m.classes()[step.cls].name);
    if (it == ctx.end() || it->second != step.index) return false;
  }
  return true;
}

InstanceCell initial_cell(const TCell& c) {
  if (const auto* l = std::get_if<LabelCell>(&c))
    return l->text.empty() ? InstanceCell{} : InstanceCell::constant(Value::text(l->text));
  if (const auto* in = std::get_if<InputCell>(&c)) return InstanceCell::constant(in->defaultValue);
  return InstanceCell::make_formula(A1Expr::make_apply(Function::Sum, {}));
}

// Cell identity: model point plus innermost row and column objects.
using Identity = std::tuple<int, int, std::uint64_t, std::uint64_t>;

// ---------------------------------------------------------------------------
// Translation of model formulas into A1 formulas

class Translator {
public:
  Translator(const TabulaModel& m, const ClassStructure& cs, const InstanceLayout& l)
      : m_(m), cs_(cs), l_(l), rowsOf_(m.height()), colsOf_(m.width()) {
    for (std::size_t i = 0; i < l.rows.size(); ++i) rowsOf_[l.rows[i].model].push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < l.cols.size(); ++j) colsOf_[l.cols[j].model].push_back(static_cast<int>(j));
  }

  A1Expr run(Point p, const AxisSlot& row, const AxisSlot& col, const Expr& e) const {
    return walk(p, row, col, e);
  }

private:
  A1Expr walk(Point p, const AxisSlot& row, const AxisSlot& col, const Expr& e) const {
    switch (e.kind) {
      case Expr::Kind::Number: return A1Expr::make_number(e.number);
      case Expr::Kind::Text: return A1Expr::make_text(e.text);
      case Expr::Kind::Ref: {
        auto ranges = targets(p, row, col, e.ref);
        if (ranges.size() == 1 && ranges.front().single()) return A1Expr::make_ref(ranges.front());
        throw Error(ErrorKind::MultiReference,
                    e.ref.name + " denotes several cells outside an aggregate");
      }
      case Expr::Kind::Binary:
        return A1Expr::make_binary(e.op, walk(p, row, col, e.lhs()),
                                   walk(p, row, col, e.rhs()));
      case Expr::Kind::Apply: {
        std::vector<A1Expr> args;
        for (const auto& a : e.args) {
          if (a.kind != Expr::Kind::Ref) {
            args.push_back(walk(p, row, col, a));
            continue;
          }
          for (const auto& r : targets(p, row, col, a.ref)) args.push_back(A1Expr::make_ref(r));
        }
        return A1Expr::make_apply(e.fn, std::move(args));
      }
    }
    throw Error(ErrorKind::Formula, "bad expression");
  }

  std::vector<CellRange> targets(Point p, const AxisSlot& row, const AxisSlot& col,
                                 const AttrRef& ref) const {
    const auto b = resolve_ref(m_, cs_, p, ref);
    std::set<std::size_t> fixed;
    for (const auto& n : b.fixedAxes) fixed.insert(*m_.class_index(n));
    const auto agree = [&](const AxisSlot& slot, const AxisSlot& self) {
      for (const auto& s : slot.path) {
        if (!fixed.count(s.cls)) continue;
        auto it = std::find_if(self.path.begin(), self.path.end(),
                               [&](const AxisStep& f) { return f.cls == s.cls; });
        if (it == self.path.end() || it->id != s.id) return false;
      }
      return true;
    };
    std::vector<int> rows, cols;
    for (int i : rowsOf_[b.targetCell.row])
      if (agree(l_.rows[i], row)) rows.push_back(i);
    for (int j : colsOf_[b.targetCell.col])
      if (agree(l_.cols[j], col)) cols.push_back(j);
    if (!b.aggregates() && (rows.size() != 1 || cols.size() != 1))
      throw Error(ErrorKind::Structure, "reference " + ref.name + " has no cell in this object");
    return group(cols, rows);
  }

  // Vertical runs per column, then adjacent columns with equal runs merged into blocks.
  static std::vector<CellRange> group(const std::vector<int>& cols, const std::vector<int>& rows) {
    std::vector<std::pair<int, int>> runs;
    for (std::size_t i = 0; i < rows.size();) {
      std::size_t k = i;
      while (k + 1 < rows.size() && rows[k + 1] == rows[k] + 1) ++k;
      runs.emplace_back(rows[i], rows[k]);
      i = k + 1;
    }
    std::vector<CellRange> out;
    for (const auto& [r0, r1] : runs)
      for (std::size_t i = 0; i < cols.size();) {
        std::size_t k = i;
        while (k + 1 < cols.size() && cols[k + 1] == cols[k] + 1) ++k;
        out.push_back({{cols[i], r0}, {cols[k], r1}});
        i = k + 1;
      }
    std::sort(out.begin(), out.end(), [](const CellRange& a, const CellRange& b) {
      return std::pair{a.start.col, a.start.row} < std::pair{b.start.col, b.start.row};
    });
    return out;
  }

  const TabulaModel& m_;
  const ClassStructure& cs_;
  const InstanceLayout& l_;
  std::vector<std::vector<int>> rowsOf_, colsOf_;
};

// ---------------------------------------------------------------------------
// Evaluation

struct EvalFailure {
  ErrorKind kind;
  std::string code;
  std::string message;
};

std::string code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::DivisionByZero:
    case ErrorKind::EmptyAggregate: return "#DIV/0!";
    case ErrorKind::Type: return "#VALUE!";
    case ErrorKind::Bounds: return "#REF!";
    case ErrorKind::Cycle: return "#CYCLE!";
    default: return "#ERROR!";
  }
}

[[noreturn]] void fail(ErrorKind k, std::string message) {
  throw EvalFailure{k, code_for(k), std::move(message)};
}

Value finite(double v) {
  if (!std::isfinite(v)) fail(ErrorKind::Type, "result is not a finite number");
  return Value::number(v);
}

const InstanceCell& cell_ref(const InstanceDoc& doc, CellAddr a) {
  if (!doc.in_bounds(a)) fail(ErrorKind::Bounds, to_a1(a) + " is outside the sheet");
  const auto& c = doc.at(a);
  if (c.has_error()) throw EvalFailure{ErrorKind::Formula, c.error, to_a1(a) + " has an error"};
  return c;
}

Value eval(const InstanceDoc& doc, const A1Expr& e) {
  switch (e.kind) {
    case A1Expr::Kind::Number: return Value::number(e.number);
    case A1Expr::Kind::Text: return Value::text(e.text);
    case A1Expr::Kind::Ref: {
      if (!e.ref.single()) fail(ErrorKind::Type, "range " + to_a1(e.ref) + " outside an aggregate");
      const auto& c = cell_ref(doc, e.ref.start);
      return c.kind == CellKind::Empty ? Value::number(0) : c.value;
    }
    case A1Expr::Kind::Binary: {
      const auto l = eval(doc, e.lhs());
      const auto r = eval(doc, e.rhs());
      if (!l.is_number() || !r.is_number()) fail(ErrorKind::Type, "arithmetic on text");
      const double x = l.as_number(), y = r.as_number();
      switch (e.op) {
        case BinaryOp::Add: return finite(x + y);
        case BinaryOp::Sub: return finite(x - y);
        case BinaryOp::Mul: return finite(x * y);
        case BinaryOp::Div:
          if (y == 0) fail(ErrorKind::DivisionByZero, "division by zero");
          return finite(x / y);
      }
      break;
    }
    case A1Expr::Kind::Apply: {
      std::vector<double> xs;
      for (const auto& a : e.args) {
        if (a.kind == A1Expr::Kind::Ref) {
          const auto& r = a.ref;
          for (int row = std::min(r.start.row, r.end.row); row <= std::max(r.start.row, r.end.row); ++row)
            for (int col = std::min(r.start.col, r.end.col); col <= std::max(r.start.col, r.end.col); ++col) {
              const auto& c = cell_ref(doc, {col, row});
              if (c.kind != CellKind::Empty && c.value.is_number()) xs.push_back(c.value.as_number());
            }
          continue;
        }
        const auto v = eval(doc, a);
        if (!v.is_number()) fail(ErrorKind::Type, std::string(to_string(e.fn)) + " of text");
        xs.push_back(v.as_number());
      }
      double sum = 0;
      for (double x : xs) sum += x;
      switch (e.fn) {
        case Function::Sum: return finite(sum);
        case Function::Count: return Value::number(static_cast<double>(xs.size()));
        case Function::Average:
          if (xs.empty()) fail(ErrorKind::EmptyAggregate, "AVERAGE of no numbers");
          return finite(sum / static_cast<double>(xs.size()));
        case Function::Min:
        case Function::Max:
          if (xs.empty()) fail(ErrorKind::EmptyAggregate, std::string(to_string(e.fn)) + " of no numbers");
          return Value::number(e.fn == Function::Min ? *std::min_element(xs.begin(), xs.end())
                                                     : *std::max_element(xs.begin(), xs.end()));
      }
      break;
    }
  }
  fail(ErrorKind::Formula, "bad expression");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Located {
  ClassStructure cs;
  InstanceLayout layout;
};

Located locate(const TabulaModel& model, const ObjectTree& objects) {
  ClassStructure cs(model);
  auto l = compute_layout(model, cs, objects);
  return {std::move(cs), std::move(l)};
}

void require_shape(const InstanceDoc& doc, const InstanceLayout& l) {
  if (static_cast<int>(l.rows.size()) != doc.height || static_cast<int>(l.cols.size()) != doc.width)
    throw Error(ErrorKind::Structure, "grid does not match the layout of its objects");
}

struct Selection {
  std::size_t cls;
  std::vector<std::size_t> ancestors;  // outermost first
  std::map<std::size_t, std::size_t> index;
};

Selection select(const TabulaModel& m, const ClassStructure& cs, std::string_view clsKey,
                 const ObjectCtx& ctx, bool includeSelf) {
  Selection s;
  s.cls = find_class_key(m, clsKey);
  const auto& name = m.classes()[s.cls].name;
  if (!cs.is_axis_repeating(s.cls)) {
    if (cs.role(s.cls) == ClassRole::Relation)
      throw Error(ErrorKind::Expansion, "objects of relation class " + name + " follow its components");
    throw Error(ErrorKind::Expansion, "class " + name + " does not repeat");
  }
  for (auto a = cs.repeating_parent(s.cls); a != npos; a = cs.repeating_parent(a))
    s.ancestors.insert(s.ancestors.begin(), a);
  for (const auto& [key, idx] : ctx) {
    const auto k = find_class_key(m, key);
    const bool ok = std::find(s.ancestors.begin(), s.ancestors.end(), k) != s.ancestors.end() ||
                    (includeSelf && k == s.cls);
    if (!ok)
      throw Error(ErrorKind::Structure, m.classes()[k].name + " does not enclose " + name);
    s.index[k] = idx;
  }
  return s;
}

ObjectNode& descend(const TabulaModel& m, ObjectNode& root, const Selection& s) {
  ObjectNode* node = &root;
  for (auto a : s.ancestors) {
    const auto& name = m.classes()[a].name;
    auto it = s.index.find(a);
    if (it == s.index.end()) throw Error(ErrorKind::Structure, "missing index for " + name);
    auto& v = node->children[a];
    if (it->second >= v.size())
      throw Error(ErrorKind::Structure, name + " has no object " + std::to_string(it->second));
    node = &v[it->second];
  }
  return *node;
}

}  // namespace

// ---------------------------------------------------------------------------

InstanceLayout compute_layout(const TabulaModel& model, const ClassStructure& cs,
                              const ObjectTree& objects) {
  InstanceLayout l;
  std::vector<AxisStep> path;
  expand(model, cs, true, cs.base(), objects.root, path, l.rows);
  expand(model, cs, false, cs.base(), objects.root, path, l.cols);
  return l;
}

ObjectTree default_objects(const TabulaModel&, const ClassStructure& cs) {
  ObjectTree t;
  add_default_children(cs, npos, t.root, t);
  return t;
}

std::vector<std::string> validate_objects(const TabulaModel& model, const ClassStructure& cs,
                                          const ObjectTree& objects) {
  std::vector<std::string> out;
  std::set<std::uint64_t> ids;
  const auto visit = [&](auto&& self, const ObjectNode& node, std::size_t parent) -> void {
    for (const auto& [k, objs] : node.children) {
      if (k >= cs.size() || !cs.is_axis_repeating(k) || cs.repeating_parent(k) != parent) {
        out.push_back("unexpected objects of " +
                      (k < cs.size() ? model.classes()[k].name : "class #" + std::to_string(k)));
        continue;
      }
      for (const auto& o : objs) {
        if (o.id == 0 || o.id >= objects.nextId || !ids.insert(o.id).second)
          out.push_back("bad object id " + std::to_string(o.id) + " in " + model.classes()[k].name);
        self(self, o, k);
      }
    }
  };
  visit(visit, objects.root, npos);
  return out;
}

std::size_t find_class_key(const TabulaModel& model, std::string_view key) {
  if (auto i = model.class_index(key)) return *i;
  const auto lower = [](std::string_view s) {
    std::string o(s);
    for (auto& c : o) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return o;
  };
  const auto k = lower(key);
  std::optional<std::size_t> hit;
  const auto& cls = model.classes();
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (k.empty() || lower(cls[i].name).rfind(k, 0) != 0) continue;
    if (hit) throw Error(ErrorKind::Ambiguous, "class prefix '" + std::string(key) + "' is ambiguous");
    hit = i;
  }
  if (!hit) throw Error(ErrorKind::UnknownClass, "unknown class " + std::string(key));
  return *hit;
}

InstanceCell InstanceCell::constant(Value v) {
  InstanceCell c;
  c.kind = CellKind::Constant;
  c.value = std::move(v);
  return c;
}

InstanceCell InstanceCell::make_formula(A1Expr e) {
  InstanceCell c;
  c.kind = CellKind::Formula;
  c.formula = std::move(e);
  return c;
}

const InstanceCell& InstanceDoc::at(CellAddr a) const {
  if (!in_bounds(a)) throw Error(ErrorKind::Bounds, to_a1(a) + " is outside the sheet");
  return cells[static_cast<std::size_t>(a.row) * width + a.col];
}

InstanceCell& InstanceDoc::at(CellAddr a) {
  return const_cast<InstanceCell&>(std::as_const(*this).at(a));
}

std::map<CellAddr, Value> InstanceDoc::values() const {
  std::map<CellAddr, Value> out;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (const auto& cell = at({c, r}); cell.kind == CellKind::Constant) out.emplace(CellAddr{c, r}, cell.value);
  return out;
}

std::map<CellAddr, Value> InstanceDoc::computed() const {
  std::map<CellAddr, Value> out;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (const auto& cell = at({c, r}); cell.kind == CellKind::Formula && !cell.has_error())
        out.emplace(CellAddr{c, r}, cell.value);
  return out;
}

InstanceDoc rebuild(const InstanceDoc& doc, TabulaModel model, ObjectTree objects, const PointMap& map) {
  const auto [cs, l] = locate(model, objects);

  std::map<Identity, CellAddr> old;
  if (!doc.cells.empty()) {
    const auto [ocs, ol] = locate(doc.model, doc.objects);
    require_shape(doc, ol);
    for (int i = 0; i < doc.height; ++i)
      for (int j = 0; j < doc.width; ++j) {
        const Point p{ol.cols[j].model, ol.rows[i].model};
        const auto np = map ? map(p) : std::optional<Point>(p);
        if (np) old.emplace(Identity{np->col, np->row, ol.rows[i].key(), ol.cols[j].key()}, CellAddr{j, i});
      }
  }

  InstanceDoc out;
  out.width = static_cast<int>(l.cols.size());
  out.height = static_cast<int>(l.rows.size());
  out.cells.resize(static_cast<std::size_t>(out.width) * out.height);
  const Translator tr(model, cs, l);
  for (int i = 0; i < out.height; ++i)
    for (int j = 0; j < out.width; ++j) {
      const Point p{l.cols[j].model, l.rows[i].model};
      auto& cell = out.at({j, i});
      auto it = old.find(Identity{p.col, p.row, l.rows[i].key(), l.cols[j].key()});
      cell = it != old.end() ? doc.at(it->second) : initial_cell(model.at(p));
      if (const auto* f = std::get_if<FormulaCell>(&model.at(p))) {
        try {
          cell = InstanceCell::make_formula(tr.run(p, l.rows[i], l.cols[j], f->expr));
        } catch (const Error&) {
          cell = InstanceCell::make_formula(A1Expr::make_apply(Function::Sum, {}));
          cell.error = "#REF!";
        }
      }
    }
  out.model = std::move(model);
  out.objects = std::move(objects);
  recalc_marking_errors(out);
  return out;
}

InstanceDoc create(const TabulaModel& model) {
  const ClassStructure cs(model);
  const auto issues = check_formulas(model);
  if (!issues.empty()) {
    const auto& i = issues.front();
    throw Error(ErrorKind::Formula, "(" + std::to_string(i.cell.col) + "," + std::to_string(i.cell.row) +
                                        "): " + i.message);
  }
  return rebuild(InstanceDoc{}, model, default_objects(model, cs));
}

std::map<std::pair<Point, ObjectCtx>, CellAddr> layout(const InstanceDoc& doc) {
  const auto [cs, l] = locate(doc.model, doc.objects);
  require_shape(doc, l);
  std::map<std::pair<Point, ObjectCtx>, CellAddr> out;
  for (int i = 0; i < doc.height; ++i)
    for (int j = 0; j < doc.width; ++j)
      out.emplace(std::pair{Point{l.cols[j].model, l.rows[i].model}, ctx_of(doc.model, l.rows[i], l.cols[j])},
                  CellAddr{j, i});
  return out;
}

CellOrigin origin_of(const InstanceDoc& doc, CellAddr addr) {
  if (!doc.in_bounds(addr)) throw Error(ErrorKind::Bounds, to_a1(addr) + " is outside the sheet");
  const auto [cs, l] = locate(doc.model, doc.objects);
  require_shape(doc, l);
  const auto& row = l.rows[addr.row];
  const auto& col = l.cols[addr.col];
  return {{col.model, row.model}, ctx_of(doc.model, row, col)};
}

std::vector<CellAddr> addresses_of(const InstanceDoc& doc, Point p) {
  cell_at(doc.model, p);
  const auto [cs, l] = locate(doc.model, doc.objects);
  require_shape(doc, l);
  std::vector<CellAddr> out;
  for (int i = 0; i < doc.height; ++i)
    if (l.rows[i].model == p.row)
      for (int j = 0; j < doc.width; ++j)
        if (l.cols[j].model == p.col) out.push_back({j, i});
  return out;
}

namespace {

void collect_slots(const TabulaModel& m, const ObjectNode& node, const ObjectCtx& ctx,
                   std::vector<ObjectSlot>& out) {
  for (const auto& [cls, kids] : node.children) {
    const auto& name = m.classes()[cls].name;
    out.push_back({name, ctx, kids.size()});
    for (std::size_t i = 0; i < kids.size(); ++i) {
      auto inner = ctx;
      inner[name] = i;
      collect_slots(m, kids[i], inner, out);
    }
  }
}

}  // namespace

std::vector<ObjectSlot> object_slots(const InstanceDoc& doc) {
  std::vector<ObjectSlot> out;
  collect_slots(doc.model, doc.objects.root, {}, out);
  return out;
}

InstanceDoc add_object(const InstanceDoc& doc, std::string_view cls, const ObjectCtx& parent,
                       std::optional<std::size_t> at) {
  const ClassStructure cs(doc.model);
  const auto s = select(doc.model, cs, cls, parent, false);
  ObjectTree t = doc.objects;
  auto& siblings = descend(doc.model, t.root, s).children[s.cls];
  const auto pos = at.value_or(siblings.size());
  if (pos > siblings.size())
    throw Error(ErrorKind::Structure, "position " + std::to_string(pos) + " is past the last " +
                                          doc.model.classes()[s.cls].name);
  ObjectNode node;
  node.id = t.nextId++;
  add_default_children(cs, s.cls, node, t);
  siblings.insert(siblings.begin() + static_cast<std::ptrdiff_t>(pos), std::move(node));
  return rebuild(doc, doc.model, std::move(t));
}

InstanceDoc remove_object(const InstanceDoc& doc, std::string_view cls, const ObjectCtx& ctx) {
  const ClassStructure cs(doc.model);
  const auto s = select(doc.model, cs, cls, ctx, true);
  const auto& name = doc.model.classes()[s.cls].name;
  auto self = s.index.find(s.cls);
  if (self == s.index.end()) throw Error(ErrorKind::Structure, "missing index for " + name);
  ObjectTree t = doc.objects;
  auto& siblings = descend(doc.model, t.root, s).children[s.cls];
  if (self->second >= siblings.size())
    throw Error(ErrorKind::Structure, name + " has no object " + std::to_string(self->second));
  siblings.erase(siblings.begin() + static_cast<std::ptrdiff_t>(self->second));
  return rebuild(doc, doc.model, std::move(t));
}

std::string_view to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::LabelMismatch: return "LabelMismatch";
    case DiagnosticKind::TypeError: return "TypeError";
    case DiagnosticKind::ConstraintViolation: return "ConstraintViolation";
    case DiagnosticKind::FormulaMismatch: return "FormulaMismatch";
    case DiagnosticKind::StructureError: return "StructureError";
  }
  return "StructureError";
}

std::string to_string(const Diagnostic& d) {
  return std::string(to_string(d.kind)) + " " + to_a1(d.addr) + " " + d.message;
}

namespace {

std::optional<Diagnostic> check_input(const InputCell& in, CellAddr a, const Value& v) {
  if (v.type() != in.defaultValue.type())
    return Diagnostic{DiagnosticKind::TypeError, a,
                      in.name + " expects " + std::string(to_string(in.defaultValue.type())) + ", got " +
                          format_literal(v)};
  if (in.constraint && !check_constraint(*in.constraint, v))
    return Diagnostic{DiagnosticKind::ConstraintViolation, a,
                      in.name + " = " + format_literal(v) + " violates " + to_string(*in.constraint)};
  return std::nullopt;
}

}  // namespace

EditResult set_value(const InstanceDoc& doc, CellAddr addr, const Value& v) {
  if (!doc.in_bounds(addr))
    return {doc, {{DiagnosticKind::StructureError, addr, "outside the sheet"}}};
  const auto p = origin_of(doc, addr).point;
  const auto* in = std::get_if<InputCell>(&doc.model.at(p));
  if (!in) return {doc, {{DiagnosticKind::StructureError, addr, "not an input cell"}}};
  if (auto d = check_input(*in, addr, v)) return {doc, {*d}};
  EditResult r{doc, {}};
  r.doc.at(addr) = InstanceCell::constant(v);
  recalc_marking_errors(r.doc);
  return r;
}

std::vector<Diagnostic> check(const TabulaModel& model, const InstanceDoc& doc) {
  const CellAddr a1{0, 0};
  std::optional<Located> loc;
  try {
    loc = locate(model, doc.objects);
  } catch (const Error& e) {
    return {{DiagnosticKind::StructureError, a1, e.what()}};
  }
  const auto& [cs, l] = *loc;
  std::vector<Diagnostic> out;
  for (const auto& msg : validate_objects(model, cs, doc.objects))
    out.push_back({DiagnosticKind::StructureError, a1, msg});
  if (!out.empty()) return out;
  if (static_cast<int>(l.rows.size()) != doc.height || static_cast<int>(l.cols.size()) != doc.width)
    return {{DiagnosticKind::StructureError, a1,
             "sheet is " + std::to_string(doc.width) + "x" + std::to_string(doc.height) + ", objects need " +
                 std::to_string(l.cols.size()) + "x" + std::to_string(l.rows.size())}};

  const Translator tr(model, cs, l);
  for (int i = 0; i < doc.height; ++i)
    for (int j = 0; j < doc.width; ++j) {
      const CellAddr a{j, i};
      const Point p{l.cols[j].model, l.rows[i].model};
      const auto& cell = doc.at(a);
      std::visit(
          [&](const auto& mc) {
            using T = std::decay_t<decltype(mc)>;
            if constexpr (std::is_same_v<T, LabelCell>) {
              const bool ok = mc.text.empty()
                                  ? cell.kind == CellKind::Empty ||
                                        (cell.kind == CellKind::Constant && cell.value == Value::text(""))
                                  : cell.kind == CellKind::Constant && cell.value == Value::text(mc.text);
              if (!ok) out.push_back({DiagnosticKind::LabelMismatch, a, "expected label " + quote(mc.text)});
            } else if constexpr (std::is_same_v<T, InputCell>) {
              if (cell.kind == CellKind::Formula) {
                out.push_back({DiagnosticKind::TypeError, a, mc.name + " is an input but holds a formula"});
                return;
              }
              const Value v = cell.kind == CellKind::Empty ? Value::text("") : cell.value;
              if (auto d = check_input(mc, a, v)) out.push_back(*d);
            } else {
              std::string expected;
              try {
                const auto e = tr.run(p, l.rows[i], l.cols[j], mc.expr);
                if (cell.kind == CellKind::Formula && cell.formula == e) return;
                expected = "expected =" + to_string(e);
              } catch (const Error& err) {
                expected = std::string("model formula does not translate: ") + err.what();
              }
              out.push_back({DiagnosticKind::FormulaMismatch, a, expected});
            }
          },
          model.at(p));
    }
  return out;
}

std::vector<CellAddr> recalc_marking_errors(InstanceDoc& doc) {
  std::vector<CellAddr> formulas;
  std::map<CellAddr, std::size_t> index;
  for (int r = 0; r < doc.height; ++r)
    for (int c = 0; c < doc.width; ++c)
      if (doc.at({c, r}).kind == CellKind::Formula) {
        index[{c, r}] = formulas.size();
        formulas.push_back({c, r});
      }

  std::vector<std::vector<std::size_t>> users(formulas.size());
  std::vector<std::size_t> pending(formulas.size(), 0);
  for (std::size_t f = 0; f < formulas.size(); ++f) {
    std::set<std::size_t> deps;
    doc.at(formulas[f]).formula.for_each_ref([&](const CellRange& r) {
      for (int row = std::max(0, std::min(r.start.row, r.end.row));
           row <= std::min(doc.height - 1, std::max(r.start.row, r.end.row)); ++row)
        for (int col = std::max(0, std::min(r.start.col, r.end.col));
             col <= std::min(doc.width - 1, std::max(r.start.col, r.end.col)); ++col)
          if (auto it = index.find({col, row}); it != index.end()) deps.insert(it->second);
    });
    for (auto d : deps) users[d].push_back(f);
    pending[f] = deps.size();
  }

  std::vector<std::size_t> ready;
  for (std::size_t f = 0; f < formulas.size(); ++f)
    if (pending[f] == 0) ready.push_back(f);
  std::vector<bool> done(formulas.size(), false);
  while (!ready.empty()) {
    const auto f = ready.back();
    ready.pop_back();
    done[f] = true;
    auto& cell = doc.at(formulas[f]);
    try {
      cell.value = eval(doc, cell.formula);
      cell.error.clear();
    } catch (const EvalFailure& e) {
      cell.value = Value();
      cell.error = e.code;
    }
    for (auto u : users[f])
      if (--pending[u] == 0) ready.push_back(u);
  }

  std::vector<CellAddr> stuck;
  for (std::size_t f = 0; f < formulas.size(); ++f)
    if (!done[f]) {
      auto& cell = doc.at(formulas[f]);
      cell.value = Value();
      cell.error = code_for(ErrorKind::Cycle);
      stuck.push_back(formulas[f]);
    }
  return stuck;
}

InstanceDoc recalc(const InstanceDoc& doc) {
  InstanceDoc out = doc;
  const auto stuck = recalc_marking_errors(out);
  if (!stuck.empty()) throw Error(ErrorKind::Cycle, "circular reference through " + to_a1(stuck.front()));
  return out;
}

Value evaluate(const InstanceDoc& doc, const A1Expr& e) {
  try {
    return eval(doc, e);
  } catch (const EvalFailure& f) {
    throw Error(f.kind, f.message);
  }
}

A1Expr translate(const TabulaModel& model, const InstanceDoc& doc, Point formulaCell,
                 const ObjectCtx& ctx, const Expr& e) {
  cell_at(model, formulaCell);
  const auto [cs, l] = locate(model, doc.objects);
  const AxisSlot* row = nullptr;
  const AxisSlot* col = nullptr;
  for (const auto& s : l.rows)
    if (s.model == formulaCell.row && matches(model, s, ctx)) row = &s;
  for (const auto& s : l.cols)
    if (s.model == formulaCell.col && matches(model, s, ctx)) col = &s;
  if (!row || !col) throw Error(ErrorKind::Structure, "no object matches the given context");
  return Translator(model, cs, l).run(formulaCell, *row, *col, e);
}

A1Expr expected_formula(const TabulaModel& model, const InstanceDoc& doc, CellAddr addr) {
  const auto [cs, l] = locate(model, doc.objects);
  if (addr.row < 0 || addr.col < 0 || addr.row >= static_cast<int>(l.rows.size()) ||
      addr.col >= static_cast<int>(l.cols.size()))
    throw Error(ErrorKind::Bounds, to_a1(addr) + " is outside the sheet");
  const auto& row = l.rows[addr.row];
  const auto& col = l.cols[addr.col];
  const Point p{col.model, row.model};
  const auto* f = std::get_if<FormulaCell>(&model.at(p));
  if (!f) throw Error(ErrorKind::Structure, to_a1(addr) + " is not a formula cell of the model");
  return Translator(model, cs, l).run(p, row, col, f->expr);
}

std::string display_value(const InstanceCell& cell) {
  switch (cell.kind) {
    case CellKind::Empty: return "";
    case CellKind::Formula:
      if (cell.has_error()) return cell.error;
      [[fallthrough]];
    case CellKind::Constant:
      return cell.value.is_number() ? format_number(cell.value.as_number()) : cell.value.as_text();
  }
  return "";
}

std::string export_csv(const InstanceDoc& doc, CsvMode mode) {
  std::string out;
  for (int r = 0; r < doc.height; ++r) {
    for (int c = 0; c < doc.width; ++c) {
      if (c) out += ',';
      const auto& cell = doc.at({c, r});
      out += csv_field(mode == CsvMode::Formulas && cell.kind == CellKind::Formula
                           ? "=" + to_string(cell.formula)
                           : display_value(cell));
    }
    out += "\r\n";
  }
  return out;
}

}  // namespace tabula
