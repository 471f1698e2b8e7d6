#include "tabula/evolution.hpp"

#include <algorithm>
#include <regex>

#include "tabula/formula.hpp"
#include "tabula/layout_rules.hpp"
#include "tabula/resolve.hpp"

namespace tabula {

namespace {

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

std::string point_text(Point p) { return "(" + std::to_string(p.col) + "," + std::to_string(p.row) + ")"; }

[[noreturn]] void reject(ErrorKind kind, const std::string& message, std::string rule = {}) {
  throw OpRejected(kind, std::move(rule), message);
}

bool is_identifier(const std::string& s) {
  static const std::regex re("[A-Za-z_][A-Za-z0-9_]*");
  return std::regex_match(s, re);
}

std::size_t require_class(const TabulaModel& m, const std::string& name) {
  auto i = m.class_index(name);
  if (!i) reject(ErrorKind::UnknownClass, "unknown class " + name);
  return *i;
}

void require_cell(const TabulaModel& m, Point p) {
  if (!m.in_bounds(p)) reject(ErrorKind::Bounds, "cell " + point_text(p) + " lies outside the grid");
}

// New objects start from the default, so it has to pass the constraint.
void require_satisfiable(Point p, const InputCell& in) {
  if (in.constraint && !check_constraint(*in.constraint, in.defaultValue))
    reject(ErrorKind::Type, "default of " + in.name + " at " + point_text(p) + " violates its constraint");
}

// Layout and formulas of an edited model; the first problem rejects the edit.
void require_valid(const TabulaModel& m) {
  const auto vs = validate_layout(m);
  if (!vs.empty()) {
    std::string msg;
    for (const auto& v : vs) msg += (msg.empty() ? "" : "; ") + v.rule + " " + v.className + ": " + v.message;
    reject(ErrorKind::Layout, msg, vs.front().rule);
  }
  const auto issues = check_formulas(m);
  if (!issues.empty())
    reject(ErrorKind::Formula, point_text(issues.front().cell) + ": " + issues.front().message, "FORMULA");
}

// Row or column insertion/deletion inside a class, applied to the grid and to every
// class range.
struct AxisEdit {
  bool rows = true;
  bool insert = true;
  std::string cls;
  int offset = 0;
};

struct Reshaped {
  TabulaModel model;
  PointMap map;
};

Reshaped reshape(const TabulaModel& model, const AxisEdit& e) {
  TabulaModel m = model;
  const auto& c = m.classes()[require_class(m, e.cls)];
  const int lo = e.rows ? c.range.top() : c.range.left();
  const int hi = e.rows ? c.range.bottom() : c.range.right();
  const int extent = hi - lo + 1;
  const char* unit = e.rows ? "row" : "column";
  if (e.offset < 0 || e.offset > extent - (e.insert ? 0 : 1))
    reject(ErrorKind::Bounds, std::string(unit) + " offset " + std::to_string(e.offset) + " lies outside " + e.cls);
  const int at = lo + e.offset;

  for (auto& x : m.classes()) {
    int& first = e.rows ? x.range.topLeft.row : x.range.topLeft.col;
    int& last = e.rows ? x.range.bottomRight.row : x.range.bottomRight.col;
    if (e.insert) {
      if ((first <= lo && hi <= last) || (first < at && at <= last))
        ++last;
      else if (first >= at) {
        ++first;
        ++last;
      }
    } else {
      if (first <= at && at <= last) {
        if (first == last)
          reject(ErrorKind::Layout, std::string("deleting the ") + unit + " would leave " + x.name + " empty");
        --last;
      } else if (first > at) {
        --first;
        --last;
      }
    }
  }
  if (e.rows)
    e.insert ? m.insert_row(at) : m.erase_row(at);
  else
    e.insert ? m.insert_column(at) : m.erase_column(at);

  const bool rows = e.rows;
  const bool insert = e.insert;
  PointMap map = [rows, insert, at](Point p) -> std::optional<Point> {
    int& v = rows ? p.row : p.col;
    if (insert) {
      if (v >= at) ++v;
    } else {
      if (v == at) return std::nullopt;
      if (v > at) --v;
    }
    return p;
  };
  return {std::move(m), std::move(map)};
}

void rewrite_refs(Expr& e, const std::function<void(AttrRef&)>& f) {
  if (e.kind == Expr::Kind::Ref) {
    f(e.ref);
    return;
  }
  for (auto& a : e.args) rewrite_refs(a, f);
}

std::vector<AttrRef> refs_of(const Expr& e) {
  std::vector<AttrRef> out;
  e.for_each_ref([&](const AttrRef& r) { out.push_back(r); });
  return out;
}

std::optional<Point> target_of(const TabulaModel& m, const ClassStructure& cs, Point from, const AttrRef& r) {
  try {
    return resolve_ref(m, cs, from, r).targetCell;
  } catch (const Error&) {
    return std::nullopt;
  }
}

template <class F>
void for_each_formula(TabulaModel& m, F&& f) {
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (auto* fc = std::get_if<FormulaCell>(&m.at({c, r}))) f(Point{c, r}, *fc);
}

TabulaModel rename_attribute(const TabulaModel& model, const RenameAttribute& op) {
  std::optional<std::string> qualifier;
  std::string old = op.from;
  if (auto dot = op.from.find('.'); dot != std::string::npos) {
    qualifier = op.from.substr(0, dot);
    old = op.from.substr(dot + 1);
  }
  if (!is_identifier(op.to)) reject(ErrorKind::Parse, "'" + op.to + "' is not a valid attribute name");
  const ClassDef* scope = nullptr;
  if (qualifier) scope = &model.classes()[require_class(model, *qualifier)];

  std::vector<Point> found;
  for (int r = 0; r < model.height(); ++r)
    for (int c = 0; c < model.width(); ++c) {
      const Point p{c, r};
      if (attribute_name(model.at(p)) == old && (!scope || scope->range.contains(p))) found.push_back(p);
    }
  if (found.empty()) reject(ErrorKind::UnknownName, "no attribute " + op.from);
  if (found.size() > 1) reject(ErrorKind::Ambiguous, "attribute " + op.from + " is ambiguous; qualify it with its class");
  const Point target = found.front();

  const ClassStructure cs(model);
  TabulaModel m = model;
  for_each_formula(m, [&](Point at, FormulaCell& f) {
    rewrite_refs(f.expr, [&](AttrRef& r) {
      if (r.name == old && target_of(model, cs, at, r) == target) r.name = op.to;
    });
  });
  std::visit(Overload{[&](InputCell& c) { c.name = op.to; }, [&](FormulaCell& c) { c.name = op.to; },
                      [](LabelCell&) {}},
             m.at(target));
  require_valid(m);

  // every reference must still land where it did
  const ClassStructure cs2(m);
  for_each_formula(m, [&](Point at, FormulaCell& f) {
    const auto before = refs_of(std::get<FormulaCell>(model.at(at)).expr);
    const auto after = refs_of(f.expr);
    for (std::size_t i = 0; i < after.size(); ++i)
      if (target_of(model, cs, at, before[i]) != target_of(m, cs2, at, after[i]))
        reject(ErrorKind::Formula,
               "renaming changes what " + before[i].name + " at " + point_text(at) + " refers to", "FORMULA");
  });
  return m;
}

TabulaModel rename_class(const TabulaModel& model, const RenameClass& op) {
  const auto idx = require_class(model, op.from);
  if (!is_identifier(op.to)) reject(ErrorKind::Parse, "'" + op.to + "' is not a valid class name");
  if (op.to != op.from && model.class_index(op.to)) reject(ErrorKind::Structure, "class " + op.to + " already exists");
  TabulaModel m = model;
  m.classes()[idx].name = op.to;
  for_each_formula(m, [&](Point, FormulaCell& f) {
    rewrite_refs(f.expr, [&](AttrRef& r) {
      if (r.qualifier == op.from) r.qualifier = op.to;
    });
  });
  return m;
}

InstanceCell label_cell(const std::string& text) {
  return text.empty() ? InstanceCell{} : InstanceCell::constant(Value::text(text));
}

InstanceDoc reshape_instance(const InstanceDoc& doc, const AxisEdit& e) {
  auto [shape, map] = reshape(doc.model, e);
  try {
    return rebuild(doc, std::move(shape), doc.objects, map);
  } catch (const Error& err) {
    reject(err.kind(), err.what());
  }
}

// ---------------------------------------------------------------------------
// Lifting instance formulas back to attribute references

// Aggregates ignore argument order, so runs of references compare as sorted cell lists.
A1Expr canonical(const A1Expr& e) {
  if (e.kind == A1Expr::Kind::Binary) return A1Expr::make_binary(e.op, canonical(e.lhs()), canonical(e.rhs()));
  if (e.kind != A1Expr::Kind::Apply) return e;
  std::vector<A1Expr> args;
  std::vector<CellAddr> run;
  const auto flush = [&] {
    std::sort(run.begin(), run.end());
    for (const auto& a : run) args.push_back(A1Expr::make_ref({a, a}));
    run.clear();
  };
  for (const auto& a : e.args) {
    if (a.kind == A1Expr::Kind::Ref) {
      for (int r = a.ref.start.row; r <= a.ref.end.row; ++r)
        for (int c = a.ref.start.col; c <= a.ref.end.col; ++c) run.push_back({c, r});
      continue;
    }
    flush();
    args.push_back(canonical(a));
  }
  flush();
  return A1Expr::make_apply(e.fn, std::move(args));
}

class Abstractor {
public:
  Abstractor(const TabulaModel& m, const InstanceDoc& doc, Point at)
      : m_(m), doc_(doc), cs_(m), layout_(compute_layout(m, cs_, doc.objects)), at_(at) {}

  Expr run(const A1Expr& e) const {
    switch (e.kind) {
      case A1Expr::Kind::Number: return Expr::make_number(e.number);
      case A1Expr::Kind::Text: return Expr::make_text(e.text);
      case A1Expr::Kind::Ref: return Expr::make_ref(ref_to(point_of(e.ref)));
      case A1Expr::Kind::Binary: return Expr::make_binary(e.op, run(e.lhs()), run(e.rhs()));
      case A1Expr::Kind::Apply: {
        std::vector<Expr> args;
        std::optional<Point> last;
        for (const auto& a : e.args) {
          if (a.kind != A1Expr::Kind::Ref) {
            last.reset();
            args.push_back(run(a));
            continue;
          }
          const auto p = point_of(a.ref);
          if (last == p) continue;  // more copies of the same attribute
          last = p;
          args.push_back(Expr::make_ref(ref_to(p)));
        }
        return Expr::make_apply(e.fn, std::move(args));
      }
    }
    return Expr::make_number(0);
  }

private:
  Point point_of(const CellRange& r) const {
    std::optional<Point> p;
    for (int row = r.start.row; row <= r.end.row; ++row)
      for (int col = r.start.col; col <= r.end.col; ++col) {
        if (!doc_.in_bounds({col, row})) reject(ErrorKind::Lift, to_a1(CellAddr{col, row}) + " is outside the sheet");
        const Point q{layout_.cols[col].model, layout_.rows[row].model};
        if (p && *p != q) reject(ErrorKind::Lift, to_a1(r) + " spans different attributes");
        p = q;
      }
    if (attribute_name(m_.at(*p)).empty())
      reject(ErrorKind::Lift, to_a1(r) + " does not hold an attribute");
    return *p;
  }

  AttrRef ref_to(Point target) const {
    const auto& name = attribute_name(m_.at(target));
    std::vector<AttrRef> candidates{{std::nullopt, name}};
    for (const auto& c : m_.classes())
      if (c.range.contains(target)) candidates.push_back({c.name, name});
    for (const auto& r : candidates)
      if (target_of(m_, cs_, at_, r) == target) return r;
    reject(ErrorKind::Lift, "no reference from " + point_text(at_) + " reaches " + name + " at " + point_text(target));
  }

  const TabulaModel& m_;
  const InstanceDoc& doc_;
  ClassStructure cs_;
  InstanceLayout layout_;
  Point at_;
};

std::string rejection_text(const std::vector<Diagnostic>& ds) {
  std::string s;
  for (const auto& d : ds) s += (s.empty() ? "" : "; ") + to_string(d);
  return s;
}

}  // namespace

TabulaModel apply_model_op(const TabulaModel& model, const ModelOp& op) {
  TabulaModel m = model;
  std::visit(
      Overload{
          [&](const SetLabel& o) {
            require_cell(m, o.cell);
            m.set(o.cell, LabelCell{o.text});
          },
          [&](const SetDefault& o) {
            require_cell(m, o.cell);
            auto* in = std::get_if<InputCell>(&m.at(o.cell));
            if (!in) reject(ErrorKind::Structure, point_text(o.cell) + " is not an input cell");
            in->defaultValue = o.value;
            require_satisfiable(o.cell, *in);
          },
          [&](const SetConstraint& o) {
            require_cell(m, o.cell);
            auto* in = std::get_if<InputCell>(&m.at(o.cell));
            if (!in) reject(ErrorKind::Structure, point_text(o.cell) + " is not an input cell");
            in->constraint = o.constraint;
            require_satisfiable(o.cell, *in);
          },
          [&](const SetFormula& o) {
            require_cell(m, o.cell);
            const auto& name = attribute_name(m.at(o.cell));
            if (name.empty()) reject(ErrorKind::Structure, point_text(o.cell) + " is not an attribute cell");
            m.set(o.cell, FormulaCell{name, o.expr});
          },
          [&](const AddAttribute& o) {
            require_cell(m, o.cell);
            const auto* l = std::get_if<LabelCell>(&m.at(o.cell));
            if (!l || !l->text.empty()) reject(ErrorKind::Structure, point_text(o.cell) + " is not empty");
            if (!is_identifier(o.name)) reject(ErrorKind::Parse, "'" + o.name + "' is not a valid attribute name");
            m.set(o.cell, InputCell{o.name, o.defaultValue, std::nullopt});
          },
          [&](const AddRow& o) { m = reshape(m, {true, true, o.cls, o.offset}).model; },
          [&](const AddColumn& o) { m = reshape(m, {false, true, o.cls, o.offset}).model; },
          [&](const DeleteRow& o) { m = reshape(m, {true, false, o.cls, o.offset}).model; },
          [&](const DeleteColumn& o) { m = reshape(m, {false, false, o.cls, o.offset}).model; },
          [&](const RenameAttribute& o) { m = rename_attribute(m, o); },
          [&](const RenameClass& o) { m = rename_class(m, o); },
      },
      op);
  require_valid(m);
  return m;
}

InstanceDoc apply_instance_op(const InstanceDoc& doc, const InstanceOp& op) {
  const auto cell = [&](CellAddr a) -> InstanceDoc {
    if (!doc.in_bounds(a)) reject(ErrorKind::Bounds, to_a1(a) + " is outside the sheet");
    return doc;
  };
  return std::visit(
      Overload{
          [&](const SetValue& o) {
            auto d = cell(o.addr);
            d.at(o.addr) = InstanceCell::constant(o.value);
            recalc_marking_errors(d);
            return d;
          },
          [&](const SetFormulaAt& o) {
            auto d = cell(o.addr);
            d.at(o.addr) = InstanceCell::make_formula(o.formula);
            recalc_marking_errors(d);
            return d;
          },
          [&](const SetLabelAt& o) {
            auto d = cell(o.addr);
            d.at(o.addr) = label_cell(o.text);
            recalc_marking_errors(d);
            return d;
          },
          [&](const AddObject& o) { return add_object(doc, o.cls, o.parent, o.at); },
          [&](const RemoveObject& o) { return remove_object(doc, o.cls, o.ctx); },
          [&](const InsertRowAll& o) { return reshape_instance(doc, {true, true, o.cls, o.offset}); },
          [&](const InsertColumnAll& o) { return reshape_instance(doc, {false, true, o.cls, o.offset}); },
          [&](const DeleteRowAll& o) { return reshape_instance(doc, {true, false, o.cls, o.offset}); },
          [&](const DeleteColumnAll& o) { return reshape_instance(doc, {false, false, o.cls, o.offset}); },
      },
      op);
}

std::vector<InstanceOp> to(const TabulaModel& model, const InstanceDoc& doc, const ModelOp& op) {
  const TabulaModel next = apply_model_op(model, op);
  std::vector<InstanceOp> ops;
  std::visit(Overload{
                 [&](const SetLabel& o) {
                   for (auto a : addresses_of(doc, o.cell)) ops.push_back(SetLabelAt{a, o.text});
                 },
                 [&](const AddAttribute& o) {
                   for (auto a : addresses_of(doc, o.cell)) ops.push_back(SetValue{a, o.defaultValue});
                 },
                 [&](const AddRow& o) { ops.push_back(InsertRowAll{o.cls, o.offset}); },
                 [&](const AddColumn& o) { ops.push_back(InsertColumnAll{o.cls, o.offset}); },
                 [&](const DeleteRow& o) { ops.push_back(DeleteRowAll{o.cls, o.offset}); },
                 [&](const DeleteColumn& o) { ops.push_back(DeleteColumnAll{o.cls, o.offset}); },
                 [](const auto&) {},
             },
             op);

  // formulas whose translation differs under the new model
  InstanceDoc sim = doc;
  for (const auto& o : ops) sim = apply_instance_op(sim, o);
  InstanceDoc target;
  try {
    target = rebuild(sim, next, sim.objects);
  } catch (const Error& e) {
    reject(e.kind(), e.what());
  }
  for (int r = 0; r < target.height; ++r)
    for (int c = 0; c < target.width; ++c) {
      const CellAddr a{c, r};
      const auto& want = target.at(a);
      if (want.kind != CellKind::Formula) continue;
      if (want.error == "#REF!") reject(ErrorKind::Formula, to_a1(a) + ": formula cannot be laid out", "FORMULA");
      const auto& have = sim.at(a);
      if (have.kind != CellKind::Formula || !(have.formula == want.formula)) ops.push_back(SetFormulaAt{a, want.formula});
    }
  return ops;
}

std::optional<ModelOp> from(const TabulaModel& model, const InstanceDoc& doc, const InstanceOp& op) {
  const auto origin = [&](CellAddr a) {
    if (!doc.in_bounds(a)) reject(ErrorKind::Bounds, to_a1(a) + " is outside the sheet");
    return origin_of(doc, a);
  };
  return std::visit(
      Overload{
          [&](const SetValue& o) -> std::optional<ModelOp> {
            const auto at = origin(o.addr);
            if (!std::holds_alternative<InputCell>(model.at(at.point))) {
              Diagnostic d{DiagnosticKind::StructureError, o.addr, "not an input cell"};
              throw OpRejected(ErrorKind::Structure, "", to_string(d), {d});
            }
            auto r = set_value(doc, o.addr, o.value);
            if (!r.applied()) {
              const auto kind = r.diagnostics.front().kind == DiagnosticKind::TypeError ? ErrorKind::Type
                                                                                         : ErrorKind::Structure;
              throw OpRejected(kind, "", rejection_text(r.diagnostics), r.diagnostics);
            }
            return std::nullopt;
          },
          [&](const SetFormulaAt& o) -> std::optional<ModelOp> {
            const auto at = origin(o.addr);
            const auto& cell = model.at(at.point);
            if (std::holds_alternative<LabelCell>(cell))
              reject(ErrorKind::Lift, to_a1(o.addr) + " is a label; formulas belong in attribute cells");
            const Expr e = Abstractor(model, doc, at.point).run(o.formula);
            A1Expr back;
            try {
              back = translate(model, doc, at.point, at.ctx, e);
            } catch (const Error& err) {
              reject(ErrorKind::Lift, std::string("formula cannot be expressed on the model: ") + err.what());
            }
            if (!(canonical(back) == canonical(o.formula)))
              reject(ErrorKind::Lift, to_string(o.formula) + " matches no attribute pattern at " + to_a1(o.addr));
            if (const auto* f = std::get_if<FormulaCell>(&cell)) {
              if (canonical(translate(model, doc, at.point, at.ctx, f->expr)) == canonical(o.formula))
                return std::nullopt;
            }
            return SetFormula{at.point, e};
          },
          [&](const SetLabelAt& o) -> std::optional<ModelOp> {
            const auto at = origin(o.addr);
            const auto* l = std::get_if<LabelCell>(&model.at(at.point));
            if (!l) reject(ErrorKind::Lift, to_a1(o.addr) + " holds attribute " + attribute_name(model.at(at.point)));
            if (l->text == o.text) return std::nullopt;
            return SetLabel{at.point, o.text};
          },
          [](const AddObject&) -> std::optional<ModelOp> { return std::nullopt; },
          [](const RemoveObject&) -> std::optional<ModelOp> { return std::nullopt; },
          [](const InsertRowAll& o) -> std::optional<ModelOp> { return AddRow{o.cls, o.offset}; },
          [](const InsertColumnAll& o) -> std::optional<ModelOp> { return AddColumn{o.cls, o.offset}; },
          [](const DeleteRowAll& o) -> std::optional<ModelOp> { return DeleteRow{o.cls, o.offset}; },
          [](const DeleteColumnAll& o) -> std::optional<ModelOp> { return DeleteColumn{o.cls, o.offset}; },
      },
      op);
}

SyncResult sync_apply_model(const TabulaModel& model, const InstanceDoc& doc, const ModelOp& op, bool force) {
  const TabulaModel next = apply_model_op(model, op);
  InstanceDoc d = doc;
  for (const auto& o : to(model, doc, op)) d = apply_instance_op(d, o);
  d.model = next;
  recalc_marking_errors(d);
  auto diags = check(next, d);
  if (diags.empty()) return {next, std::move(d), {}};
  const bool valuesOnly = std::all_of(diags.begin(), diags.end(), [](const Diagnostic& x) {
    return x.kind == DiagnosticKind::TypeError || x.kind == DiagnosticKind::ConstraintViolation;
  });
  if (force && valuesOnly) return {next, std::move(d), std::move(diags)};
  const auto msg = "the instance would no longer conform: " + rejection_text(diags);
  throw OpRejected(ErrorKind::Structure, "", msg, std::move(diags));
}

SyncResult sync_apply_instance(const TabulaModel& model, const InstanceDoc& doc, const InstanceOp& op) {
  if (auto lifted = from(model, doc, op)) return sync_apply_model(model, doc, *lifted);
  InstanceDoc d = apply_instance_op(doc, op);
  auto diags = check(model, d);
  if (!diags.empty()) {
    const auto msg = "the edit breaks conformance: " + rejection_text(diags);
    throw OpRejected(ErrorKind::Structure, "", msg, std::move(diags));
  }
  return {model, std::move(d), {}};
}

}  // namespace tabula
