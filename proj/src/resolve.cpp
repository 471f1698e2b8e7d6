#include "tabula/resolve.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "tabula/formula.hpp"

namespace tabula {

namespace {

std::vector<std::string> names_of(const TabulaModel& model, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(model.classes()[i].name);
  return out;
}

std::string describe(const AttrRef& ref) {
  return ref.qualifier ? *ref.qualifier + "." + ref.name : ref.name;
}

}  // namespace

RefBinding resolve_ref(const TabulaModel& model, Point fromCell, const AttrRef& ref) {
  return resolve_ref(model, ClassStructure(model), fromCell, ref);
}

RefBinding resolve_ref(const TabulaModel& model, const ClassStructure& cs, Point fromCell,
                       const AttrRef& ref) {
  cell_at(model, fromCell);
  std::optional<std::size_t> qualifier;
  if (ref.qualifier) {
    qualifier = model.class_index(*ref.qualifier);
    if (!qualifier) throw Error(ErrorKind::UnknownClass, "unknown class " + *ref.qualifier);
  }

  std::vector<Point> candidates;
  for (int r = 0; r < model.height(); ++r)
    for (int c = 0; c < model.width(); ++c) {
      const Point q{c, r};
      const auto& cell = model.at(q);
      if (!is_attribute(cell) || attribute_name(cell) != ref.name) continue;
      if (qualifier && !cs.contains_class(*qualifier, cs.owner(q))) continue;
      candidates.push_back(q);
    }
  if (candidates.empty())
    throw Error(ErrorKind::UnknownName, "unknown attribute " + describe(ref));

  const auto from = cs.owner(fromCell);
  std::optional<Point> picked;
  std::vector<Point> local;
  for (auto q : candidates)
    if (cs.owner(q) == from) local.push_back(q);
  if (local.size() == 1) {
    picked = local.front();
  } else if (local.empty() && candidates.size() == 1) {
    picked = candidates.front();
  } else if (local.empty()) {
    // Prefer the candidate lying in the same row block and column block.
    int best = -1;
    bool tie = false;
    for (auto q : candidates) {
      const auto o = cs.owner(q);
      const int score = (cs.row_component(o) == cs.row_component(from)) +
                        (cs.col_component(o) == cs.col_component(from));
      if (score > best) {
        best = score;
        picked = q;
        tie = false;
      } else if (score == best) {
        tie = true;
      }
    }
    if (tie) picked.reset();
  }
  if (!picked) throw Error(ErrorKind::Ambiguous, "ambiguous attribute " + describe(ref));

  const auto target = cs.owner(*picked);
  const auto& fc = cs.chain(from);
  const auto& tc = cs.chain(target);
  std::vector<std::size_t> fixed, free;
  for (auto k : tc) (std::binary_search(fc.begin(), fc.end(), k) ? fixed : free).push_back(k);

  RefBinding b;
  b.targetClass = model.classes()[target].name;
  b.targetCell = *picked;
  b.fixedAxes = names_of(model, fixed);
  b.freeAxes = names_of(model, free);
  return b;
}

std::vector<FormulaIssue> check_formulas(const TabulaModel& model) {
  const ClassStructure cs(model);
  std::vector<FormulaIssue> issues;

  std::map<std::pair<std::size_t, std::string>, Point> seen;
  for (int r = 0; r < model.height(); ++r)
    for (int c = 0; c < model.width(); ++c) {
      const Point p{c, r};
      const auto& cell = model.at(p);
      if (!is_attribute(cell)) continue;
      const auto owner = cs.owner(p);
      if (!seen.emplace(std::pair{owner, attribute_name(cell)}, p).second)
        issues.push_back({p, "duplicate attribute " + attribute_name(cell) + " in class " +
                                 model.classes()[owner].name});
    }

  // attribute -> formula attributes it reads, for the cycle check
  std::map<Point, std::vector<Point>> deps;
  for (int r = 0; r < model.height(); ++r)
    for (int c = 0; c < model.width(); ++c) {
      const Point p{c, r};
      const auto* f = std::get_if<FormulaCell>(&model.at(p));
      if (!f) continue;
      auto& out = deps[p];
      std::function<void(const Expr&, bool)> walk = [&](const Expr& e, bool aggregateArg) {
        if (e.kind == Expr::Kind::Ref) {
          try {
            const auto b = resolve_ref(model, cs, p, e.ref);
            if (b.aggregates() && !aggregateArg)
              issues.push_back({p, describe(e.ref) + " denotes several cells; wrap it in an aggregate"});
            if (std::holds_alternative<FormulaCell>(model.at(b.targetCell))) out.push_back(b.targetCell);
          } catch (const Error& err) {
            issues.push_back({p, err.what()});
          }
          return;
        }
        const bool agg = e.kind == Expr::Kind::Apply;
        for (const auto& a : e.args) walk(a, agg);
      };
      walk(f->expr, false);
    }

  // Iterative colouring DFS; report each cycle once at its smallest cell.
  std::map<Point, int> state;
  std::set<Point> reported;
  for (const auto& [start, _] : deps) {
    if (state[start]) continue;
    std::vector<std::pair<Point, std::size_t>> stack{{start, 0}};
    state[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& succ = deps[node];
      if (next == succ.size()) {
        state[node] = 2;
        stack.pop_back();
        continue;
      }
      const Point s = succ[next++];
      if (state[s] == 1) {
        Point first = s;
        for (auto it = stack.rbegin(); it != stack.rend() && it->first != s; ++it)
          first = std::min(first, it->first);
        if (reported.insert(first).second)
          issues.push_back({first, "formula " + attribute_name(model.at(first)) + " depends on itself"});
      } else if (state[s] == 0) {
        state[s] = 1;
        stack.push_back({s, 0});
      }
    }
  }

  std::stable_sort(issues.begin(), issues.end(),
                   [](const FormulaIssue& a, const FormulaIssue& b) { return a.cell < b.cell; });
  return issues;
}

}  // namespace tabula
