#include "tabula/ops_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "tabula/formula.hpp"

namespace tabula {

namespace {

template <class... F>
struct Overload : F... {
  using F::operator()...;
};
template <class... F>
Overload(F...) -> Overload<F...>;

class Cursor {
public:
  explicit Cursor(std::string_view s) : s_(s) {}

  std::size_t pos() const { return i_; }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool at_end() {
    skip();
    return i_ >= s_.size();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(i_, msg); }

  // Run of non-space characters.
  std::string word(const char* what) {
    skip();
    const auto start = i_;
    while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (start == i_) {
      i_ = start;
      fail(std::string("expected ") + what);
    }
    return std::string(s_.substr(start, i_ - start));
  }

  std::string rest(const char* what) {
    skip();
    if (i_ >= s_.size()) fail(std::string("expected ") + what);
    std::string out(s_.substr(i_));
    i_ = s_.size();
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
  }

  void expect(char c) {
    skip();
    if (i_ >= s_.size() || s_[i_] != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  int integer(const char* what) {
    skip();
    int v = 0;
    auto [p, ec] = std::from_chars(s_.data() + i_, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail(std::string("expected ") + what);
    i_ = static_cast<std::size_t>(p - s_.data());
    return v;
  }

  Point point() {
    expect('(');
    Point p;
    p.col = integer("column");
    expect(',');
    p.row = integer("row");
    expect(')');
    return p;
  }

  std::string string_lit() {
    skip();
    if (i_ >= s_.size() || s_[i_] != '"') fail("expected string");
    const auto start = i_++;
    std::string out;
    while (true) {
      if (i_ >= s_.size()) {
        i_ = start;
        fail("unterminated string");
      }
      const char c = s_[i_];
      if (c == '"') break;
      if (c == '\\' && i_ + 1 < s_.size() && (s_[i_ + 1] == '"' || s_[i_ + 1] == '\\')) {
        out.push_back(s_[i_ + 1]);
        i_ += 2;
        continue;
      }
      out.push_back(c);
      ++i_;
    }
    ++i_;
    return out;
  }

  Value literal() {
    skip();
    if (i_ < s_.size() && s_[i_] == '"') return Value::text(string_lit());
    const auto at = i_;
    const auto w = word("value");
    char* end = nullptr;
    const double d = std::strtod(w.c_str(), &end);
    if (end != w.c_str() + w.size()) {
      i_ = at;
      fail("expected number or quoted text, found '" + w + "'");
    }
    try {
      return Value::number(d);
    } catch (const Error&) {
      i_ = at;
      fail("number out of range");
    }
  }

  CellAddr addr() {
    const auto at = (skip(), i_);
    const auto w = word("cell address");
    auto a = parse_a1(w);
    if (!a) {
      i_ = at;
      fail("expected cell address, found '" + w + "'");
    }
    return *a;
  }

  // key=value pairs up to the end of the line
  std::vector<std::pair<std::string, std::string>> pairs() {
    std::vector<std::pair<std::string, std::string>> out;
    while (!at_end()) {
      const auto at = i_;
      const auto w = word("key=value");
      const auto eq = w.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == w.size()) {
        i_ = at;
        fail("expected key=value, found '" + w + "'");
      }
      out.emplace_back(w.substr(0, eq), w.substr(eq + 1));
    }
    return out;
  }

  void end() {
    if (!at_end()) fail("unexpected text after operation");
  }

private:
  std::string_view s_;
  std::size_t i_ = 0;
};

std::size_t to_index(const std::string& v, const Cursor& c) {
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || p != v.data() + v.size()) c.fail("expected an object index, found '" + v + "'");
  return n;
}

std::string point_text(Point p) { return "(" + std::to_string(p.col) + "," + std::to_string(p.row) + ")"; }

std::string ctx_text(const ObjectCtx& ctx) {
  std::string s;
  for (const auto& [k, v] : ctx) s += " " + k + "=" + std::to_string(v);
  return s;
}

// Formula text parsed with offsets relative to the whole line.
template <class F>
auto parse_at(Cursor& c, const char* what, F&& parse) {
  c.skip();
  const auto base = c.pos();
  const auto text = c.rest(what);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw ParseError(base + e.offset(), e.detail());
  }
}

template <class Op, class Parse>
std::vector<Op> parse_script(std::string_view text, Parse&& parse) {
  std::vector<Op> out;
  std::size_t lineNo = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    ++lineNo;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    try {
      out.push_back(parse(line));
    } catch (const ParseError& e) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineNo) + ", " + e.what());
    }
  }
  return out;
}

// JSON helpers

const Json& field(const Json& j, const char* name) {
  if (!j.contains(name)) throw Error(ErrorKind::Parse, std::string("operation lacks \"") + name + "\"");
  return j.at(name);
}

std::string str_field(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw Error(ErrorKind::Parse, std::string("\"") + name + "\" must be a string");
  return v.get<std::string>();
}

int int_field(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) throw Error(ErrorKind::Parse, std::string("\"") + name + "\" must be an integer");
  return v.get<int>();
}

Point point_field(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    throw Error(ErrorKind::Parse, std::string("\"") + name + "\" must be [col, row]");
  return {v[0].get<int>(), v[1].get<int>()};
}

CellAddr addr_field(const Json& j) {
  const auto s = str_field(j, "addr");
  auto a = parse_a1(s);
  if (!a) throw Error(ErrorKind::Parse, "bad cell address '" + s + "'");
  return *a;
}

ObjectCtx ctx_field(const Json& j, const char* name) {
  ObjectCtx ctx;
  if (!j.contains(name)) return ctx;
  const auto& v = j.at(name);
  if (!v.is_object()) throw Error(ErrorKind::Parse, std::string("\"") + name + "\" must be an object");
  for (const auto& [k, idx] : v.items()) {
    if (!idx.is_number_unsigned()) throw Error(ErrorKind::Parse, "object index for " + k + " must be a non-negative integer");
    ctx[k] = idx.get<std::size_t>();
  }
  return ctx;
}

Json ctx_json(const ObjectCtx& ctx) {
  Json j = Json::object();
  for (const auto& [k, v] : ctx) j[k] = v;
  return j;
}

Json point_json(Point p) { return Json::array({p.col, p.row}); }

}  // namespace

ModelOp parse_model_op(std::string_view line) {
  Cursor c(line);
  const auto kw = c.word("operation");
  ModelOp op;
  if (kw == "set-label") {
    const auto p = c.point();
    op = SetLabel{p, c.string_lit()};
  } else if (kw == "set-default") {
    const auto p = c.point();
    op = SetDefault{p, c.literal()};
  } else if (kw == "set-constraint") {
    const auto p = c.point();
    c.skip();
    const auto at = c.pos();
    const auto text = c.rest("constraint or none");
    if (text == "none") {
      op = SetConstraint{p, std::nullopt};
    } else {
      try {
        op = SetConstraint{p, parse_constraint(text)};
      } catch (const ParseError& e) {
        throw ParseError(at + e.offset(), e.detail());
      }
    }
  } else if (kw == "set-formula") {
    const auto p = c.point();
    op = SetFormula{p, parse_at(c, "formula", [](const std::string& t) { return parse_formula(t); })};
  } else if (kw == "add-attribute") {
    const auto p = c.point();
    auto name = c.word("attribute name");
    c.expect('=');
    op = AddAttribute{p, std::move(name), c.literal()};
  } else if (kw == "add-row" || kw == "add-column" || kw == "delete-row" || kw == "delete-column") {
    auto cls = c.word("class");
    const int off = c.integer("offset");
    if (kw == "add-row") op = AddRow{cls, off};
    else if (kw == "add-column") op = AddColumn{cls, off};
    else if (kw == "delete-row") op = DeleteRow{cls, off};
    else op = DeleteColumn{cls, off};
  } else if (kw == "rename-attribute") {
    auto from = c.word("attribute");
    op = RenameAttribute{from, c.word("new name")};
  } else if (kw == "rename-class") {
    auto from = c.word("class");
    op = RenameClass{from, c.word("new name")};
  } else {
    throw ParseError(0, "unknown model operation '" + kw + "'");
  }
  c.end();
  return op;
}

InstanceOp parse_instance_op(std::string_view line) {
  Cursor c(line);
  const auto kw = c.word("operation");
  InstanceOp op;
  if (kw == "set-value") {
    const auto a = c.addr();
    op = SetValue{a, c.literal()};
  } else if (kw == "set-formula-at") {
    const auto a = c.addr();
    op = SetFormulaAt{a, parse_at(c, "formula", [](const std::string& t) { return parse_a1_formula(t); })};
  } else if (kw == "set-label-at") {
    const auto a = c.addr();
    op = SetLabelAt{a, c.string_lit()};
  } else if (kw == "add-object") {
    AddObject o{c.word("class"), {}, std::nullopt};
    for (const auto& [k, v] : c.pairs()) {
      if (k == "at") {
        if (v != "end") o.at = to_index(v, c);
      } else {
        o.parent[k] = to_index(v, c);
      }
    }
    op = o;
  } else if (kw == "remove-object") {
    RemoveObject o{c.word("class"), {}};
    for (const auto& [k, v] : c.pairs()) o.ctx[k] = to_index(v, c);
    op = o;
  } else if (kw == "insert-row-all" || kw == "insert-column-all" || kw == "delete-row-all" ||
             kw == "delete-column-all") {
    auto cls = c.word("class");
    const int off = c.integer("offset");
    if (kw == "insert-row-all") op = InsertRowAll{cls, off};
    else if (kw == "insert-column-all") op = InsertColumnAll{cls, off};
    else if (kw == "delete-row-all") op = DeleteRowAll{cls, off};
    else op = DeleteColumnAll{cls, off};
  } else {
    throw ParseError(0, "unknown instance operation '" + kw + "'");
  }
  c.end();
  return op;
}

std::string to_string(const ModelOp& op) {
  return std::visit(
      Overload{
          [](const SetLabel& o) { return "set-label " + point_text(o.cell) + " " + quote(o.text); },
          [](const SetDefault& o) { return "set-default " + point_text(o.cell) + " " + format_literal(o.value); },
          [](const SetConstraint& o) {
            return "set-constraint " + point_text(o.cell) + " " + (o.constraint ? to_string(*o.constraint) : "none");
          },
          [](const SetFormula& o) { return "set-formula " + point_text(o.cell) + " " + to_string(o.expr); },
          [](const AddAttribute& o) {
            return "add-attribute " + point_text(o.cell) + " " + o.name + " = " + format_literal(o.defaultValue);
          },
          [](const AddRow& o) { return "add-row " + o.cls + " " + std::to_string(o.offset); },
          [](const AddColumn& o) { return "add-column " + o.cls + " " + std::to_string(o.offset); },
          [](const DeleteRow& o) { return "delete-row " + o.cls + " " + std::to_string(o.offset); },
          [](const DeleteColumn& o) { return "delete-column " + o.cls + " " + std::to_string(o.offset); },
          [](const RenameAttribute& o) { return "rename-attribute " + o.from + " " + o.to; },
          [](const RenameClass& o) { return "rename-class " + o.from + " " + o.to; },
      },
      op);
}

std::string to_string(const InstanceOp& op) {
  return std::visit(
      Overload{
          [](const SetValue& o) { return "set-value " + to_a1(o.addr) + " " + format_literal(o.value); },
          [](const SetFormulaAt& o) { return "set-formula-at " + to_a1(o.addr) + " " + to_string(o.formula); },
          [](const SetLabelAt& o) { return "set-label-at " + to_a1(o.addr) + " " + quote(o.text); },
          [](const AddObject& o) {
            return "add-object " + o.cls + ctx_text(o.parent) + " at=" + (o.at ? std::to_string(*o.at) : "end");
          },
          [](const RemoveObject& o) { return "remove-object " + o.cls + ctx_text(o.ctx); },
          [](const InsertRowAll& o) { return "insert-row-all " + o.cls + " " + std::to_string(o.offset); },
          [](const InsertColumnAll& o) { return "insert-column-all " + o.cls + " " + std::to_string(o.offset); },
          [](const DeleteRowAll& o) { return "delete-row-all " + o.cls + " " + std::to_string(o.offset); },
          [](const DeleteColumnAll& o) { return "delete-column-all " + o.cls + " " + std::to_string(o.offset); },
      },
      op);
}

std::vector<ModelOp> parse_model_script(std::string_view text) {
  return parse_script<ModelOp>(text, parse_model_op);
}

std::vector<InstanceOp> parse_instance_script(std::string_view text) {
  return parse_script<InstanceOp>(text, parse_instance_op);
}

Json to_json(const ModelOp& op) {
  Json j;
  std::visit(Overload{
                 [&](const SetLabel& o) { j = {{"op", "set-label"}, {"cell", point_json(o.cell)}, {"text", o.text}}; },
                 [&](const SetDefault& o) {
                   j = {{"op", "set-default"}, {"cell", point_json(o.cell)}, {"value", value_to_json(o.value)}};
                 },
                 [&](const SetConstraint& o) {
                   j = {{"op", "set-constraint"}, {"cell", point_json(o.cell)}};
                   j["constraint"] = o.constraint ? Json(to_string(*o.constraint)) : Json(nullptr);
                 },
                 [&](const SetFormula& o) {
                   j = {{"op", "set-formula"}, {"cell", point_json(o.cell)}, {"formula", to_string(o.expr)}};
                 },
                 [&](const AddAttribute& o) {
                   j = {{"op", "add-attribute"}, {"cell", point_json(o.cell)}, {"name", o.name},
                        {"default", value_to_json(o.defaultValue)}};
                 },
                 [&](const AddRow& o) { j = {{"op", "add-row"}, {"class", o.cls}, {"offset", o.offset}}; },
                 [&](const AddColumn& o) { j = {{"op", "add-column"}, {"class", o.cls}, {"offset", o.offset}}; },
                 [&](const DeleteRow& o) { j = {{"op", "delete-row"}, {"class", o.cls}, {"offset", o.offset}}; },
                 [&](const DeleteColumn& o) { j = {{"op", "delete-column"}, {"class", o.cls}, {"offset", o.offset}}; },
                 [&](const RenameAttribute& o) { j = {{"op", "rename-attribute"}, {"from", o.from}, {"to", o.to}}; },
                 [&](const RenameClass& o) { j = {{"op", "rename-class"}, {"from", o.from}, {"to", o.to}}; },
             },
             op);
  return j;
}

Json to_json(const InstanceOp& op) {
  Json j;
  std::visit(
      Overload{
          [&](const SetValue& o) {
            j = {{"op", "set-value"}, {"addr", to_a1(o.addr)}, {"value", value_to_json(o.value)}};
          },
          [&](const SetFormulaAt& o) {
            j = {{"op", "set-formula-at"}, {"addr", to_a1(o.addr)}, {"formula", to_string(o.formula)}};
          },
          [&](const SetLabelAt& o) { j = {{"op", "set-label-at"}, {"addr", to_a1(o.addr)}, {"text", o.text}}; },
          [&](const AddObject& o) {
            j = {{"op", "add-object"}, {"class", o.cls}, {"parent", ctx_json(o.parent)}};
            j["at"] = o.at ? Json(*o.at) : Json("end");
          },
          [&](const RemoveObject& o) { j = {{"op", "remove-object"}, {"class", o.cls}, {"ctx", ctx_json(o.ctx)}}; },
          [&](const InsertRowAll& o) { j = {{"op", "insert-row-all"}, {"class", o.cls}, {"offset", o.offset}}; },
          [&](const InsertColumnAll& o) {
            j = {{"op", "insert-column-all"}, {"class", o.cls}, {"offset", o.offset}};
          },
          [&](const DeleteRowAll& o) { j = {{"op", "delete-row-all"}, {"class", o.cls}, {"offset", o.offset}}; },
          [&](const DeleteColumnAll& o) {
            j = {{"op", "delete-column-all"}, {"class", o.cls}, {"offset", o.offset}};
          },
      },
      op);
  return j;
}

ModelOp model_op_from_json(const Json& j) {
  if (j.is_string()) return parse_model_op(j.get<std::string>());
  if (!j.is_object()) throw Error(ErrorKind::Parse, "operation must be an object or a string");
  const auto kind = str_field(j, "op");
  if (kind == "set-label") return SetLabel{point_field(j, "cell"), str_field(j, "text")};
  if (kind == "set-default") return SetDefault{point_field(j, "cell"), value_from_json(field(j, "value"))};
  if (kind == "set-constraint") {
    const auto& c = field(j, "constraint");
    if (c.is_null()) return SetConstraint{point_field(j, "cell"), std::nullopt};
    return SetConstraint{point_field(j, "cell"), parse_constraint(str_field(j, "constraint"))};
  }
  if (kind == "set-formula") return SetFormula{point_field(j, "cell"), parse_formula(str_field(j, "formula"))};
  if (kind == "add-attribute")
    return AddAttribute{point_field(j, "cell"), str_field(j, "name"), value_from_json(field(j, "default"))};
  if (kind == "add-row") return AddRow{str_field(j, "class"), int_field(j, "offset")};
  if (kind == "add-column") return AddColumn{str_field(j, "class"), int_field(j, "offset")};
  if (kind == "delete-row") return DeleteRow{str_field(j, "class"), int_field(j, "offset")};
  if (kind == "delete-column") return DeleteColumn{str_field(j, "class"), int_field(j, "offset")};
  if (kind == "rename-attribute") return RenameAttribute{str_field(j, "from"), str_field(j, "to")};
  if (kind == "rename-class") return RenameClass{str_field(j, "from"), str_field(j, "to")};
  throw Error(ErrorKind::Parse, "unknown model operation '" + kind + "'");
}

InstanceOp instance_op_from_json(const Json& j) {
  if (j.is_string()) return parse_instance_op(j.get<std::string>());
  if (!j.is_object()) throw Error(ErrorKind::Parse, "operation must be an object or a string");
  const auto kind = str_field(j, "op");
  if (kind == "set-value") return SetValue{addr_field(j), value_from_json(field(j, "value"))};
  if (kind == "set-formula-at") return SetFormulaAt{addr_field(j), parse_a1_formula(str_field(j, "formula"))};
  if (kind == "set-label-at") return SetLabelAt{addr_field(j), str_field(j, "text")};
  if (kind == "add-object") {
    AddObject o{str_field(j, "class"), ctx_field(j, "parent"), std::nullopt};
    if (j.contains("at")) {
      const auto& at = j.at("at");
      if (at.is_number_unsigned())
        o.at = at.get<std::size_t>();
      else if (!(at.is_string() && at.get<std::string>() == "end") && !at.is_null())
        throw Error(ErrorKind::Parse, "\"at\" must be an index or \"end\"");
    }
    return o;
  }
  if (kind == "remove-object") return RemoveObject{str_field(j, "class"), ctx_field(j, "ctx")};
  if (kind == "insert-row-all") return InsertRowAll{str_field(j, "class"), int_field(j, "offset")};
  if (kind == "insert-column-all") return InsertColumnAll{str_field(j, "class"), int_field(j, "offset")};
  if (kind == "delete-row-all") return DeleteRowAll{str_field(j, "class"), int_field(j, "offset")};
  if (kind == "delete-column-all") return DeleteColumnAll{str_field(j, "class"), int_field(j, "offset")};
  throw Error(ErrorKind::Parse, "unknown instance operation '" + kind + "'");
}

}  // namespace tabula
