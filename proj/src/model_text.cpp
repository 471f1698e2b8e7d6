#include "tabula/model_text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "tabula/formula.hpp"
#include "tabula/layout_rules.hpp"

namespace tabula {

std::string to_string(const ParseDiagnostic& d) {
  return std::to_string(d.line) + ":" + std::to_string(d.col) + ": " + d.message;
}

namespace {

constexpr int kMaxGridSide = 100'000;

struct Failure {
  std::size_t offset;
  std::string message;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Scanner {
public:
  explicit Scanner(std::string_view src) : src_(src) {}

  std::size_t pos() const { return i_; }
  bool at_end() {
    skip();
    return i_ >= src_.size();
  }
  char peek() {
    skip();
    return i_ < src_.size() ? src_[i_] : '\0';
  }

  [[noreturn]] void fail(std::size_t at, std::string message) { throw Failure{at, std::move(message)}; }

  std::string found() {
    skip();
    if (i_ >= src_.size()) return "end of input";
    if (ident_start(src_[i_])) {
      std::size_t j = i_;
      while (j < src_.size() && ident_char(src_[j])) ++j;
      return "'" + std::string(src_.substr(i_, j - i_)) + "'";
    }
    return "'" + std::string(1, src_[i_]) + "'";
  }

  std::string ident(const char* what) {
    skip();
    if (i_ >= src_.size() || !ident_start(src_[i_])) fail(i_, std::string("expected ") + what + ", found " + found());
    const std::size_t start = i_;
    while (i_ < src_.size() && ident_char(src_[i_])) ++i_;
    return std::string(src_.substr(start, i_ - start));
  }

  void keyword(std::string_view kw) {
    skip();
    const std::size_t start = i_;
    if (i_ < src_.size() && ident_start(src_[i_])) {
      std::size_t j = i_;
      while (j < src_.size() && ident_char(src_[j])) ++j;
      if (src_.substr(i_, j - i_) == kw) {
        i_ = j;
        return;
      }
    }
    fail(start, "expected '" + std::string(kw) + "', found " + found());
  }

  void punct(std::string_view p) {
    skip();
    if (src_.substr(i_, p.size()) != p) fail(i_, "expected '" + std::string(p) + "', found " + found());
    i_ += p.size();
  }

  bool try_punct(std::string_view p) {
    skip();
    if (src_.substr(i_, p.size()) != p) return false;
    i_ += p.size();
    return true;
  }

  int integer(const char* what) {
    skip();
    const std::size_t start = i_;
    while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) ++i_;
    if (start == i_) fail(start, std::string("expected ") + what + ", found " + found());
    int v = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + i_, v);
    if (ec != std::errc{}) fail(start, "integer out of range");
    return v;
  }

  double number() {
    skip();
    const std::size_t start = i_;
    std::size_t j = i_;
    if (j < src_.size() && src_[j] == '-') ++j;
    const std::size_t digits = j;
    while (j < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '.')) ++j;
    if (j == digits) fail(start, "expected number, found " + found());
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
        while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
        j = k;
      }
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + j, v);
    if (ec != std::errc{} || ptr != src_.data() + j || !std::isfinite(v))
      fail(start, "malformed number '" + std::string(src_.substr(start, j - start)) + "'");
    i_ = j;
    return v;
  }

  std::string string_lit() {
    skip();
    const std::size_t start = i_;
    if (i_ >= src_.size() || src_[i_] != '"') fail(i_, "expected string, found " + found());
    ++i_;
    std::string out;
    while (true) {
      if (i_ >= src_.size() || src_[i_] == '\n') fail(start, "unterminated string");
      const char c = src_[i_];
      if (c == '"') break;
      if (c == '\\') {
        if (i_ + 1 < src_.size() && (src_[i_ + 1] == '"' || src_[i_ + 1] == '\\')) {
          out.push_back(src_[i_ + 1]);
          i_ += 2;
          continue;
        }
        fail(i_, "invalid escape (only \\\" and \\\\ are allowed)");
      }
      out.push_back(c);
      ++i_;
    }
    ++i_;
    return out;
  }

  // Formula text runs to the end of the line; a '#' outside a string starts a comment.
  std::pair<std::size_t, std::string_view> rest_of_line() {
    while (i_ < src_.size() && (src_[i_] == ' ' || src_[i_] == '\t')) ++i_;
    const std::size_t start = i_;
    bool inString = false;
    while (i_ < src_.size() && src_[i_] != '\n') {
      const char c = src_[i_];
      if (inString && c == '\\' && i_ + 1 < src_.size() && src_[i_ + 1] != '\n') {
        i_ += 2;
        continue;
      }
      if (c == '"') inString = !inString;
      if (c == '#' && !inString) break;
      ++i_;
    }
    auto text = src_.substr(start, i_ - start);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    while (i_ < src_.size() && src_[i_] != '\n') ++i_;
    return {start, text};
  }

private:
  void skip() {
    while (i_ < src_.size()) {
      if (std::isspace(static_cast<unsigned char>(src_[i_]))) {
        ++i_;
      } else if (src_[i_] == '#') {
        while (i_ < src_.size() && src_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t i_ = 0;
};

class ModelReader {
public:
  explicit ModelReader(std::string_view src) : src_(src), scan_(src) {}

  ModelParseResult read() {
    ModelParseResult result;
    try {
      parse();
    } catch (const Failure& f) {
      report(f.offset, f.message);
      result.diagnostics = std::move(diags_);
      return result;
    }
    if (diags_.empty()) check_attributes();
    if (diags_.empty()) result.model = std::move(model_);
    std::stable_sort(diags_.begin(), diags_.end(), [](const auto& a, const auto& b) {
      return std::pair{a.line, a.col} < std::pair{b.line, b.col};
    });
    result.diagnostics = std::move(diags_);
    return result;
  }

private:
  void report(std::size_t offset, std::string message) {
    offset = std::min(offset, src_.size());
    int line = 1;
    std::size_t lineStart = 0;
    for (std::size_t k = 0; k < offset; ++k)
      if (src_[k] == '\n') {
        ++line;
        lineStart = k + 1;
      }
    diags_.push_back({line, static_cast<int>(offset - lineStart) + 1, std::move(message)});
  }

  Point point() {
    scan_.punct("(");
    const int col = scan_.integer("column");
    scan_.punct(",");
    const int row = scan_.integer("row");
    scan_.punct(")");
    return {col, row};
  }

  bool in_grid(Point p) const { return p.col < width_ && p.row < height_; }

  void parse() {
    scan_.keyword("tabula");
    const std::string name = scan_.string_lit();
    scan_.punct("{");
    scan_.keyword("grid");
    const auto widthAt = scan_.pos();
    width_ = scan_.integer("grid width");
    // "2 x 6" and "2x6" are both accepted
    if (!scan_.try_punct("x")) scan_.fail(scan_.pos(), "expected 'x', found " + scan_.found());
    height_ = scan_.integer("grid height");
    if (width_ < 1 || height_ < 1 || width_ > kMaxGridSide || height_ > kMaxGridSide)
      scan_.fail(widthAt, "grid size must be between 1 and " + std::to_string(kMaxGridSide));
    model_ = TabulaModel(name, width_, height_);

    std::set<std::string> classNames;
    while (true) {
      const auto at = scan_.pos();
      if (scan_.peek() == 'c' && try_word("cells")) break;
      if (!try_word("class")) scan_.fail(at, "expected 'class' or 'cells', found " + scan_.found());
      parse_class(classNames);
    }

    scan_.punct("{");
    std::set<std::pair<int, int>> declared;
    while (!scan_.try_punct("}")) {
      if (scan_.at_end()) scan_.fail(scan_.pos(), "expected '}' closing cells, found end of input");
      parse_cell(declared);
    }
    scan_.punct("}");
    if (!scan_.at_end()) scan_.fail(scan_.pos(), "unexpected " + scan_.found() + " after model");
  }

  bool try_word(std::string_view w) {
    Scanner probe = scan_;
    try {
      probe.keyword(w);
    } catch (const Failure&) {
      return false;
    }
    scan_ = probe;
    return true;
  }

  void parse_class(std::set<std::string>& names) {
    const auto nameAt = scan_.pos();
    ClassDef cls;
    cls.name = scan_.ident("class name");
    scan_.keyword("range");
    const auto rangeAt = scan_.pos();
    cls.range.topLeft = point();
    scan_.punct("..");
    cls.range.bottomRight = point();
    scan_.keyword("expand");
    scan_.peek();
    const auto expandAt = scan_.pos();
    const auto word = scan_.ident("expansion");
    const auto expansion = expansion_from_string(word);
    if (!expansion)
      scan_.fail(expandAt, "invalid expansion '" + word + "' (expected none, down, right or both)");
    cls.expansion = *expansion;

    if (!names.insert(cls.name).second) report(nameAt, "duplicate class name '" + cls.name + "'");
    if (!in_grid(cls.range.topLeft) || !in_grid(cls.range.bottomRight))
      report(rangeAt, "range of class '" + cls.name + "' lies outside the grid");
    else if (cls.range.left() > cls.range.right() || cls.range.top() > cls.range.bottom())
      report(rangeAt, "range of class '" + cls.name + "' has its corners swapped");
    model_.classes().push_back(std::move(cls));
  }

  void parse_cell(std::set<std::pair<int, int>>& declared) {
    scan_.peek();
    const auto at = scan_.pos();
    const Point p = point();
    scan_.punct(":");
    scan_.peek();
    const auto kindAt = scan_.pos();
    const auto kind = scan_.ident("cell kind");
    TCell cell;
    if (kind == "label") {
      cell = LabelCell{scan_.string_lit()};
    } else if (kind == "input") {
      InputCell in;
      in.name = scan_.ident("attribute name");
      scan_.punct("=");
      in.defaultValue = scan_.peek() == '"' ? Value::text(scan_.string_lit()) : Value::number(scan_.number());
      if (scan_.try_punct(":")) {
        in.constraint = constraint();
        if (!check_constraint(*in.constraint, in.defaultValue))
          report(at, "default of '" + in.name + "' violates its own constraint");
      }
      cell = std::move(in);
    } else if (kind == "formula") {
      FormulaCell f;
      f.name = scan_.ident("attribute name");
      scan_.punct("=");
      const auto [textAt, text] = scan_.rest_of_line();
      try {
        f.expr = parse_formula(text);
      } catch (const ParseError& e) {
        scan_.fail(textAt + e.offset(), "formula: " + e.detail());
      }
      cell = std::move(f);
    } else {
      scan_.fail(kindAt, "expected 'label', 'input' or 'formula', found '" + kind + "'");
    }
    if (!in_grid(p)) {
      report(at, "cell (" + std::to_string(p.col) + "," + std::to_string(p.row) + ") lies outside the grid");
      return;
    }
    if (!declared.insert({p.col, p.row}).second) {
      report(at, "cell (" + std::to_string(p.col) + "," + std::to_string(p.row) + ") declared twice");
      return;
    }
    model_.set(p, std::move(cell));
    cellOffsets_[p] = at;
  }

  Constraint constraint() {
    Constraint c;
    do {
      scan_.peek();
      const auto at = scan_.pos();
      ConstraintAtom atom;
      bool matched = false;
      for (auto op : {RelOp::Ge, RelOp::Le, RelOp::Eq, RelOp::Ne, RelOp::Gt, RelOp::Lt})
        if (scan_.try_punct(to_string(op))) {
          atom.op = op;
          matched = true;
          break;
        }
      if (!matched) scan_.fail(at, "expected comparison operator, found " + scan_.found());
      atom.bound = scan_.number();
      c.atoms.push_back(atom);
    } while (scan_.try_punct("&&"));
    return c;
  }

  void check_attributes() {
    std::map<std::pair<std::size_t, std::string>, Point> seen;
    for (const auto& [p, offset] : cellOffsets_) {
      const auto& name = attribute_name(model_.at(p));
      if (name.empty()) continue;
      std::size_t owner = 0;
      try {
        owner = owner_index(model_, p);
      } catch (const Error&) {
        continue;  // uncovered cells are a layout problem, reported by validation
      }
      if (!seen.emplace(std::pair{owner, name}, p).second)
        report(offset, "duplicate attribute '" + name + "' in class " + model_.classes()[owner].name);
    }
  }

  std::string_view src_;
  Scanner scan_;
  int width_ = 0;
  int height_ = 0;
  TabulaModel model_;
  std::map<Point, std::size_t> cellOffsets_;
  std::vector<ParseDiagnostic> diags_;
};

}  // namespace

ModelParseResult parse_model(std::string_view text) {
  try {
    return ModelReader(text).read();
  } catch (const std::exception& e) {
    ModelParseResult r;
    r.diagnostics.push_back({1, 1, std::string("internal parser error: ") + e.what()});
    return r;
  }
}

TabulaModel parse_model_or_throw(std::string_view text) {
  auto result = parse_model(text);
  if (!result.ok()) throw Error(ErrorKind::Parse, to_string(result.diagnostics.front()));
  return std::move(*result.model);
}

std::string print_model(const TabulaModel& model) {
  std::ostringstream out;
  out << "tabula " << quote(model.name()) << " {\n";
  out << "  grid " << model.width() << " x " << model.height() << "\n";
  for (const auto& c : model.classes()) {
    out << "  class " << c.name << " range (" << c.range.left() << "," << c.range.top() << ")..("
        << c.range.right() << "," << c.range.bottom() << ") expand " << to_string(c.expansion) << "\n";
  }
  out << "  cells {\n";
  for (int r = 0; r < model.height(); ++r)
    for (int c = 0; c < model.width(); ++c) {
      const auto& cell = model.at({c, r});
      std::ostringstream line;
      if (const auto* label = std::get_if<LabelCell>(&cell)) {
        if (label->text.empty()) continue;
        line << "label " << quote(label->text);
      } else if (const auto* in = std::get_if<InputCell>(&cell)) {
        line << "input " << in->name << " = " << format_literal(in->defaultValue);
        if (in->constraint) line << " : " << to_string(*in->constraint);
      } else {
        const auto& f = std::get<FormulaCell>(cell);
        line << "formula " << f.name << " = " << to_string(f.expr);
      }
      out << "    (" << c << "," << r << "): " << line.str() << "\n";
    }
  out << "  }\n}\n";
  return out.str();
}

}  // namespace tabula
