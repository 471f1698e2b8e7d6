#include "tabula/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace tabula {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Bounds: return "Bounds";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::UnknownName: return "UnknownName";
    case ErrorKind::Ambiguous: return "Ambiguous";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::MultiReference: return "MultiReference";
    case ErrorKind::Cycle: return "Cycle";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::Type: return "Type";
    case ErrorKind::EmptyAggregate: return "EmptyAggregate";
    case ErrorKind::Expansion: return "Expansion";
    case ErrorKind::Structure: return "Structure";
    case ErrorKind::Layout: return "Layout";
    case ErrorKind::Formula: return "Formula";
    case ErrorKind::Lift: return "Lift";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

RangeRect RangeRect::intersection(const RangeRect& o) const {
  return {{std::max(left(), o.left()), std::max(top(), o.top())},
          {std::min(right(), o.right()), std::min(bottom(), o.bottom())}};
}

std::string_view to_string(Expansion e) {
  switch (e) {
    case Expansion::None: return "none";
    case Expansion::Down: return "down";
    case Expansion::Right: return "right";
    case Expansion::Both: return "both";
  }
  return "none";
}

std::optional<Expansion> expansion_from_string(std::string_view s) {
  if (s == "none") return Expansion::None;
  if (s == "down") return Expansion::Down;
  if (s == "right") return Expansion::Right;
  if (s == "both") return Expansion::Both;
  return std::nullopt;
}

Value Value::number(double v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::Type, "number values must be finite");
  return Value(v);
}

ValueType infer_type(const Value& v) { return v.type(); }

std::string_view to_string(ValueType t) {
  return t == ValueType::Number ? "number" : "text";
}

std::string format_number(double v) {
  if (v == 0) return "0";  // folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

bool is_attribute(const TCell& cell) { return !std::holds_alternative<LabelCell>(cell); }

const std::string& attribute_name(const TCell& cell) {
  static const std::string empty;
  if (const auto* in = std::get_if<InputCell>(&cell)) return in->name;
  if (const auto* f = std::get_if<FormulaCell>(&cell)) return f->name;
  return empty;
}

TabulaModel::TabulaModel(std::string name, int width, int height)
    : name_(std::move(name)), width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::Bounds, "grid must be at least 1x1");
  cells_.assign(static_cast<std::size_t>(width) * height, LabelCell{});
}

const ClassDef* TabulaModel::find_class(std::string_view name) const {
  for (const auto& c : classes_)
    if (c.name == name) return &c;
  return nullptr;
}

std::optional<std::size_t> TabulaModel::class_index(std::string_view name) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i].name == name) return i;
  return std::nullopt;
}

const TCell& TabulaModel::at(Point p) const {
  return cells_[static_cast<std::size_t>(p.row) * width_ + p.col];
}

TCell& TabulaModel::at(Point p) {
  return cells_[static_cast<std::size_t>(p.row) * width_ + p.col];
}

void TabulaModel::insert_row(int row) {
  cells_.insert(cells_.begin() + static_cast<std::ptrdiff_t>(row) * width_,
                static_cast<std::size_t>(width_), LabelCell{});
  ++height_;
}

void TabulaModel::erase_row(int row) {
  auto first = cells_.begin() + static_cast<std::ptrdiff_t>(row) * width_;
  cells_.erase(first, first + width_);
  --height_;
}

void TabulaModel::insert_column(int col) {
  std::vector<TCell> next;
  next.reserve(static_cast<std::size_t>(width_ + 1) * height_);
  for (int r = 0; r < height_; ++r)
    for (int c = 0; c <= width_; ++c) {
      if (c == col)
        next.emplace_back(LabelCell{});
      else
        next.push_back(at({c < col ? c : c - 1, r}));
    }
  cells_ = std::move(next);
  ++width_;
}

void TabulaModel::erase_column(int col) {
  std::vector<TCell> next;
  next.reserve(static_cast<std::size_t>(width_ - 1) * height_);
  for (int r = 0; r < height_; ++r)
    for (int c = 0; c < width_; ++c)
      if (c != col) next.push_back(at({c, r}));
  cells_ = std::move(next);
  --width_;
}

const TCell& cell_at(const TabulaModel& model, Point p) {
  if (!model.in_bounds(p)) {
    std::ostringstream msg;
    msg << "point (" << p.col << "," << p.row << ") outside " << model.width() << "x"
        << model.height() << " grid";
    throw Error(ErrorKind::Bounds, msg.str());
  }
  return model.at(p);
}

Metrics metrics(const TabulaModel& model) {
  Metrics m;
  m.width = model.width();
  m.height = model.height();
  m.classCount = static_cast<int>(model.classes().size());
  for (int r = 0; r < model.height(); ++r)
    for (int c = 0; c < model.width(); ++c) {
      const auto& cell = model.at({c, r});
      if (std::holds_alternative<InputCell>(cell)) ++m.inputCount;
      if (std::holds_alternative<FormulaCell>(cell)) ++m.formulaCount;
    }
  m.attributeCount = m.inputCount + m.formulaCount;
  return m;
}

std::string format_metrics(const Metrics& m) {
  std::ostringstream out;
  out << m.width << ' ' << m.height << ' ' << m.classCount << ' ' << m.attributeCount << ' '
      << m.inputCount << ' ' << m.formulaCount;
  return out.str();
}

}  // namespace tabula
