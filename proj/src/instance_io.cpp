#include "tabula/instance_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "tabula/formula.hpp"
#include "tabula/model_text.hpp"

namespace tabula {

namespace {

constexpr auto npos = ClassStructure::npos;

std::vector<std::size_t> nested_classes(const ClassStructure& cs, std::size_t parent) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < cs.size(); ++k)
    if (cs.is_axis_repeating(k) && cs.repeating_parent(k) == parent) out.push_back(k);
  return out;
}

Json node_to_json(const TabulaModel& m, const ClassStructure& cs, const ObjectNode& node, std::size_t cls) {
  Json out = Json::object();
  for (auto k : nested_classes(cs, cls)) {
    const auto it = node.children.find(k);
    const std::size_t n = it == node.children.end() ? 0 : it->second.size();
    if (nested_classes(cs, k).empty()) {
      out[m.classes()[k].name] = n;
      continue;
    }
    Json arr = Json::array();
    for (std::size_t i = 0; i < n; ++i) arr.push_back(node_to_json(m, cs, it->second[i], k));
    out[m.classes()[k].name] = std::move(arr);
  }
  return out;
}

void node_from_json(const TabulaModel& m, const ClassStructure& cs, const Json& j, std::size_t cls,
                    ObjectNode& node, ObjectTree& tree) {
  if (!j.is_object()) throw Error(ErrorKind::Io, "objects must be a JSON object");
  const auto nested = nested_classes(cs, cls);
  for (const auto& [key, _] : j.items()) {
    const auto k = m.class_index(key);
    if (!k || std::find(nested.begin(), nested.end(), *k) == nested.end())
      throw Error(ErrorKind::Io, "unexpected objects entry " + key);
  }
  for (auto k : nested) {
    auto& list = node.children[k];
    const auto& name = m.classes()[k].name;
    if (!j.contains(name)) {
      // Absent entries mean one default object, as in a fresh instance.
      ObjectNode child;
      child.id = tree.nextId++;
      node_from_json(m, cs, Json::object(), k, child, tree);
      list.push_back(std::move(child));
      continue;
    }
    const auto& v = j.at(name);
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
      for (long long i = 0; i < v.get<long long>(); ++i) {
        ObjectNode child;
        child.id = tree.nextId++;
        node_from_json(m, cs, Json::object(), k, child, tree);
        list.push_back(std::move(child));
      }
    } else if (v.is_array()) {
      for (const auto& o : v) {
        ObjectNode child;
        child.id = tree.nextId++;
        node_from_json(m, cs, o, k, child, tree);
        list.push_back(std::move(child));
      }
    } else {
      throw Error(ErrorKind::Io, "objects of " + name + " must be a count or an array");
    }
  }
}

}  // namespace

Json value_to_json(const Value& v) {
  if (v.is_number()) return v.as_number();
  return v.as_text();
}

Value value_from_json(const Json& j) {
  if (j.is_number()) return Value::number(j.get<double>());
  if (j.is_string()) return Value::text(j.get<std::string>());
  throw Error(ErrorKind::Io, "values must be numbers or strings");
}

Json objects_to_json(const TabulaModel& model, const ObjectTree& objects) {
  const ClassStructure cs(model);
  return node_to_json(model, cs, objects.root, npos);
}

ObjectTree objects_from_json(const TabulaModel& model, const Json& j) {
  const ClassStructure cs(model);
  ObjectTree t;
  node_from_json(model, cs, j, npos, t.root, t);
  return t;
}

Json instance_to_json(const InstanceDoc& doc, const std::string& modelRef) {
  Json out;
  out["model"] = modelRef;
  out["objects"] = objects_to_json(doc.model, doc.objects);
  Json inputs = Json::object();
  // Row-major order reads naturally in the file.
  const ClassStructure cs(doc.model);
  const auto l = compute_layout(doc.model, cs, doc.objects);
  for (int r = 0; r < doc.height; ++r)
    for (int c = 0; c < doc.width; ++c) {
      const Point p{l.cols[c].model, l.rows[r].model};
      if (!std::holds_alternative<InputCell>(doc.model.at(p))) continue;
      const auto& cell = doc.at({c, r});
      if (cell.kind == CellKind::Constant) inputs[to_a1(CellAddr{c, r})] = value_to_json(cell.value);
    }
  out["inputs"] = std::move(inputs);
  return out;
}

InstanceDoc instance_from_json(const TabulaModel& model, const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Io, "instance must be a JSON object");
  auto objects = objects_from_json(model, j.value("objects", Json::object()));
  create(model);  // validates the model
  InstanceDoc doc = rebuild(InstanceDoc{}, model, std::move(objects));
  if (j.contains("inputs")) {
    const auto& inputs = j.at("inputs");
    if (!inputs.is_object()) throw Error(ErrorKind::Io, "inputs must be a JSON object");
    for (const auto& [key, value] : inputs.items()) {
      const auto a = parse_a1(key);
      if (!a || !doc.in_bounds(*a)) throw Error(ErrorKind::Io, "bad input address " + key);
      if (!std::holds_alternative<InputCell>(doc.model.at(origin_of(doc, *a).point)))
        throw Error(ErrorKind::Io, key + " is not an input cell");
      doc.at(*a) = InstanceCell::constant(value_from_json(value));
    }
  }
  recalc_marking_errors(doc);
  return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot replace " + path.string());
  }
}

TabulaModel load_model_file(const std::filesystem::path& path) {
  return parse_model_or_throw(read_text_file(path));
}

LoadedInstance load_instance_file(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Io, path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("model") || !j.at("model").is_string())
    throw Error(ErrorKind::Io, path.string() + ": missing \"model\"");
  LoadedInstance out;
  out.modelRef = j.at("model").get<std::string>();
  if (out.modelRef.rfind("tabula", 0) == 0)
    out.model = parse_model_or_throw(out.modelRef);
  else
    out.model = load_model_file(path.parent_path() / out.modelRef);
  out.doc = instance_from_json(out.model, j);
  return out;
}

void save_instance_file(const std::filesystem::path& path, const InstanceDoc& doc,
                        const std::string& modelRef) {
  write_text_file_atomic(path, instance_to_json(doc, modelRef).dump(2) + "\n");
}

}  // namespace tabula
