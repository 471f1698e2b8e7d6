#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tabula/instance.hpp"
#include "tabula/model.hpp"

namespace tabula {

using Json = nlohmann::ordered_json;

Json value_to_json(const Value& v);
Value value_from_json(const Json& j);  // throws Error(Io) for non-scalars

/// Object counts per repeating class. A class without nested repeating classes maps
/// to a count; otherwise to one map per object:
///   {"Category": [{"Item": 3}, {"Item": 2}], "Year": 2}
/// A count for a class with nested classes means that many default objects.
Json objects_to_json(const TabulaModel& model, const ObjectTree& objects);
ObjectTree objects_from_json(const TabulaModel& model, const Json& j);

/// {"model": ref, "objects": {...}, "inputs": {"B4": 5, ...}}
Json instance_to_json(const InstanceDoc& doc, const std::string& modelRef);
InstanceDoc instance_from_json(const TabulaModel& model, const Json& j);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it into place.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& text);

TabulaModel load_model_file(const std::filesystem::path& path);

struct LoadedInstance {
  TabulaModel model;
  InstanceDoc doc;
  std::string modelRef;  // as written in the file: a relative path or inline model text
};

/// Reads an instance file; `model` is resolved relative to the file, or parsed
/// directly when it starts with `tabula`.
LoadedInstance load_instance_file(const std::filesystem::path& path);

void save_instance_file(const std::filesystem::path& path, const InstanceDoc& doc,
                        const std::string& modelRef);

}  // namespace tabula
