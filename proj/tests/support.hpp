#pragma once

#include <string>

#include "tabula/instance_io.hpp"
#include "tabula/model_text.hpp"

namespace tabula::testing {

inline std::string fixture_path(const std::string& name) { return std::string(TABULA_FIXTURES) + "/" + name; }

inline TabulaModel fixture_model(const std::string& name) { return load_model_file(fixture_path(name)); }

inline LoadedInstance fixture_instance(const std::string& name) {
  return load_instance_file(fixture_path(name));
}

}  // namespace tabula::testing
