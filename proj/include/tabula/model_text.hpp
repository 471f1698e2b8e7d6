#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabula/model.hpp"

namespace tabula {

struct ParseDiagnostic {
  int line = 1;  // 1-based
  int col = 1;   // 1-based
  std::string message;

  friend bool operator==(const ParseDiagnostic&, const ParseDiagnostic&) = default;
};

std::string to_string(const ParseDiagnostic& d);

struct ModelParseResult {
  std::optional<TabulaModel> model;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

/// Parses the textual model syntax:
///
///   tabula "Inventory" {
///     grid 2 x 6
///     class Inventory range (0,0)..(1,5) expand none
///     cells {
///       (1,3): input stock = 0 : >=0
///       (1,5): formula total = SUM(stock)
///     }
///   }
///
/// Never throws; malformed input yields diagnostics.
ModelParseResult parse_model(std::string_view text);

/// Throws Error(Parse) with the first diagnostic on failure.
TabulaModel parse_model_or_throw(std::string_view text);

/// Canonical form: classes in list order, cells row-major, empty labels omitted.
std::string print_model(const TabulaModel& model);

}  // namespace tabula
