#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tabula/evolution.hpp"
#include "tabula/instance_io.hpp"

namespace tabula {

// One op per line:
//
//   set-label (0,0) "Stock"            set-value B4 7
//   set-default (1,3) 1                set-formula-at B12 AVERAGE(B4:B6,B9:B10)
//   set-constraint (1,3) >=0 && <=9    set-label-at A12 "Grand Total"
//   set-formula (1,5) SUM(stock)+0     add-object Item cat=0 at=end
//   add-attribute (1,4) note = ""      remove-object Item Category=0 Item=1
//   add-row Item 1                     insert-row-all Item 1
//   rename-attribute Item.stock qty    rename-class Item Product
//
// Parse errors throw ParseError with the offset inside the line.

ModelOp parse_model_op(std::string_view line);
InstanceOp parse_instance_op(std::string_view line);

std::string to_string(const ModelOp& op);
std::string to_string(const InstanceOp& op);

/// Blank lines and `#` comment lines are skipped. Errors throw Error(Parse) naming the line.
std::vector<ModelOp> parse_model_script(std::string_view text);
std::vector<InstanceOp> parse_instance_script(std::string_view text);

// {"op": "set-value", "addr": "B4", "value": 7}; a plain string is read as a script line.
Json to_json(const ModelOp& op);
Json to_json(const InstanceOp& op);
ModelOp model_op_from_json(const Json& j);
InstanceOp instance_op_from_json(const Json& j);

}  // namespace tabula
