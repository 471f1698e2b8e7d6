#include "tabula/http_api.hpp"

#include <map>

#include "tabula/evolution.hpp"
#include "tabula/formula.hpp"
#include "tabula/model_text.hpp"
#include "tabula/ops_io.hpp"

namespace tabula {

namespace {

std::string_view kind_name(const TCell& c) {
  if (std::holds_alternative<InputCell>(c)) return "input";
  if (std::holds_alternative<FormulaCell>(c)) return "formula";
  return std::get<LabelCell>(c).text.empty() ? "empty" : "label";
}

Json range_json(const RangeRect& r) {
  return Json::array({Json::array({r.left(), r.top()}), Json::array({r.right(), r.bottom()})});
}

// Contiguous runs of rows (or columns) per object, outermost objects first.
void add_blocks(const TabulaModel& m, const ClassStructure& cs, const std::vector<AxisSlot>& slots,
                const char* axis, Json& out) {
  std::map<std::vector<std::uint64_t>, std::size_t> open;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    std::vector<std::uint64_t> ids;
    ObjectCtx ctx;
    for (const auto& step : slots[i].path) {
      if (!cs.is_axis_repeating(step.cls)) continue;
      ids.push_back(step.id);
      ctx[m.classes()[step.cls].name] = step.index;
      if (auto it = open.find(ids); it != open.end()) {
        out[it->second]["last"] = i;
        continue;
      }
      open[ids] = out.size();
      out.push_back({{"class", m.classes()[step.cls].name}, {"axis", axis}, {"ctx", ctx},
                     {"first", i}, {"last", i}});
    }
  }
}

Json error_list(const Error& e) {
  Json errors = Json::array();
  const auto* rejected = dynamic_cast<const OpRejected*>(&e);
  if (rejected && !rejected->diagnostics().empty()) {
    for (const auto& d : rejected->diagnostics())
      errors.push_back({{"kind", to_string(d.kind)}, {"addr", to_a1(d.addr)}, {"message", d.message}});
    return errors;
  }
  Json one = {{"kind", to_string(e.kind())}};
  if (rejected && !rejected->rule().empty()) one["rule"] = rejected->rule();
  one["message"] = e.what();
  errors.push_back(std::move(one));
  return errors;
}

HttpReply json_reply(int status, const Json& j) { return {status, j.dump(), "application/json"}; }

HttpReply bad_request(const std::string& message) {
  return json_reply(400, {{"errors", Json::array({{{"kind", "Parse"}, {"message", message}}})}});
}

}  // namespace

Json snapshot_json(const TabulaModel& model, const InstanceDoc& doc, long revision) {
  const ClassStructure cs(model);
  const auto l = compute_layout(model, cs, doc.objects);

  Json classes = Json::array();
  for (std::size_t i = 0; i < model.classes().size(); ++i) {
    const auto& c = model.classes()[i];
    classes.push_back({{"name", c.name},
                       {"color", i},
                       {"role", to_string(cs.role(i))},
                       {"expand", to_string(c.expansion)},
                       {"range", range_json(c.range)}});
  }

  Json cells = Json::array();
  for (int r = 0; r < doc.height; ++r)
    for (int c = 0; c < doc.width; ++c) {
      const CellAddr a{c, r};
      const Point p{l.cols[c].model, l.rows[r].model};
      const auto& mc = model.at(p);
      const auto& cell = doc.at(a);
      const auto owner = cs.owner(p);
      Json j = {{"addr", to_a1(a)}, {"col", c}, {"row", r}, {"point", Json::array({p.col, p.row})},
                {"kind", kind_name(mc)}};
      if (is_attribute(mc)) j["name"] = attribute_name(mc);
      j["value"] = cell.kind == CellKind::Empty || cell.has_error() ? Json() : value_to_json(cell.value);
      j["display"] = display_value(cell);
      if (cell.kind == CellKind::Formula) j["formula"] = "=" + to_string(cell.formula);
      if (cell.has_error()) j["error"] = cell.error;
      j["owner"] = model.classes()[owner].name;
      j["color"] = owner;
      j["editable"] = !std::holds_alternative<FormulaCell>(mc);
      cells.push_back(std::move(j));
    }

  Json blocks = Json::array();
  add_blocks(model, cs, l.rows, "rows", blocks);
  add_blocks(model, cs, l.cols, "cols", blocks);

  Json slots = Json::array();
  for (const auto& s : object_slots(doc))
    slots.push_back({{"class", s.cls}, {"parent", s.parent}, {"count", s.count}});

  return {{"revision", revision},
          {"model", print_model(model)},
          {"width", doc.width},
          {"height", doc.height},
          {"classes", std::move(classes)},
          {"cells", std::move(cells)},
          {"objects", objects_to_json(model, doc.objects)},
          {"blocks", std::move(blocks)},
          {"slots", std::move(slots)}};
}

Session::Session(TabulaModel model, InstanceDoc doc) {
  if (const auto diags = check(model, doc); !diags.empty())
    throw OpRejected(ErrorKind::Structure, "", "the instance does not conform to the model", diags);
  state_ = std::make_shared<const State>(State{std::move(model), std::move(doc), 0});
}

void Session::persist_to(Files files) {
  std::lock_guard lock(write_);
  files_ = std::move(files);
}

std::shared_ptr<const Session::State> Session::current() const {
  std::lock_guard lock(swap_);
  return state_;
}

long Session::revision() const { return current()->revision; }

HttpReply Session::state() const {
  const auto s = current();
  return json_reply(200, snapshot_json(s->model, s->doc, s->revision));
}

HttpReply Session::metrics() const {
  const auto s = current();
  const auto m = tabula::metrics(s->model);
  return json_reply(200, {{"width", m.width},
                          {"height", m.height},
                          {"classes", m.classCount},
                          {"attributes", m.attributeCount},
                          {"inputs", m.inputCount},
                          {"formulas", m.formulaCount},
                          {"row", format_metrics(m)},
                          {"revision", s->revision}});
}

HttpReply Session::export_csv(const std::string& mode) const {
  CsvMode m;
  if (mode.empty() || mode == "values")
    m = CsvMode::Values;
  else if (mode == "formulas")
    m = CsvMode::Formulas;
  else
    return bad_request("mode must be values or formulas");
  return {200, tabula::export_csv(current()->doc, m), "text/csv; charset=utf-8"};
}

template <class Apply>
HttpReply Session::mutate(const std::string& body, Apply&& apply) {
  Json req;
  try {
    req = Json::parse(body);
  } catch (const Json::exception& e) {
    return bad_request(std::string("body is not JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("baseRev") || !req["baseRev"].is_number_integer())
    return bad_request("body needs an integer baseRev");
  if (!req.contains("ops") || !req["ops"].is_array()) return bad_request("body needs an ops array");
  const long base = req["baseRev"].get<long>();

  std::lock_guard lock(write_);
  const auto cur = current();
  if (base != cur->revision)
    return json_reply(409, {{"revision", cur->revision},
                            {"errors", Json::array({{{"kind", "Conflict"},
                                                     {"message", "revision " + std::to_string(base) +
                                                                     " is stale; current is " +
                                                                     std::to_string(cur->revision)}}})}});
  if (req["ops"].empty()) return json_reply(200, snapshot_json(cur->model, cur->doc, cur->revision));

  State next = *cur;
  const auto& ops = req["ops"];
  for (std::size_t i = 0; i < ops.size(); ++i) {
    try {
      apply(next, ops[i]);
    } catch (const Json::exception& e) {
      return json_reply(400, {{"revision", cur->revision},
                              {"index", i},
                              {"errors", Json::array({{{"kind", "Parse"}, {"message", e.what()}}})}});
    } catch (const Error& e) {
      const int status = e.kind() == ErrorKind::Parse ? 400 : 422;
      return json_reply(status, {{"revision", cur->revision}, {"index", i}, {"errors", error_list(e)}});
    }
  }
  next.revision = cur->revision + 1;

  if (files_) {
    try {
      write_text_file_atomic(files_->model, print_model(next.model));
      save_instance_file(files_->instance, next.doc, files_->modelRef);
    } catch (const Error& e) {
      return json_reply(500, {{"revision", cur->revision},
                              {"errors", Json::array({{{"kind", "Io"}, {"message", e.what()}}})}});
    }
  }

  const auto reply = snapshot_json(next.model, next.doc, next.revision);
  {
    std::lock_guard swap(swap_);
    state_ = std::make_shared<const State>(std::move(next));
  }
  return json_reply(200, reply);
}

HttpReply Session::post_instance_ops(const std::string& body) {
  return mutate(body, [](State& s, const Json& j) {
    auto r = sync_apply_instance(s.model, s.doc, instance_op_from_json(j));
    s.model = std::move(r.model);
    s.doc = std::move(r.doc);
  });
}

HttpReply Session::post_model_ops(const std::string& body) {
  // never forced: an exposed revision always conforms
  return mutate(body, [](State& s, const Json& j) {
    auto r = sync_apply_model(s.model, s.doc, model_op_from_json(j));
    s.model = std::move(r.model);
    s.doc = std::move(r.doc);
  });
}

}  // namespace tabula
