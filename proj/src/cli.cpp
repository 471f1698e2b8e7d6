#include "tabula/cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "tabula/evolution.hpp"
#include "tabula/formula.hpp"
#include "tabula/http_api.hpp"
#include "tabula/instance_io.hpp"
#include "tabula/layout_rules.hpp"
#include "tabula/model_text.hpp"
#include "tabula/ops_io.hpp"
#include "tabula/resolve.hpp"

namespace fs = std::filesystem;

namespace tabula {

namespace {

// Failure that has already been reported; carries the exit status.
struct Exit {
  int status;
};

class Printer {
public:
  Printer(std::ostream& out, std::ostream& err) : out_(out), err_(err) {
    color_ = &out == &std::cout && !std::getenv("TABULA_NO_COLOR") && ::isatty(STDOUT_FILENO);
  }

  std::ostream& out() { return out_; }

  void line(std::string_view tag, const std::string& rest) {
    if (color_)
      out_ << "\x1b[1;31m" << tag << "\x1b[0m";
    else
      out_ << tag;
    out_ << (rest.empty() ? "" : " ") << rest << "\n";
  }

  void diagnostics(std::vector<Diagnostic> ds) {
    std::stable_sort(ds.begin(), ds.end(), [](const Diagnostic& a, const Diagnostic& b) {
      return std::tie(a.addr.row, a.addr.col, a.kind) < std::tie(b.addr.row, b.addr.col, b.kind);
    });
    for (const auto& d : ds) line(to_string(d.kind), to_a1(d.addr) + " " + d.message);
  }

  void violations(std::vector<LayoutViolation> vs) {
    std::stable_sort(vs.begin(), vs.end(), [](const auto& a, const auto& b) { return a.rule < b.rule; });
    for (const auto& v : vs) line(v.rule, (v.className.empty() ? "" : v.className + " ") + v.message);
  }

  void formula_issues(std::vector<FormulaIssue> is) {
    std::stable_sort(is.begin(), is.end(), [](const auto& a, const auto& b) {
      return std::tie(a.cell.row, a.cell.col) < std::tie(b.cell.row, b.cell.col);
    });
    for (const auto& i : is)
      line("FORMULA", "(" + std::to_string(i.cell.col) + "," + std::to_string(i.cell.row) + ") " + i.message);
  }

  // A refused edit: its diagnostics, or the rule or error kind it broke.
  void rejection(const Error& e) {
    const auto* r = dynamic_cast<const OpRejected*>(&e);
    if (r && !r->diagnostics().empty())
      diagnostics(r->diagnostics());
    else if (r && !r->rule().empty())
      line(r->rule(), e.what());
    else
      line(to_string(e.kind()), e.what());
  }

  [[noreturn]] void fail(const std::string& message, int status = kExitUsage) {
    err_ << "tabula: " << message << "\n";
    throw Exit{status};
  }

private:
  std::ostream& out_;
  std::ostream& err_;
  bool color_ = false;
};

std::string read_or_fail(Printer& p, const fs::path& path) {
  try {
    return read_text_file(path);
  } catch (const Error& e) {
    p.fail(e.what());
  }
}

TabulaModel parse_or_fail(Printer& p, const fs::path& path) {
  const auto r = parse_model(read_or_fail(p, path));
  if (!r.ok()) {
    std::string msg;
    for (const auto& d : r.diagnostics) msg += (msg.empty() ? "" : "\n") + path.string() + ":" + to_string(d);
    p.fail(msg);
  }
  return *r.model;
}

// Prints layout and formula problems; the model is usable only if there are none.
bool report_model(Printer& p, const TabulaModel& m) {
  const auto vs = validate_layout(m);
  if (!vs.empty()) {
    p.violations(vs);
    return false;
  }
  const auto issues = check_formulas(m);
  p.formula_issues(issues);
  return issues.empty();
}

TabulaModel valid_model_or_fail(Printer& p, const fs::path& path) {
  auto m = parse_or_fail(p, path);
  if (!report_model(p, m)) throw Exit{kExitDiagnostics};
  return m;
}

Json read_json_or_fail(Printer& p, const fs::path& path) {
  try {
    return Json::parse(read_or_fail(p, path));
  } catch (const Json::exception& e) {
    p.fail(path.string() + ": " + e.what());
  }
}

struct InstanceFile {
  InstanceDoc doc;
  std::string modelRef;
};

// The instance laid out over `model`. Once the JSON parses, anything that does not
// fit the model (objects, input addresses) is a conformance failure, not a usage error.
InstanceFile instance_over(Printer& p, const TabulaModel& model, const fs::path& path) {
  const auto j = read_json_or_fail(p, path);
  InstanceFile f;
  if (j.is_object() && j.contains("model") && j["model"].is_string()) f.modelRef = j["model"].get<std::string>();
  try {
    f.doc = instance_from_json(model, j);
  } catch (const Error& e) {
    p.line(to_string(DiagnosticKind::StructureError), "A1 " + std::string(e.what()));
    throw Exit{kExitDiagnostics};
  }
  return f;
}

std::string model_ref_for(const fs::path& model, const fs::path& instance) {
  const auto dir = fs::absolute(instance).parent_path();
  return fs::proximate(fs::absolute(model), dir).generic_string();
}

void write_or_fail(Printer& p, const fs::path& path, const std::string& text) {
  try {
    write_text_file_atomic(path, text);
  } catch (const Error& e) {
    p.fail(e.what());
  }
}

void save_instance_or_fail(Printer& p, const fs::path& path, const InstanceDoc& doc, const std::string& ref) {
  write_or_fail(p, path, instance_to_json(doc, ref).dump(2) + "\n");
}

template <class Op, class Parse>
std::vector<Op> script_or_fail(Printer& p, const fs::path& path, Parse parse) {
  const auto text = read_or_fail(p, path);
  try {
    return parse(text);
  } catch (const Error& e) {
    p.fail(path.string() + ": " + e.what());
  }
}

template <class Op>
[[noreturn]] void refuse(Printer& p, std::ostream& err, std::size_t index, const Op& op, const Error& e) {
  err << "tabula: op " << index + 1 << " (" << to_string(op) << ") refused; nothing was written\n";
  p.rejection(e);
  throw Exit{kExitDiagnostics};
}

struct Args {
  std::string model;
  std::string instance;
  std::string ops;
  std::string output;
  std::string mode = "values";
  std::string sync;
  bool force = false;
  // serve
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string staticDir;
  bool save = false;
};

int cmd_validate(Printer& p, const Args& a) {
  const auto m = parse_or_fail(p, a.model);
  return report_model(p, m) ? kExitOk : kExitDiagnostics;
}

int cmd_metrics(Printer& p, const Args& a) {
  p.out() << format_metrics(metrics(parse_or_fail(p, a.model))) << "\n";
  return kExitOk;
}

int cmd_create(Printer& p, const Args& a) {
  const auto m = valid_model_or_fail(p, a.model);
  save_instance_or_fail(p, a.output, create(m), model_ref_for(a.model, a.output));
  return kExitOk;
}

int cmd_check(Printer& p, const Args& a) {
  const auto m = valid_model_or_fail(p, a.model);
  const auto f = instance_over(p, m, a.instance);
  const auto ds = check(m, f.doc);
  p.diagnostics(ds);
  return ds.empty() ? kExitOk : kExitDiagnostics;
}

LoadedInstance load_or_fail(Printer& p, const fs::path& path) {
  try {
    return load_instance_file(path);
  } catch (const Error& e) {
    p.fail(e.what());
  }
}

int cmd_recalc(Printer& p, const Args& a) {
  const auto li = load_or_fail(p, a.instance);
  const auto doc = recalc(li.doc);
  for (int r = 0; r < doc.height; ++r)
    for (int c = 0; c < doc.width; ++c)
      if (doc.at({c, r}).kind == CellKind::Formula)
        p.out() << to_a1(CellAddr{c, r}) << " " << display_value(doc.at({c, r})) << "\n";
  save_instance_or_fail(p, a.instance, doc, li.modelRef);
  return kExitOk;
}

int cmd_export(Printer& p, const Args& a) {
  const auto li = load_or_fail(p, a.instance);
  const auto csv = export_csv(li.doc, a.mode == "formulas" ? CsvMode::Formulas : CsvMode::Values);
  if (a.output.empty())
    p.out() << csv;
  else
    write_or_fail(p, a.output, csv);
  return kExitOk;
}

int cmd_apply_model(Printer& p, std::ostream& err, const Args& a) {
  auto m = valid_model_or_fail(p, a.model);
  const auto ops = script_or_fail<ModelOp>(p, a.ops, parse_model_script);
  if (a.sync.empty()) {
    for (std::size_t i = 0; i < ops.size(); ++i) {
      try {
        m = apply_model_op(m, ops[i]);
      } catch (const Error& e) {
        refuse(p, err, i, ops[i], e);
      }
    }
    write_or_fail(p, a.model, print_model(m));
    return kExitOk;
  }

  auto f = instance_over(p, m, a.sync);
  if (const auto ds = check(m, f.doc); !ds.empty()) {
    p.diagnostics(ds);
    p.fail(a.sync + " does not conform to " + a.model + "; nothing was applied", kExitDiagnostics);
  }
  for (std::size_t i = 0; i < ops.size(); ++i) {
    try {
      auto r = sync_apply_model(m, f.doc, ops[i], a.force);
      m = std::move(r.model);
      f.doc = std::move(r.doc);
    } catch (const Error& e) {
      refuse(p, err, i, ops[i], e);
    }
  }
  write_or_fail(p, a.model, print_model(m));
  save_instance_or_fail(p, a.sync, f.doc, f.modelRef.empty() ? model_ref_for(a.model, a.sync) : f.modelRef);
  // only a forced edit can leave anything here
  const auto left = check(m, f.doc);
  p.diagnostics(left);
  return left.empty() ? kExitOk : kExitDiagnostics;
}

int cmd_apply_instance(Printer& p, std::ostream& err, const Args& a) {
  auto m = valid_model_or_fail(p, a.model);
  auto f = instance_over(p, m, a.instance);
  if (const auto ds = check(m, f.doc); !ds.empty()) {
    p.diagnostics(ds);
    p.fail(a.instance + " does not conform to " + a.model + "; nothing was applied", kExitDiagnostics);
  }
  const auto ops = script_or_fail<InstanceOp>(p, a.ops, parse_instance_script);
  const auto before = m;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    try {
      auto r = sync_apply_instance(m, f.doc, ops[i]);
      m = std::move(r.model);
      f.doc = std::move(r.doc);
    } catch (const Error& e) {
      refuse(p, err, i, ops[i], e);
    }
  }
  if (m != before) write_or_fail(p, a.model, print_model(m));
  save_instance_or_fail(p, a.instance, f.doc, f.modelRef.empty() ? model_ref_for(a.model, a.instance) : f.modelRef);
  return kExitOk;
}

int cmd_serve(Printer& p, const Args& a) {
  auto m = valid_model_or_fail(p, a.model);
  InstanceFile f;
  if (a.instance.empty())
    f.doc = create(m);
  else
    f = instance_over(p, m, a.instance);
  try {
    Session session(m, f.doc);
    if (a.save) {
      if (a.instance.empty()) p.fail("--save needs --instance");
      session.persist_to({a.model, a.instance, f.modelRef.empty() ? model_ref_for(a.model, a.instance) : f.modelRef});
    }
    ServeOptions o;
    o.host = a.host;
    o.port = a.port;
    o.staticDir = a.staticDir;
#ifdef TABULA_WEB_DIR
    if (o.staticDir.empty() && fs::is_directory(TABULA_WEB_DIR)) o.staticDir = TABULA_WEB_DIR;
#endif
    HttpServer server(session, o);
    const int port = server.bind();
    p.out() << "serving http://" << o.host << ":" << port << "/\n" << std::flush;
    server.run();
  } catch (const OpRejected& e) {
    p.rejection(e);
    return kExitDiagnostics;
  } catch (const Error& e) {
    p.fail(e.what());
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Printer p(out, err);
  Args a;
  CLI::App app{"Model-driven spreadsheets: check, evolve and serve Tabula models", "tabula"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  auto* validate = app.add_subcommand("validate", "Check a model's layout rules and formulas");
  validate->add_option("model", a.model, "Model file")->required();

  auto* metricsCmd = app.add_subcommand("metrics", "Print width height classes attributes inputs formulas");
  metricsCmd->add_option("model", a.model, "Model file")->required();

  auto* createCmd = app.add_subcommand("create", "Write the initial instance of a model");
  createCmd->add_option("model", a.model, "Model file")->required();
  createCmd->add_option("-o,--output", a.output, "Instance file to write")->required();

  auto* checkCmd = app.add_subcommand("check", "Check that an instance conforms to a model");
  checkCmd->add_option("model", a.model, "Model file")->required();
  checkCmd->add_option("instance", a.instance, "Instance file")->required();

  auto* recalcCmd = app.add_subcommand("recalc", "Recalculate an instance and print formula results");
  recalcCmd->add_option("instance", a.instance, "Instance file")->required();

  auto* exportCmd = app.add_subcommand("export", "Export an instance as CSV");
  exportCmd->add_option("instance", a.instance, "Instance file")->required();
  exportCmd->add_option("--mode", a.mode, "values or formulas")
      ->check(CLI::IsMember({"values", "formulas"}))
      ->capture_default_str();
  exportCmd->add_option("-o,--output", a.output, "CSV file; standard output when omitted");

  auto* applyModel = app.add_subcommand("apply-model", "Apply a script of model edits");
  applyModel->add_option("model", a.model, "Model file, rewritten in place")->required();
  applyModel->add_option("ops", a.ops, "Op script")->required();
  applyModel->add_option("--sync", a.sync, "Instance file to co-evolve, rewritten in place");
  applyModel->add_flag("--force", a.force, "Accept edits that leave values violating their type or constraint");

  auto* applyInstance = app.add_subcommand("apply-instance", "Apply a script of instance edits");
  applyInstance->add_option("model", a.model, "Model file, rewritten if an edit co-evolves it")->required();
  applyInstance->add_option("instance", a.instance, "Instance file, rewritten in place")->required();
  applyInstance->add_option("ops", a.ops, "Op script")->required();

  auto* serve = app.add_subcommand("serve", "Serve the model and instance over HTTP");
  serve->add_option("--model", a.model, "Model file")->required();
  serve->add_option("--instance", a.instance, "Instance file; a fresh instance when omitted");
  serve->add_option("--port", a.port, "Port; 0 picks a free one")->capture_default_str();
  serve->add_option("--host", a.host, "Address to bind")->capture_default_str();
  serve->add_option("--static", a.staticDir, "Directory of web assets");
  serve->add_flag("--save", a.save, "Write accepted edits back to the files");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(p, a);
    if (*metricsCmd) return cmd_metrics(p, a);
    if (*createCmd) return cmd_create(p, a);
    if (*checkCmd) return cmd_check(p, a);
    if (*recalcCmd) return cmd_recalc(p, a);
    if (*exportCmd) return cmd_export(p, a);
    if (*applyModel) return cmd_apply_model(p, err, a);
    if (*applyInstance) return cmd_apply_instance(p, err, a);
    if (*serve) return cmd_serve(p, a);
  } catch (const Exit& e) {
    return e.status;
  } catch (const Error& e) {
    err << "tabula: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace tabula
