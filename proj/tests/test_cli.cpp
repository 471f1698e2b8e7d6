#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tabula/cli.hpp"
#include "tabula/instance_io.hpp"
#include "tabula/model_text.hpp"

using namespace tabula;
using tabula::testing::fixture_path;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run tab(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int s = run_cli(args, out, err);
  return {s, out.str(), err.str()};
}

// Scratch copy of the fixtures, removed afterwards.
class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tabula_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    for (const auto& e : fs::directory_iterator(TABULA_FIXTURES)) fs::copy(e.path(), dir_ / e.path().filename());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string at(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name, std::ios::binary) << text;
  }
  std::string read(const std::string& name) const { return read_text_file(dir_ / name); }

  bool leftovers() const {
    for (const auto& e : fs::directory_iterator(dir_))
      if (e.path().string().find(".tmp") != std::string::npos) return true;
    return false;
  }

  fs::path dir_;
};

}  // namespace

TEST(CliMetrics, BudgetRows) {
  auto r = tab({"metrics", fixture_path("budget_dyn.tbl")});
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "3 12 10 16 6 10\n");
  r = tab({"metrics", fixture_path("budget_static.tbl")});
  EXPECT_EQ(r.out, "14 12 5 81 27 54\n");
}

TEST(CliValidate, FixturesAndMutants) {
  for (const char* f : {"items.tbl", "inventory.tbl", "inventory_year.tbl", "budget_dyn.tbl", "budget_static.tbl"}) {
    const auto r = tab({"validate", fixture_path(f)});
    EXPECT_EQ(r.status, 0) << f << r.out;
    EXPECT_EQ(r.out, "") << f;
  }
  auto r = tab({"validate", fixture_path("broken_base.tbl")});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out, "R1 Inventory base class must cover grid\n");
  for (const char* rule : {"R2", "R3", "R4", "R5", "R6"}) {
    r = tab({"validate", fixture_path(std::string("mutant_r") + rule[1] + ".tbl")});
    EXPECT_EQ(r.status, 1) << rule;
    EXPECT_EQ(r.out.substr(0, 3), std::string(rule) + " ") << r.out;
  }
}

TEST_F(Cli, ValidateReportsFormulaProblems) {
  auto text = read("inventory.tbl");
  text.replace(text.find("SUM(stock)"), 10, "SUM(nothing)");
  write("m.tbl", text);
  const auto r = tab({"validate", at("m.tbl")});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("FORMULA (1,5) ", 0), 0u) << r.out;
}

TEST_F(Cli, SyntaxErrorsAreUsageErrors) {
  write("bad.tbl", "tabula \"X\" {\n  grid 2 x\n}\n");
  const auto r = tab({"validate", at("bad.tbl")});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("bad.tbl:3:1: expected grid height"), std::string::npos) << r.err;
  EXPECT_EQ(tab({"metrics", at("missing.tbl")}).status, 2);
}

TEST(CliUsage, BadInvocations) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"frobnicate"},
           {"validate"},
           {"check", "only-one.tbl"},
           {"export", "x.json", "--mode", "pdf"},
           {"metrics", "a.tbl", "--bogus"},
       }) {
    const auto r = tab(args);
    EXPECT_EQ(r.status, 2) << (args.empty() ? "" : args[0]);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
  }
  const auto help = tab({"--help"});
  EXPECT_EQ(help.status, 0);
  EXPECT_NE(help.out.find("apply-instance"), std::string::npos);
}

TEST(CliCheck, ConformingFixtureIsSilent) {
  const auto r = tab({"check", fixture_path("inventory.tbl"), fixture_path("inventory_fig3.json")});
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "");
  EXPECT_EQ(r.err, "");
}

TEST_F(Cli, CheckListsViolationsInAddressOrder) {
  auto text = read("inventory_fig3.json");
  text.replace(text.find("\"B9\": 7"), 7, "\"B9\": -3");
  text.replace(text.find("\"B5\": 2"), 7, "\"B5\": \"two\"");
  write("i.json", text);
  const auto r = tab({"check", at("inventory.tbl"), at("i.json")});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out,
            "TypeError B5 stock expects number, got \"two\"\n"
            "ConstraintViolation B9 stock = -3 violates >=0\n");
  EXPECT_EQ(tab({"check", at("inventory.tbl"), at("i.json")}).out, r.out);  // byte-identical reruns
}

TEST_F(Cli, CheckAgainstAnotherModel) {
  const auto r = tab({"check", at("items.tbl"), at("inventory_fig3.json")});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("StructureError A1 ", 0), 0u) << r.out;
}

TEST_F(Cli, CreateThenCheck) {
  for (const char* m : {"items.tbl", "inventory.tbl", "inventory_year.tbl", "budget_dyn.tbl", "budget_static.tbl"}) {
    const std::string out = std::string(m) + ".json";
    auto r = tab({"create", at(m), "-o", at(out)});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(read(out).find("\"model\": \"" + std::string(m) + "\""), std::string::npos);
    r = tab({"check", at(m), at(out)});
    EXPECT_EQ(r.status, 0) << m << r.out;
  }
  EXPECT_EQ(tab({"create", at("broken_base.tbl"), "-o", at("x.json")}).status, 1);
  EXPECT_FALSE(fs::exists(dir_ / "x.json"));
  EXPECT_FALSE(leftovers());
}

TEST_F(Cli, RecalcPrintsFormulaResults) {
  const auto r = tab({"recalc", at("inventory_fig3.json")});
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "B12 32\n");
  EXPECT_EQ(load_instance_file(dir_ / "inventory_fig3.json").doc,
            tabula::testing::fixture_instance("inventory_fig3.json").doc);
}

TEST_F(Cli, Export) {
  const auto doc = tabula::testing::fixture_instance("inventory_fig3.json").doc;
  auto r = tab({"export", at("inventory_fig3.json")});
  EXPECT_EQ(r.out, export_csv(doc, CsvMode::Values));
  r = tab({"export", at("inventory_fig3.json"), "--mode", "formulas", "-o", at("f.csv")});
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(read("f.csv"), export_csv(doc, CsvMode::Formulas));
  EXPECT_NE(read("f.csv").find("=SUM(B4:B6,B9:B10)"), std::string::npos);
}

TEST_F(Cli, ApplyModelAlone) {
  write("ops.txt", "# relabel\nset-label (0,0) \"Stock\"\n\nrename-attribute stock qty\n");
  const auto r = tab({"apply-model", at("inventory.tbl"), at("ops.txt")});
  ASSERT_EQ(r.status, 0) << r.err << r.out;
  const auto m = parse_model_or_throw(read("inventory.tbl"));
  EXPECT_EQ(std::get<LabelCell>(m.at({0, 0})).text, "Stock");
  EXPECT_EQ(attribute_name(m.at({1, 3})), "qty");
}

TEST_F(Cli, ApplyModelWithSync) {
  write("ops.txt", "set-label (0,0) \"Stock\"\nadd-column Item 2\n");
  const auto r = tab({"apply-model", at("inventory.tbl"), at("ops.txt"), "--sync", at("inventory_fig3.json")});
  ASSERT_EQ(r.status, 0) << r.err << r.out;
  const auto li = load_instance_file(dir_ / "inventory_fig3.json");
  EXPECT_EQ(li.doc.width, 3);
  EXPECT_EQ(li.doc.at({0, 0}).value, Value::text("Stock"));
  EXPECT_EQ(li.doc.at({1, 4}).value, Value::number(2));
  EXPECT_EQ(tab({"check", at("inventory.tbl"), at("inventory_fig3.json")}).status, 0);
}

TEST_F(Cli, RefusedModelScriptWritesNothing) {
  const auto model = read("inventory.tbl");
  const auto inst = read("inventory_fig3.json");
  // the first op is fine, the second leaves Category without a row below it
  write("ops.txt", "set-label (0,0) \"Stock\"\ndelete-row Inventory 5\n");
  const auto r = tab({"apply-model", at("inventory.tbl"), at("ops.txt"), "--sync", at("inventory_fig3.json")});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out.rfind("R3 ", 0), 0u) << r.out;
  EXPECT_NE(r.err.find("op 2 (delete-row Inventory 5)"), std::string::npos) << r.err;
  EXPECT_EQ(read("inventory.tbl"), model);
  EXPECT_EQ(read("inventory_fig3.json"), inst);
  EXPECT_FALSE(leftovers());
}

TEST_F(Cli, ConstraintTighteningNeedsForce) {
  write("ops.txt", "set-constraint (1,3) <=6\n");
  const auto inst = read("inventory_fig3.json");
  auto r = tab({"apply-model", at("inventory.tbl"), at("ops.txt"), "--sync", at("inventory_fig3.json")});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(read("inventory_fig3.json"), inst);

  r = tab({"apply-model", at("inventory.tbl"), at("ops.txt"), "--sync", at("inventory_fig3.json"), "--force"});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out,
            "ConstraintViolation B6 stock = 8 violates <=6\n"
            "ConstraintViolation B9 stock = 7 violates <=6\n"
            "ConstraintViolation B10 stock = 10 violates <=6\n");
  EXPECT_NE(read("inventory.tbl").find("<=6"), std::string::npos);
}

TEST_F(Cli, ApplyInstance) {
  const auto model = read("inventory.tbl");
  write("ops.txt", "add-object Category at=end\nset-value B13 4\n");
  auto r = tab({"apply-instance", at("inventory.tbl"), at("inventory_fig3.json"), at("ops.txt")});
  ASSERT_EQ(r.status, 0) << r.err << r.out;
  EXPECT_EQ(read("inventory.tbl"), model);  // a new category is a pure instance edit
  const auto li = load_instance_file(dir_ / "inventory_fig3.json");
  EXPECT_EQ(li.doc.height, 15);
  EXPECT_EQ(li.doc.at({1, 14}).value, Value::number(36));

  // a label edit co-evolves the model
  write("ops.txt", "set-label-at A15 \"Grand total\"\n");
  r = tab({"apply-instance", at("inventory.tbl"), at("inventory_fig3.json"), at("ops.txt")});
  ASSERT_EQ(r.status, 0) << r.err << r.out;
  EXPECT_NE(read("inventory.tbl").find("Grand total"), std::string::npos);
}

TEST_F(Cli, RefusedInstanceScriptWritesNothing) {
  const auto inst = read("inventory_fig3.json");
  write("ops.txt", "set-value B4 7\nset-value B4 -1\n");
  const auto r = tab({"apply-instance", at("inventory.tbl"), at("inventory_fig3.json"), at("ops.txt")});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.out, "ConstraintViolation B4 stock = -1 violates >=0\n");
  EXPECT_EQ(read("inventory_fig3.json"), inst);

  write("ops.txt", "set-value B4 7\nfly-away B4\n");
  const auto bad = tab({"apply-instance", at("inventory.tbl"), at("inventory_fig3.json"), at("ops.txt")});
  EXPECT_EQ(bad.status, 2);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;
  EXPECT_EQ(read("inventory_fig3.json"), inst);
}

TEST_F(Cli, PlainOutputWithoutTerminal) {
  ::setenv("TABULA_NO_COLOR", "1", 1);
  const auto r = tab({"validate", at("broken_base.tbl")});
  ::unsetenv("TABULA_NO_COLOR");
  EXPECT_EQ(r.out.find('\x1b'), std::string::npos);
}
