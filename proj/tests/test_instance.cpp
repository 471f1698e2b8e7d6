#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "tabula/formula.hpp"

using namespace tabula;
using tabula::testing::fixture_instance;
using tabula::testing::fixture_model;

namespace {

CellAddr A(const char* a) { return *parse_a1(a); }

std::string formula_at(const InstanceDoc& d, const char* a) { return to_string(d.at(A(a)).formula); }

double num(const InstanceDoc& d, const char* a) {
  const auto& c = d.at(A(a));
  EXPECT_FALSE(c.has_error()) << a << " " << c.error;
  return c.value.as_number();
}

std::vector<DiagnosticKind> kinds(const std::vector<Diagnostic>& ds) {
  std::vector<DiagnosticKind> out;
  for (const auto& d : ds) out.push_back(d.kind);
  return out;
}

}  // namespace

TEST(Create, Inventory) {
  const auto m = fixture_model("inventory.tbl");
  const auto d = create(m);
  EXPECT_EQ(d.width, 2);
  EXPECT_EQ(d.height, 6);
  EXPECT_EQ(d.at(A("A1")).value, Value::text("Inventory"));
  EXPECT_EQ(d.at(A("A3")).value, Value::text(""));
  EXPECT_EQ(d.at(A("B4")).value, Value::number(0));
  EXPECT_EQ(formula_at(d, "B6"), "SUM(B4)");
  EXPECT_EQ(d.at(A("B6")).value, Value::number(0));
  EXPECT_TRUE(check(m, d).empty());
}

TEST(Create, InventoryYear) {
  const auto m = fixture_model("inventory_year.tbl");
  const auto d = create(m);
  EXPECT_EQ(d.width, 4);
  EXPECT_EQ(d.height, 6);
  EXPECT_EQ(formula_at(d, "D4"), "AVERAGE(C4)");
  EXPECT_EQ(formula_at(d, "B6"), "SUM(B4)");
  EXPECT_TRUE(check(m, d).empty());
}

TEST(Create, RejectsInvalidModels) {
  EXPECT_THROW(create(fixture_model("mutant_r5.tbl")), Error);
  auto m = fixture_model("inventory.tbl");
  m.set({1, 5}, FormulaCell{"total", parse_formula("stock+1")});
  try {
    create(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Formula);
  }
}

TEST(Layout, InventoryFig3) {
  const auto d = fixture_instance("inventory_fig3.json").doc;
  EXPECT_EQ(d.width, 2);
  EXPECT_EQ(d.height, 12);
  EXPECT_EQ(d.at(A("A5")).value, Value::text("banana"));
  EXPECT_EQ(d.at(A("A12")).value, Value::text("Total"));
  const auto o = origin_of(d, A("B10"));
  EXPECT_EQ(o.point, (Point{1, 3}));
  EXPECT_EQ(o.ctx, (ObjectCtx{{"Category", 1}, {"Item", 1}}));
  EXPECT_EQ(addresses_of(d, {1, 3}),
            (std::vector<CellAddr>{A("B4"), A("B5"), A("B6"), A("B9"), A("B10")}));
}

TEST(Layout, InventoryYearYearsSitSideBySide) {
  const auto d = fixture_instance("inventory_year_sample.json").doc;
  EXPECT_EQ(d.width, 6);
  EXPECT_EQ(origin_of(d, A("D1")).ctx, (ObjectCtx{{"Year", 1}}));
  EXPECT_EQ(d.at(A("D1")).value, Value::number(2013));
}

TEST(Layout, IsABijection) {
  for (const char* f : {"inventory_fig3.json", "inventory_year_sample.json", "items_sample.json"}) {
    const auto d = fixture_instance(f).doc;
    const auto l = layout(d);
    EXPECT_EQ(l.size(), static_cast<std::size_t>(d.width * d.height)) << f;
    std::set<CellAddr> seen;
    for (const auto& [key, addr] : l) {
      EXPECT_TRUE(d.in_bounds(addr));
      EXPECT_TRUE(seen.insert(addr).second) << f << " " << to_a1(addr);
      const auto o = origin_of(d, addr);
      EXPECT_EQ(o.point, key.first);
      EXPECT_EQ(o.ctx, key.second);
    }
  }
}

TEST(Translate, InventoryTotalSkipsCategoryRows) {
  const auto d = fixture_instance("inventory_fig3.json").doc;
  EXPECT_EQ(formula_at(d, "B12"), "SUM(B4:B6,B9:B10)");
  EXPECT_EQ(to_string(translate(d.model, d, {1, 5}, {}, parse_formula("SUM(stock)"))), "SUM(B4:B6,B9:B10)");
}

TEST(Translate, InventoryYear) {
  const auto d = fixture_instance("inventory_year_sample.json").doc;
  EXPECT_EQ(formula_at(d, "F4"), "AVERAGE(C4,E4)");
  EXPECT_EQ(formula_at(d, "F10"), "AVERAGE(C10,E10)");
  EXPECT_EQ(formula_at(d, "B12"), "SUM(B4:B6,B9:B10)");
  EXPECT_EQ(formula_at(d, "D12"), "SUM(D4:D6,D9:D10)");
}

TEST(Evaluate, ItemsTotalIs15) {
  const auto d = fixture_instance("items_sample.json").doc;
  EXPECT_EQ(formula_at(d, "B5"), "SUM(B2:B4)");
  EXPECT_NEAR(num(d, "B5"), 15.0, 1e-9);
}

TEST(Evaluate, AverageSoldIs14) {
  const auto d = fixture_instance("inventory_year_sample.json").doc;
  EXPECT_NEAR(num(d, "F4"), 14.0, 1e-9);
  // oracle: per-year totals straight from the input table
  EXPECT_NEAR(num(d, "B12"), 5 + 2 + 8 + 7 + 10, 1e-9);
  EXPECT_NEAR(num(d, "D12"), 4 + 3 + 1 + 9 + 8, 1e-9);
  EXPECT_NEAR(evaluate(d, parse_a1_formula("B4*2-C4/4")).as_number(), 5 * 2 - 12 / 4.0, 1e-12);
}

TEST(Evaluate, Semantics) {
  const auto d = fixture_instance("inventory_fig3.json").doc;
  const auto err = [&](const char* f) {
    try {
      evaluate(d, parse_a1_formula(f));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(evaluate(d, parse_a1_formula("SUM(A1:B12)")), Value::number(32 + 32));
  EXPECT_EQ(evaluate(d, parse_a1_formula("COUNT(A4:B6)")), Value::number(3));
  EXPECT_EQ(evaluate(d, parse_a1_formula("SUM(A2)")), Value::number(0));
  EXPECT_EQ(evaluate(d, parse_a1_formula("B2+1")), Value::number(1));
  EXPECT_EQ(evaluate(d, parse_a1_formula("MAX(B4:B10)")), Value::number(10));
  EXPECT_EQ(err("AVERAGE(A4:A6)"), ErrorKind::EmptyAggregate);
  EXPECT_EQ(err("B4/0"), ErrorKind::DivisionByZero);
  EXPECT_EQ(err("A4+1"), ErrorKind::Type);
  EXPECT_EQ(err("Z99"), ErrorKind::Bounds);
}

TEST(Objects, AddAndRemove) {
  const auto m = fixture_model("inventory.tbl");
  auto d = fixture_instance("inventory_fig3.json").doc;
  d = add_object(d, "Item", {{"Category", 0}});
  EXPECT_EQ(d.height, 13);
  EXPECT_EQ(formula_at(d, "B13"), "SUM(B4:B7,B10:B11)");
  EXPECT_TRUE(check(m, d).empty());

  d = fixture_instance("inventory_fig3.json").doc;
  d = remove_object(d, "Item", {{"Category", 0}, {"Item", 1}});
  EXPECT_EQ(d.height, 11);
  EXPECT_EQ(formula_at(d, "B11"), "SUM(B4:B5,B8:B9)");
  EXPECT_EQ(d.at(A("A5")).value, Value::text("cherry"));
  EXPECT_NEAR(num(d, "B11"), 30.0, 1e-9);
  EXPECT_TRUE(check(m, d).empty());

  // a whole category goes with its items; prefixes select classes
  d = remove_object(fixture_instance("inventory_fig3.json").doc, "cat", {{"cat", 0}});
  EXPECT_EQ(d.height, 7);
  EXPECT_NEAR(num(d, "B7"), 17.0, 1e-9);

  d = add_object(fixture_instance("inventory_fig3.json").doc, "Item", {{"Category", 1}}, 0);
  EXPECT_EQ(d.at(A("A9")).value, Value::text(""));
  EXPECT_EQ(d.at(A("A10")).value, Value::text("beans"));
}

TEST(Objects, RemovingTheLastItemLeavesAnEmptySum) {
  auto d = fixture_instance("items_sample.json").doc;
  for (int i = 0; i < 3; ++i) d = remove_object(d, "Item", {{"Item", 0}});
  EXPECT_EQ(d.height, 2);
  EXPECT_EQ(formula_at(d, "B2"), "SUM()");
  EXPECT_NEAR(num(d, "B2"), 0.0, 1e-12);
  EXPECT_TRUE(check(d.model, d).empty());
}

TEST(Objects, Errors) {
  const auto d = fixture_instance("inventory_fig3.json").doc;
  EXPECT_THROW(add_object(d, "Nope", {}), Error);
  EXPECT_THROW(add_object(d, "Inventory", {}), Error);
  EXPECT_THROW(remove_object(d, "Item", {{"Category", 5}, {"Item", 0}}), Error);
  EXPECT_THROW(remove_object(d, "Item", {{"Category", 0}}), Error);
  const auto y = fixture_instance("inventory_year_sample.json").doc;
  EXPECT_THROW(add_object(y, "ItemYear", {}), Error);
}

TEST(SetValue, AcceptsAndRejects) {
  const auto d = fixture_instance("inventory_fig3.json").doc;
  auto r = set_value(d, A("B4"), Value::number(7));
  ASSERT_TRUE(r.applied());
  EXPECT_NEAR(num(r.doc, "B12"), 34.0, 1e-9);

  r = set_value(d, A("B4"), Value::number(-1));
  EXPECT_EQ(kinds(r.diagnostics), (std::vector<DiagnosticKind>{DiagnosticKind::ConstraintViolation}));
  EXPECT_EQ(r.doc, d);

  r = set_value(d, A("B4"), Value::text("many"));
  EXPECT_EQ(kinds(r.diagnostics), (std::vector<DiagnosticKind>{DiagnosticKind::TypeError}));
  EXPECT_EQ(r.doc, d);

  for (const char* a : {"B12", "A1", "C1"}) {
    r = set_value(d, A(a), Value::number(1));
    EXPECT_EQ(kinds(r.diagnostics), (std::vector<DiagnosticKind>{DiagnosticKind::StructureError})) << a;
    EXPECT_EQ(r.doc, d);
  }
}

TEST(Check, DetectsEachKind) {
  const auto m = fixture_model("inventory.tbl");
  auto d = fixture_instance("inventory_fig3.json").doc;
  d.at(A("B10")) = InstanceCell::constant(Value::number(-3));
  d.at(A("B12")) = InstanceCell::make_formula(parse_a1_formula("SUM(B4:B6)"));
  d.at(A("A1")) = InstanceCell::constant(Value::text("Stock"));
  d.at(A("B9")) = InstanceCell::constant(Value::text("seven"));
  const auto ds = check(m, d);
  ASSERT_EQ(ds.size(), 4u);
  EXPECT_EQ(to_string(ds[0]).substr(0, 17), "LabelMismatch A1 ");
  EXPECT_EQ(ds[1].kind, DiagnosticKind::TypeError);
  EXPECT_EQ(ds[1].addr, A("B9"));
  EXPECT_EQ(ds[2].kind, DiagnosticKind::ConstraintViolation);
  EXPECT_EQ(ds[2].addr, A("B10"));
  EXPECT_EQ(ds[3].kind, DiagnosticKind::FormulaMismatch);
  EXPECT_EQ(ds[3].addr, A("B12"));
}

TEST(Check, ShapeMismatchIsStructural) {
  const auto m = fixture_model("inventory_year.tbl");
  const auto d = fixture_instance("inventory_fig3.json").doc;
  const auto ds = check(m, d);
  ASSERT_FALSE(ds.empty());
  for (const auto& x : ds) {
    EXPECT_EQ(x.kind, DiagnosticKind::StructureError);
    EXPECT_EQ(x.addr, A("A1"));
  }
}

TEST(Recalc, CycleIsReported) {
  auto d = fixture_instance("items_sample.json").doc;
  d.at(A("B2")) = InstanceCell::make_formula(parse_a1_formula("B5"));
  try {
    recalc(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Cycle);
  }
  const auto stuck = recalc_marking_errors(d);
  EXPECT_EQ(stuck, (std::vector<CellAddr>{A("B2"), A("B5")}));
  EXPECT_EQ(d.at(A("B5")).error, "#CYCLE!");
}

TEST(Recalc, ErrorsPropagate) {
  auto d = fixture_instance("items_sample.json").doc;
  d.at(A("A5")) = InstanceCell::make_formula(parse_a1_formula("1/0"));
  d.at(A("A4")) = InstanceCell::make_formula(parse_a1_formula("A5+1"));
  recalc_marking_errors(d);
  EXPECT_EQ(d.at(A("A5")).error, "#DIV/0!");
  EXPECT_EQ(d.at(A("A4")).error, "#DIV/0!");
  EXPECT_EQ(display_value(d.at(A("A4"))), "#DIV/0!");
}

TEST(Csv, ValuesAndFormulas) {
  const auto d = fixture_instance("items_sample.json").doc;
  EXPECT_EQ(export_csv(d, CsvMode::Values), "Items,\r\napple,5\r\nbanana,2\r\ncherry,8\r\nTotal,15\r\n");
  EXPECT_EQ(export_csv(d, CsvMode::Formulas),
            "Items,\r\napple,5\r\nbanana,2\r\ncherry,8\r\nTotal,=SUM(B2:B4)\r\n");
  auto q = set_value(d, A("A2"), Value::text("a \"big\", red")).doc;
  EXPECT_NE(export_csv(q, CsvMode::Values).find("\"a \"\"big\"\", red\",5"), std::string::npos);
}

TEST(Json, RoundTrip) {
  for (const char* f : {"inventory_fig3.json", "inventory_year_sample.json", "items_sample.json"}) {
    const auto li = fixture_instance(f);
    const auto j = instance_to_json(li.doc, li.modelRef);
    const auto back = instance_from_json(li.model, Json::parse(j.dump()));
    EXPECT_EQ(back.values(), li.doc.values()) << f;
    EXPECT_EQ(back.computed(), li.doc.computed()) << f;
    EXPECT_EQ(objects_to_json(li.model, back.objects), objects_to_json(li.model, li.doc.objects)) << f;
  }
}

TEST(Json, RejectsNonInputCells) {
  const auto m = fixture_model("items.tbl");
  EXPECT_THROW(instance_from_json(m, Json::parse(R"({"objects":{"Item":1},"inputs":{"B3":4}})")), Error);
  EXPECT_THROW(instance_from_json(m, Json::parse(R"({"objects":{"Item":1},"inputs":{"Q99":4}})")), Error);
}
