#include <gtest/gtest.h>

#include "support.hpp"
#include "tabula/formula.hpp"
#include "tabula/resolve.hpp"

using namespace tabula;
using tabula::testing::fixture_model;

namespace {

Expr ref(std::string name, std::optional<std::string> q = std::nullopt) {
  return Expr::make_ref(AttrRef{std::move(q), std::move(name)});
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Io;
}

}  // namespace

TEST(ParseFormula, Sum) {
  EXPECT_EQ(parse_formula("SUM(stock)"), Expr::make_apply(Function::Sum, {ref("stock")}));
}

TEST(ParseFormula, QualifiedDifference) {
  EXPECT_EQ(parse_formula("Income.total-total"),
            Expr::make_binary(BinaryOp::Sub, ref("total", "Income"), ref("total")));
}

TEST(ParseFormula, Precedence) {
  const auto n = [](double v) { return Expr::make_number(v); };
  EXPECT_EQ(parse_formula("1+2*3"),
            Expr::make_binary(BinaryOp::Add, n(1), Expr::make_binary(BinaryOp::Mul, n(2), n(3))));
  // left associative
  EXPECT_EQ(parse_formula("8-4-2"),
            Expr::make_binary(BinaryOp::Sub, Expr::make_binary(BinaryOp::Sub, n(8), n(4)), n(2)));
  EXPECT_EQ(to_string(parse_formula("8-(4-2)")), "8-(4-2)");
  EXPECT_EQ(to_string(parse_formula("(1+2)*3")), "(1+2)*3");
  EXPECT_EQ(to_string(parse_formula("((a))+(b*c)")), "a+b*c");
}

TEST(ParseFormula, FunctionNamesAreCaseInsensitive) {
  EXPECT_EQ(to_string(parse_formula("average( sold )")), "AVERAGE(sold)");
  EXPECT_EQ(to_string(parse_formula("max(a, 2, min(b))")), "MAX(a,2,MIN(b))");
}

TEST(ParseFormula, Errors) {
  EXPECT_EQ(kind_of([] { parse_formula("FOO(stock)"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_formula("1+"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_formula("SUM(stock"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_formula("a b"); }), ErrorKind::Parse);
  try {
    parse_formula("1 + )");
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(ParseFormula, TextAndNegativeLiterals) {
  EXPECT_EQ(parse_formula("\"a \\\"b\\\"\""), Expr::make_text("a \"b\""));
  EXPECT_EQ(parse_formula("-3"), Expr::make_number(-3));
  EXPECT_EQ(to_string(parse_formula("-x")), "0-x");
}

TEST(A1Formula, ParseAndPrint) {
  const auto e = parse_a1_formula("=sum(B4:B6, B9:B10)");
  EXPECT_EQ(to_string(e), "SUM(B4:B6,B9:B10)");
  EXPECT_EQ(to_string(parse_a1_formula("SUM()")), "SUM()");
  EXPECT_EQ(to_string(parse_a1_formula("B5-C5/2")), "B5-C5/2");
  // ranges only as direct arguments
  EXPECT_THROW(parse_a1_formula("B4:B6+1"), Error);
}

TEST(A1, Columns) {
  EXPECT_EQ(column_name(0), "A");
  EXPECT_EQ(column_name(25), "Z");
  EXPECT_EQ(column_name(26), "AA");
  EXPECT_EQ(column_name(701), "ZZ");
  EXPECT_EQ(column_name(702), "AAA");
  for (int c : {0, 1, 25, 26, 27, 51, 52, 701, 702, 5000}) {
    const auto a = parse_a1(to_a1(CellAddr{c, 7}));
    ASSERT_TRUE(a);
    EXPECT_EQ(*a, (CellAddr{c, 7}));
  }
  EXPECT_EQ(to_a1(CellAddr{1, 11}), "B12");
  EXPECT_FALSE(parse_a1("B0"));
  EXPECT_FALSE(parse_a1("4B"));
  EXPECT_FALSE(parse_a1(""));
}

TEST(Constraint, Parse) {
  EXPECT_EQ(parse_constraint(">=0"), (Constraint{{{RelOp::Ge, 0}}}));
  EXPECT_EQ(parse_constraint(">=0 && <=100"), (Constraint{{{RelOp::Ge, 0}, {RelOp::Le, 100}}}));
  EXPECT_EQ(kind_of([] { parse_constraint(">="); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_constraint(""); }), ErrorKind::Parse);
  EXPECT_EQ(to_string(parse_constraint(" != 3 && <  -1.5")), "!=3 && <-1.5");
}

TEST(Constraint, Check) {
  const auto nonneg = parse_constraint(">=0");
  EXPECT_TRUE(check_constraint(nonneg, Value::number(5)));
  EXPECT_FALSE(check_constraint(nonneg, Value::number(-1)));
  EXPECT_FALSE(check_constraint(nonneg, Value::text("x")));
  const auto band = parse_constraint(">0 && <10 && !=5");
  EXPECT_TRUE(check_constraint(band, Value::number(3)));
  EXPECT_FALSE(check_constraint(band, Value::number(5)));
  EXPECT_FALSE(check_constraint(band, Value::number(0)));
  EXPECT_FALSE(check_constraint(band, Value::number(10)));
}

TEST(ResolveRef, InventoryTotal) {
  const auto m = fixture_model("inventory.tbl");
  const auto b = resolve_ref(m, {1, 5}, {std::nullopt, "stock"});
  EXPECT_EQ(b.targetClass, "Item");
  EXPECT_EQ(b.targetCell, (Point{1, 3}));
  EXPECT_EQ(b.freeAxes, (std::vector<std::string>{"Category", "Item"}));
  EXPECT_TRUE(b.fixedAxes.empty());
}

TEST(ResolveRef, InventoryYearAverage) {
  const auto m = fixture_model("inventory_year.tbl");
  const auto b = resolve_ref(m, {3, 3}, {std::nullopt, "sold"});
  EXPECT_EQ(b.targetClass, "ItemYear");
  EXPECT_EQ(b.targetCell, (Point{2, 3}));
  EXPECT_EQ(b.fixedAxes, (std::vector<std::string>{"Category", "Item"}));
  EXPECT_EQ(b.freeAxes, (std::vector<std::string>{"Year"}));
}

TEST(ResolveRef, InventoryYearPerYearTotal) {
  const auto m = fixture_model("inventory_year.tbl");
  const auto b = resolve_ref(m, {1, 5}, {std::nullopt, "stock"});
  EXPECT_EQ(b.targetCell, (Point{1, 3}));
  EXPECT_EQ(b.fixedAxes, (std::vector<std::string>{"Year"}));
  EXPECT_EQ(b.freeAxes, (std::vector<std::string>{"Category", "Item"}));
}

TEST(ResolveRef, BudgetCash) {
  const auto m = fixture_model("budget_dyn.tbl");
  // yearly column
  auto b = resolve_ref(m, {2, 3}, {"Income", "total"});
  EXPECT_EQ(b.targetClass, "Income");
  EXPECT_EQ(b.targetCell, (Point{2, 6}));
  b = resolve_ref(m, {2, 3}, {std::nullopt, "total"});
  EXPECT_EQ(b.targetCell, (Point{2, 2}));  // local to Budget

  // per-month column: the same month's income total
  b = resolve_ref(m, {1, 3}, {"Income", "total"});
  EXPECT_EQ(b.targetClass, "IncomeMonth");
  EXPECT_EQ(b.targetCell, (Point{1, 6}));
  EXPECT_EQ(b.fixedAxes, (std::vector<std::string>{"Month"}));
  EXPECT_TRUE(b.freeAxes.empty());
}

TEST(ResolveRef, BudgetExpenseTotals) {
  const auto m = fixture_model("budget_dyn.tbl");
  auto b = resolve_ref(m, {1, 2}, {"Expense", "total"});
  EXPECT_EQ(b.targetClass, "ExpenseMonth");
  EXPECT_EQ(b.freeAxes, (std::vector<std::string>{"Expense"}));
  b = resolve_ref(m, {2, 2}, {"Expense", "total"});
  EXPECT_EQ(b.targetClass, "Expense");
  EXPECT_EQ(b.freeAxes, (std::vector<std::string>{"Expense"}));
}

TEST(ResolveRef, Errors) {
  const auto m = fixture_model("inventory.tbl");
  EXPECT_EQ(kind_of([&] { resolve_ref(m, {1, 5}, {std::nullopt, "nope"}); }), ErrorKind::UnknownName);
  EXPECT_EQ(kind_of([&] { resolve_ref(m, {1, 5}, {"Nope", "stock"}); }), ErrorKind::UnknownClass);
  EXPECT_EQ(kind_of([&] { resolve_ref(m, {1, 5}, {"Category", "total"}); }), ErrorKind::UnknownName);

  const auto twin = parse_model_or_throw(R"(tabula "Twin" {
    grid 1 x 9
    class B range (0,0)..(0,8) expand none
    class H1 range (0,1)..(0,3) expand none
    class H2 range (0,5)..(0,7) expand none
    cells {
      (0,2): input x = 1
      (0,6): input x = 2
    }
  })");
  EXPECT_EQ(kind_of([&] { resolve_ref(twin, {0, 0}, {std::nullopt, "x"}); }), ErrorKind::Ambiguous);
  EXPECT_EQ(resolve_ref(twin, {0, 0}, {"H2", "x"}).targetCell, (Point{0, 6}));
}

TEST(CheckFormulas, FixturesAreClean) {
  for (const char* f : {"items.tbl", "inventory.tbl", "inventory_year.tbl", "budget_dyn.tbl", "budget_static.tbl"})
    EXPECT_TRUE(check_formulas(fixture_model(f)).empty()) << f;
}

TEST(CheckFormulas, MultiReferenceOutsideAggregate) {
  auto m = fixture_model("inventory.tbl");
  m.set({1, 5}, FormulaCell{"total", parse_formula("stock+1")});
  const auto issues = check_formulas(m);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].cell, (Point{1, 5}));
}

TEST(CheckFormulas, Cycle) {
  auto m = fixture_model("items.tbl");
  m.set({1, 1}, FormulaCell{"stock", parse_formula("total")});
  const auto issues = check_formulas(m);
  ASSERT_FALSE(issues.empty());
  EXPECT_NE(issues.back().message.find("depends on itself"), std::string::npos);
}
