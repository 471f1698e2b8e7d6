// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "edit_sequence.hpp"
#include "tabula/cli.hpp"
#include "tabula/formula.hpp"

using namespace tabula;
using namespace tabula::testing;

namespace {

constexpr double kEvalTolerance = 1e-9;
constexpr double kMetricsLimitS = 1.0;
constexpr double kTranslateLimitS = 1.0;
constexpr double kCreateCheckLimitS = 10.0;
constexpr double kEditSequenceLimitS = 30.0;
constexpr int kRandomCreateModels = 50;
constexpr int kRandomRoundTripModels = 100;
constexpr int kSequenceSteps = 200;
constexpr int kMaxDepth = 3;

// What a criterion saw; `ok` false means FAIL with `detail` as the reason.
struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& why) {
    if (!cond && ok) {
      ok = false;
      detail = why;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double limitS, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.ok && s >= limitS) {
    o.ok = false;
    o.detail = "took " + std::to_string(s) + " s, limit " + std::to_string(limitS) + " s";
  }
  failures += !o.ok;
  std::ostringstream line;
  line << (o.ok ? "PASS " : "FAIL ") << name << " (" << static_cast<long>(s * 1000) << " ms)";
  if (!o.detail.empty()) line << ": " << o.detail;
  std::cout << line.str() << std::endl;
}

std::string cli_stdout(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  run_cli(args, out, err);
  return out.str();
}

std::string formula_at(const InstanceDoc& d, const char* a) { return to_string(d.at(*parse_a1(a)).formula); }

double number_at(const InstanceDoc& d, const char* a) {
  const auto& c = d.at(*parse_a1(a));
  return c.has_error() || !c.value.is_number() ? std::nan("") : c.value.as_number();
}

// Input numbers straight from an instance file, without the engine.
Json inputs_of(const char* fixture) { return Json::parse(read_text_file(fixture_path(fixture)))["inputs"]; }

std::set<std::string> rules_of(const std::vector<LayoutViolation>& vs) {
  std::set<std::string> out;
  for (const auto& v : vs) out.insert(v.rule);
  return out;
}

const char* kModels[] = {"items.tbl", "inventory.tbl", "inventory_year.tbl", "budget_dyn.tbl", "budget_static.tbl"};

}  // namespace

int main() {
  criterion("metrics: dynamic and static budget rows", kMetricsLimitS, [] {
    Outcome o;
    const auto dyn = cli_stdout({"metrics", fixture_path("budget_dyn.tbl")});
    o.require(dyn == "3 12 10 16 6 10\n", "dynamic budget printed '" + dyn + "'");
    const auto stat = metrics(fixture_model("budget_static.tbl"));
    o.require(stat.width == 14 && stat.height == 12,
              "static budget is " + std::to_string(stat.width) + "x" + std::to_string(stat.height));
    o.detail = o.ok ? "dyn " + dyn.substr(0, dyn.size() - 1) + ", static " + format_metrics(stat) : o.detail;
    return o;
  });

  criterion("formula translation: inventory and inventory-by-year oracles", kTranslateLimitS, [] {
    Outcome o;
    const auto inv = fixture_instance("inventory_fig3.json").doc;
    const auto year = fixture_instance("inventory_year_sample.json").doc;
    const std::pair<std::string, std::string> cases[] = {
        {formula_at(inv, "B12"), "SUM(B4:B6,B9:B10)"},
        {formula_at(year, "F4"), "AVERAGE(C4,E4)"},
        {formula_at(year, "B12"), "SUM(B4:B6,B9:B10)"},
        {formula_at(year, "D12"), "SUM(D4:D6,D9:D10)"},
    };
    for (const auto& [got, want] : cases) o.require(got == want, "got " + got + ", want " + want);
    return o;
  });

  criterion("evaluation: items total 15, apple average sold 14", kTranslateLimitS, [] {
    Outcome o;
    // brute-force oracles over the raw inputs
    const auto items = inputs_of("items_sample.json");
    double total = 0;
    for (const char* a : {"B2", "B3", "B4"}) total += items[a].get<double>();
    const auto year = inputs_of("inventory_year_sample.json");
    const double avg = (year["C4"].get<double>() + year["E4"].get<double>()) / 2;
    o.require(total == 15 && avg == 14, "fixture inputs no longer give 15 and 14");

    const double gotTotal = number_at(fixture_instance("items_sample.json").doc, "B5");
    const double gotAvg = number_at(fixture_instance("inventory_year_sample.json").doc, "F4");
    o.require(std::abs(gotTotal - total) <= kEvalTolerance, "items total " + std::to_string(gotTotal));
    o.require(std::abs(gotAvg - avg) <= kEvalTolerance, "average sold " + std::to_string(gotAvg));
    return o;
  });

  criterion("layout rules: sample models clean, each mutant trips only its rule", 1.0, [] {
    Outcome o;
    for (const char* f : {"items.tbl", "inventory.tbl", "inventory_year.tbl"}) {
      const auto vs = validate_layout(fixture_model(f));
      o.require(vs.empty(), std::string(f) + " has " + std::to_string(vs.size()) + " violations");
    }
    const std::pair<const char*, const char*> mutants[] = {{"broken_base.tbl", "R1"}, {"mutant_r2.tbl", "R2"},
                                                           {"mutant_r3.tbl", "R3"},   {"mutant_r4.tbl", "R4"},
                                                           {"mutant_r5.tbl", "R5"},   {"mutant_r6.tbl", "R6"}};
    for (const auto& [file, rule] : mutants) {
      const auto got = rules_of(validate_layout(fixture_model(file)));
      std::string seen;
      for (const auto& r : got) seen += r + " ";
      o.require(got == std::set<std::string>{rule}, std::string(file) + " trips " + seen);
    }
    return o;
  });

  criterion("create-then-check: fixtures and 50 random models", kCreateCheckLimitS, [] {
    Outcome o;
    for (const char* f : kModels) {
      const auto m = fixture_model(f);
      o.require(check(m, create(m)).empty(), std::string(f) + " does not conform to itself");
    }
    ModelGenerator gen(2024, kMaxDepth);
    for (int i = 0; i < kRandomCreateModels; ++i) {
      const auto m = gen.next();
      const auto ds = check(m, create(m));
      o.require(ds.empty(), "random model " + std::to_string(i) + ": " + describe(ds));
    }
    return o;
  });

  criterion("edit sequences: 200 random steps per fixture stay conforming and atomic", kEditSequenceLimitS, [] {
    Outcome o;
    int accepted = 0, injected = 0;
    std::uint32_t seed = 1;
    for (const auto& start : fixture_pairs()) {
      const auto rep = run_edit_sequence(start, kSequenceSteps, seed++);
      o.require(rep.failure.empty(), rep.failure);
      o.require(rep.injected > 0, start.name + ": no invalid op was injected");
      accepted += rep.accepted;
      injected += rep.injected;
    }
    if (o.ok) o.detail = std::to_string(accepted) + " accepted, " + std::to_string(injected) + " invalid refused";
    return o;
  });

  criterion("round trip: parse(print(m)) == m on fixtures and 100 random models", 5.0, [] {
    Outcome o;
    std::vector<TabulaModel> models;
    for (const char* f : kModels) models.push_back(fixture_model(f));
    ModelGenerator gen(4242, kMaxDepth);
    for (int i = 0; i < kRandomRoundTripModels; ++i) models.push_back(gen.next());
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto back = parse_model(print_model(models[i]));
      o.require(back.ok() && *back.model == models[i], "model " + std::to_string(i) + " changed");
    }
    return o;
  });

  criterion("new category: a pure instance edit that leaves the model identical", 1.0, [] {
    Outcome o;
    const auto li = fixture_instance("inventory_fig3.json");
    const auto r = sync_apply_instance(li.model, li.doc, AddObject{"Category", {}, std::nullopt});
    o.require(r.model == li.model, "the model changed");
    o.require(print_model(r.model) == print_model(li.model), "the printed model changed");
    o.require(r.doc.height == li.doc.height + 3, "grid height " + std::to_string(r.doc.height));
    o.require(check(r.model, r.doc).empty(), "the new instance does not conform");
    return o;
  });

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
