#pragma once

// Randomized edit sequences shared by the property tests and the acceptance run.

#include <string>
#include <utility>
#include <vector>

#include "random_gen.hpp"
#include "support.hpp"
#include "tabula/ops_io.hpp"

namespace tabula::testing {

struct FixturePair {
  std::string name;
  TabulaModel model;
  InstanceDoc doc;
};

/// The sample instances plus fresh instances of both budgets.
inline std::vector<FixturePair> fixture_pairs() {
  std::vector<FixturePair> out;
  for (const char* f : {"items_sample.json", "inventory_fig3.json", "inventory_year_sample.json"}) {
    auto li = fixture_instance(f);
    out.push_back({f, li.model, li.doc});
  }
  for (const char* f : {"budget_dyn.tbl", "budget_static.tbl"}) {
    auto m = fixture_model(f);
    out.push_back({f, m, create(m)});
  }
  return out;
}

inline std::string describe(const std::vector<Diagnostic>& ds) {
  std::string s;
  for (const auto& d : ds) s += to_string(d) + "\n";
  return s;
}

struct SequenceReport {
  int accepted = 0;
  int injected = 0;      // invalid ops that were refused
  int adds = 0;          // valid add-object ops tried
  int addsAccepted = 0;
  std::string failure;   // empty when every step behaved
};

/// Mixed random model and instance edits through sync_apply_*. Every accepted step
/// must conform, every injected invalid op must be refused, and a refused op must
/// leave both artifacts as they were. Stops at the first misbehaving step.
inline SequenceReport run_edit_sequence(const FixturePair& start, int steps, std::uint32_t seed,
                                        double invalidRate = 0.1) {
  OpGenerator gen(seed);
  TabulaModel m = start.model;
  InstanceDoc d = start.doc;
  SequenceReport rep;
  for (int step = 0; step < steps; ++step) {
    const TabulaModel m0 = m;
    const InstanceDoc d0 = d;
    const bool invalid = gen.rng().chance(invalidRate);
    const auto where = start.name + " step " + std::to_string(step) + ": ";
    std::string what;
    bool isAdd = false;
    try {
      SyncResult r;
      if (gen.rng().chance(0.5)) {
        const auto op = invalid ? gen.invalid_instance_op(m, d) : gen.instance_op(m, d);
        what = to_string(op);
        isAdd = !invalid && std::holds_alternative<AddObject>(op);
        rep.adds += isAdd;
        r = sync_apply_instance(m, d, op);
      } else {
        const auto op = invalid ? gen.invalid_model_op(m) : gen.model_op(m);
        what = to_string(op);
        r = sync_apply_model(m, d, op);
      }
      if (invalid) {
        rep.failure = where + "accepted invalid " + what;
        return rep;
      }
      if (const auto ds = check(r.model, r.doc); !ds.empty()) {
        rep.failure = where + what + " broke conformance\n" + describe(ds);
        return rep;
      }
      m = std::move(r.model);
      d = std::move(r.doc);
      ++rep.accepted;
      rep.addsAccepted += isAdd;
    } catch (const Error&) {
      rep.injected += invalid;
      if (m != m0 || d != d0) {
        rep.failure = where + "refused " + what + " but changed state";
        return rep;
      }
    }
  }
  return rep;
}

}  // namespace tabula::testing
