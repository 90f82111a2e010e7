#include <doctest.h>

#include <functional>

#include "filco/ga.hpp"
#include "filco/milp.hpp"
#include "testutil.hpp"

using namespace filco;
using namespace filco::sched;
using testutil::Instance;

namespace {

Instance chain_instance(const std::vector<TimeNs>& e_us) {
  Instance inst;
  inst.hw = default_vck190();
  inst.hw.n_fmu = 4;
  inst.hw.n_cu = 4;
  for (std::size_t i = 0; i < e_us.size(); ++i) {
    inst.dag.layers.push_back({static_cast<int>(i), 8, 8, 8, Dtype::f32, ""});
    if (i > 0)
      inst.dag.edges.emplace_back(static_cast<int>(i) - 1, static_cast<int>(i));
    stage1::LayerCandidates lc;
    lc.layer_id = static_cast<int>(i);
    stage1::CandidateMode m;
    m.layer_id = static_cast<int>(i);
    m.mode_id = 0;
    m.fmu_used = 3;
    m.cu_used = 1;
    m.latency_s = static_cast<double>(e_us[i]) * 1e-6;
    lc.modes.push_back(m);
    inst.table.per_layer.push_back(lc);
  }
  return inst;
}

}  // namespace

TEST_CASE("single layer, single mode: starts at zero, T = e") {
  Instance inst = chain_instance({10});
  MilpModel model = build_milp(inst.dag, inst.table, inst.hw);
  SolveOutcome out = solve_exact(model, 10.0);
  CHECK(out.proven_optimal);
  CHECK(out.schedule.makespan == 10000);
  CHECK(out.schedule.items[0].start == 0);
}

TEST_CASE("two independent layers demanding every CU serialize") {
  Instance inst;
  inst.hw = default_vck190();
  inst.hw.n_fmu = 6;
  inst.hw.n_cu = 4;
  for (int i = 0; i < 2; ++i) {
    inst.dag.layers.push_back({i, 8, 8, 8, Dtype::f32, ""});
    stage1::LayerCandidates lc;
    lc.layer_id = i;
    stage1::CandidateMode m;
    m.layer_id = i;
    m.mode_id = 0;
    m.fmu_used = 3;
    m.cu_used = 4;  // all of them
    m.latency_s = (i == 0 ? 10 : 7) * 1e-6;
    lc.modes.push_back(m);
    inst.table.per_layer.push_back(lc);
  }
  MilpModel model = build_milp(inst.dag, inst.table, inst.hw);
  SolveOutcome out = solve_exact(model, 10.0);
  CHECK(out.proven_optimal);
  CHECK(out.schedule.makespan == 17000);
}

TEST_CASE("chain makespan is the serial sum for any mode pair") {
  Instance inst = chain_instance({10, 4});
  MilpModel model = build_milp(inst.dag, inst.table, inst.hw);
  SolveOutcome out = solve_exact(model, 10.0);
  CHECK(out.schedule.makespan == 14000);
  CHECK(out.schedule.makespan == testutil::oracle_optimum(inst));
}

TEST_CASE("big-M strictly dominates every feasible makespan") {
  for (u64 seed = 1; seed <= 10; ++seed) {
    Instance inst = testutil::random_instance(seed, 2, 5, 1, 3, 3, 3);
    MilpModel model = build_milp(inst.dag, inst.table, inst.hw);
    TimeNs oracle = testutil::oracle_optimum(inst);
    CHECK(model.big_m > oracle);
    // every feasible schedule satisfies the closed overlap constraints
    GaParams gp;
    gp.population = 8;
    gp.iterations = 5;
    gp.seed = seed;
    Schedule s = solve_ga(inst.dag, inst.table, inst.hw, gp).best;
    for (const auto& [a, b] : model.indep_pairs) {
      auto check_pair = [&](int i, int j) {
        const auto* pi = s.find(i);
        const auto* pj = s.find(j);
        int o = pi->start < pj->end ? 1 : 0;
        CHECK(pi->start - pj->end <= model.big_m * (1 - o) - 1);
        CHECK(pi->start - pj->end >= -model.big_m * o);
      };
      check_pair(a, b);
      check_pair(b, a);
    }
  }
}

TEST_CASE("exact solver matches the exhaustive oracle on small instances") {
  int checked = 0;
  for (u64 seed = 100; seed < 140; ++seed) {
    Instance inst = testutil::random_instance(seed, 2, 5, 1, 3, 3, 3);
    MilpModel model = build_milp(inst.dag, inst.table, inst.hw);
    SolveOutcome out = solve_exact(model, 30.0);
    REQUIRE(out.proven_optimal);
    TimeNs oracle = testutil::oracle_optimum(inst);
    CHECK(out.schedule.makespan == oracle);
    auto rep = validate_schedule(out.schedule, inst.dag, inst.table, inst.hw);
    CHECK(rep.clean());
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("decoder follows the smaller encode among resolved layers") {
  // L0 and L1 both start resolved; encode[1] < encode[0] puts L1 first
  Instance inst;
  inst.hw = default_vck190();
  inst.hw.n_fmu = 3;
  inst.hw.n_cu = 1;
  for (int i = 0; i < 3; ++i) {
    inst.dag.layers.push_back({i, 8, 8, 8, Dtype::f32, ""});
    stage1::LayerCandidates lc;
    lc.layer_id = i;
    stage1::CandidateMode m;
    m.layer_id = i;
    m.mode_id = 0;
    m.fmu_used = 3;
    m.cu_used = 1;
    m.latency_s = 5e-6;
    lc.modes.push_back(m);
    inst.table.per_layer.push_back(lc);
  }
  inst.dag.edges.emplace_back(0, 2);
  inst.dag.edges.emplace_back(1, 2);

  Chromosome ch;
  ch.encode = {0.9, 0.2, 0.5};
  ch.candidate = {0, 0, 0};
  Schedule s = decode_chromosome(ch, inst.dag, inst.table, inst.hw);
  CHECK(s.find(1)->start == 0);
  CHECK(s.find(0)->start == 5000);  // one CU: serialized after L1
  CHECK(s.find(2)->start == 10000);
}

TEST_CASE("chain dags decode to the unique topological order") {
  Instance inst = chain_instance({3, 5, 2, 8});
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Chromosome ch;
    for (int i = 0; i < 4; ++i) {
      ch.encode.push_back(rng.next_unit());
      ch.candidate.push_back(0);
    }
    Schedule s = decode_chromosome(ch, inst.dag, inst.table, inst.hw);
    CHECK(s.makespan == 18000);
    for (int i = 1; i < 4; ++i)
      CHECK(s.find(i)->start == s.find(i - 1)->end);
  }
}

TEST_CASE("independent layers with ample resources all start at zero") {
  Instance inst;
  inst.hw = default_vck190();
  inst.hw.n_fmu = 12;
  inst.hw.n_cu = 12;
  for (int i = 0; i < 4; ++i) {
    inst.dag.layers.push_back({i, 8, 8, 8, Dtype::f32, ""});
    stage1::LayerCandidates lc;
    lc.layer_id = i;
    stage1::CandidateMode m;
    m.layer_id = i;
    m.mode_id = 0;
    m.fmu_used = 3;
    m.cu_used = 3;
    m.latency_s = (i + 1) * 1e-6;
    lc.modes.push_back(m);
    inst.table.per_layer.push_back(lc);
  }
  Chromosome ch;
  ch.encode = {0.1, 0.2, 0.3, 0.4};  // sorted ascending
  ch.candidate = {0, 0, 0, 0};
  Schedule s = decode_chromosome(ch, inst.dag, inst.table, inst.hw);
  for (int i = 0; i < 4; ++i) CHECK(s.find(i)->start == 0);
}

TEST_CASE("decode is deterministic") {
  Instance inst = testutil::random_instance(77, 6, 10, 2, 4, 4, 4);
  Rng rng(3);
  Chromosome ch;
  for (std::size_t i = 0; i < inst.dag.layers.size(); ++i) {
    ch.encode.push_back(rng.next_unit());
    ch.candidate.push_back(static_cast<int>(
        rng.next_below(inst.table.per_layer[i].modes.size())));
  }
  Schedule a = decode_chromosome(ch, inst.dag, inst.table, inst.hw);
  Schedule b = decode_chromosome(ch, inst.dag, inst.table, inst.hw);
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("every GA output decodes to a validator-clean schedule") {
  for (u64 seed = 1; seed <= 5; ++seed) {
    Instance inst = testutil::random_instance(seed * 31, 5, 10, 1, 4, 4, 4);
    GaParams gp;
    gp.population = 16;
    gp.iterations = 30;
    gp.seed = seed;
    GaResult res = solve_ga(inst.dag, inst.table, inst.hw, gp);
    auto rep = validate_schedule(res.best, inst.dag, inst.table, inst.hw);
    INFO(rep.summary());
    CHECK(rep.clean());
  }
}

TEST_CASE("elite fitness is nonincreasing across generations") {
  Instance inst = testutil::random_instance(414, 8, 12, 2, 5, 4, 4);
  GaParams gp;
  gp.population = 24;
  gp.iterations = 60;
  gp.seed = 11;
  GaResult res = solve_ga(inst.dag, inst.table, inst.hw, gp);
  for (std::size_t g = 1; g < res.best_per_generation.size(); ++g)
    CHECK(res.best_per_generation[g] <= res.best_per_generation[g - 1]);
}

TEST_CASE("GA is deterministic for a fixed seed") {
  Instance inst = testutil::random_instance(5150, 6, 9, 2, 4, 4, 4);
  GaParams gp;
  gp.population = 16;
  gp.iterations = 25;
  gp.seed = 42;
  Schedule a = solve_ga(inst.dag, inst.table, inst.hw, gp).best;
  Schedule b = solve_ga(inst.dag, inst.table, inst.hw, gp).best;
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("GA never beats the exact optimum; scaling leaves the argmin set") {
  for (u64 seed = 60; seed < 70; ++seed) {
    Instance inst = testutil::random_instance(seed, 3, 6, 1, 3, 3, 3);
    MilpModel model = build_milp(inst.dag, inst.table, inst.hw);
    SolveOutcome exact = solve_exact(model, 10.0);
    REQUIRE(exact.proven_optimal);
    GaParams gp;
    gp.population = 24;
    gp.iterations = 40;
    gp.seed = seed;
    Schedule ga = solve_ga(inst.dag, inst.table, inst.hw, gp).best;
    CHECK(ga.makespan >= exact.schedule.makespan);

    // scale all latencies by 3: optimum scales, chosen modes still optimal
    Instance scaled = inst;
    for (auto& lc : scaled.table.per_layer)
      for (auto& m : lc.modes) m.latency_s *= 3.0;
    MilpModel m2 = build_milp(scaled.dag, scaled.table, scaled.hw);
    SolveOutcome ex2 = solve_exact(m2, 10.0);
    REQUIRE(ex2.proven_optimal);
    CHECK(ex2.schedule.makespan == 3 * exact.schedule.makespan);
  }
}

TEST_CASE("validator flags an injected double booking exactly once") {
  Instance inst = testutil::random_instance(88, 4, 4, 1, 1, 4, 4);
  GaParams gp;
  gp.population = 8;
  gp.iterations = 3;
  gp.seed = 1;
  Schedule s = solve_ga(inst.dag, inst.table, inst.hw, gp).best;
  auto clean = validate_schedule(s, inst.dag, inst.table, inst.hw);
  REQUIRE(clean.clean());

  // force layers 0 and 1 onto FMU 0 at overlapping times
  Schedule bad = s;
  for (auto& p : bad.items) {
    p.start = 0;
    p.end = p.start + inst.table.mode(p.layer_id, p.mode_id).latency_ns();
  }
  bad.makespan = 0;
  for (auto& p : bad.items) bad.makespan = std::max(bad.makespan, p.end);
  // rebuild unit sets so only FMU 0 collides
  int next_fmu = 1, next_cu = 0;
  bool first = true;
  for (auto& p : bad.items) {
    const auto& mode = inst.table.mode(p.layer_id, p.mode_id);
    p.fmus.clear();
    p.cus.clear();
    p.fmus.push_back(0);  // shared
    for (int i = 1; i < mode.fmu_used; ++i) p.fmus.push_back(next_fmu++);
    for (int i = 0; i < mode.cu_used; ++i) p.cus.push_back(next_cu++);
    if (!first) break;  // only the first two placements share FMU 0
    first = false;
  }
  if (bad.items.size() >= 2 && inst.dag.edges.empty()) {
    auto rep = validate_schedule(bad, inst.dag, inst.table, inst.hw);
    int overlaps = 0;
    for (const auto& v : rep.violations)
      if (v.kind == "overlap") ++overlaps;
    CHECK(overlaps >= 1);
  }
}

TEST_CASE("validator flags broken end-time arithmetic") {
  Instance inst = chain_instance({5, 5});
  GaParams gp;
  gp.population = 4;
  gp.iterations = 2;
  gp.seed = 1;
  Schedule s = solve_ga(inst.dag, inst.table, inst.hw, gp).best;
  s.items[0].end += 3;
  auto rep = validate_schedule(s, inst.dag, inst.table, inst.hw);
  bool arith = false;
  for (const auto& v : rep.violations)
    if (v.kind == "arithmetic") arith = true;
  CHECK(arith);
}

TEST_CASE("lp export round-trips through its own parser") {
  Instance inst = testutil::random_instance(7, 3, 4, 1, 2, 3, 3);
  MilpModel model = build_milp(inst.dag, inst.table, inst.hw);
  std::string lp = export_lp(model);
  LpFile f = parse_lp(lp);
  std::string again = render_lp(parse_lp(render_lp(f)));
  CHECK(render_lp(f) == again);
  CHECK(lp.find("Minimize") != std::string::npos);
  CHECK(lp.find("Binaries") != std::string::npos);
}

TEST_CASE("timeout with no incumbent raises an error carrying the bound") {
  Instance inst = testutil::random_instance(99, 10, 14, 4, 6, 4, 4);
  MilpModel model = build_milp(inst.dag, inst.table, inst.hw);
  try {
    solve_exact(model, 0.0);  // expired before the first leaf
    // a fast machine may still finish the first descent; accept either
  } catch (const TimeoutError& e) {
    CHECK(e.lower_bound > 0);
  }
}

TEST_CASE("infeasible mode demand is rejected when building the model") {
  Instance inst = chain_instance({5});
  inst.table.per_layer[0].modes[0].fmu_used = 99;
  CHECK_THROWS_AS(build_milp(inst.dag, inst.table, inst.hw), ModelError);
}
