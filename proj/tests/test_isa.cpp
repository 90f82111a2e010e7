#include <doctest.h>

#include "filco/ga.hpp"
#include "filco/isa.hpp"
#include "testutil.hpp"

using namespace filco;
using namespace filco::isa;

namespace {

Instruction random_instruction(Rng& rng) {
  switch (rng.next_below(5)) {
    case 0: {
      Header h;
      h.is_last = static_cast<u32>(rng.next_below(2));
      h.des_unit = static_cast<u32>(rng.next_below(256));
      h.valid_length = static_cast<u32>(rng.next_below(1u << 20));
      return h;
    }
    case 1: {
      IomLoad l;
      l.is_last = static_cast<u32>(rng.next_below(2));
      l.des_fmu = static_cast<u32>(rng.next_below(16));
      l.ddr_addr = static_cast<u32>(rng.next_u64());
      l.m = static_cast<u32>(rng.next_range(1, 65535));
      l.n = static_cast<u32>(rng.next_range(1, 65535));
      l.start_row = static_cast<u32>(rng.next_below(l.m));
      l.end_row = l.start_row + static_cast<u32>(rng.next_below(l.m - l.start_row));
      l.start_col = static_cast<u32>(rng.next_below(l.n));
      l.end_col = l.start_col + static_cast<u32>(rng.next_below(l.n - l.start_col));
      return l;
    }
    case 2: {
      IomStore s;
      s.is_last = static_cast<u32>(rng.next_below(2));
      s.src_fmu = static_cast<u32>(rng.next_below(16));
      s.ddr_addr = static_cast<u32>(rng.next_u64());
      s.m = static_cast<u32>(rng.next_range(1, 65535));
      s.n = static_cast<u32>(rng.next_range(1, 65535));
      s.start_row = static_cast<u32>(rng.next_below(s.m));
      s.end_row = s.start_row + static_cast<u32>(rng.next_below(s.m - s.start_row));
      s.start_col = static_cast<u32>(rng.next_below(s.n));
      s.end_col = s.start_col + static_cast<u32>(rng.next_below(s.n - s.start_col));
      return s;
    }
    case 3: {
      Fmu f;
      f.is_last = static_cast<u32>(rng.next_below(2));
      f.swap = static_cast<u32>(rng.next_below(2));
      f.ping_op = rng.next_bool(0.5) ? Op::send : Op::store_out;
      f.pong_op = rng.next_bool(0.5) ? Op::load_lhs : Op::recv;
      f.src_cu = static_cast<u32>(rng.next_below(16));
      f.des_cu = static_cast<u32>(rng.next_below(16));
      f.count = static_cast<u32>(rng.next_range(1, 1 << 30));
      f.view_rows = static_cast<u32>(rng.next_range(1, 65535));
      f.view_cols = static_cast<u32>(rng.next_range(1, 65535));
      f.start_row = static_cast<u32>(rng.next_below(f.view_rows));
      f.end_row = f.start_row + static_cast<u32>(rng.next_below(f.view_rows - f.start_row));
      f.start_col = static_cast<u32>(rng.next_below(f.view_cols));
      f.end_col = f.start_col + static_cast<u32>(rng.next_below(f.view_cols - f.start_col));
      return f;
    }
    default: {
      Cu c;
      c.is_last = static_cast<u32>(rng.next_below(2));
      c.ping_op = rng.next_bool(0.5) ? Op::compute : Op::send;
      c.pong_op = rng.next_bool(0.5) ? Op::recv : Op::idle;
      c.src_fmu = static_cast<u32>(rng.next_below(16));
      c.des_fmu = static_cast<u32>(rng.next_below(16));
      c.count = static_cast<u32>(rng.next_range(1, 1 << 30));
      return c;
    }
  }
}

isa::InstructionProgram end_to_end_program(const WorkloadDag& dag,
                                           const HardwareConfig& hw, u64 seed) {
  auto table = stage1::build_table(dag, hw);
  sched::GaParams gp;
  gp.population = 16;
  gp.iterations = 20;
  gp.seed = seed;
  auto res = sched::solve_ga(dag, table, hw, gp);
  return generate_program(res.best, dag, table, hw);
}

}  // namespace

TEST_CASE("a bare is_last Fmu instruction sets only bit0 of the fields") {
  Fmu f;
  f.is_last = 1;
  auto w = encode(f);
  CHECK((w[0] & 1) == 1);
  CHECK((w[0] & ~((u32{3} << 29) | 1)) == 0);  // only the kind tag besides bit0
  CHECK(w[1] == 0);
  CHECK(w[2] == 0);
  CHECK(w[3] == 0);
  CHECK(w[4] == 0);
}

TEST_CASE("random valid instructions round-trip through encode/decode") {
  Rng rng(2024);
  for (int i = 0; i < 20000; ++i) {
    Instruction x = random_instruction(rng);
    Instruction y = decode(encode(x));
    CHECK(encode(y) == encode(x));
    CHECK(x == y);
  }
}

TEST_CASE("out-of-range fields are rejected with the field named") {
  IomLoad l;
  l.m = 256;
  l.n = 16;
  l.start_row = 300;
  l.end_row = 300;
  l.end_col = 15;
  try {
    encode(l);
    FAIL("expected EncodeError");
  } catch (const EncodeError& e) {
    CHECK(std::string(e.what()).find("row") != std::string::npos);
  }

  Header h;
  h.des_unit = 300;  // 8-bit field
  CHECK_THROWS_AS(encode(h), EncodeError);
}

TEST_CASE("minimal single-atom plan emits one load per operand FMU") {
  HardwareConfig hw = default_vck190();
  WorkloadDag dag = gen_mlp({{2, 8, 8}});
  auto table = stage1::build_table(dag, hw);
  // force the minimal f=3, c=1 mode
  int mode_id = -1;
  for (const auto& m : table.per_layer[0].modes)
    if (m.fmu_used == 3 && m.cu_used == 1) mode_id = m.mode_id;
  REQUIRE(mode_id >= 0);
  sched::Schedule s;
  const auto& mode = table.mode(0, mode_id);
  sched::LayerPlacement p;
  p.layer_id = 0;
  p.mode_id = mode_id;
  p.start = 0;
  p.end = mode.latency_ns();
  p.fmus = {0, 1, 2};
  p.cus = {0};
  s.items.push_back(p);
  s.makespan = p.end;

  auto prog = generate_program(s, dag, table, hw);
  CHECK(prog.loader.instrs.size() == 2);  // one per operand FMU
  int computes = 0;
  for (const auto& i : prog.cu[0].instrs)
    if (const auto* c = std::get_if<Cu>(&i); c && c->ping_op == Op::compute)
      ++computes;
  CHECK(computes == 1);
  CHECK(prog.storer.instrs.size() == 1);
  // every nonempty stream terminates with is_last
  auto last_set = [](const std::vector<Instruction>& v) {
    return std::visit([](const auto& x) { return x.is_last == 1; }, v.back());
  };
  CHECK(last_set(prog.loader.instrs));
  CHECK(last_set(prog.storer.instrs));
  for (const auto& st : prog.fmu)
    if (!st.instrs.empty()) CHECK(last_set(st.instrs));
  for (const auto& st : prog.cu)
    if (!st.instrs.empty()) CHECK(last_set(st.instrs));
}

TEST_CASE("a 128x512 operand loads as one exact-view IomLoad") {
  HardwareConfig hw = default_vck190();
  WorkloadDag dag = gen_mlp({{128, 512, 8}});
  auto table = stage1::build_table(dag, hw);
  int mode_id = -1;
  for (const auto& m : table.per_layer[0].modes)
    if (m.geom.fmu_lhs == 1 && m.views[0] == std::pair<i64, i64>(128, 512))
      mode_id = m.mode_id;
  REQUIRE(mode_id >= 0);
  const auto& mode = table.mode(0, mode_id);
  sched::Schedule s;
  sched::LayerPlacement p;
  p.layer_id = 0;
  p.mode_id = mode_id;
  p.start = 0;
  p.end = mode.latency_ns();
  for (int i = 0; i < mode.fmu_used; ++i) p.fmus.push_back(i);
  for (int i = 0; i < mode.cu_used; ++i) p.cus.push_back(i);
  s.items.push_back(p);
  s.makespan = p.end;

  auto prog = generate_program(s, dag, table, hw);
  int lhs_loads = 0;
  for (const auto& i : prog.loader.instrs) {
    const auto& l = std::get<IomLoad>(i);
    if (l.m == 128 && l.n == 512) {
      ++lhs_loads;
      CHECK(l.start_row == 0);
      CHECK(l.end_row == 127);
      CHECK(l.start_col == 0);
      CHECK(l.end_col == 511);
    }
  }
  CHECK(lhs_loads == 1);
}

TEST_CASE("header valid_length fields sum to the total instruction words") {
  HardwareConfig hw = default_vck190();
  WorkloadDag dag = gen_mlp({{64, 64, 64}, {64, 64, 96}});
  auto prog = end_to_end_program(dag, hw, 5);
  i64 header_sum = 0;
  for (const auto& h : prog.headers)
    header_sum += std::get<Header>(h).valid_length;
  CHECK(header_sum == prog.total_instr_words());
}

TEST_CASE("no FMU mixes operand loads with result stores inside a layer") {
  HardwareConfig hw = default_vck190();
  WorkloadDag dag = gen_transformer(16, 2, 16, 2.0, 1);
  auto prog = end_to_end_program(dag, hw, 11);
  for (const auto& st : prog.fmu) {
    std::map<int, int> role_mask;  // layer -> bitmask of op classes
    for (std::size_t i = 0; i < st.instrs.size(); ++i) {
      const auto& f = std::get<Fmu>(st.instrs[i]);
      int layer = st.notes[i].layer_id;
      if (f.pong_op == Op::load_lhs || f.pong_op == Op::load_rhs)
        role_mask[layer] |= 1;
      if (f.ping_op == Op::store_out || f.pong_op == Op::recv)
        role_mask[layer] |= 2;
    }
    for (auto& [layer, mask] : role_mask) CHECK(mask != 3);
  }
}

TEST_CASE("program files round-trip bit-exactly") {
  HardwareConfig hw = default_vck190();
  WorkloadDag dag = gen_mlp({{96, 64, 32}, {96, 32, 64}});
  auto prog = end_to_end_program(dag, hw, 3);
  auto bytes = prog.serialize();
  auto back = isa::InstructionProgram::deserialize(bytes, hw);
  CHECK(back.serialize() == bytes);
  CHECK(back.layers.size() == prog.layers.size());
  // disassembly is non-empty and stable
  CHECK(back.disassemble() == prog.disassemble());
}

TEST_CASE("decoded streams re-encode byte-identically") {
  HardwareConfig hw = default_vck190();
  WorkloadDag dag = gen_mlp({{40, 24, 56}});
  auto prog = end_to_end_program(dag, hw, 9);
  for (const auto* stream :
       {&prog.loader.instrs, &prog.storer.instrs, &prog.fmu[0].instrs}) {
    for (const auto& i : *stream) {
      auto w = encode(i);
      CHECK(encode(decode(w)) == w);
    }
  }
}

TEST_CASE("generation refuses a dirty schedule") {
  HardwareConfig hw = default_vck190();
  WorkloadDag dag = gen_mlp({{64, 64, 64}});
  auto table = stage1::build_table(dag, hw);
  sched::Schedule s;  // empty: missing the layer entirely
  CHECK_THROWS_AS(generate_program(s, dag, table, hw), GenerationError);
}
