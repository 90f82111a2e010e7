#include "filco/sim.hpp"

#include <algorithm>
#include <cstring>
#include <queue>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "filco/perfmodel.hpp"

namespace filco::sim {

using isa::Instruction;
using isa::InstrNote;
using isa::Op;
using nlohmann::ordered_json;

Matrix make_matrix(i64 rows, i64 cols, Dtype dtype) {
  Matrix m;
  m.rows = rows;
  m.cols = cols;
  m.dtype = dtype;
  m.data.assign(static_cast<std::size_t>(rows * cols * bytes_of(dtype)), 0);
  return m;
}

Matrix reference_matmul(const Matrix& lhs, const Matrix& rhs) {
  if (lhs.cols != rhs.rows || lhs.dtype != rhs.dtype)
    throw SimFault("reference_matmul: operand mismatch");
  Matrix out = make_matrix(lhs.rows, rhs.cols, accum_dtype(lhs.dtype));
  for (i64 r = 0; r < lhs.rows; ++r)
    for (i64 c = 0; c < rhs.cols; ++c) {
      if (lhs.dtype == Dtype::f32) {
        double acc = 0;
        for (i64 k = 0; k < lhs.cols; ++k)
          acc += static_cast<double>(lhs.at<float>(r, k)) * rhs.at<float>(k, c);
        out.set<float>(r, c, static_cast<float>(acc));
      } else if (lhs.dtype == Dtype::i32) {
        u32 acc = 0;
        for (i64 k = 0; k < lhs.cols; ++k)
          acc += static_cast<u32>(lhs.at<std::int32_t>(r, k)) *
                 static_cast<u32>(rhs.at<std::int32_t>(k, c));
        out.set<std::int32_t>(r, c, static_cast<std::int32_t>(acc));
      } else {
        u32 acc = 0;
        for (i64 k = 0; k < lhs.cols; ++k)
          acc += static_cast<u32>(static_cast<std::int32_t>(lhs.at<std::int8_t>(r, k)) *
                                  static_cast<std::int32_t>(rhs.at<std::int8_t>(k, c)));
        out.set<std::int32_t>(r, c, static_cast<std::int32_t>(acc));
      }
    }
  return out;
}

DdrEntry& DdrImage::add(const std::string& name, u32 addr, i64 rows, i64 cols,
                        Dtype dtype) {
  DdrEntry e;
  e.name = name;
  e.addr = addr;
  e.rows = rows;
  e.cols = cols;
  e.dtype = dtype;
  e.valid_rows = rows;
  e.valid_cols = cols;
  u64 end = addr + static_cast<u64>(rows * cols * bytes_of(dtype));
  if (end > bytes.size()) bytes.resize(end, 0);
  entries.push_back(e);
  return entries.back();
}

const DdrEntry* DdrImage::find_addr(u32 addr) const {
  for (const auto& e : entries)
    if (e.addr == addr) return &e;
  return nullptr;
}

const DdrEntry* DdrImage::find_name(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

Matrix DdrImage::read_matrix(const DdrEntry& e) const {
  Matrix m = make_matrix(e.rows, e.cols, e.dtype);
  std::memcpy(m.data.data(), bytes.data() + e.addr, m.data.size());
  return m;
}

void DdrImage::write_matrix(const DdrEntry& e, const Matrix& m) {
  if (m.rows != e.rows || m.cols != e.cols || m.dtype != e.dtype)
    throw SimFault("write_matrix: shape mismatch for " + e.name);
  std::memcpy(bytes.data() + e.addr, m.data.data(), m.data.size());
}

std::string DdrImage::sidecar_json() const {
  ordered_json j;
  j["entries"] = ordered_json::array();
  for (const auto& e : entries)
    j["entries"].push_back({{"name", e.name},
                            {"addr", e.addr},
                            {"rows", e.rows},
                            {"cols", e.cols},
                            {"dtype", dtype_name(e.dtype)},
                            {"valid_rows", e.valid_rows},
                            {"valid_cols", e.valid_cols}});
  return j.dump(2) + "\n";
}

DdrImage DdrImage::from_files(const std::string& sidecar_text,
                              std::vector<std::uint8_t> raw) {
  DdrImage img;
  img.bytes = std::move(raw);
  ordered_json j = ordered_json::parse(sidecar_text);
  for (const auto& je : j.at("entries")) {
    DdrEntry e;
    e.name = je.at("name").get<std::string>();
    e.addr = je.at("addr").get<u32>();
    e.rows = je.at("rows").get<i64>();
    e.cols = je.at("cols").get<i64>();
    e.dtype = dtype_from_name(je.at("dtype").get<std::string>());
    e.valid_rows = je.at("valid_rows").get<i64>();
    e.valid_cols = je.at("valid_cols").get<i64>();
    img.entries.push_back(e);
  }
  return img;
}

DdrImage make_image(const isa::InstructionProgram& prog, u64 seed) {
  DdrImage img;
  for (const auto& l : prog.layers) {
    Rng rng = Rng::fork(seed, static_cast<u64>(l.layer_id));
    std::string base = "L" + std::to_string(l.layer_id);
    auto fill = [&](const DdrEntry& e) {
      Matrix m = make_matrix(e.rows, e.cols, e.dtype);
      for (i64 r = 0; r < e.rows; ++r)
        for (i64 c = 0; c < e.cols; ++c) {
          if (e.dtype == Dtype::f32)
            m.set<float>(r, c, static_cast<float>(rng.next_unit() * 2.0 - 1.0));
          else if (e.dtype == Dtype::i32)
            m.set<std::int32_t>(r, c,
                                static_cast<std::int32_t>(rng.next_range(-99, 99)));
          else
            m.set<std::int8_t>(r, c, static_cast<std::int8_t>(rng.next_range(-8, 8)));
        }
      img.write_matrix(e, m);
    };
    fill(img.add(base + ".lhs", l.lhs_addr, l.m, l.k, l.dtype));
    fill(img.add(base + ".rhs", l.rhs_addr, l.k, l.n, l.dtype));
    img.add(base + ".out", l.out_addr, l.m, l.n, accum_dtype(l.dtype));
  }
  return img;
}

// ---------------------------------------------------------------------------
// Execution core: the decoded program becomes a task graph whose nodes are
// timed transfers and kernel invocations; engines serialize via chained
// dependencies and a time-ordered event queue runs the effects.
// ---------------------------------------------------------------------------

namespace {

struct Tile {
  int aie_slot = -1;  // -1: the lhs tile shared by the CU's AIEs
  i64 rows = 0, cols = 0;
  i64 valid_rows = 0, valid_cols = 0;
  std::vector<std::uint8_t> data;  // row-major, operand dtype
};

struct FmuHalf {
  std::vector<std::uint8_t> data;
  i64 view_rows = 0, view_cols = 0;
  i64 valid_rows = 0, valid_cols = 0;
  i64 esize = 4;
};

struct Task {
  enum Kind { load, fsend, compute, emit, store } kind = load;
  int id = 0;
  std::string unit;
  double dur = 0;
  std::vector<int> succs;
  int pending = 0;
  double release = 0, start = -1, end = -1;
  bool fired = false;

  int layer = -1, round = -1, cu_slot = -1, aie_slot = -1;
  int fmu = -1, cu = -1, half = 0, pass = -1;
  InstrNote note;
  const isa::IomLoad* ld = nullptr;
  const isa::IomStore* stq = nullptr;
  const isa::Fmu* fq = nullptr;
  std::vector<int> targets;  // cu indices for sends

  // operand geometry for computes, filled during build
  i64 k_lhs_rows = 0, k_ext = 0;
  std::vector<std::pair<int, i64>> k_rhs_cols;  // (aie, cols)
};

struct SimEngine {
  const isa::InstructionProgram& prog;
  const HardwareConfig& hw;
  DdrImage image;

  std::vector<Task> tasks;
  std::vector<int> engine_tail;
  std::map<int, const isa::LayerMeta*> meta;
  std::map<int, int> layer_order;  // layer id -> position by schedule start

  struct Ctx {
    std::map<std::pair<int, int>, std::vector<int>> loads_by_phase;
    std::map<std::pair<int, int>, int> last_send_of_phase;
    std::map<std::pair<int, int>, int> store_by_phase;
    std::map<std::pair<int, int>, int> compute_at;  // (cu_slot, round)
    std::map<int, std::vector<int>> cu_rounds;      // cu_slot -> rounds
    std::map<std::pair<int, int>, u32> ntiles_at;
    std::vector<int> store_tasks;
    std::map<int, std::vector<int>> fmu_tasks;  // fmu -> tasks touching it
    std::map<int, std::vector<int>> cu_emits;   // cu index -> emit tasks
    std::map<int, int> cu_first_compute;        // cu index -> first compute
    std::map<int, std::vector<int>> first_loads_by_fmu;
  };
  std::map<int, Ctx> ctx;

  struct RecvInfo {
    int fmu = -1;
    std::size_t stream_pos = 0;
    InstrNote note;
    const isa::Fmu* instr = nullptr;
  };
  std::map<std::tuple<int, int, int, int>, RecvInfo> recv_of;  // layer,cu,round,aie
  // (layer, fmu, phase) -> stream position of the STORE_OUT instruction
  std::map<std::tuple<int, int, int>, std::size_t> store_pos;
  // per-FMU engine ordering: (stream position, task id)
  std::vector<std::vector<std::pair<std::size_t, int>>> send_engine_order,
      fill_engine_order;

  // runtime
  std::vector<std::array<FmuHalf, 2>> halves;
  struct Acc {
    std::vector<float> f;
    std::vector<std::int32_t> i;
    i64 rows = 0, cols = 0, vrows = 0, vk = 0, vcols = 0;
  };
  struct CuState {
    std::map<std::pair<int, int>, std::vector<Tile>> staged;  // (layer, round)
    // output tiles double-buffered by pass parity
    std::vector<std::array<Acc, 2>> acc;  // [aie][parity]
    // build-time bookkeeping
    std::map<int, int> first_compute_of_pass;
    std::map<int, std::vector<int>> emits_of_pass;
  };
  std::vector<CuState> cus;

  PaddingStats padding;
  std::vector<TraceEvent> trace;
  std::map<std::string, std::vector<std::pair<double, double>>> busy;

  int eng_loader() const { return 0; }
  int eng_storer() const { return 1; }
  int eng_fmu_send(int f) const { return 2 + 2 * f; }
  int eng_fmu_fill(int f) const { return 2 + 2 * f + 1; }
  int eng_cu_comp(int c) const { return 2 + 2 * hw.n_fmu + 2 * c; }
  int eng_cu_out(int c) const { return 2 + 2 * hw.n_fmu + 2 * c + 1; }
  int n_engines() const { return 2 + 2 * hw.n_fmu + 2 * hw.n_cu; }

  SimEngine(const isa::InstructionProgram& p, const HardwareConfig& h, DdrImage img)
      : prog(p), hw(h), image(std::move(img)) {
    engine_tail.assign(static_cast<std::size_t>(n_engines()), -1);
    halves.resize(static_cast<std::size_t>(hw.n_fmu));
    for (auto& hs : halves)
      for (auto& half : hs)
        half.data.assign(static_cast<std::size_t>(hw.fmu_capacity_elems) * 4, 0);
    cus.resize(static_cast<std::size_t>(hw.n_cu));
    for (auto& cs : cus) cs.acc.resize(static_cast<std::size_t>(hw.aie_per_cu));
    send_engine_order.resize(static_cast<std::size_t>(hw.n_fmu));
    fill_engine_order.resize(static_cast<std::size_t>(hw.n_fmu));
    for (std::size_t i = 0; i < prog.layers.size(); ++i) {
      meta[prog.layers[i].layer_id] = &prog.layers[i];
      layer_order[prog.layers[i].layer_id] = static_cast<int>(i);
    }
  }

  int add_task(Task t) {
    t.id = static_cast<int>(tasks.size());
    tasks.push_back(std::move(t));
    return tasks.back().id;
  }
  void dep(int from, int to) {
    if (from == to) throw SimFault("self-dependency in the task graph");
    tasks[static_cast<std::size_t>(from)].succs.push_back(to);
    tasks[static_cast<std::size_t>(to)].pending++;
  }
  void chain(int engine, int id) {
    int& tail = engine_tail[static_cast<std::size_t>(engine)];
    if (tail >= 0) dep(tail, id);
    tail = id;
  }
  void touch_fmu(int layer, int f, int id) { ctx[layer].fmu_tasks[f].push_back(id); }

  void build();
  SimResult execute();
  [[noreturn]] void deadlock_dump() const;

  void effect(Task& t);
};

void SimEngine::build() {
  // recv/store_out instruction index (pairs CU emissions and IOM stores with
  // their FMU-side counterparts, and fixes engine ordering)
  for (int f = 0; f < hw.n_fmu; ++f) {
    const auto& st = prog.fmu[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < st.instrs.size(); ++i) {
      const auto* fm = std::get_if<isa::Fmu>(&st.instrs[i]);
      if (!fm) throw SimFault("non-FMU instruction in fmu." + std::to_string(f));
      const auto& n = st.notes[i];
      if (fm->pong_op == Op::recv)
        recv_of[{n.layer_id, n.cu_slot, n.round, n.aie_slot}] = {f, i, n, fm};
      if (fm->ping_op == Op::store_out)
        store_pos[{n.layer_id, f, n.phase}] = i;
    }
  }

  // computes, with output-tile passes tracked per CU stream
  for (int c = 0; c < hw.n_cu; ++c) {
    const auto& st = prog.cu[static_cast<std::size_t>(c)];
    int pass = 0;
    bool emitted = false;
    for (std::size_t i = 0; i < st.instrs.size(); ++i) {
      const auto* cu = std::get_if<isa::Cu>(&st.instrs[i]);
      if (!cu) throw SimFault("non-CU instruction in cu." + std::to_string(c));
      const auto& n = st.notes[i];
      if (cu->ping_op != Op::compute) continue;
      if (emitted) {
        ++pass;
        emitted = false;
      }
      Task t;
      t.kind = Task::compute;
      t.unit = "cu." + std::to_string(c);
      t.layer = n.layer_id;
      t.round = n.round;
      t.cu_slot = n.cu_slot;
      t.cu = c;
      t.pass = pass;
      t.note = n;
      int id = add_task(t);
      chain(eng_cu_comp(c), id);
      auto& cx = ctx[n.layer_id];
      cx.compute_at[{n.cu_slot, n.round}] = id;
      cx.cu_rounds[n.cu_slot].push_back(n.round);
      cx.ntiles_at[{n.cu_slot, n.round}] = cu->count >> 24;
      if (!cx.cu_first_compute.count(c)) cx.cu_first_compute[c] = id;
      auto& cs = cus[static_cast<std::size_t>(c)];
      if (!cs.first_compute_of_pass.count(pass))
        cs.first_compute_of_pass[pass] = id;
      // mark pass boundaries by scanning forward for this round's emissions
      for (std::size_t q = i + 1; q < st.instrs.size(); ++q) {
        const auto* nx = std::get_if<isa::Cu>(&st.instrs[q]);
        if (nx->ping_op == Op::compute) break;
        if (nx->ping_op == Op::send) {
          emitted = true;
          break;
        }
      }
    }
  }

  // emissions, paired with their recv instructions
  for (int c = 0; c < hw.n_cu; ++c) {
    const auto& st = prog.cu[static_cast<std::size_t>(c)];
    int pass = 0;
    bool emitted = false;
    for (std::size_t i = 0; i < st.instrs.size(); ++i) {
      const auto* cu = std::get_if<isa::Cu>(&st.instrs[i]);
      const auto& n = st.notes[i];
      if (cu->ping_op == Op::compute && emitted) {
        ++pass;
        emitted = false;
      }
      if (cu->ping_op != Op::send) continue;
      emitted = true;
      auto rit = recv_of.find({n.layer_id, n.cu_slot, n.round, n.aie_slot});
      if (rit == recv_of.end())
        throw SimFault("CU emission has no matching FMU recv (layer " +
                       std::to_string(n.layer_id) + ", round " +
                       std::to_string(n.round) + ")");
      const RecvInfo& ri = rit->second;
      if (static_cast<int>(cu->des_fmu) != ri.fmu)
        throw SimFault("CU emission targets the wrong FMU");
      Task t;
      t.kind = Task::emit;
      t.unit = "cu." + std::to_string(c);
      t.layer = n.layer_id;
      t.round = n.round;
      t.cu_slot = n.cu_slot;
      t.aie_slot = n.aie_slot;
      t.cu = c;
      t.fmu = ri.fmu;
      t.half = ri.note.phase & 1;
      t.pass = pass;
      t.note = ri.note;  // placement rect and phase come from the recv side
      t.fq = ri.instr;
      i64 es = bytes_of(accum_dtype(meta.at(n.layer_id)->dtype));
      t.dur = perf::stream_seconds(ri.note.rows * ri.note.cols * es, hw);
      int id = add_task(t);
      chain(eng_cu_out(c), id);
      fill_engine_order[static_cast<std::size_t>(ri.fmu)].emplace_back(
          ri.stream_pos, id);
      auto& cx = ctx[n.layer_id];
      dep(cx.compute_at.at({n.cu_slot, n.round}), id);
      cx.cu_emits[c].push_back(id);
      cus[static_cast<std::size_t>(c)].emits_of_pass[pass].push_back(id);
      touch_fmu(n.layer_id, ri.fmu, id);
    }
  }

  // loads
  for (std::size_t i = 0; i < prog.loader.instrs.size(); ++i) {
    const auto* ld = std::get_if<isa::IomLoad>(&prog.loader.instrs[i]);
    if (!ld) throw SimFault("non-load instruction in the loader stream");
    const auto& n = prog.loader.notes[i];
    const auto* m = meta.at(n.layer_id);
    Task t;
    t.kind = Task::load;
    t.unit = "iom.loader";
    t.layer = n.layer_id;
    t.fmu = static_cast<int>(ld->des_fmu);
    t.half = n.phase & 1;
    t.note = n;
    t.ld = ld;
    i64 es = bytes_of(m->dtype);
    i64 bytes = n.rows * n.cols * es;
    i64 width = n.matrix == 0 ? m->k : m->n;
    t.dur = perf::ddr_seconds(bytes, n.cols == width ? bytes : n.cols * es, hw.ddr);
    int id = add_task(t);
    chain(eng_loader(), id);
    auto& cx = ctx[n.layer_id];
    cx.loads_by_phase[{t.fmu, n.phase}].push_back(id);
    cx.first_loads_by_fmu[t.fmu].push_back(id);
    touch_fmu(n.layer_id, t.fmu, id);
  }

  // FMU sends
  for (int f = 0; f < hw.n_fmu; ++f) {
    const auto& stream = prog.fmu[static_cast<std::size_t>(f)];
    for (std::size_t i = 0; i < stream.instrs.size(); ++i) {
      const auto* fm = std::get_if<isa::Fmu>(&stream.instrs[i]);
      const auto& n = stream.notes[i];
      if (fm->ping_op != Op::send) continue;
      auto& cx = ctx[n.layer_id];
      Task t;
      t.kind = Task::fsend;
      t.unit = "fmu." + std::to_string(f);
      t.layer = n.layer_id;
      t.round = n.round;
      t.cu_slot = n.cu_slot;
      t.aie_slot = n.aie_slot;
      t.fmu = f;
      t.half = (n.phase - 1) & 1;
      t.note = n;
      t.fq = fm;
      t.dur = perf::stream_seconds(
          n.rows * n.cols * bytes_of(meta.at(n.layer_id)->dtype), hw);
      if (fm->des_cu == isa::kMulticastUnit) {
        for (const auto& [slot, rounds] : cx.cu_rounds)
          if (cx.compute_at.count({slot, n.round})) t.targets.push_back(slot);
      } else {
        const auto& cus_of = meta.at(n.layer_id)->cus;
        auto pos = std::find(cus_of.begin(), cus_of.end(),
                             static_cast<int>(fm->des_cu));
        if (pos == cus_of.end())
          throw SimFault("send targets a CU outside the layer's assignment");
        t.targets.push_back(static_cast<int>(pos - cus_of.begin()));
      }
      if (t.targets.empty())
        throw SimFault("send has no receiving compute (layer " +
                       std::to_string(n.layer_id) + ", round " +
                       std::to_string(n.round) + ")");
      int id = add_task(t);
      send_engine_order[static_cast<std::size_t>(f)].emplace_back(i, id);
      cx.last_send_of_phase[{f, n.phase}] = id;
      touch_fmu(n.layer_id, f, id);
      for (int slot : t.targets) {
        int cid = cx.compute_at.at({slot, n.round});
        dep(id, cid);
        // record operand geometry on the compute
        Task& ct = tasks[static_cast<std::size_t>(cid)];
        if (n.matrix == 0) {
          ct.k_lhs_rows = n.rows;
          ct.k_ext = n.cols;
        } else {
          ct.k_rhs_cols.emplace_back(n.aie_slot, n.cols);
        }
      }
    }
  }

  // stores
  for (std::size_t i = 0; i < prog.storer.instrs.size(); ++i) {
    const auto* st = std::get_if<isa::IomStore>(&prog.storer.instrs[i]);
    if (!st) throw SimFault("non-store instruction in the storer stream");
    const auto& n = prog.storer.notes[i];
    const auto* m = meta.at(n.layer_id);
    Task t;
    t.kind = Task::store;
    t.unit = "iom.storer";
    t.layer = n.layer_id;
    t.fmu = static_cast<int>(st->src_fmu);
    t.half = (n.phase - 1) & 1;
    t.note = n;
    t.stq = st;
    i64 es = bytes_of(accum_dtype(m->dtype));
    i64 bytes = n.rows * n.cols * es;
    t.dur = perf::ddr_seconds(bytes, n.cols == m->n ? bytes : n.cols * es, hw.ddr);
    int id = add_task(t);
    chain(eng_storer(), id);
    auto sp = store_pos.find({n.layer_id, t.fmu, n.phase});
    if (sp != store_pos.end())
      send_engine_order[static_cast<std::size_t>(t.fmu)].emplace_back(sp->second, id);
    auto& cx = ctx[n.layer_id];
    cx.store_by_phase[{t.fmu, n.phase}] = id;
    cx.store_tasks.push_back(id);
    touch_fmu(n.layer_id, t.fmu, id);
  }

  // serialize per-FMU engines in the order their instructions appear in the
  // FMU's own stream (which is execution order), not task creation order
  for (int f = 0; f < hw.n_fmu; ++f) {
    auto order_chain = [&](std::vector<std::pair<std::size_t, int>>& v, int engine) {
      std::sort(v.begin(), v.end());
      for (auto& [pos, id] : v) chain(engine, id);
    };
    order_chain(send_engine_order[static_cast<std::size_t>(f)], eng_fmu_send(f));
    order_chain(fill_engine_order[static_cast<std::size_t>(f)], eng_fmu_fill(f));
  }

  // output-tile double buffering: the accumulator written by pass p is the
  // one emptied by the emissions of pass p-2
  for (int c = 0; c < hw.n_cu; ++c) {
    auto& cs = cus[static_cast<std::size_t>(c)];
    for (const auto& [pass, first] : cs.first_compute_of_pass) {
      auto prev = cs.emits_of_pass.find(pass - 2);
      if (prev != cs.emits_of_pass.end())
        for (int eid : prev->second) dep(eid, first);
    }
  }

  // cross-task dependencies needing the complete maps
  for (auto& t : tasks) {
    auto& cx = ctx[t.layer];
    switch (t.kind) {
      case Task::load: {
        auto it = cx.last_send_of_phase.find({t.fmu, t.note.phase - 1});
        if (it != cx.last_send_of_phase.end()) dep(it->second, t.id);
        for (int p : meta.at(t.layer)->preds)
          for (int sid : ctx.at(p).store_tasks) dep(sid, t.id);
        break;
      }
      case Task::fsend: {
        auto it = cx.loads_by_phase.find({t.fmu, t.note.phase - 1});
        if (it != cx.loads_by_phase.end())
          for (int lid : it->second) dep(lid, t.id);
        for (int slot : t.targets) {
          const auto& order = cx.cu_rounds.at(slot);
          auto pos = std::find(order.begin(), order.end(), t.round);
          if (pos != order.end() && pos - order.begin() >= 2)
            dep(cx.compute_at.at({slot, *(pos - 2)}), t.id);
        }
        break;
      }
      case Task::emit: {
        auto it = cx.store_by_phase.find({t.fmu, t.note.phase - 1});
        if (it != cx.store_by_phase.end()) dep(it->second, t.id);
        break;
      }
      case Task::store: {
        // all result tiles of the slab landed: emits paired with recvs of
        // phase = store phase - 1 on this FMU
        for (const auto& [c, emits] : cx.cu_emits)
          for (int eid : emits) {
            const Task& e = tasks[static_cast<std::size_t>(eid)];
            if (e.fmu == t.fmu && e.note.phase == t.note.phase - 1)
              dep(eid, t.id);
          }
        break;
      }
      case Task::compute:
        break;
    }
  }

  // cross-layer unit hazards: a later layer may not touch an FMU or CU until
  // the earlier layer's traffic on it has drained
  for (auto& t : tasks) {
    if (t.kind != Task::load) continue;
    int my_order = layer_order.at(t.layer);
    int best_layer = -1;
    for (const auto& [lid, order] : layer_order)
      if (order < my_order && ctx.count(lid) &&
          ctx.at(lid).fmu_tasks.count(t.fmu))
        if (best_layer < 0 || order > layer_order.at(best_layer)) best_layer = lid;
    if (best_layer >= 0)
      for (int pid : ctx.at(best_layer).fmu_tasks.at(t.fmu))
        if (pid != t.id) dep(pid, t.id);
  }
  for (auto& [lid, cx] : ctx) {
    int my_order = layer_order.at(lid);
    for (auto& [c, first] : cx.cu_first_compute) {
      int best_layer = -1;
      for (const auto& [lid2, order] : layer_order)
        if (order < my_order && ctx.at(lid2).cu_emits.count(c))
          if (best_layer < 0 || order > layer_order.at(best_layer))
            best_layer = lid2;
      if (best_layer >= 0)
        for (int eid : ctx.at(best_layer).cu_emits.at(c)) dep(eid, first);
    }
  }

  // kernel durations and operand-count validation
  for (auto& t : tasks) {
    if (t.kind != Task::compute) continue;
    const auto* m = meta.at(t.layer);
    u32 expected = ctx.at(t.layer).ntiles_at.at({t.cu_slot, t.round});
    if (expected != 1 + t.k_rhs_cols.size())
      throw SimFault("operand tile count mismatch at layer " +
                     std::to_string(t.layer) + " round " + std::to_string(t.round));
    if (t.k_lhs_rows <= 0)
      throw SimFault("compute without an lhs tile at layer " +
                     std::to_string(t.layer));
    perf::TileShape max_tile{hw.cu_buf_tile[0] / kAtomM, hw.cu_buf_tile[1] / kAtomK,
                             hw.cu_buf_tile[2] / kAtomN};
    i64 worst = 0;
    for (auto& [a, cols] : t.k_rhs_cols) {
      perf::TileShape ts = perf::TileShape::from_elems(t.k_lhs_rows, t.k_ext, cols);
      i64 cyc = m->geom.static_kernel
                    ? perf::aie_kernel_cycles_static(ts, hw.aie_cycle_model, max_tile)
                    : perf::aie_kernel_cycles_flexible(ts, hw.aie_cycle_model);
      worst = std::max(worst, cyc);
    }
    t.dur = static_cast<double>(worst) / hw.f_aie_hz;
  }
}

// ---------------------------------------------------------------------------
// Effects
// ---------------------------------------------------------------------------

void SimEngine::effect(Task& t) {
  switch (t.kind) {
    case Task::load: {
      const DdrEntry* e = image.find_addr(t.ld->ddr_addr);
      if (!e) throw SimFault("load from unmapped DDR address");
      FmuHalf& half = halves[static_cast<std::size_t>(t.fmu)][static_cast<std::size_t>(t.half)];
      i64 es = bytes_of(e->dtype);
      half.esize = es;
      half.view_rows = t.note.rows;
      half.view_cols = t.note.cols;
      if (t.note.rows * t.note.cols > hw.fmu_capacity_elems)
        throw SimFault("view overflow: load of " + std::to_string(t.note.rows) + "x" +
                       std::to_string(t.note.cols) + " exceeds FMU capacity");
      half.valid_rows = std::clamp<i64>(e->valid_rows - t.note.mat_row0, 0, t.note.rows);
      half.valid_cols = std::clamp<i64>(e->valid_cols - t.note.mat_col0, 0, t.note.cols);
      for (i64 r = 0; r < t.note.rows; ++r) {
        const std::uint8_t* src = image.bytes.data() + e->addr +
                                  static_cast<std::size_t>(((t.note.mat_row0 + r) * e->cols +
                                                            t.note.mat_col0) * es);
        std::memcpy(half.data.data() + static_cast<std::size_t>(r * t.note.cols * es),
                    src, static_cast<std::size_t>(t.note.cols * es));
      }
      padding.transferred_elems += t.note.rows * t.note.cols;
      padding.valid_elems += half.valid_rows * half.valid_cols;
      break;
    }
    case Task::fsend: {
      FmuHalf& half = halves[static_cast<std::size_t>(t.fmu)][static_cast<std::size_t>(t.half)];
      const auto& n = t.note;
      if (half.view_rows != static_cast<i64>(t.fq->view_rows) ||
          half.view_cols != static_cast<i64>(t.fq->view_cols))
        throw SimFault("view mismatch on fmu." + std::to_string(t.fmu) + " send (" +
                       std::to_string(half.view_rows) + "x" +
                       std::to_string(half.view_cols) + " held, instruction says " +
                       std::to_string(t.fq->view_rows) + "x" +
                       std::to_string(t.fq->view_cols) + ")");
      if (n.view_row0 + n.rows > half.view_rows ||
          n.view_col0 + n.cols > half.view_cols)
        throw SimFault("view overflow on fmu." + std::to_string(t.fmu) + " send");
      Tile tile;
      tile.aie_slot = n.matrix == 0 ? -1 : n.aie_slot;
      tile.rows = n.rows;
      tile.cols = n.cols;
      tile.valid_rows = std::clamp<i64>(half.valid_rows - n.view_row0, 0, n.rows);
      tile.valid_cols = std::clamp<i64>(half.valid_cols - n.view_col0, 0, n.cols);
      i64 es = half.esize;
      tile.data.resize(static_cast<std::size_t>(n.rows * n.cols * es));
      for (i64 r = 0; r < n.rows; ++r)
        std::memcpy(tile.data.data() + static_cast<std::size_t>(r * n.cols * es),
                    half.data.data() +
                        static_cast<std::size_t>(((n.view_row0 + r) * half.view_cols +
                                                  n.view_col0) * es),
                    static_cast<std::size_t>(n.cols * es));
      for (int slot : t.targets) {
        int c = meta.at(t.layer)->cus[static_cast<std::size_t>(slot)];
        cus[static_cast<std::size_t>(c)].staged[{t.layer, t.round}].push_back(tile);
      }
      break;
    }
    case Task::compute: {
      CuState& cs = cus[static_cast<std::size_t>(t.cu)];
      auto it = cs.staged.find({t.layer, t.round});
      if (it == cs.staged.end())
        throw SimFault("compute fired without staged operands");
      const Tile* lhs = nullptr;
      for (const auto& tl : it->second)
        if (tl.aie_slot < 0) lhs = &tl;
      if (!lhs) throw SimFault("compute missing the lhs tile");
      Dtype dt = meta.at(t.layer)->dtype;
      bool is_static = meta.at(t.layer)->geom.static_kernel;
      i64 tile_vol_static = hw.cu_buf_tile[0] * hw.cu_buf_tile[1] * hw.cu_buf_tile[2];
      std::size_t parity = static_cast<std::size_t>(t.pass & 1);
      for (const auto& rhs : it->second) {
        if (rhs.aie_slot < 0) continue;
        Acc& acc = cs.acc[static_cast<std::size_t>(rhs.aie_slot)][parity];
        if (lhs->cols != rhs.rows)
          throw SimFault("operand k mismatch in compute");
        if (acc.rows == 0) {
          acc.rows = lhs->rows;
          acc.cols = rhs.cols;
          acc.vrows = lhs->valid_rows;
          acc.vk = std::min(lhs->valid_cols, rhs.valid_rows);
          acc.vcols = rhs.valid_cols;
          acc.f.assign(static_cast<std::size_t>(lhs->rows * rhs.cols), 0.0f);
          acc.i.assign(static_cast<std::size_t>(lhs->rows * rhs.cols), 0);
        } else if (acc.rows != lhs->rows || acc.cols != rhs.cols) {
          throw SimFault("accumulator shape changed mid-pass");
        }
        // k-innermost ascending accumulation
        for (i64 r = 0; r < lhs->rows; ++r)
          for (i64 c = 0; c < rhs.cols; ++c) {
            std::size_t at = static_cast<std::size_t>(r * rhs.cols + c);
            if (dt == Dtype::f32) {
              float v = acc.f[at];
              for (i64 k = 0; k < lhs->cols; ++k) {
                float x, y;
                std::memcpy(&x, lhs->data.data() + (r * lhs->cols + k) * 4, 4);
                std::memcpy(&y, rhs.data.data() + (k * rhs.cols + c) * 4, 4);
                v += x * y;
              }
              acc.f[at] = v;
            } else if (dt == Dtype::i32) {
              u32 v = static_cast<u32>(acc.i[at]);
              for (i64 k = 0; k < lhs->cols; ++k) {
                std::int32_t x, y;
                std::memcpy(&x, lhs->data.data() + (r * lhs->cols + k) * 4, 4);
                std::memcpy(&y, rhs.data.data() + (k * rhs.cols + c) * 4, 4);
                v += static_cast<u32>(x) * static_cast<u32>(y);
              }
              acc.i[at] = static_cast<std::int32_t>(v);
            } else {
              u32 v = static_cast<u32>(acc.i[at]);
              for (i64 k = 0; k < lhs->cols; ++k) {
                auto x = static_cast<std::int8_t>(
                    lhs->data[static_cast<std::size_t>(r * lhs->cols + k)]);
                auto y = static_cast<std::int8_t>(
                    rhs.data[static_cast<std::size_t>(k * rhs.cols + c)]);
                v += static_cast<u32>(static_cast<std::int32_t>(x) *
                                      static_cast<std::int32_t>(y));
              }
              acc.i[at] = static_cast<std::int32_t>(v);
            }
          }
        i64 executed =
            is_static ? tile_vol_static
                      : (round_up(lhs->rows, kAtomM) * round_up(lhs->cols, kAtomK) *
                         round_up(rhs.cols, kAtomN));
        padding.executed_ops += executed;
        padding.valid_ops += lhs->valid_rows *
                             std::min(lhs->valid_cols, rhs.valid_rows) *
                             rhs.valid_cols;
      }
      cs.staged.erase(it);
      break;
    }
    case Task::emit: {
      CuState& cs = cus[static_cast<std::size_t>(t.cu)];
      Acc& acc = cs.acc[static_cast<std::size_t>(t.aie_slot)]
                       [static_cast<std::size_t>(t.pass & 1)];
      if (acc.rows == 0) throw SimFault("emission from an empty accumulator");
      FmuHalf& half = halves[static_cast<std::size_t>(t.fmu)][static_cast<std::size_t>(t.half)];
      Dtype dt = accum_dtype(meta.at(t.layer)->dtype);
      i64 es = bytes_of(dt);
      // first landing tile of a phase establishes the out view
      if (half.view_rows != static_cast<i64>(t.fq->view_rows) ||
          half.view_cols != static_cast<i64>(t.fq->view_cols)) {
        half.view_rows = static_cast<i64>(t.fq->view_rows);
        half.view_cols = static_cast<i64>(t.fq->view_cols);
        half.esize = es;
        half.valid_rows = half.view_rows;
        half.valid_cols = half.view_cols;
        if (half.view_rows * half.view_cols > hw.fmu_capacity_elems)
          throw SimFault("view overflow: out view exceeds FMU capacity");
      }
      if (t.note.view_row0 + acc.rows > half.view_rows ||
          t.note.view_col0 + acc.cols > half.view_cols)
        throw SimFault("view overflow on result placement");
      for (i64 r = 0; r < acc.rows; ++r)
        for (i64 c = 0; c < acc.cols; ++c) {
          std::size_t dst = static_cast<std::size_t>(
              ((t.note.view_row0 + r) * half.view_cols + t.note.view_col0 + c) * es);
          if (dt == Dtype::f32) {
            float v = acc.f[static_cast<std::size_t>(r * acc.cols + c)];
            std::memcpy(half.data.data() + dst, &v, 4);
          } else {
            std::int32_t v = acc.i[static_cast<std::size_t>(r * acc.cols + c)];
            std::memcpy(half.data.data() + dst, &v, 4);
          }
        }
      acc.rows = 0;  // consumed; the pass after next re-initializes
      acc.cols = 0;
      break;
    }
    case Task::store: {
      const DdrEntry* e = image.find_addr(t.stq->ddr_addr);
      if (!e) throw SimFault("store to unmapped DDR address");
      FmuHalf& half = halves[static_cast<std::size_t>(t.fmu)][static_cast<std::size_t>(t.half)];
      i64 es = bytes_of(e->dtype);
      if (t.note.rows > half.view_rows || t.note.cols > half.view_cols)
        throw SimFault("view overflow on store");
      for (i64 r = 0; r < t.note.rows; ++r)
        std::memcpy(image.bytes.data() + e->addr +
                        static_cast<std::size_t>(((t.note.mat_row0 + r) * e->cols +
                                                  t.note.mat_col0) * es),
                    half.data.data() + static_cast<std::size_t>(r * half.view_cols * es),
                    static_cast<std::size_t>(t.note.cols * es));
      padding.transferred_elems += t.note.rows * t.note.cols;
      padding.valid_elems +=
          std::clamp<i64>(e->valid_rows - t.note.mat_row0, 0, t.note.rows) *
          std::clamp<i64>(e->valid_cols - t.note.mat_col0, 0, t.note.cols);
      break;
    }
  }
}

void SimEngine::deadlock_dump() const {
  std::ostringstream os;
  os << "simulation deadlock; unfired work per unit:";
  std::map<std::string, int> counts;
  std::map<std::string, std::string> first;
  for (const auto& t : tasks)
    if (!t.fired) {
      counts[t.unit]++;
      if (!first.count(t.unit))
        first[t.unit] = "layer " + std::to_string(t.layer) + " kind " +
                        std::to_string(static_cast<int>(t.kind)) + " round " +
                        std::to_string(t.round);
    }
  for (const auto& [u, n] : counts)
    os << "\n  " << u << ": " << n << " pending, next = " << first.at(u);
  throw DeadlockError(os.str());
}

SimResult SimEngine::execute() {
  using Ev = std::pair<double, int>;
  std::priority_queue<Ev, std::vector<Ev>, std::greater<>> q;
  for (auto& t : tasks)
    if (t.pending == 0) {
      t.start = t.release;
      t.end = t.start + t.dur;
      q.push({t.end, t.id});
    }

  double makespan = 0;
  std::size_t fired = 0;
  while (!q.empty()) {
    auto [end, id] = q.top();
    q.pop();
    Task& t = tasks[static_cast<std::size_t>(id)];
    if (t.fired) continue;
    t.fired = true;
    ++fired;
    effect(t);
    makespan = std::max(makespan, t.end);
    busy[t.unit].emplace_back(t.start, t.end);
    static const char* kind_names[] = {"load", "send", "compute", "emit", "store"};
    trace.push_back({static_cast<TimeNs>(t.start * 1e9), t.unit,
                     std::string(kind_names[t.kind]) + ".start",
                     "layer=" + std::to_string(t.layer) +
                         (t.round >= 0 ? " round=" + std::to_string(t.round) : "")});
    trace.push_back({static_cast<TimeNs>(t.end * 1e9), t.unit,
                     std::string(kind_names[t.kind]) + ".end",
                     "layer=" + std::to_string(t.layer)});
    for (int s : t.succs) {
      Task& st = tasks[static_cast<std::size_t>(s)];
      st.release = std::max(st.release, t.end);
      if (--st.pending == 0) {
        st.start = st.release;
        st.end = st.start + st.dur;
        q.push({st.end, st.id});
      }
    }
  }
  if (fired != tasks.size()) deadlock_dump();

  SimResult res;
  res.makespan_s = makespan;
  res.padding = padding;
  std::sort(trace.begin(), trace.end(),
            [](const TraceEvent& a, const TraceEvent& b) { return a.t < b.t; });
  res.trace = std::move(trace);
  for (auto& [unit, iv] : busy) {
    std::sort(iv.begin(), iv.end());
    double total = 0, cur_s = -1, cur_e = -1;
    for (auto& [s, e] : iv) {
      if (s > cur_e) {
        if (cur_e > cur_s) total += cur_e - cur_s;
        cur_s = s;
        cur_e = e;
      } else {
        cur_e = std::max(cur_e, e);
      }
    }
    if (cur_e > cur_s) total += cur_e - cur_s;
    res.utilization[unit] = makespan > 0 ? total / makespan : 0.0;
  }
  for (const auto& l : prog.layers) {
    const DdrEntry* e = image.find_addr(l.out_addr);
    if (e) res.outputs[l.layer_id] = image.read_matrix(*e);
  }
  return res;
}

}  // namespace

SimResult run(const isa::InstructionProgram& prog, const HardwareConfig& hw,
              DdrImage image) {
  SimEngine eng(prog, hw, std::move(image));
  eng.build();
  return eng.execute();
}

PaddingStats measure_padding(const isa::InstructionProgram& prog,
                             const HardwareConfig& hw) {
  return run(prog, hw, make_image(prog, 1)).padding;
}

std::string trace_csv(const SimResult& r) {
  std::ostringstream os;
  os << "time_ns,unit,event,detail\n";
  for (const auto& e : r.trace)
    os << e.t << "," << e.unit << "," << e.event << "," << e.detail << "\n";
  return os.str();
}

}  // namespace filco::sim
