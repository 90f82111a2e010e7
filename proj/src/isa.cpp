#include "filco/isa.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include <json.hpp>

namespace filco::isa {

using nlohmann::ordered_json;
using perf::share_of;
using perf::share_start;

const char* op_name(Op op) {
  switch (op) {
    case Op::idle: return "IDLE";
    case Op::load_lhs: return "LOAD_LHS";
    case Op::load_rhs: return "LOAD_RHS";
    case Op::store_out: return "STORE_OUT";
    case Op::send: return "SEND";
    case Op::recv: return "RECV";
    case Op::compute: return "COMPUTE";
  }
  return "?";
}

u32 global_unit_id(const HardwareConfig& hw, char kind, int index) {
  switch (kind) {
    case 'l': return 0;
    case 's': return 1;
    case 'f': return 2 + static_cast<u32>(index);
    case 'c': return 2 + static_cast<u32>(hw.n_fmu) + static_cast<u32>(index);
  }
  throw EncodeError("unknown unit kind");
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

namespace {

void check_width(u32 v, u32 bits, const char* field) {
  if (bits < 32 && v >= (u32{1} << bits))
    throw EncodeError(std::string("field ") + field + " = " + std::to_string(v) +
                      " exceeds " + std::to_string(bits) + " bits");
}

void check_range(u32 sr, u32 er, u32 m, const char* what) {
  if (sr > er)
    throw EncodeError(std::string(what) + ": start_row > end_row");
  if (er >= m && m > 0)
    throw EncodeError(std::string(what) + ": end_row " + std::to_string(er) +
                      " outside dimension " + std::to_string(m));
}

enum Kind : u32 { kHeader = 0, kIomLoad = 1, kIomStore = 2, kFmu = 3, kCu = 4 };

u32 pack16(u32 hi, u32 lo, const char* f1, const char* f2) {
  check_width(hi, 16, f1);
  check_width(lo, 16, f2);
  return (hi << 16) | lo;
}

}  // namespace

std::array<u32, kWordsPerInstr> encode(const Instruction& instr) {
  std::array<u32, kWordsPerInstr> w{};
  if (const auto* h = std::get_if<Header>(&instr)) {
    check_width(h->is_last, 1, "is_last");
    check_width(h->des_unit, 8, "des_unit");
    w[0] = (kHeader << 29) | (h->des_unit << 8) | h->is_last;
    w[1] = h->valid_length;
  } else if (const auto* ld = std::get_if<IomLoad>(&instr)) {
    check_width(ld->is_last, 1, "is_last");
    check_width(ld->des_fmu, 4, "des_fmu");
    check_range(ld->start_row, ld->end_row, ld->m, "IomLoad rows");
    check_range(ld->start_col, ld->end_col, ld->n, "IomLoad cols");
    w[0] = (kIomLoad << 29) | (ld->des_fmu << 1) | ld->is_last;
    w[1] = ld->ddr_addr;
    w[2] = pack16(ld->m, ld->n, "m", "n");
    w[3] = pack16(ld->start_row, ld->end_row, "start_row", "end_row");
    w[4] = pack16(ld->start_col, ld->end_col, "start_col", "end_col");
  } else if (const auto* st = std::get_if<IomStore>(&instr)) {
    check_width(st->is_last, 1, "is_last");
    check_width(st->src_fmu, 4, "src_fmu");
    check_range(st->start_row, st->end_row, st->m, "IomStore rows");
    check_range(st->start_col, st->end_col, st->n, "IomStore cols");
    w[0] = (kIomStore << 29) | (st->src_fmu << 1) | st->is_last;
    w[1] = st->ddr_addr;
    w[2] = pack16(st->m, st->n, "m", "n");
    w[3] = pack16(st->start_row, st->end_row, "start_row", "end_row");
    w[4] = pack16(st->start_col, st->end_col, "start_col", "end_col");
  } else if (const auto* f = std::get_if<Fmu>(&instr)) {
    check_width(f->is_last, 1, "is_last");
    check_width(f->swap, 1, "swap");
    check_width(f->src_cu, 4, "src_cu");
    check_width(f->des_cu, 4, "des_cu");
    check_width(static_cast<u32>(f->ping_op), 8, "ping_op");
    check_width(static_cast<u32>(f->pong_op), 8, "pong_op");
    if (f->ping_op != Op::idle || f->pong_op != Op::idle) {
      if (f->count == 0) throw EncodeError("Fmu count must be positive");
      check_range(f->start_row, f->end_row, f->view_rows, "Fmu rows");
      check_range(f->start_col, f->end_col, f->view_cols, "Fmu cols");
    }
    w[0] = (kFmu << 29) | (f->des_cu << 24) |
           (static_cast<u32>(f->pong_op) << 16) |
           (static_cast<u32>(f->ping_op) << 8) | (f->swap << 5) |
           (f->src_cu << 1) | f->is_last;
    w[1] = f->count;
    w[2] = pack16(f->view_rows, f->view_cols, "view_rows", "view_cols");
    w[3] = pack16(f->start_row, f->end_row, "start_row", "end_row");
    w[4] = pack16(f->start_col, f->end_col, "start_col", "end_col");
  } else if (const auto* c = std::get_if<Cu>(&instr)) {
    check_width(c->is_last, 1, "is_last");
    check_width(c->src_fmu, 4, "src_fmu");
    check_width(c->des_fmu, 4, "des_fmu");
    if ((c->ping_op != Op::idle || c->pong_op != Op::idle) && c->count == 0)
      throw EncodeError("Cu count must be positive");
    w[0] = (kCu << 29) | (c->des_fmu << 24) |
           (static_cast<u32>(c->pong_op) << 16) |
           (static_cast<u32>(c->ping_op) << 8) | (c->src_fmu << 1) | c->is_last;
    w[1] = c->count;
  } else {
    throw EncodeError("unknown instruction variant");
  }
  return w;
}

Instruction decode(const std::array<u32, kWordsPerInstr>& w) {
  u32 kind = w[0] >> 29;
  switch (kind) {
    case kHeader: {
      Header h;
      h.is_last = w[0] & 1;
      h.des_unit = (w[0] >> 8) & 0xff;
      h.valid_length = w[1];
      return h;
    }
    case kIomLoad: {
      IomLoad l;
      l.is_last = w[0] & 1;
      l.des_fmu = (w[0] >> 1) & 0xf;
      l.ddr_addr = w[1];
      l.m = w[2] >> 16;
      l.n = w[2] & 0xffff;
      l.start_row = w[3] >> 16;
      l.end_row = w[3] & 0xffff;
      l.start_col = w[4] >> 16;
      l.end_col = w[4] & 0xffff;
      return l;
    }
    case kIomStore: {
      IomStore s;
      s.is_last = w[0] & 1;
      s.src_fmu = (w[0] >> 1) & 0xf;
      s.ddr_addr = w[1];
      s.m = w[2] >> 16;
      s.n = w[2] & 0xffff;
      s.start_row = w[3] >> 16;
      s.end_row = w[3] & 0xffff;
      s.start_col = w[4] >> 16;
      s.end_col = w[4] & 0xffff;
      return s;
    }
    case kFmu: {
      Fmu f;
      f.is_last = w[0] & 1;
      f.src_cu = (w[0] >> 1) & 0xf;
      f.swap = (w[0] >> 5) & 1;
      f.ping_op = static_cast<Op>((w[0] >> 8) & 0xff);
      f.pong_op = static_cast<Op>((w[0] >> 16) & 0xff);
      f.des_cu = (w[0] >> 24) & 0xf;
      f.count = w[1];
      f.view_rows = w[2] >> 16;
      f.view_cols = w[2] & 0xffff;
      f.start_row = w[3] >> 16;
      f.end_row = w[3] & 0xffff;
      f.start_col = w[4] >> 16;
      f.end_col = w[4] & 0xffff;
      return f;
    }
    case kCu: {
      Cu c;
      c.is_last = w[0] & 1;
      c.src_fmu = (w[0] >> 1) & 0xf;
      c.ping_op = static_cast<Op>((w[0] >> 8) & 0xff);
      c.pong_op = static_cast<Op>((w[0] >> 16) & 0xff);
      c.des_fmu = (w[0] >> 24) & 0xf;
      c.count = w[1];
      return c;
    }
    default:
      throw ParseError("unknown instruction kind " + std::to_string(kind));
  }
}

std::string disassemble_one(const Instruction& instr) {
  std::ostringstream os;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Header>) {
          os << "hdr   des=" << v.des_unit << " len=" << v.valid_length;
        } else if constexpr (std::is_same_v<T, IomLoad>) {
          os << "load  fmu=" << v.des_fmu << " @0x" << std::hex << v.ddr_addr
             << std::dec << " mat=" << v.m << "x" << v.n << " r[" << v.start_row
             << ":" << v.end_row << "] c[" << v.start_col << ":" << v.end_col
             << "]";
        } else if constexpr (std::is_same_v<T, IomStore>) {
          os << "store fmu=" << v.src_fmu << " @0x" << std::hex << v.ddr_addr
             << std::dec << " mat=" << v.m << "x" << v.n << " r[" << v.start_row
             << ":" << v.end_row << "] c[" << v.start_col << ":" << v.end_col
             << "]";
        } else if constexpr (std::is_same_v<T, Fmu>) {
          os << "fmu   ping=" << op_name(v.ping_op) << " pong=" << op_name(v.pong_op)
             << " src_cu=" << v.src_cu << " des_cu=" << v.des_cu
             << " count=" << v.count << " view=" << v.view_rows << "x"
             << v.view_cols << " r[" << v.start_row << ":" << v.end_row << "] c["
             << v.start_col << ":" << v.end_col << "]";
          if (v.swap) os << " swap";
        } else if constexpr (std::is_same_v<T, Cu>) {
          os << "cu    ping=" << op_name(v.ping_op) << " pong=" << op_name(v.pong_op)
             << " src_fmu=" << v.src_fmu << " des_fmu=" << v.des_fmu
             << " count=0x" << std::hex << v.count << std::dec;
        }
        if (v.is_last) os << " last";
      },
      instr);
  return os.str();
}

// ---------------------------------------------------------------------------
// Program generation
// ---------------------------------------------------------------------------

namespace {

struct LayerEmitter {
  const LayerMeta& L;
  const HardwareConfig& hw;
  InstructionProgram& prog;
  perf::ModePlan plan;
  std::vector<int> lhs_f, rhs_f, out_f;  // global FMU indices per role
  i64 es_in, es_out;
  i64 tm, tk, tn;
  int round_base = 0;  // global round counter start (always 0 per layer)

  LayerEmitter(const LayerMeta& meta, const HardwareConfig& h,
               InstructionProgram& p)
      : L(meta), hw(h), prog(p) {
    LayerNode node{L.layer_id, L.m, L.k, L.n, L.dtype, ""};
    plan = perf::plan_mode(node, L.geom, hw);
    if (plan.n_kslab != 1)
      throw GenerationError("layer " + std::to_string(L.layer_id) +
                            ": instruction generation requires full-k residency");
    const auto& g = L.geom;
    if (static_cast<int>(L.fmus.size()) != g.fmu_used() ||
        static_cast<int>(L.cus.size()) != g.cu)
      throw GenerationError("layer " + std::to_string(L.layer_id) +
                            ": unit assignment does not match the mode");
    for (int i = 0; i < g.fmu_lhs; ++i) lhs_f.push_back(L.fmus[static_cast<std::size_t>(i)]);
    for (int i = 0; i < g.fmu_rhs; ++i)
      rhs_f.push_back(L.fmus[static_cast<std::size_t>(g.fmu_lhs + i)]);
    for (int i = 0; i < g.fmu_out; ++i)
      out_f.push_back(L.fmus[static_cast<std::size_t>(g.fmu_lhs + g.fmu_rhs + i)]);
    es_in = bytes_of(L.dtype);
    es_out = bytes_of(accum_dtype(L.dtype));
    tm = g.tile.elem_m();
    tk = g.tile.elem_k();
    tn = g.tile.elem_n();
    if (g.cu > 1 && hw.n_cu > static_cast<int>(kMulticastUnit))
      throw GenerationError("multicast id collides with a CU index");
  }

  // --- per-slab strip geometry (mirrors the latency model) ---
  i64 cu_rows(const perf::SlabInfo& s, int g) const {
    return std::max<i64>(0, std::min(s.rows_per_cu,
                                     s.rows - static_cast<i64>(g) * s.rows_per_cu));
  }
  i64 aie_cols(const perf::SlabInfo& s, int a) const {
    return std::max<i64>(0, std::min(s.cols_per_aie,
                                     s.cols - static_cast<i64>(a) * s.cols_per_aie));
  }
  i64 strip_rows(const perf::SlabInfo& s, int g, i64 im2) const {
    return std::max<i64>(0, std::min(tm, cu_rows(s, g) - im2 * tm));
  }
  i64 strip_cols(const perf::SlabInfo& s, int a, i64 in2) const {
    return std::max<i64>(0, std::min(tn, aie_cols(s, a) - in2 * tn));
  }
  i64 k_ext(const perf::SlabInfo& s, i64 ik2) const {
    return std::max<i64>(0, std::min(tk, s.ks - ik2 * tk));
  }

  struct Chunk {
    i64 first_strip = 0, n_strips = 0;
    i64 row0 = 0, rows = 0;  // contiguous extent within the slab (rows or cols)
  };
  Chunk lhs_chunk(const perf::SlabInfo& s, int part, int parts) const {
    Chunk c;
    i64 total = static_cast<i64>(L.geom.cu) * s.nm;
    c.first_strip = share_start(total, parts, part);
    c.n_strips = share_of(total, parts, part);
    c.row0 = strip_row_off(s, c.first_strip);
    for (i64 t = c.first_strip; t < c.first_strip + c.n_strips; ++t)
      c.rows += strip_rows(s, static_cast<int>(t / s.nm), t % s.nm);
    c.row0 = std::min(c.row0, s.rows);
    return c;
  }
  Chunk rhs_chunk(const perf::SlabInfo& s, int part, int parts) const {
    Chunk c;
    i64 total = static_cast<i64>(hw.aie_per_cu) * s.nn;
    c.first_strip = share_start(total, parts, part);
    c.n_strips = share_of(total, parts, part);
    c.row0 = strip_col_off(s, c.first_strip);
    for (i64 t = c.first_strip; t < c.first_strip + c.n_strips; ++t)
      c.rows += strip_cols(s, static_cast<int>(t / s.nn), t % s.nn);
    c.row0 = std::min(c.row0, s.cols);
    return c;
  }
  i64 strip_row_off(const perf::SlabInfo& s, i64 strip) const {
    return (strip / s.nm) * s.rows_per_cu + (strip % s.nm) * tm;
  }
  i64 strip_col_off(const perf::SlabInfo& s, i64 strip) const {
    return (strip / s.nn) * s.cols_per_aie + (strip % s.nn) * tn;
  }
  int lhs_owner(const perf::SlabInfo& s, i64 strip) const {
    i64 total = static_cast<i64>(L.geom.cu) * s.nm;
    for (int f = 0; f < L.geom.fmu_lhs; ++f)
      if (strip < share_start(total, L.geom.fmu_lhs, f) +
                      share_of(total, L.geom.fmu_lhs, f))
        return f;
    return L.geom.fmu_lhs - 1;
  }
  int rhs_owner(const perf::SlabInfo& s, i64 strip) const {
    i64 total = static_cast<i64>(hw.aie_per_cu) * s.nn;
    for (int f = 0; f < L.geom.fmu_rhs; ++f)
      if (strip < share_start(total, L.geom.fmu_rhs, f) +
                      share_of(total, L.geom.fmu_rhs, f))
        return f;
    return L.geom.fmu_rhs - 1;
  }
  int out_owner(const perf::SlabInfo& s, i64 strip) const {
    i64 total = static_cast<i64>(L.geom.cu) * s.nm;
    for (int f = 0; f < L.geom.fmu_out; ++f)
      if (strip < share_start(total, L.geom.fmu_out, f) +
                      share_of(total, L.geom.fmu_out, f))
        return f;
    return L.geom.fmu_out - 1;
  }
  Chunk out_chunk(const perf::SlabInfo& s, int part) const {
    Chunk c;
    i64 total = static_cast<i64>(L.geom.cu) * s.nm;
    c.first_strip = share_start(total, L.geom.fmu_out, part);
    c.n_strips = share_of(total, L.geom.fmu_out, part);
    c.row0 = std::min(strip_row_off(s, c.first_strip), s.rows);
    for (i64 t = c.first_strip; t < c.first_strip + c.n_strips; ++t)
      c.rows += strip_rows(s, static_cast<int>(t / s.nm), t % s.nm);
    return c;
  }

  const perf::SlabInfo& slab(int si) const {
    return plan.slabs[static_cast<std::size_t>(si)];
  }
  int n_slabs() const { return static_cast<int>(plan.slabs.size()); }
  bool rhs_loaded(int si) const {
    return plan.n_nslab > 1 || slab(si).im == 0;
  }

  int global_round(int si, i64 im2, i64 in2, i64 ik2) const {
    int r = 0;
    for (int q = 0; q < si; ++q)
      r += static_cast<int>(slab(q).nm * slab(q).nn * slab(q).nk);
    const auto& s = slab(si);
    return r + static_cast<int>(im2 * s.nn * s.nk + in2 * s.nk + ik2);
  }

  // --- emission ---

  void emit_loader() {
    for (int si = 0; si < n_slabs(); ++si) {
      const auto& s = slab(si);
      if (s.in == 0) {
        for (int f = 0; f < L.geom.fmu_lhs; ++f) {
          Chunk c = lhs_chunk(s, f, L.geom.fmu_lhs);
          if (c.rows <= 0) continue;
          IomLoad ld;
          ld.ddr_addr = L.lhs_addr;
          ld.des_fmu = static_cast<u32>(lhs_f[static_cast<std::size_t>(f)]);
          ld.m = static_cast<u32>(L.m);
          ld.n = static_cast<u32>(L.k);
          ld.start_row = static_cast<u32>(s.row0 + c.row0);
          ld.end_row = static_cast<u32>(s.row0 + c.row0 + c.rows - 1);
          ld.start_col = 0;
          ld.end_col = static_cast<u32>(L.k - 1);
          InstrNote n;
          n.layer_id = L.layer_id;
          n.matrix = 0;
          n.phase = s.im;  // band index doubles as the FMU phase
          n.mat_row0 = s.row0 + c.row0;
          n.mat_col0 = 0;
          n.rows = c.rows;
          n.cols = L.k;
          prog.loader.push(ld, n);
        }
      }
      if (rhs_loaded(si)) {
        for (int f = 0; f < L.geom.fmu_rhs; ++f) {
          Chunk c = rhs_chunk(s, f, L.geom.fmu_rhs);
          if (c.rows <= 0) continue;
          IomLoad ld;
          ld.ddr_addr = L.rhs_addr;
          ld.des_fmu = static_cast<u32>(rhs_f[static_cast<std::size_t>(f)]);
          ld.m = static_cast<u32>(L.k);
          ld.n = static_cast<u32>(L.n);
          ld.start_row = 0;
          ld.end_row = static_cast<u32>(L.k - 1);
          ld.start_col = static_cast<u32>(s.col0 + c.row0);
          ld.end_col = static_cast<u32>(s.col0 + c.row0 + c.rows - 1);
          InstrNote n;
          n.layer_id = L.layer_id;
          n.matrix = 1;
          n.phase = plan.n_nslab > 1 ? si : 0;
          n.mat_row0 = 0;
          n.mat_col0 = s.col0 + c.row0;
          n.rows = L.k;
          n.cols = c.rows;
          prog.loader.push(ld, n);
        }
      }
    }
  }

  void emit_storer() {
    for (int si = 0; si < n_slabs(); ++si) {
      const auto& s = slab(si);
      for (int f = 0; f < L.geom.fmu_out; ++f) {
        Chunk c = out_chunk(s, f);
        if (c.rows <= 0 || s.cols <= 0) continue;
        IomStore st;
        st.ddr_addr = L.out_addr;
        st.src_fmu = static_cast<u32>(out_f[static_cast<std::size_t>(f)]);
        st.m = static_cast<u32>(L.m);
        st.n = static_cast<u32>(L.n);
        st.start_row = static_cast<u32>(s.row0 + c.row0);
        st.end_row = static_cast<u32>(s.row0 + c.row0 + c.rows - 1);
        st.start_col = static_cast<u32>(s.col0);
        st.end_col = static_cast<u32>(s.col0 + s.cols - 1);
        InstrNote n;
        n.layer_id = L.layer_id;
        n.matrix = 2;
        n.phase = si + 1;  // stored while the next slab's recvs run
        n.mat_row0 = s.row0 + c.row0;
        n.mat_col0 = s.col0;
        n.rows = c.rows;
        n.cols = s.cols;
        prog.storer.push(st, n);
      }
    }
  }

  void emit_lhs_fmu(int f) {
    auto& stream = prog.fmu[static_cast<std::size_t>(lhs_f[static_cast<std::size_t>(f)])];
    // bootstrap: fill band 0
    {
      const auto& s0 = slab(0);
      Chunk c0 = lhs_chunk(s0, f, L.geom.fmu_lhs);
      Fmu boot;
      boot.pong_op = Op::load_lhs;
      boot.count = static_cast<u32>(std::max<i64>(1, c0.rows * L.k));
      boot.view_rows = static_cast<u32>(std::max<i64>(1, c0.rows));
      boot.view_cols = static_cast<u32>(L.k);
      boot.swap = 1;
      if (c0.rows <= 0) {
        boot.pong_op = Op::idle;
        boot.count = 0;
      }
      InstrNote n;
      n.layer_id = L.layer_id;
      n.phase = 0;
      stream.push(boot, n);
    }
    for (int im = 0; im < plan.n_mslab; ++im) {
      bool first_in_group = true;
      auto attach_load = [&](Fmu& instr) {
        if (im + 1 >= plan.n_mslab) return;
        int nsi = (im + 1) * plan.n_nslab;
        Chunk cn = lhs_chunk(slab(nsi), f, L.geom.fmu_lhs);
        if (cn.rows <= 0) return;
        instr.pong_op = Op::load_lhs;
        instr.count = static_cast<u32>(cn.rows * L.k);
      };
      std::vector<std::pair<Fmu, InstrNote>> group;
      for (int in = 0; in < plan.n_nslab; ++in) {
        int si = im * plan.n_nslab + in;
        const auto& s = slab(si);
        Chunk c = lhs_chunk(s, f, L.geom.fmu_lhs);
        for (i64 im2 = 0; im2 < s.nm; ++im2)
          for (i64 in2 = 0; in2 < s.nn; ++in2)
            for (i64 ik2 = 0; ik2 < s.nk; ++ik2) {
              i64 ke = k_ext(s, ik2);
              for (i64 t = c.first_strip; t < c.first_strip + c.n_strips; ++t) {
                if (t % s.nm != im2) continue;
                int g = static_cast<int>(t / s.nm);
                i64 rows = strip_rows(s, g, im2);
                if (rows <= 0 || ke <= 0) continue;
                Fmu snd;
                snd.ping_op = Op::send;
                snd.des_cu = static_cast<u32>(L.cus[static_cast<std::size_t>(g)]);
                snd.count = static_cast<u32>(rows * ke);
                snd.view_rows = static_cast<u32>(std::max<i64>(1, c.rows));
                snd.view_cols = static_cast<u32>(L.k);
                i64 r0 = strip_row_off(s, t) - c.row0;
                snd.start_row = static_cast<u32>(r0);
                snd.end_row = static_cast<u32>(r0 + rows - 1);
                snd.start_col = static_cast<u32>(ik2 * tk);
                snd.end_col = static_cast<u32>(ik2 * tk + ke - 1);
                InstrNote n;
                n.layer_id = L.layer_id;
                n.phase = im + 1;
                n.round = global_round(si, im2, in2, ik2);
                n.matrix = 0;
                n.cu_slot = g;
                n.rows = rows;
                n.cols = ke;
                n.view_row0 = r0;
                n.view_col0 = ik2 * tk;
                group.emplace_back(snd, n);
              }
            }
      }
      if (group.empty()) {
        Fmu idle;
        InstrNote n;
        n.layer_id = L.layer_id;
        n.phase = im + 1;
        attach_load(idle);
        idle.swap = 1;
        group.emplace_back(idle, n);
      } else {
        attach_load(group.front().first);
        group.back().first.swap = 1;
      }
      (void)first_in_group;
      for (auto& [i, n] : group) stream.push(i, n);
    }
  }

  void emit_rhs_fmu(int f) {
    auto& stream = prog.fmu[static_cast<std::size_t>(rhs_f[static_cast<std::size_t>(f)])];
    {
      const auto& s0 = slab(0);
      Chunk c0 = rhs_chunk(s0, f, L.geom.fmu_rhs);
      Fmu boot;
      boot.pong_op = Op::load_rhs;
      boot.count = static_cast<u32>(std::max<i64>(1, L.k * c0.rows));
      boot.view_rows = static_cast<u32>(L.k);
      boot.view_cols = static_cast<u32>(std::max<i64>(1, c0.rows));
      boot.swap = 1;
      if (c0.rows <= 0) {
        boot.pong_op = Op::idle;
        boot.count = 0;
      }
      InstrNote n;
      n.layer_id = L.layer_id;
      n.phase = 0;
      stream.push(boot, n);
    }
    const bool resident = plan.n_nslab == 1;
    // with a single n-slab the chunk stays resident; otherwise reload per slab
    int n_groups = resident ? 1 : n_slabs();
    for (int gi = 0; gi < n_groups; ++gi) {
      std::vector<std::pair<Fmu, InstrNote>> group;
      auto emit_slab_sends = [&](int si) {
        const auto& s = slab(si);
        Chunk c = rhs_chunk(s, f, L.geom.fmu_rhs);
        for (i64 im2 = 0; im2 < s.nm; ++im2)
          for (i64 in2 = 0; in2 < s.nn; ++in2)
            for (i64 ik2 = 0; ik2 < s.nk; ++ik2) {
              i64 ke = k_ext(s, ik2);
              for (i64 t = c.first_strip; t < c.first_strip + c.n_strips; ++t) {
                if (t % s.nn != in2) continue;
                int a = static_cast<int>(t / s.nn);
                i64 cols = strip_cols(s, a, in2);
                if (cols <= 0 || ke <= 0) continue;
                Fmu snd;
                snd.ping_op = Op::send;
                snd.des_cu = L.geom.cu > 1
                                 ? kMulticastUnit
                                 : static_cast<u32>(L.cus[0]);
                snd.count = static_cast<u32>(ke * cols);
                snd.view_rows = static_cast<u32>(L.k);
                snd.view_cols = static_cast<u32>(std::max<i64>(1, c.rows));
                i64 c0 = strip_col_off(s, t) - c.row0;
                snd.start_row = static_cast<u32>(ik2 * tk);
                snd.end_row = static_cast<u32>(ik2 * tk + ke - 1);
                snd.start_col = static_cast<u32>(c0);
                snd.end_col = static_cast<u32>(c0 + cols - 1);
                InstrNote n;
                n.layer_id = L.layer_id;
                n.phase = gi + 1;
                n.round = global_round(si, im2, in2, ik2);
                n.matrix = 1;
                n.aie_slot = a;
                n.rows = ke;
                n.cols = cols;
                n.view_row0 = ik2 * tk;
                n.view_col0 = c0;
                group.emplace_back(snd, n);
              }
            }
      };
      if (resident)
        for (int si = 0; si < n_slabs(); ++si) emit_slab_sends(si);
      else
        emit_slab_sends(gi);

      if (!resident && gi + 1 < n_groups) {
        Chunk cn = rhs_chunk(slab(gi + 1), f, L.geom.fmu_rhs);
        if (cn.rows > 0) {
          Fmu* first = group.empty() ? nullptr : &group.front().first;
          if (!first) {
            Fmu idle;
            InstrNote n;
            n.layer_id = L.layer_id;
            n.phase = gi + 1;
            group.emplace_back(idle, n);
            first = &group.front().first;
          }
          first->pong_op = Op::load_rhs;
          first->count = static_cast<u32>(L.k * cn.rows);
        }
      }
      if (group.empty()) {
        Fmu idle;
        InstrNote n;
        n.layer_id = L.layer_id;
        n.phase = gi + 1;
        group.emplace_back(idle, n);
      }
      if (!resident) group.back().first.swap = 1;
      for (auto& [i, n] : group) stream.push(i, n);
    }
  }

  void emit_out_fmu(int f) {
    auto& stream = prog.fmu[static_cast<std::size_t>(out_f[static_cast<std::size_t>(f)])];
    for (int si = 0; si <= n_slabs(); ++si) {
      std::vector<std::pair<Fmu, InstrNote>> group;
      if (si > 0) {
        const auto& sp = slab(si - 1);
        Chunk cp = out_chunk(sp, f);
        if (cp.rows > 0 && sp.cols > 0) {
          Fmu st;
          st.ping_op = Op::store_out;
          st.count = static_cast<u32>(cp.rows * sp.cols);
          st.view_rows = static_cast<u32>(cp.rows);
          st.view_cols = static_cast<u32>(sp.cols);
          st.start_row = 0;
          st.end_row = static_cast<u32>(cp.rows - 1);
          st.start_col = 0;
          st.end_col = static_cast<u32>(sp.cols - 1);
          InstrNote n;
          n.layer_id = L.layer_id;
          n.phase = si;
          n.matrix = 2;
          n.rows = cp.rows;
          n.cols = sp.cols;
          group.emplace_back(st, n);
        }
      }
      if (si < n_slabs()) {
        const auto& s = slab(si);
        Chunk c = out_chunk(s, f);
        for (i64 im2 = 0; im2 < s.nm; ++im2)
          for (i64 in2 = 0; in2 < s.nn; ++in2) {
            int r = global_round(si, im2, in2, s.nk - 1);
            for (i64 t = c.first_strip; t < c.first_strip + c.n_strips; ++t) {
              if (t % s.nm != im2) continue;
              int g = static_cast<int>(t / s.nm);
              i64 rows = strip_rows(s, g, im2);
              if (rows <= 0) continue;
              for (int a = 0; a < hw.aie_per_cu; ++a) {
                i64 cols = strip_cols(s, a, in2);
                if (cols <= 0) continue;
                Fmu rc;
                rc.pong_op = Op::recv;
                rc.src_cu = static_cast<u32>(L.cus[static_cast<std::size_t>(g)]);
                rc.count = static_cast<u32>(rows * cols);
                rc.view_rows = static_cast<u32>(c.rows);
                rc.view_cols = static_cast<u32>(s.cols);
                i64 r0 = strip_row_off(s, t) - c.row0;
                i64 c0 = static_cast<i64>(a) * s.cols_per_aie + in2 * tn;
                rc.start_row = static_cast<u32>(r0);
                rc.end_row = static_cast<u32>(r0 + rows - 1);
                rc.start_col = static_cast<u32>(c0);
                rc.end_col = static_cast<u32>(c0 + cols - 1);
                InstrNote n;
                n.layer_id = L.layer_id;
                n.phase = si;
                n.round = r;
                n.matrix = 2;
                n.cu_slot = g;
                n.aie_slot = a;
                n.rows = rows;
                n.cols = cols;
                n.view_row0 = r0;
                n.view_col0 = c0;
                group.emplace_back(rc, n);
              }
            }
          }
      }
      if (group.empty()) {
        Fmu idle;
        InstrNote n;
        n.layer_id = L.layer_id;
        n.phase = si;
        group.emplace_back(idle, n);
      }
      group.back().first.swap = 1;
      for (auto& [i, n] : group) stream.push(i, n);
    }
  }

  void emit_cu(int g) {
    auto& stream = prog.cu[static_cast<std::size_t>(L.cus[static_cast<std::size_t>(g)])];
    struct RoundInfo {
      int round;
      int si;
      i64 im2, in2, ik2;
      u32 ntiles;
      perf::TileShape bounds;
      bool k_last;
    };
    std::vector<RoundInfo> rounds;
    for (int si = 0; si < n_slabs(); ++si) {
      const auto& s = slab(si);
      for (i64 im2 = 0; im2 < s.nm; ++im2) {
        i64 rows = strip_rows(s, g, im2);
        if (rows <= 0) continue;
        for (i64 in2 = 0; in2 < s.nn; ++in2)
          for (i64 ik2 = 0; ik2 < s.nk; ++ik2) {
            i64 ke = k_ext(s, ik2);
            if (ke <= 0) continue;
            u32 ntiles = 1;  // the lhs tile
            i64 maxc = 0;
            for (int a = 0; a < hw.aie_per_cu; ++a) {
              i64 cols = strip_cols(s, a, in2);
              if (cols > 0) {
                ++ntiles;
                maxc = std::max(maxc, cols);
              }
            }
            if (maxc == 0) continue;
            RoundInfo ri;
            ri.round = global_round(si, im2, in2, ik2);
            ri.si = si;
            ri.im2 = im2;
            ri.in2 = in2;
            ri.ik2 = ik2;
            ri.ntiles = ntiles;
            ri.bounds = perf::TileShape::from_elems(rows, ke, maxc);
            ri.k_last = (ik2 == s.nk - 1);
            rounds.push_back(ri);
          }
      }
    }
    if (rounds.empty()) return;

    auto pack = [](u32 ntiles, const perf::TileShape& b) {
      return (ntiles << 24) | (static_cast<u32>(b.ai) << 16) |
             (static_cast<u32>(b.ak) << 8) | static_cast<u32>(b.aj);
    };
    {
      Cu boot;
      boot.pong_op = Op::recv;
      boot.src_fmu = kMulticastUnit;
      boot.count = pack(rounds[0].ntiles, rounds[0].bounds);
      InstrNote n;
      n.layer_id = L.layer_id;
      n.round = rounds[0].round;
      n.cu_slot = g;
      stream.push(boot, n);
    }
    for (std::size_t q = 0; q < rounds.size(); ++q) {
      const auto& ri = rounds[q];
      Cu comp;
      comp.ping_op = Op::compute;
      comp.pong_op = (q + 1 < rounds.size()) ? Op::recv : Op::idle;
      comp.src_fmu = kMulticastUnit;
      comp.count = pack(ri.ntiles, ri.bounds);
      InstrNote n;
      n.layer_id = L.layer_id;
      n.round = ri.round;
      n.cu_slot = g;
      stream.push(comp, n);

      if (ri.k_last) {
        const auto& s = slab(ri.si);
        i64 rows = strip_rows(s, g, ri.im2);
        i64 strip = static_cast<i64>(g) * s.nm + ri.im2;
        int owner = out_owner(s, strip);
        for (int a = 0; a < hw.aie_per_cu; ++a) {
          i64 cols = strip_cols(s, a, ri.in2);
          if (cols <= 0) continue;
          Cu snd;
          snd.ping_op = Op::send;
          snd.des_fmu = static_cast<u32>(out_f[static_cast<std::size_t>(owner)]);
          snd.count = static_cast<u32>(rows * cols);
          InstrNote en;
          en.layer_id = L.layer_id;
          en.round = ri.round;
          en.cu_slot = g;
          en.aie_slot = a;
          en.rows = rows;
          en.cols = cols;
          stream.push(snd, en);
        }
      }
    }
  }

  void emit_all() {
    emit_loader();
    emit_storer();
    for (int f = 0; f < L.geom.fmu_lhs; ++f) emit_lhs_fmu(f);
    for (int f = 0; f < L.geom.fmu_rhs; ++f) emit_rhs_fmu(f);
    for (int f = 0; f < L.geom.fmu_out; ++f) emit_out_fmu(f);
    for (int g = 0; g < L.geom.cu; ++g) emit_cu(g);
  }
};

InstructionProgram generate_from_meta(std::vector<LayerMeta> metas,
                                      const HardwareConfig& hw) {
  InstructionProgram prog;
  prog.n_fmu = hw.n_fmu;
  prog.n_cu = hw.n_cu;
  prog.fmu.resize(static_cast<std::size_t>(hw.n_fmu));
  prog.cu.resize(static_cast<std::size_t>(hw.n_cu));

  std::sort(metas.begin(), metas.end(), [](const LayerMeta& a, const LayerMeta& b) {
    return std::tie(a.sched_start, a.layer_id) < std::tie(b.sched_start, b.layer_id);
  });

  for (const auto& meta : metas) {
    std::size_t before_loader = prog.loader.instrs.size();
    std::size_t before_storer = prog.storer.instrs.size();
    std::vector<std::size_t> before_f, before_c;
    for (auto& s : prog.fmu) before_f.push_back(s.instrs.size());
    for (auto& s : prog.cu) before_c.push_back(s.instrs.size());

    LayerEmitter em(meta, hw, prog);
    em.emit_all();
    prog.layers.push_back(meta);

    auto header_for = [&](u32 unit, std::size_t count) {
      if (!count) return;
      Header h;
      h.des_unit = unit;
      h.valid_length = static_cast<u32>(count) * kWordsPerInstr;
      prog.headers.emplace_back(h);
    };
    header_for(global_unit_id(hw, 'l', 0), prog.loader.instrs.size() - before_loader);
    header_for(global_unit_id(hw, 's', 0), prog.storer.instrs.size() - before_storer);
    for (int i = 0; i < hw.n_fmu; ++i)
      header_for(global_unit_id(hw, 'f', i),
                 prog.fmu[static_cast<std::size_t>(i)].instrs.size() -
                     before_f[static_cast<std::size_t>(i)]);
    for (int i = 0; i < hw.n_cu; ++i)
      header_for(global_unit_id(hw, 'c', i),
                 prog.cu[static_cast<std::size_t>(i)].instrs.size() -
                     before_c[static_cast<std::size_t>(i)]);
  }

  auto mark_last = [](UnitStream& s) {
    if (s.instrs.empty()) return;
    std::visit([](auto& v) { v.is_last = 1; }, s.instrs.back());
  };
  mark_last(prog.loader);
  mark_last(prog.storer);
  for (auto& s : prog.fmu) mark_last(s);
  for (auto& s : prog.cu) mark_last(s);
  if (!prog.headers.empty())
    std::visit([](auto& v) { v.is_last = 1; }, prog.headers.back());

  u32 max_addr = 0;
  for (const auto& m : prog.layers) {
    u32 end = m.out_addr + static_cast<u32>(m.m * m.n * bytes_of(accum_dtype(m.dtype)));
    max_addr = std::max(max_addr, end);
  }
  prog.ddr_bytes = max_addr;
  return prog;
}

}  // namespace

InstructionProgram generate_program(const sched::Schedule& schedule,
                                    const WorkloadDag& dag,
                                    const stage1::CandidateTable& table,
                                    const HardwareConfig& hw) {
  auto rep = sched::validate_schedule(schedule, dag, table, hw);
  if (!rep.clean())
    throw GenerationError("schedule is not validator-clean: " + rep.summary());

  std::vector<LayerMeta> metas;
  u32 addr = 0;
  auto alloc = [&](i64 bytes) {
    addr = static_cast<u32>(round_up(addr, 64));
    u32 at = addr;
    if (static_cast<u64>(addr) + static_cast<u64>(bytes) > 0xffffffffULL)
      throw GenerationError("DDR image exceeds the 32-bit address space");
    addr += static_cast<u32>(bytes);
    return at;
  };
  // deterministic layout: layers in id order
  std::vector<const sched::LayerPlacement*> by_id;
  for (const auto& p : schedule.items) by_id.push_back(&p);
  std::sort(by_id.begin(), by_id.end(),
            [](auto* a, auto* b) { return a->layer_id < b->layer_id; });

  for (const auto* p : by_id) {
    const LayerNode& l = dag.layer(p->layer_id);
    const auto& mode = table.mode(p->layer_id, p->mode_id);
    LayerMeta m;
    m.layer_id = l.id;
    m.m = l.m;
    m.k = l.k;
    m.n = l.n;
    m.dtype = l.dtype;
    m.mode_id = p->mode_id;
    m.geom = mode.geom;
    m.lhs_addr = alloc(l.m * l.k * bytes_of(l.dtype));
    m.rhs_addr = alloc(l.k * l.n * bytes_of(l.dtype));
    m.out_addr = alloc(l.m * l.n * bytes_of(accum_dtype(l.dtype)));
    m.preds = dag.predecessors(l.id);
    m.fmus = p->fmus;
    m.cus = p->cus;
    m.sched_start = p->start;
    m.sched_end = p->end;
    metas.push_back(std::move(m));
  }
  return generate_from_meta(std::move(metas), hw);
}

// ---------------------------------------------------------------------------
// Binary serialization
// ---------------------------------------------------------------------------

i64 InstructionProgram::total_instr_words() const {
  i64 n = static_cast<i64>(loader.instrs.size()) + static_cast<i64>(storer.instrs.size());
  for (const auto& s : fmu) n += static_cast<i64>(s.instrs.size());
  for (const auto& s : cu) n += static_cast<i64>(s.instrs.size());
  return n * kWordsPerInstr;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, u32 v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

u32 get_u32(const std::vector<std::uint8_t>& in, std::size_t& at) {
  if (at + 4 > in.size()) throw ParseError("program file truncated");
  u32 v = static_cast<u32>(in[at]) | (static_cast<u32>(in[at + 1]) << 8) |
          (static_cast<u32>(in[at + 2]) << 16) |
          (static_cast<u32>(in[at + 3]) << 24);
  at += 4;
  return v;
}

void put_stream(std::vector<std::uint8_t>& out, const std::vector<Instruction>& v) {
  for (const auto& i : v)
    for (u32 w : encode(i)) put_u32(out, w);
}

ordered_json geom_json(const perf::ExecMode& g) {
  return {{"fmu_lhs", g.fmu_lhs},   {"fmu_rhs", g.fmu_rhs},
          {"fmu_out", g.fmu_out},   {"cu", g.cu},
          {"tile", {g.tile.ai, g.tile.ak, g.tile.aj}},
          {"slab", {g.slab_rows, g.slab_cols, g.slab_k}},
          {"static_kernel", g.static_kernel}};
}

perf::ExecMode geom_from_json(const ordered_json& j) {
  perf::ExecMode g;
  g.fmu_lhs = j.at("fmu_lhs").get<int>();
  g.fmu_rhs = j.at("fmu_rhs").get<int>();
  g.fmu_out = j.at("fmu_out").get<int>();
  g.cu = j.at("cu").get<int>();
  auto t = j.at("tile");
  g.tile = {t.at(0).get<i64>(), t.at(1).get<i64>(), t.at(2).get<i64>()};
  auto s = j.at("slab");
  g.slab_rows = s.at(0).get<i64>();
  g.slab_cols = s.at(1).get<i64>();
  g.slab_k = s.at(2).get<i64>();
  g.static_kernel = j.at("static_kernel").get<bool>();
  return g;
}

}  // namespace

std::vector<std::uint8_t> InstructionProgram::serialize() const {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'F', 'I', 'L', 'C'});
  out.push_back(1);  // version
  out.push_back(static_cast<std::uint8_t>(n_fmu));
  out.push_back(static_cast<std::uint8_t>(n_cu));
  out.push_back(0);

  std::vector<std::pair<u32, const std::vector<Instruction>*>> sections;
  sections.emplace_back(0xffffu, &headers);
  sections.emplace_back(0u, &loader.instrs);
  sections.emplace_back(1u, &storer.instrs);
  for (int i = 0; i < n_fmu; ++i)
    sections.emplace_back(2u + static_cast<u32>(i),
                          &fmu[static_cast<std::size_t>(i)].instrs);
  for (int i = 0; i < n_cu; ++i)
    sections.emplace_back(2u + static_cast<u32>(n_fmu) + static_cast<u32>(i),
                          &cu[static_cast<std::size_t>(i)].instrs);

  put_u32(out, static_cast<u32>(sections.size()));
  for (auto& [id, v] : sections) {
    put_u32(out, id);
    put_u32(out, static_cast<u32>(v->size()) * kWordsPerInstr);
  }
  for (auto& [id, v] : sections) put_stream(out, *v);

  ordered_json meta;
  meta["ddr_bytes"] = ddr_bytes;
  meta["layers"] = ordered_json::array();
  for (const auto& l : layers) {
    meta["layers"].push_back({{"layer_id", l.layer_id},
                              {"m", l.m},
                              {"k", l.k},
                              {"n", l.n},
                              {"dtype", dtype_name(l.dtype)},
                              {"mode_id", l.mode_id},
                              {"geom", geom_json(l.geom)},
                              {"lhs_addr", l.lhs_addr},
                              {"rhs_addr", l.rhs_addr},
                              {"out_addr", l.out_addr},
                              {"preds", l.preds},
                              {"fmus", l.fmus},
                              {"cus", l.cus},
                              {"sched_start", l.sched_start},
                              {"sched_end", l.sched_end}});
  }
  std::string mtxt = meta.dump();
  put_u32(out, static_cast<u32>(mtxt.size()));
  out.insert(out.end(), mtxt.begin(), mtxt.end());
  return out;
}

InstructionProgram InstructionProgram::deserialize(
    const std::vector<std::uint8_t>& bytes, const HardwareConfig& hw) {
  std::size_t at = 0;
  if (bytes.size() < 8 || bytes[0] != 'F' || bytes[1] != 'I' || bytes[2] != 'L' ||
      bytes[3] != 'C')
    throw ParseError("not a FILC program file");
  if (bytes[4] != 1) throw ParseError("unsupported program version");
  int n_fmu = bytes[5], n_cu = bytes[6];
  if (n_fmu != hw.n_fmu || n_cu != hw.n_cu)
    throw ParseError("program was generated for a different unit count");
  at = 8;
  u32 n_sections = get_u32(bytes, at);
  std::vector<std::pair<u32, u32>> sec;
  for (u32 i = 0; i < n_sections; ++i) {
    u32 id = get_u32(bytes, at);
    u32 words = get_u32(bytes, at);
    sec.emplace_back(id, words);
  }
  std::vector<std::vector<Instruction>> streams;
  for (auto& [id, words] : sec) {
    if (words % kWordsPerInstr)
      throw ParseError("section size is not a whole number of instructions");
    std::vector<Instruction> v;
    for (u32 i = 0; i < words / kWordsPerInstr; ++i) {
      std::array<u32, kWordsPerInstr> w;
      for (auto& x : w) x = get_u32(bytes, at);
      v.push_back(decode(w));
    }
    streams.push_back(std::move(v));
  }
  u32 mlen = get_u32(bytes, at);
  if (at + mlen > bytes.size()) throw ParseError("program file truncated");
  std::string mtxt(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                   bytes.begin() + static_cast<std::ptrdiff_t>(at + mlen));
  ordered_json meta = ordered_json::parse(mtxt);

  std::vector<LayerMeta> metas;
  for (const auto& jl : meta.at("layers")) {
    LayerMeta l;
    l.layer_id = jl.at("layer_id").get<int>();
    l.m = jl.at("m").get<i64>();
    l.k = jl.at("k").get<i64>();
    l.n = jl.at("n").get<i64>();
    l.dtype = dtype_from_name(jl.at("dtype").get<std::string>());
    l.mode_id = jl.at("mode_id").get<int>();
    l.geom = geom_from_json(jl.at("geom"));
    l.lhs_addr = jl.at("lhs_addr").get<u32>();
    l.rhs_addr = jl.at("rhs_addr").get<u32>();
    l.out_addr = jl.at("out_addr").get<u32>();
    l.preds = jl.at("preds").get<std::vector<int>>();
    l.fmus = jl.at("fmus").get<std::vector<int>>();
    l.cus = jl.at("cus").get<std::vector<int>>();
    l.sched_start = jl.at("sched_start").get<TimeNs>();
    l.sched_end = jl.at("sched_end").get<TimeNs>();
    metas.push_back(std::move(l));
  }

  // regenerate from the manifest; the wire streams must match exactly
  InstructionProgram prog = generate_from_meta(metas, hw);
  auto same = [](const std::vector<Instruction>& a,
                 const std::vector<Instruction>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (encode(a[i]) != encode(b[i])) return false;
    return true;
  };
  bool ok = streams.size() == 3 + static_cast<std::size_t>(n_fmu + n_cu) &&
            same(streams[0], prog.headers) && same(streams[1], prog.loader.instrs) &&
            same(streams[2], prog.storer.instrs);
  for (int i = 0; ok && i < n_fmu; ++i)
    ok = same(streams[static_cast<std::size_t>(3 + i)],
              prog.fmu[static_cast<std::size_t>(i)].instrs);
  for (int i = 0; ok && i < n_cu; ++i)
    ok = same(streams[static_cast<std::size_t>(3 + n_fmu + i)],
              prog.cu[static_cast<std::size_t>(i)].instrs);
  if (!ok) throw ParseError("program streams do not match their manifest");
  return prog;
}

std::string InstructionProgram::disassemble() const {
  std::ostringstream os;
  os << "; program: " << layers.size() << " layer(s), " << total_instr_words()
     << " instruction words\n";
  auto dump = [&](const std::string& name, const std::vector<Instruction>& v) {
    if (v.empty()) return;
    os << name << ":\n";
    for (const auto& i : v) os << "  " << disassemble_one(i) << "\n";
  };
  dump("headers", headers);
  dump("iom.loader", loader.instrs);
  dump("iom.storer", storer.instrs);
  for (std::size_t i = 0; i < fmu.size(); ++i)
    dump("fmu." + std::to_string(i), fmu[i].instrs);
  for (std::size_t i = 0; i < cu.size(); ++i)
    dump("cu." + std::to_string(i), cu[i].instrs);
  return os.str();
}

}  // namespace filco::isa
