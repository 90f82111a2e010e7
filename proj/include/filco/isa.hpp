#pragma once

#include <variant>
#include <vector>

#include "filco/schedule.hpp"

namespace filco::isa {

// Op vocabulary shared by FMU and CU instructions.
enum class Op : u32 {
  idle = 0,
  load_lhs = 1,
  load_rhs = 2,
  store_out = 3,
  send = 4,
  recv = 5,
  compute = 6,
};

const char* op_name(Op op);

/// Reserved destination id: multicast to every CU of the issuing layer
/// (routes are configured per layer in the program manifest).
inline constexpr u32 kMulticastUnit = 15;

// ---------------------------------------------------------------------------
// Table-style instruction variants. Each encodes to five 32-bit words:
//   word0  bit0 is_last | bits1-4 unit_a | bit5 swap | bits8-15 ping_op
//          | bits16-23 pong_op | bits24-27 unit_b | bits29-31 kind
//   word1  count / ddr_addr / valid_length
//   word2  m | n   (or view_rows | view_cols), 16 bits each
//   word3  start_row | end_row
//   word4  start_col | end_col
// ---------------------------------------------------------------------------

struct Header {
  u32 is_last = 0;
  u32 des_unit = 0;      // global unit id, 8 bits
  u32 valid_length = 0;  // words dispatched to that unit
  bool operator==(const Header&) const = default;
};

struct IomLoad {
  u32 is_last = 0;
  u32 ddr_addr = 0;  // byte address of the source matrix
  u32 des_fmu = 0;
  u32 m = 0, n = 0;  // DDR matrix dims (elements)
  u32 start_row = 0, end_row = 0;  // inclusive
  u32 start_col = 0, end_col = 0;
  bool operator==(const IomLoad&) const = default;
};

struct IomStore {
  u32 is_last = 0;
  u32 ddr_addr = 0;
  u32 src_fmu = 0;
  u32 m = 0, n = 0;
  u32 start_row = 0, end_row = 0;
  u32 start_col = 0, end_col = 0;
  bool operator==(const IomStore&) const = default;
};

struct Fmu {
  u32 is_last = 0;
  u32 swap = 0;  // last instruction of a ping/pong phase group
  Op ping_op = Op::idle;  // active-half op: send / store_out
  Op pong_op = Op::idle;  // filling-half op: load_* / recv
  u32 src_cu = 0;
  u32 des_cu = 0;
  u32 count = 0;  // elements moved by the fill op (or by the send when alone)
  u32 view_rows = 0, view_cols = 0;  // 2-D view imposed on the 1-D half
  u32 start_row = 0, end_row = 0;
  u32 start_col = 0, end_col = 0;
  bool operator==(const Fmu&) const = default;
};

struct Cu {
  u32 is_last = 0;
  Op ping_op = Op::idle;  // compute / send (result emission)
  Op pong_op = Op::idle;  // recv of the next round's operands
  u32 src_fmu = 0;
  u32 des_fmu = 0;
  // compute: expected tile count and flexible loop bounds,
  //   (ntiles<<24) | (bound_i<<16) | (bound_k<<8) | bound_j
  // send: element count of the emitted tile
  u32 count = 0;
  bool operator==(const Cu&) const = default;
};

using Instruction = std::variant<Header, IomLoad, IomStore, Fmu, Cu>;

inline constexpr int kWordsPerInstr = 5;

/// Fixed little-endian 5-word layout; throws EncodeError naming the field
/// when a value exceeds its width or violates a range invariant.
std::array<u32, kWordsPerInstr> encode(const Instruction& instr);
Instruction decode(const std::array<u32, kWordsPerInstr>& words);

std::string disassemble_one(const Instruction& instr);

// ---------------------------------------------------------------------------
// Program container
// ---------------------------------------------------------------------------

/// Simulator-level context for one instruction; rebuilt deterministically
/// from the manifest on load, never serialized.
struct InstrNote {
  int layer_id = -1;
  int phase = -1;     // FMU/CU phase group index within the layer
  int round = -1;     // global round index within the layer
  int matrix = -1;    // 0 lhs, 1 rhs, 2 out
  int cu_slot = -1;   // position within the layer's CU list
  int aie_slot = -1;
  i64 rows = 0, cols = 0;             // transferred rectangle
  i64 valid_rows = 0, valid_cols = 0; // workload-data portion of it
  i64 view_row0 = 0, view_col0 = 0;   // placement inside the FMU view
  i64 mat_row0 = 0, mat_col0 = 0;     // position inside the DDR matrix
};

struct LayerMeta {
  int layer_id = 0;
  i64 m = 0, k = 0, n = 0;
  Dtype dtype = Dtype::f32;
  int mode_id = 0;
  perf::ExecMode geom;
  u32 lhs_addr = 0, rhs_addr = 0, out_addr = 0;  // byte addresses
  std::vector<int> preds;
  std::vector<int> fmus, cus;  // assigned unit indices
  TimeNs sched_start = 0, sched_end = 0;
};

struct UnitStream {
  std::vector<Instruction> instrs;
  std::vector<InstrNote> notes;  // parallel to instrs

  void push(const Instruction& i, const InstrNote& n) {
    instrs.push_back(i);
    notes.push_back(n);
  }
};

struct InstructionProgram {
  int n_fmu = 0, n_cu = 0;
  std::vector<Instruction> headers;
  UnitStream loader, storer;
  std::vector<UnitStream> fmu, cu;
  std::vector<LayerMeta> layers;
  u32 ddr_bytes = 0;  // image extent

  i64 total_instr_words() const;  // headers excluded

  /// Binary format: "FILC", version, unit table, word streams, manifest.
  std::vector<std::uint8_t> serialize() const;
  static InstructionProgram deserialize(const std::vector<std::uint8_t>& bytes,
                                        const HardwareConfig& hw);

  std::string disassemble() const;
};

/// Emits per-unit instruction streams for a validator-clean schedule,
/// layer by layer in start order. Residency phases double-buffer DDR
/// traffic; rounds stream tiles to the CUs with RHS multicast.
InstructionProgram generate_program(const sched::Schedule& schedule,
                                    const WorkloadDag& dag,
                                    const stage1::CandidateTable& table,
                                    const HardwareConfig& hw);

/// Global unit numbering used by headers and the section table.
u32 global_unit_id(const HardwareConfig& hw, char kind, int index);

}  // namespace filco::isa
