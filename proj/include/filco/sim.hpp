#pragma once

#include <cstring>
#include <map>
#include <string>

#include "filco/isa.hpp"

namespace filco::sim {

struct Matrix {
  i64 rows = 0, cols = 0;
  Dtype dtype = Dtype::f32;
  std::vector<std::uint8_t> data;  // row-major, little-endian elements

  template <typename T>
  T at(i64 r, i64 c) const {
    T v;
    std::memcpy(&v, data.data() + static_cast<std::size_t>((r * cols + c) *
                                                           static_cast<i64>(sizeof(T))),
                sizeof(T));
    return v;
  }
  template <typename T>
  void set(i64 r, i64 c, T v) {
    std::memcpy(data.data() + static_cast<std::size_t>((r * cols + c) *
                                                       static_cast<i64>(sizeof(T))),
                &v, sizeof(T));
  }
};

Matrix make_matrix(i64 rows, i64 cols, Dtype dtype);

/// Plain triple-loop reference; double accumulation for fp32, wrapping
/// integer arithmetic otherwise. Output dtype follows accum_dtype.
Matrix reference_matmul(const Matrix& lhs, const Matrix& rhs);

struct DdrEntry {
  std::string name;
  u32 addr = 0;  // byte address
  i64 rows = 0, cols = 0;
  Dtype dtype = Dtype::f32;
  i64 valid_rows = 0, valid_cols = 0;  // workload data extent within the buffer
};

struct DdrImage {
  std::vector<std::uint8_t> bytes;
  std::vector<DdrEntry> entries;

  DdrEntry& add(const std::string& name, u32 addr, i64 rows, i64 cols,
                Dtype dtype);
  const DdrEntry* find_addr(u32 addr) const;
  const DdrEntry* find_name(const std::string& name) const;
  Matrix read_matrix(const DdrEntry& e) const;
  void write_matrix(const DdrEntry& e, const Matrix& m);

  std::string sidecar_json() const;
  static DdrImage from_files(const std::string& sidecar_text,
                             std::vector<std::uint8_t> raw);
};

/// Deterministic operand image for a program: lhs/rhs filled from the seed,
/// outputs zeroed.
DdrImage make_image(const isa::InstructionProgram& prog, u64 seed);

struct PaddingStats {
  i64 valid_elems = 0, transferred_elems = 0;
  i64 valid_ops = 0, executed_ops = 0;
};

struct TraceEvent {
  TimeNs t = 0;
  std::string unit;
  std::string event;
  std::string detail;
};

struct SimResult {
  std::map<int, Matrix> outputs;  // by layer id
  double makespan_s = 0;
  std::map<std::string, double> utilization;  // per unit busy fraction
  std::vector<TraceEvent> trace;
  PaddingStats padding;
};

/// Event-driven execution of the program over modeled IOM/FMU/CU units.
/// Functionally computes every layer and measures the makespan; throws
/// DeadlockError (with a per-unit cursor dump) when streams cannot drain and
/// SimFault on runtime view violations.
SimResult run(const isa::InstructionProgram& prog, const HardwareConfig& hw,
              DdrImage image);

/// Wire/compute padding measurement on a deterministic image.
PaddingStats measure_padding(const isa::InstructionProgram& prog,
                             const HardwareConfig& hw);

std::string trace_csv(const SimResult& r);

}  // namespace filco::sim
