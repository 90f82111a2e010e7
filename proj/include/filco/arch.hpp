#pragma once

#include <array>
#include <map>
#include <string>

#include "filco/common.hpp"

namespace filco {

/// Atomic MM granularity: every tile is a whole number of 2x8x8 blocks.
inline constexpr i64 kAtomM = 2;
inline constexpr i64 kAtomK = 8;
inline constexpr i64 kAtomN = 8;

/// Off-chip memory profile. burst_efficiency maps a transaction's
/// contiguous byte length to the attained fraction of peak bandwidth
/// (step function, monotone nondecreasing).
struct DdrProfile {
  double peak_bytes_per_sec = 0;
  std::map<i64, double> burst_efficiency;

  double effective_fraction(i64 burst_bytes) const;
  double effective_bandwidth(i64 burst_bytes) const;

  void validate() const;
};

/// Cycle-cost knobs for one AIE running the flexible MM kernel.
struct AieCycleParams {
  double macs_per_cycle = 8;  // peak MACs/cycle for the dtype
  i64 c_atom = 16;            // cycles per 2x8x8 atomic op
  i64 c_loop = 2;             // per-iteration loop overhead
  i64 c_setup = 16;           // fixed kernel-invocation overhead

  void validate() const;
};

struct HardwareConfig {
  int n_fmu = 8;        // F_max
  int n_cu = 8;         // C_max
  int aie_per_cu = 4;   // K

  i64 fmu_capacity_elems = 65536;          // per ping/pong half
  std::array<i64, 3> cu_buf_tile = {32, 32, 32};  // max per-AIE tile (m,k,n)

  double f_pl_hz = 150e6;
  double f_aie_hz = 1e9;
  i64 stream_bytes_per_cycle = 16;  // FMU<->CU link width

  DdrProfile ddr;
  AieCycleParams aie_cycle_model;

  void validate() const;

  double stream_bytes_per_sec() const {
    return static_cast<double>(stream_bytes_per_cycle) * f_pl_hz;
  }
};

/// VCK190-style defaults: 150 MHz PL, 1 GHz AIE, 32x32x32 max tile.
HardwareConfig default_vck190();

HardwareConfig load_config(const std::string& text);
std::string serialize(const HardwareConfig& hw);

}  // namespace filco
