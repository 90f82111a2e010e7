#pragma once

#include <vector>

#include "filco/arch.hpp"
#include "filco/workload.hpp"

namespace filco::perf {

/// Per-AIE tile expressed in atomic 2x8x8 blocks.
struct TileShape {
  i64 ai = 1, ak = 1, aj = 1;  // atom counts along m, k, n

  i64 elem_m() const { return ai * kAtomM; }
  i64 elem_k() const { return ak * kAtomK; }
  i64 elem_n() const { return aj * kAtomN; }
  i64 atoms() const { return ai * ak * aj; }

  static TileShape from_elems(i64 m, i64 k, i64 n) {
    return {ceil_div(m, kAtomM), ceil_div(k, kAtomK), ceil_div(n, kAtomN)};
  }
  bool operator==(const TileShape&) const = default;
};

/// Cycle count of the flexible kernel: setup plus the three-deep loop with
/// per-level overhead, atomic op innermost.
///   c_setup + ai*(c_loop + aj*(c_loop + ak*c_atom))
i64 aie_kernel_cycles_flexible(const TileShape& tile, const AieCycleParams& p);

/// Static programming always pays for the full max tile regardless of the
/// workload tile (padding to the compiled shape).
i64 aie_kernel_cycles_static(const TileShape& workload_tile,
                             const AieCycleParams& p,
                             const TileShape& max_tile);

enum class KernelMode { flexible, fixed };

/// Achieved fraction of the kernel's own peak for an (m x k x n) workload
/// tile. Ideal cycles use the unpadded element counts.
double aie_efficiency(KernelMode mode, i64 m, i64 k, i64 n,
                      const AieCycleParams& p, const TileShape& max_tile);

// ---------------------------------------------------------------------------
// Layer execution geometry.
//
// A layer runs as a grid of residency slabs. Within a slab the LHS row band,
// RHS column band and OUT band are resident in their role FMUs; the c CUs
// split the slab rows, the K AIEs of each CU split the slab columns, and
// each AIE walks its block in (tile) steps with k innermost, accumulating
// the output tile locally and emitting it on the last k step. Ping/pong
// double buffering overlaps the next slab's DDR fill with the current
// slab's compute, and the next round's FMU->CU streams with the current
// round's kernels.
// ---------------------------------------------------------------------------

struct ExecMode {
  int fmu_lhs = 1, fmu_rhs = 1, fmu_out = 1;
  int cu = 1;
  TileShape tile;
  i64 slab_rows = 0;  // elements, atom-aligned
  i64 slab_cols = 0;
  i64 slab_k = 0;     // k-extent resident per slab; full K for native modes
  bool static_kernel = false;  // bill every tile at the max-tile cost
  // Transfer footprints quantized to fixed memory-unit shapes (RSN-style).
  // 0 = exact-fit views.
  i64 view_quant_rows = 0, view_quant_cols = 0;

  int fmu_used() const { return fmu_lhs + fmu_rhs + fmu_out; }
};

enum class FmuRole { lhs, rhs, out };

/// Concrete per-slab plan shared by the latency model, the instruction
/// generator, and stage-1 capacity checks.
struct SlabInfo {
  int im = 0, in = 0, ik = 0;   // slab grid position
  i64 row0 = 0, rows = 0;       // real element extents of this slab
  i64 col0 = 0, cols = 0;
  i64 k0 = 0, ks = 0;
  i64 rows_per_cu = 0;          // atom-aligned row share of each CU
  i64 cols_per_aie = 0;
  int active_cus = 0;
  i64 nm = 0, nn = 0, nk = 0;   // per-AIE tile grid within the slab
};

struct ModePlan {
  ExecMode mode;
  i64 Ma = 0, Ka = 0, Na = 0;   // atom-padded layer dims
  i64 eff_m = 0, eff_k = 0, eff_n = 0;  // dims after baseline padding, if any
  int n_mslab = 0, n_nslab = 0, n_kslab = 0;
  std::vector<SlabInfo> slabs;  // in execution order (m, n, k innermost)
  // Per-FMU view shapes (rows, cols) for each role, widest slab.
  std::vector<std::pair<i64, i64>> lhs_views, rhs_views, out_views;
};

/// Validates capacity and shape constraints; throws FeasibilityError naming
/// the violated resource.
ModePlan plan_mode(const LayerNode& layer, const ExecMode& mode,
                   const HardwareConfig& hw);

/// Cheap feasibility probe (no plan construction).
bool mode_feasible(const LayerNode& layer, const ExecMode& mode,
                   const HardwareConfig& hw);

struct LatencyBreakdown {
  double t_compute = 0;  // sum of kernel phases (seconds)
  double t_load = 0;     // DDR-in busy time
  double t_store = 0;    // DDR-out busy time
  double t_total = 0;
  i64 rounds = 0;        // pipeline rounds across all slabs
  double utilization = 0;  // valid-MAC fraction of allocated AIEs
};

LatencyBreakdown layer_latency(const LayerNode& layer, const ExecMode& mode,
                               const HardwareConfig& hw);

// ---------------------------------------------------------------------------
// Baseline reconstructions. Both pad the layer and reuse layer_latency on
// the padded problem.
// ---------------------------------------------------------------------------

/// Monolithic fixed-tile design: every layer dim is padded up to a multiple
/// of the fixed on-chip tile; full-chip static configuration.
LatencyBreakdown baseline_latency_charm(const LayerNode& layer,
                                        const std::array<i64, 3>& fixed_tile,
                                        const HardwareConfig& hw);

/// Fixed-shape memory units concatenated flexibly: each operand is padded
/// to multiples of the unit shape; computation tile is fixed and static.
LatencyBreakdown baseline_latency_rsn(const LayerNode& layer,
                                      const std::array<i64, 2>& unit_shape,
                                      const std::array<i64, 3>& fixed_cu_tile,
                                      const HardwareConfig& hw);

/// The full-chip mode a fixed-tile baseline runs, exposed so callers can
/// evaluate the native model on the identical tiling.
ExecMode charm_mode(const LayerNode& padded, const std::array<i64, 3>& fixed_tile,
                    const HardwareConfig& hw);
ExecMode rsn_mode(const LayerNode& padded, const std::array<i64, 2>& unit_shape,
                  const std::array<i64, 3>& fixed_cu_tile,
                  const HardwareConfig& hw);

LayerNode pad_layer_to(const LayerNode& layer, i64 qm, i64 qk, i64 qn);

// Shared transfer-cost helpers (the simulator uses the same arithmetic).
double ddr_seconds(i64 total_bytes, i64 burst_bytes, const DdrProfile& ddr);
double stream_seconds(i64 bytes, const HardwareConfig& hw);

/// Even contiguous split of `total` items into `parts`; size of part i.
i64 share_of(i64 total, int parts, int i);
/// First item index of part i under share_of.
i64 share_start(i64 total, int parts, int i);

}  // namespace filco::perf
