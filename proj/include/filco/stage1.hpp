#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "filco/perfmodel.hpp"

namespace filco::stage1 {

using perf::ExecMode;

/// One stage-1 result for a layer: a runtime configuration together with its
/// resource/latency triple (f, c, e).
struct CandidateMode {
  int layer_id = 0;
  int mode_id = 0;
  int fmu_used = 0;                 // f
  int cu_used = 0;                  // c
  double latency_s = 0;             // e
  ExecMode geom;
  std::vector<perf::FmuRole> fmu_roles;            // one per used FMU
  std::vector<std::pair<i64, i64>> views;          // per-FMU (rows, cols)

  TimeNs latency_ns() const {
    return static_cast<TimeNs>(std::max<double>(1.0, std::ceil(latency_s * 1e9)));
  }
};

struct LayerCandidates {
  int layer_id = 0;
  std::vector<CandidateMode> modes;  // mode_id == index
};

struct CandidateTable {
  std::vector<LayerCandidates> per_layer;  // same order as dag.layers

  const LayerCandidates& for_layer(int layer_id) const;
  const CandidateMode& mode(int layer_id, int mode_id) const;
  std::size_t max_modes() const;

  std::string to_json() const;
  static CandidateTable from_json(const std::string& text);
};

/// Brute-force sweep of f-role splits, CU counts and tile shapes; every
/// feasible configuration is priced with the latency model. Returns the raw
/// (unpruned) mode list sorted by (f, c, tile).
std::vector<CandidateMode> enumerate_modes(const LayerNode& layer,
                                           const HardwareConfig& hw);

struct BuildOptions {
  /// Replicate perturbed frontier entries until each layer holds at least
  /// this many candidates (stress configurations); 0 disables.
  int inflate_to = 0;
  u64 inflate_seed = 1;
};

/// Per layer: keep the min-latency mode per (f, c) group, Pareto-prune over
/// (f, c, e), renumber mode ids.
CandidateTable build_table(const WorkloadDag& dag, const HardwareConfig& hw,
                           const BuildOptions& opts = {});

/// The maximal residency slab for a given split/tile, or nullopt when no
/// slab fits. Exposed for tests.
std::optional<std::array<i64, 3>> derive_slabs(const LayerNode& layer,
                                               int f_lhs, int f_rhs, int f_out,
                                               int cu, const perf::TileShape& tile,
                                               const HardwareConfig& hw);

}  // namespace filco::stage1
