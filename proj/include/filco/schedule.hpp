#pragma once

#include <string>
#include <vector>

#include "filco/stage1.hpp"
#include "filco/workload.hpp"

namespace filco::sched {

struct LayerPlacement {
  int layer_id = 0;
  int mode_id = 0;
  TimeNs start = 0;
  TimeNs end = 0;
  std::vector<int> fmus;  // assigned FMU indices
  std::vector<int> cus;
};

struct Schedule {
  std::vector<LayerPlacement> items;
  TimeNs makespan = 0;

  const LayerPlacement* find(int layer_id) const;
  std::string to_json() const;
  static Schedule from_json(const std::string& text);
};

/// Serial placement with per-unit busy-interval tracking. Layers are placed
/// at the earliest time >= ready at which enough units are free for the
/// whole duration; units picked lowest-index-first.
class PlacementState {
 public:
  PlacementState() : PlacementState(0, 0) {}
  PlacementState(int n_fmu, int n_cu);

  LayerPlacement tentative(int layer_id, int mode_id, TimeNs ready, TimeNs dur,
                           int f, int c) const;
  void commit(const LayerPlacement& p);
  /// Removes a previously committed placement's intervals. The makespan is
  /// not rolled back; branch-and-bound tracks its own.
  void retract(const LayerPlacement& p);

  TimeNs makespan() const { return makespan_; }

 private:
  using Intervals = std::vector<std::pair<TimeNs, TimeNs>>;  // kept sorted
  bool unit_free(const Intervals& iv, TimeNs t0, TimeNs t1) const;
  std::vector<Intervals> fmu_busy_, cu_busy_;
  TimeNs makespan_ = 0;
};

/// List-schedule the layers in the given id order (must be topological).
Schedule place_in_order(const std::vector<int>& order,
                        const std::vector<int>& mode_choice_by_index,
                        const WorkloadDag& dag,
                        const stage1::CandidateTable& table,
                        const HardwareConfig& hw);

struct Violation {
  std::string kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool clean() const { return violations.empty(); }
  std::string summary() const;
};

/// Re-derives every schedule property from scratch: mode uniqueness, the
/// E = S + e arithmetic, dependency ordering, per-unit interval disjointness,
/// assignment cardinalities and the makespan.
ValidationReport validate_schedule(const Schedule& s, const WorkloadDag& dag,
                                   const stage1::CandidateTable& table,
                                   const HardwareConfig& hw);

}  // namespace filco::sched
