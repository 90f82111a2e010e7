#pragma once

#include "filco/schedule.hpp"

namespace filco::sched {

/// The scheduling MILP: mode uniqueness, dependency timing, big-M overlap
/// linearization, per-unit exclusion, resource cardinality, min-makespan
/// objective. Times are integer nanoseconds.
struct MilpModel {
  const WorkloadDag* dag = nullptr;
  const stage1::CandidateTable* table = nullptr;
  int n_fmu = 0, n_cu = 0;
  TimeNs big_m = 0;  // phi, strictly above any feasible makespan

  std::vector<std::vector<TimeNs>> e_ns;  // [layer index][mode]
  std::vector<std::vector<int>> f_of, c_of;
  std::vector<std::pair<int, int>> dep_pairs;    // direct edges (ids)
  std::vector<std::pair<int, int>> indep_pairs;  // unordered id pairs, no edge
};

MilpModel build_milp(const WorkloadDag& dag, const stage1::CandidateTable& table,
                     const HardwareConfig& hw);

/// CPLEX-LP format text; strict inequalities closed with a one-time-unit
/// epsilon. Parses back via parse_lp for round-trip checks.
std::string export_lp(const MilpModel& model);

/// Minimal reader for the LP files export_lp emits.
struct LpFile {
  std::string objective;
  std::vector<std::string> constraints;  // name: normalized text
  std::vector<std::string> bounds;
  std::vector<std::string> binaries;
};
LpFile parse_lp(const std::string& text);
std::string render_lp(const LpFile& f);

struct SolveOutcome {
  Schedule schedule;
  bool proven_optimal = false;
  TimeNs lower_bound = 0;
  double wall_seconds = 0;
  i64 nodes_explored = 0;
};

/// Depth-first branch and bound over (eligible layer, mode) placements with
/// critical-path and resource-area lower bounds. Returns the optimum over
/// all dependency-respecting serial placements, or the best incumbent with
/// a bound when the wall-clock budget runs out. Throws TimeoutError when the
/// budget expires before any incumbent exists.
SolveOutcome solve_exact(const MilpModel& model, double budget_seconds);

}  // namespace filco::sched
