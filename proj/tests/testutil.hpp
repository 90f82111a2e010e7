#pragma once

// Shared helpers for the test suites: synthetic scheduling instances, an
// independent exhaustive scheduling oracle, and a reference matrix multiply.
// The oracle deliberately re-implements placement with a time-stepping
// search rather than the library's interval arithmetic.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "filco/milp.hpp"
#include "filco/schedule.hpp"

namespace testutil {

using namespace filco;

struct Instance {
  WorkloadDag dag;
  stage1::CandidateTable table;
  HardwareConfig hw;
};

/// Random DAG plus a synthetic candidate table (latencies in whole
/// microseconds so oracle arithmetic is trivially exact).
inline Instance random_instance(u64 seed, int min_layers, int max_layers,
                                int min_modes, int max_modes, int n_fmu,
                                int n_cu, double edge_p = 0.4) {
  Rng rng(seed);
  Instance inst;
  inst.hw = default_vck190();
  inst.hw.n_fmu = n_fmu;
  inst.hw.n_cu = n_cu;

  int n = static_cast<int>(rng.next_range(min_layers, max_layers));
  for (int i = 0; i < n; ++i)
    inst.dag.layers.push_back({i, 8, 8, 8, Dtype::f32, "L" + std::to_string(i)});
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.next_bool(edge_p)) inst.dag.edges.emplace_back(i, j);
  inst.dag.validate();

  for (int i = 0; i < n; ++i) {
    stage1::LayerCandidates lc;
    lc.layer_id = i;
    int modes = static_cast<int>(rng.next_range(min_modes, max_modes));
    for (int k = 0; k < modes; ++k) {
      stage1::CandidateMode m;
      m.layer_id = i;
      m.mode_id = k;
      m.fmu_used = static_cast<int>(rng.next_range(1, n_fmu));
      m.cu_used = static_cast<int>(rng.next_range(1, n_cu));
      m.latency_s = static_cast<double>(rng.next_range(1, 40)) * 1e-6;
      lc.modes.push_back(m);
    }
    inst.table.per_layer.push_back(std::move(lc));
  }
  return inst;
}

/// Time-stepping list placement: candidate starts are scanned over event
/// times; a layer takes the f lowest-indexed FMUs and c lowest-indexed CUs
/// free for its whole duration.
inline sched::Schedule oracle_place(const std::vector<int>& order,
                                    const std::vector<int>& modes,
                                    const Instance& inst) {
  struct Busy {
    std::vector<std::pair<TimeNs, TimeNs>> iv;
    bool free(TimeNs a, TimeNs b) const {
      for (auto& [x, y] : iv)
        if (x < b && a < y) return false;
      return true;
    }
  };
  std::vector<Busy> fmu(static_cast<std::size_t>(inst.hw.n_fmu));
  std::vector<Busy> cu(static_cast<std::size_t>(inst.hw.n_cu));
  std::map<int, TimeNs> end_of;
  sched::Schedule s;

  for (int id : order) {
    const auto& mode =
        inst.table.mode(id, modes[static_cast<std::size_t>(inst.dag.index_of(id))]);
    TimeNs ready = 0;
    for (int p : inst.dag.predecessors(id)) ready = std::max(ready, end_of.at(p));
    TimeNs d = mode.latency_ns();

    std::set<TimeNs> events{ready};
    for (auto& b : fmu)
      for (auto& [x, y] : b.iv)
        if (y > ready) events.insert(y);
    for (auto& b : cu)
      for (auto& [x, y] : b.iv)
        if (y > ready) events.insert(y);

    for (TimeNs t : events) {
      std::vector<int> fs, cs;
      for (int u = 0; u < inst.hw.n_fmu; ++u)
        if (fmu[static_cast<std::size_t>(u)].free(t, t + d)) fs.push_back(u);
      for (int u = 0; u < inst.hw.n_cu; ++u)
        if (cu[static_cast<std::size_t>(u)].free(t, t + d)) cs.push_back(u);
      if (static_cast<int>(fs.size()) >= mode.fmu_used &&
          static_cast<int>(cs.size()) >= mode.cu_used) {
        sched::LayerPlacement p;
        p.layer_id = id;
        p.mode_id = mode.mode_id;
        p.start = t;
        p.end = t + d;
        p.fmus.assign(fs.begin(), fs.begin() + mode.fmu_used);
        p.cus.assign(cs.begin(), cs.begin() + mode.cu_used);
        for (int u : p.fmus) fmu[static_cast<std::size_t>(u)].iv.emplace_back(t, t + d);
        for (int u : p.cus) cu[static_cast<std::size_t>(u)].iv.emplace_back(t, t + d);
        end_of[id] = p.end;
        s.makespan = std::max(s.makespan, p.end);
        s.items.push_back(std::move(p));
        break;
      }
    }
  }
  return s;
}

inline void all_topo_orders(const WorkloadDag& dag, std::vector<int>& cur,
                            std::set<int>& used,
                            const std::function<void(const std::vector<int>&)>& fn) {
  if (cur.size() == dag.layers.size()) {
    fn(cur);
    return;
  }
  for (const auto& l : dag.layers) {
    if (used.count(l.id)) continue;
    bool ready = true;
    for (int p : dag.predecessors(l.id))
      if (!used.count(p)) {
        ready = false;
        break;
      }
    if (!ready) continue;
    used.insert(l.id);
    cur.push_back(l.id);
    all_topo_orders(dag, cur, used, fn);
    cur.pop_back();
    used.erase(l.id);
  }
}

/// Exhaustive minimum over every mode vector and every topological order.
inline TimeNs oracle_optimum(const Instance& inst) {
  const std::size_t n = inst.dag.layers.size();
  std::vector<int> modes(n, 0);
  TimeNs best = std::numeric_limits<TimeNs>::max();

  std::function<void(std::size_t)> mode_rec = [&](std::size_t i) {
    if (i == n) {
      std::vector<int> cur;
      std::set<int> used;
      all_topo_orders(inst.dag, cur, used, [&](const std::vector<int>& order) {
        best = std::min(best, oracle_place(order, modes, inst).makespan);
      });
      return;
    }
    const auto& lc = inst.table.per_layer[i];
    for (std::size_t k = 0; k < lc.modes.size(); ++k) {
      modes[i] = static_cast<int>(k);
      mode_rec(i + 1);
    }
  };
  mode_rec(0);
  return best;
}

}  // namespace testutil
