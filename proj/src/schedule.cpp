#include "filco/schedule.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace filco::sched {

using nlohmann::ordered_json;

const LayerPlacement* Schedule::find(int layer_id) const {
  for (const auto& p : items)
    if (p.layer_id == layer_id) return &p;
  return nullptr;
}

std::string Schedule::to_json() const {
  ordered_json j;
  j["makespan_ns"] = makespan;
  j["layers"] = ordered_json::array();
  for (const auto& p : items) {
    j["layers"].push_back({{"layer_id", p.layer_id},
                           {"mode_id", p.mode_id},
                           {"start_ns", p.start},
                           {"end_ns", p.end},
                           {"fmus", p.fmus},
                           {"cus", p.cus}});
  }
  return j.dump(2) + "\n";
}

Schedule Schedule::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("schedule: ") + e.what());
  }
  Schedule s;
  s.makespan = j.at("makespan_ns").get<TimeNs>();
  for (const auto& jl : j.at("layers")) {
    LayerPlacement p;
    p.layer_id = jl.at("layer_id").get<int>();
    p.mode_id = jl.at("mode_id").get<int>();
    p.start = jl.at("start_ns").get<TimeNs>();
    p.end = jl.at("end_ns").get<TimeNs>();
    p.fmus = jl.at("fmus").get<std::vector<int>>();
    p.cus = jl.at("cus").get<std::vector<int>>();
    s.items.push_back(std::move(p));
  }
  return s;
}

PlacementState::PlacementState(int n_fmu, int n_cu)
    : fmu_busy_(static_cast<std::size_t>(n_fmu)),
      cu_busy_(static_cast<std::size_t>(n_cu)) {}

bool PlacementState::unit_free(const Intervals& iv, TimeNs t0, TimeNs t1) const {
  for (const auto& [a, b] : iv) {
    if (a >= t1) break;
    if (b > t0) return false;
  }
  return true;
}

LayerPlacement PlacementState::tentative(int layer_id, int mode_id, TimeNs ready,
                                         TimeNs dur, int f, int c) const {
  if (f > static_cast<int>(fmu_busy_.size()) || c > static_cast<int>(cu_busy_.size()))
    throw FeasibilityError("layer " + std::to_string(layer_id) +
                           ": mode needs more units than the platform has");
  // candidate starts: ready time plus every busy-interval end after it
  std::set<TimeNs> cands{ready};
  for (const auto& unit : fmu_busy_)
    for (const auto& [a, b] : unit)
      if (b > ready) cands.insert(b);
  for (const auto& unit : cu_busy_)
    for (const auto& [a, b] : unit)
      if (b > ready) cands.insert(b);

  for (TimeNs t : cands) {
    LayerPlacement p;
    p.layer_id = layer_id;
    p.mode_id = mode_id;
    p.start = t;
    p.end = t + dur;
    for (std::size_t u = 0; u < fmu_busy_.size() && static_cast<int>(p.fmus.size()) < f; ++u)
      if (unit_free(fmu_busy_[u], t, t + dur)) p.fmus.push_back(static_cast<int>(u));
    if (static_cast<int>(p.fmus.size()) < f) continue;
    for (std::size_t u = 0; u < cu_busy_.size() && static_cast<int>(p.cus.size()) < c; ++u)
      if (unit_free(cu_busy_[u], t, t + dur)) p.cus.push_back(static_cast<int>(u));
    if (static_cast<int>(p.cus.size()) < c) continue;
    return p;
  }
  throw FeasibilityError("no feasible start found");  // unreachable: last end works
}

void PlacementState::commit(const LayerPlacement& p) {
  for (int u : p.fmus) {
    auto& iv = fmu_busy_[static_cast<std::size_t>(u)];
    iv.insert(std::upper_bound(iv.begin(), iv.end(),
                               std::make_pair(p.start, p.end)),
              {p.start, p.end});
  }
  for (int u : p.cus) {
    auto& iv = cu_busy_[static_cast<std::size_t>(u)];
    iv.insert(std::upper_bound(iv.begin(), iv.end(),
                               std::make_pair(p.start, p.end)),
              {p.start, p.end});
  }
  makespan_ = std::max(makespan_, p.end);
}

void PlacementState::retract(const LayerPlacement& p) {
  auto drop = [&](Intervals& iv) {
    auto it = std::find(iv.begin(), iv.end(), std::make_pair(p.start, p.end));
    if (it != iv.end()) iv.erase(it);
  };
  for (int u : p.fmus) drop(fmu_busy_[static_cast<std::size_t>(u)]);
  for (int u : p.cus) drop(cu_busy_[static_cast<std::size_t>(u)]);
}

Schedule place_in_order(const std::vector<int>& order,
                        const std::vector<int>& mode_choice_by_index,
                        const WorkloadDag& dag,
                        const stage1::CandidateTable& table,
                        const HardwareConfig& hw) {
  PlacementState state(hw.n_fmu, hw.n_cu);
  std::map<int, TimeNs> end_of;
  Schedule s;
  for (int id : order) {
    int idx = dag.index_of(id);
    int mode_id = mode_choice_by_index[static_cast<std::size_t>(idx)];
    const auto& mode = table.mode(id, mode_id);
    TimeNs ready = 0;
    for (int p : dag.predecessors(id)) ready = std::max(ready, end_of.at(p));
    LayerPlacement p = state.tentative(id, mode_id, ready, mode.latency_ns(),
                                       mode.fmu_used, mode.cu_used);
    state.commit(p);
    end_of[id] = p.end;
    s.items.push_back(std::move(p));
  }
  s.makespan = state.makespan();
  return s;
}

std::string ValidationReport::summary() const {
  if (violations.empty()) return "clean";
  std::ostringstream os;
  os << violations.size() << " violation(s):";
  for (const auto& v : violations) os << "\n  [" << v.kind << "] " << v.detail;
  return os.str();
}

ValidationReport validate_schedule(const Schedule& s, const WorkloadDag& dag,
                                   const stage1::CandidateTable& table,
                                   const HardwareConfig& hw) {
  ValidationReport rep;
  auto add = [&](const std::string& kind, const std::string& detail) {
    rep.violations.push_back({kind, detail});
  };

  std::set<int> placed;
  for (const auto& p : s.items)
    if (!placed.insert(p.layer_id).second)
      add("mode-uniqueness", "layer " + std::to_string(p.layer_id) +
                                 " placed more than once");
  for (const auto& l : dag.layers)
    if (!placed.count(l.id))
      add("coverage", "layer " + std::to_string(l.id) + " missing from schedule");

  TimeNs max_end = 0;
  for (const auto& p : s.items) {
    max_end = std::max(max_end, p.end);
    const stage1::CandidateMode* mode = nullptr;
    try {
      mode = &table.mode(p.layer_id, p.mode_id);
    } catch (const ValidationError& e) {
      add("mode-reference", e.what());
      continue;
    }
    if (p.end != p.start + mode->latency_ns())
      add("arithmetic", "layer " + std::to_string(p.layer_id) + ": end " +
                            std::to_string(p.end) + " != start + e = " +
                            std::to_string(p.start + mode->latency_ns()));
    if (p.start < 0) add("arithmetic", "layer " + std::to_string(p.layer_id) +
                                           ": negative start");
    if (static_cast<int>(p.fmus.size()) != mode->fmu_used)
      add("cardinality", "layer " + std::to_string(p.layer_id) + ": " +
                             std::to_string(p.fmus.size()) + " FMUs assigned, mode needs " +
                             std::to_string(mode->fmu_used));
    if (static_cast<int>(p.cus.size()) != mode->cu_used)
      add("cardinality", "layer " + std::to_string(p.layer_id) + ": " +
                             std::to_string(p.cus.size()) + " CUs assigned, mode needs " +
                             std::to_string(mode->cu_used));
    std::set<int> uniq(p.fmus.begin(), p.fmus.end());
    if (uniq.size() != p.fmus.size())
      add("cardinality", "layer " + std::to_string(p.layer_id) + ": duplicate FMU");
    for (int u : p.fmus)
      if (u < 0 || u >= hw.n_fmu)
        add("unit-range", "layer " + std::to_string(p.layer_id) + ": FMU " +
                              std::to_string(u) + " out of range");
    for (int u : p.cus)
      if (u < 0 || u >= hw.n_cu)
        add("unit-range", "layer " + std::to_string(p.layer_id) + ": CU " +
                              std::to_string(u) + " out of range");
  }

  for (const auto& [a, b] : dag.edges) {
    const auto* pa = s.find(a);
    const auto* pb = s.find(b);
    if (!pa || !pb) continue;
    if (pb->start < pa->end)
      add("dependency", "layer " + std::to_string(b) + " starts at " +
                            std::to_string(pb->start) + " before layer " +
                            std::to_string(a) + " ends at " + std::to_string(pa->end));
  }

  // per-unit interval disjointness
  auto check_overlaps = [&](bool is_fmu, int n_units) {
    for (int u = 0; u < n_units; ++u) {
      std::vector<std::pair<TimeNs, std::pair<TimeNs, int>>> iv;  // (start, (end, layer))
      for (const auto& p : s.items) {
        const auto& units = is_fmu ? p.fmus : p.cus;
        if (std::find(units.begin(), units.end(), u) != units.end())
          iv.push_back({p.start, {p.end, p.layer_id}});
      }
      std::sort(iv.begin(), iv.end());
      for (std::size_t i = 1; i < iv.size(); ++i) {
        if (iv[i].first < iv[i - 1].second.first)
          add("overlap", std::string(is_fmu ? "FMU " : "CU ") + std::to_string(u) +
                             ": layers " + std::to_string(iv[i - 1].second.second) +
                             " and " + std::to_string(iv[i].second.second) +
                             " overlap in time");
      }
    }
  };
  check_overlaps(true, hw.n_fmu);
  check_overlaps(false, hw.n_cu);

  if (!s.items.empty() && s.makespan != max_end)
    add("makespan", "recorded makespan " + std::to_string(s.makespan) +
                        " != max end " + std::to_string(max_end));
  return rep;
}

}  // namespace filco::sched
