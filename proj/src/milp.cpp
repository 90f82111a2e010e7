#include "filco/milp.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace filco::sched {

MilpModel build_milp(const WorkloadDag& dag, const stage1::CandidateTable& table,
                     const HardwareConfig& hw) {
  dag.validate();
  MilpModel m;
  m.dag = &dag;
  m.table = &table;
  m.n_fmu = hw.n_fmu;
  m.n_cu = hw.n_cu;

  TimeNs phi = 1;
  for (const auto& l : dag.layers) {
    const auto& lc = table.for_layer(l.id);
    if (lc.modes.empty())
      throw ModelError("layer " + std::to_string(l.id) + " has no candidate modes");
    std::vector<TimeNs> e;
    std::vector<int> f, c;
    TimeNs emax = 0;
    for (const auto& mode : lc.modes) {
      if (mode.fmu_used > hw.n_fmu || mode.cu_used > hw.n_cu)
        throw ModelError("layer " + std::to_string(l.id) + " mode " +
                         std::to_string(mode.mode_id) +
                         " demands more units than the platform has");
      e.push_back(mode.latency_ns());
      f.push_back(mode.fmu_used);
      c.push_back(mode.cu_used);
      emax = std::max(emax, mode.latency_ns());
    }
    phi += emax;
    m.e_ns.push_back(std::move(e));
    m.f_of.push_back(std::move(f));
    m.c_of.push_back(std::move(c));
  }
  m.big_m = phi;  // sum of per-layer max latencies, plus one time unit

  m.dep_pairs = dag.edges;
  std::set<std::pair<int, int>> edge_set(dag.edges.begin(), dag.edges.end());
  for (std::size_t i = 0; i < dag.layers.size(); ++i)
    for (std::size_t j = i + 1; j < dag.layers.size(); ++j) {
      int a = dag.layers[i].id, b = dag.layers[j].id;
      if (!edge_set.count({a, b}) && !edge_set.count({b, a}))
        m.indep_pairs.emplace_back(a, b);
    }
  return m;
}

// ---------------------------------------------------------------------------
// LP export
// ---------------------------------------------------------------------------

std::string export_lp(const MilpModel& model) {
  const WorkloadDag& dag = *model.dag;
  std::ostringstream os;
  const TimeNs phi = model.big_m;
  const TimeNs eps = 1;  // one nanosecond closes the strict inequality

  os << "\\ FILCO schedule model, times in ns\n";
  os << "Minimize\n obj: T\n";
  os << "Subject To\n";

  for (std::size_t i = 0; i < dag.layers.size(); ++i) {
    int id = dag.layers[i].id;
    os << " mode_" << id << ":";
    for (std::size_t k = 0; k < model.e_ns[i].size(); ++k)
      os << (k ? " + " : " ") << "M_" << id << "_" << k;
    os << " = 1\n";
  }

  // E_i - S_i - sum_k e_{i,k} M_{i,k} = 0
  for (std::size_t i = 0; i < dag.layers.size(); ++i) {
    int id = dag.layers[i].id;
    os << " end_" << id << ": E_" << id << " - S_" << id;
    for (std::size_t k = 0; k < model.e_ns[i].size(); ++k)
      os << " - " << model.e_ns[i][k] << " M_" << id << "_" << k;
    os << " = 0\n";
  }

  for (const auto& [a, b] : model.dep_pairs)
    os << " dep_" << a << "_" << b << ": S_" << b << " - E_" << a << " >= 0\n";

  // overlap indicators for both orientations of each independent pair
  auto emit_overlap = [&](int i, int j) {
    os << " ovla_" << i << "_" << j << ": S_" << i << " - E_" << j << " + " << phi
       << " O_" << i << "_" << j << " <= " << (phi - eps) << "\n";
    os << " ovlb_" << i << "_" << j << ": S_" << i << " - E_" << j << " + " << phi
       << " O_" << i << "_" << j << " >= 0\n";
  };
  for (const auto& [a, b] : model.indep_pairs) {
    emit_overlap(a, b);
    emit_overlap(b, a);
  }

  for (const auto& [a, b] : model.indep_pairs) {
    for (int u = 0; u < model.n_fmu; ++u)
      os << " exf_" << a << "_" << b << "_" << u << ": A_" << a << "_" << u
         << " + A_" << b << "_" << u << " + O_" << a << "_" << b << " + O_" << b
         << "_" << a << " <= 3\n";
    for (int u = 0; u < model.n_cu; ++u)
      os << " exc_" << a << "_" << b << "_" << u << ": B_" << a << "_" << u
         << " + B_" << b << "_" << u << " + O_" << a << "_" << b << " + O_" << b
         << "_" << a << " <= 3\n";
  }

  // resource cardinality: sum_m A_{i,m} = sum_k f_{i,k} M_{i,k}
  for (std::size_t i = 0; i < dag.layers.size(); ++i) {
    int id = dag.layers[i].id;
    os << " cardf_" << id << ":";
    for (int u = 0; u < model.n_fmu; ++u) os << (u ? " + " : " ") << "A_" << id << "_" << u;
    for (std::size_t k = 0; k < model.f_of[i].size(); ++k)
      os << " - " << model.f_of[i][k] << " M_" << id << "_" << k;
    os << " = 0\n";
    os << " cardc_" << id << ":";
    for (int u = 0; u < model.n_cu; ++u) os << (u ? " + " : " ") << "B_" << id << "_" << u;
    for (std::size_t k = 0; k < model.c_of[i].size(); ++k)
      os << " - " << model.c_of[i][k] << " M_" << id << "_" << k;
    os << " = 0\n";
  }

  for (const auto& l : dag.layers)
    os << " mk_" << l.id << ": T - E_" << l.id << " >= 0\n";

  os << "Bounds\n";
  for (const auto& l : dag.layers) {
    os << " 0 <= S_" << l.id << " <= " << phi << "\n";
    os << " 0 <= E_" << l.id << " <= " << phi << "\n";
  }
  os << " 0 <= T <= " << phi << "\n";

  os << "Binaries\n";
  for (std::size_t i = 0; i < dag.layers.size(); ++i) {
    int id = dag.layers[i].id;
    os << " ";
    for (std::size_t k = 0; k < model.e_ns[i].size(); ++k)
      os << "M_" << id << "_" << k << " ";
    os << "\n ";
    for (int u = 0; u < model.n_fmu; ++u) os << "A_" << id << "_" << u << " ";
    os << "\n ";
    for (int u = 0; u < model.n_cu; ++u) os << "B_" << id << "_" << u << " ";
    os << "\n";
  }
  for (const auto& [a, b] : model.indep_pairs)
    os << " O_" << a << "_" << b << " O_" << b << "_" << a << "\n";
  os << "End\n";
  return os.str();
}

LpFile parse_lp(const std::string& text) {
  LpFile f;
  std::istringstream is(text);
  std::string line;
  enum class Section { none, objective, constraints, bounds, binaries };
  Section sec = Section::none;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '\\') continue;
    if (line == "Minimize") {
      sec = Section::objective;
      continue;
    }
    if (line == "Subject To") {
      sec = Section::constraints;
      continue;
    }
    if (line == "Bounds") {
      sec = Section::bounds;
      continue;
    }
    if (line == "Binaries") {
      sec = Section::binaries;
      continue;
    }
    if (line == "End") break;
    switch (sec) {
      case Section::objective: f.objective = line; break;
      case Section::constraints: f.constraints.push_back(line); break;
      case Section::bounds: f.bounds.push_back(line); break;
      case Section::binaries: f.binaries.push_back(line); break;
      case Section::none:
        throw ParseError("LP text before any section header: " + line);
    }
  }
  if (f.objective.empty()) throw ParseError("LP file has no objective");
  return f;
}

std::string render_lp(const LpFile& f) {
  std::ostringstream os;
  os << "Minimize\n" << f.objective << "\n";
  os << "Subject To\n";
  for (const auto& c : f.constraints) os << c << "\n";
  os << "Bounds\n";
  for (const auto& b : f.bounds) os << b << "\n";
  os << "Binaries\n";
  for (const auto& b : f.binaries) os << b << "\n";
  os << "End\n";
  return os.str();
}

}  // namespace filco::sched
