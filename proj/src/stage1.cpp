#include "filco/stage1.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <json.hpp>

namespace filco::stage1 {

using nlohmann::ordered_json;
using perf::TileShape;

const LayerCandidates& CandidateTable::for_layer(int layer_id) const {
  for (const auto& lc : per_layer)
    if (lc.layer_id == layer_id) return lc;
  throw ValidationError("candidate table has no layer " + std::to_string(layer_id));
}

const CandidateMode& CandidateTable::mode(int layer_id, int mode_id) const {
  const auto& lc = for_layer(layer_id);
  if (mode_id < 0 || mode_id >= static_cast<int>(lc.modes.size()))
    throw ValidationError("layer " + std::to_string(layer_id) + " has no mode " +
                          std::to_string(mode_id));
  return lc.modes[static_cast<std::size_t>(mode_id)];
}

std::size_t CandidateTable::max_modes() const {
  std::size_t m = 0;
  for (const auto& lc : per_layer) m = std::max(m, lc.modes.size());
  return m;
}

std::optional<std::array<i64, 3>> derive_slabs(const LayerNode& layer,
                                               int f_lhs, int f_rhs, int f_out,
                                               int cu, const TileShape& tile,
                                               const HardwareConfig& hw) {
  const i64 tm = tile.elem_m(), tn = tile.elem_n();
  const i64 Ma = round_up(layer.m, kAtomM);
  const i64 Ka = round_up(layer.k, kAtomK);
  const i64 Na = round_up(layer.n, kAtomN);
  const i64 cap = hw.fmu_capacity_elems;

  auto fits_lhs = [&](i64 nm) {
    return ceil_div(static_cast<i64>(cu) * nm, f_lhs) * tm * Ka <= cap;
  };
  auto fits_rhs = [&](i64 nn) {
    return ceil_div(static_cast<i64>(hw.aie_per_cu) * nn, f_rhs) * tn * Ka <= cap;
  };
  auto fits_out = [&](i64 nm, i64 sc) {
    return ceil_div(static_cast<i64>(cu) * nm, f_out) * tm * sc <= cap;
  };

  const i64 nm_need = ceil_div(Ma, static_cast<i64>(cu) * tm);
  const i64 nn_need = ceil_div(Na, static_cast<i64>(hw.aie_per_cu) * tn);
  if (!fits_lhs(1) || !fits_rhs(1)) return std::nullopt;

  i64 nm = 1;
  while (nm < nm_need && fits_lhs(nm + 1)) ++nm;
  i64 nn = 1;
  while (nn < nn_need && fits_rhs(nn + 1)) ++nn;

  auto sc_of = [&](i64 n) { return std::min(static_cast<i64>(hw.aie_per_cu) * n * tn, Na); };
  while (nn > 1 && !fits_out(nm, sc_of(nn))) --nn;
  while (nm > 1 && !fits_out(nm, sc_of(nn))) --nm;
  if (!fits_out(nm, sc_of(nn))) return std::nullopt;

  i64 sr = std::min(static_cast<i64>(cu) * nm * tm, Ma);
  return std::array<i64, 3>{sr, sc_of(nn), Ka};
}

std::vector<CandidateMode> enumerate_modes(const LayerNode& layer,
                                           const HardwareConfig& hw) {
  if (layer.m < 1 || layer.k < 1 || layer.n < 1)
    throw ValidationError("layer dims must be >= 1");

  const i64 max_ai = hw.cu_buf_tile[0] / kAtomM;
  const i64 max_ak = hw.cu_buf_tile[1] / kAtomK;
  const i64 max_aj = hw.cu_buf_tile[2] / kAtomN;
  // tiles beyond the (atom-padded) layer waste capacity without changing
  // the computation; cap the sweep there
  const i64 lim_ai = std::min(max_ai, ceil_div(layer.m, kAtomM));
  const i64 lim_ak = std::min(max_ak, ceil_div(layer.k, kAtomK));
  const i64 lim_aj = std::min(max_aj, ceil_div(layer.n, kAtomN));

  std::vector<CandidateMode> out;
  for (int f = 3; f <= hw.n_fmu; ++f) {
    for (int fl = 1; fl <= f - 2; ++fl) {
      for (int fr = 1; fr <= f - fl - 1; ++fr) {
        const int fo = f - fl - fr;
        for (int c = 1; c <= hw.n_cu; ++c) {
          if (static_cast<i64>(c) > ceil_div(layer.m, kAtomM)) break;
          for (i64 ai = 1; ai <= lim_ai; ++ai) {
            for (i64 ak = 1; ak <= lim_ak; ++ak) {
              for (i64 aj = 1; aj <= lim_aj; ++aj) {
                TileShape tile{ai, ak, aj};
                auto slabs = derive_slabs(layer, fl, fr, fo, c, tile, hw);
                if (!slabs) continue;
                ExecMode geom;
                geom.fmu_lhs = fl;
                geom.fmu_rhs = fr;
                geom.fmu_out = fo;
                geom.cu = c;
                geom.tile = tile;
                geom.slab_rows = (*slabs)[0];
                geom.slab_cols = (*slabs)[1];
                geom.slab_k = (*slabs)[2];
                try {
                  perf::ModePlan plan = perf::plan_mode(layer, geom, hw);
                  perf::LatencyBreakdown lb = perf::layer_latency(layer, geom, hw);
                  CandidateMode cm;
                  cm.layer_id = layer.id;
                  cm.fmu_used = f;
                  cm.cu_used = c;
                  cm.latency_s = lb.t_total;
                  cm.geom = geom;
                  for (int i = 0; i < fl; ++i) cm.fmu_roles.push_back(perf::FmuRole::lhs);
                  for (int i = 0; i < fr; ++i) cm.fmu_roles.push_back(perf::FmuRole::rhs);
                  for (int i = 0; i < fo; ++i) cm.fmu_roles.push_back(perf::FmuRole::out);
                  cm.views = plan.lhs_views;
                  cm.views.insert(cm.views.end(), plan.rhs_views.begin(),
                                  plan.rhs_views.end());
                  cm.views.insert(cm.views.end(), plan.out_views.begin(),
                                  plan.out_views.end());
                  out.push_back(std::move(cm));
                } catch (const FeasibilityError&) {
                  continue;
                }
              }
            }
          }
        }
      }
    }
  }
  if (out.empty())
    throw FeasibilityError("layer " + std::to_string(layer.id) + " (" + layer.name +
                           "): no feasible mode under the given hardware");
  std::sort(out.begin(), out.end(), [](const CandidateMode& a, const CandidateMode& b) {
    return std::tuple(a.fmu_used, a.cu_used, a.geom.tile.ai, a.geom.tile.ak,
                      a.geom.tile.aj, a.geom.fmu_lhs, a.geom.fmu_rhs) <
           std::tuple(b.fmu_used, b.cu_used, b.geom.tile.ai, b.geom.tile.ak,
                      b.geom.tile.aj, b.geom.fmu_lhs, b.geom.fmu_rhs);
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].mode_id = static_cast<int>(i);
  return out;
}

CandidateTable build_table(const WorkloadDag& dag, const HardwareConfig& hw,
                           const BuildOptions& opts) {
  dag.validate();
  CandidateTable table;
  // layers with identical shape share one enumeration
  std::map<std::tuple<i64, i64, i64, int>, std::vector<CandidateMode>> memo;

  for (const auto& layer : dag.layers) {
    auto key = std::tuple(layer.m, layer.k, layer.n, static_cast<int>(layer.dtype));
    auto it = memo.find(key);
    if (it == memo.end()) {
      std::vector<CandidateMode> all = enumerate_modes(layer, hw);
      // min-latency representative per (f, c)
      std::map<std::pair<int, int>, CandidateMode> best;
      for (auto& m : all) {
        auto k = std::make_pair(m.fmu_used, m.cu_used);
        auto b = best.find(k);
        if (b == best.end() || m.latency_s < b->second.latency_s) best[k] = m;
      }
      // Pareto frontier over (f, c, e): drop entries dominated in all three
      std::vector<CandidateMode> frontier;
      for (auto& [k1, m1] : best) {
        bool dominated = false;
        for (auto& [k2, m2] : best) {
          if (k1 == k2) continue;
          if (m2.fmu_used <= m1.fmu_used && m2.cu_used <= m1.cu_used &&
              m2.latency_s <= m1.latency_s &&
              (m2.fmu_used < m1.fmu_used || m2.cu_used < m1.cu_used ||
               m2.latency_s < m1.latency_s)) {
            dominated = true;
            break;
          }
        }
        if (!dominated) frontier.push_back(m1);
      }
      std::sort(frontier.begin(), frontier.end(),
                [](const CandidateMode& a, const CandidateMode& b) {
                  return std::tuple(a.fmu_used, a.cu_used) <
                         std::tuple(b.fmu_used, b.cu_used);
                });
      it = memo.emplace(key, std::move(frontier)).first;
    }

    LayerCandidates lc;
    lc.layer_id = layer.id;
    lc.modes = it->second;
    for (auto& m : lc.modes) m.layer_id = layer.id;

    if (opts.inflate_to > static_cast<int>(lc.modes.size())) {
      Rng rng = Rng::fork(opts.inflate_seed, static_cast<u64>(layer.id));
      std::size_t base = lc.modes.size();
      while (lc.modes.size() < static_cast<std::size_t>(opts.inflate_to)) {
        CandidateMode m = lc.modes[rng.next_below(base)];
        m.latency_s *= 1.0 + 0.25 * rng.next_unit();  // perturbed replica
        lc.modes.push_back(std::move(m));
      }
    }
    for (std::size_t i = 0; i < lc.modes.size(); ++i)
      lc.modes[i].mode_id = static_cast<int>(i);
    table.per_layer.push_back(std::move(lc));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Serialization (stable field order)
// ---------------------------------------------------------------------------

namespace {

const char* role_name(perf::FmuRole r) {
  switch (r) {
    case perf::FmuRole::lhs: return "LHS";
    case perf::FmuRole::rhs: return "RHS";
    case perf::FmuRole::out: return "OUT";
  }
  return "?";
}

perf::FmuRole role_from(const std::string& s) {
  if (s == "LHS") return perf::FmuRole::lhs;
  if (s == "RHS") return perf::FmuRole::rhs;
  if (s == "OUT") return perf::FmuRole::out;
  throw ParseError("unknown FMU role '" + s + "'");
}

}  // namespace

std::string CandidateTable::to_json() const {
  ordered_json j;
  j["layers"] = ordered_json::array();
  for (const auto& lc : per_layer) {
    ordered_json jl;
    jl["layer_id"] = lc.layer_id;
    jl["modes"] = ordered_json::array();
    for (const auto& m : lc.modes) {
      ordered_json jm;
      jm["mode_id"] = m.mode_id;
      jm["fmu_used"] = m.fmu_used;
      jm["cu_used"] = m.cu_used;
      jm["latency_ns"] = m.latency_ns();
      jm["latency_s"] = m.latency_s;
      jm["fmu_lhs"] = m.geom.fmu_lhs;
      jm["fmu_rhs"] = m.geom.fmu_rhs;
      jm["fmu_out"] = m.geom.fmu_out;
      jm["tile_atoms"] = {m.geom.tile.ai, m.geom.tile.ak, m.geom.tile.aj};
      jm["slab"] = {m.geom.slab_rows, m.geom.slab_cols, m.geom.slab_k};
      jm["static_kernel"] = m.geom.static_kernel;
      ordered_json roles = ordered_json::array();
      for (auto r : m.fmu_roles) roles.push_back(role_name(r));
      jm["fmu_roles"] = roles;
      ordered_json views = ordered_json::array();
      for (auto& [r, c] : m.views) views.push_back({r, c});
      jm["views"] = views;
      jl["modes"].push_back(std::move(jm));
    }
    j["layers"].push_back(std::move(jl));
  }
  return j.dump(2) + "\n";
}

CandidateTable CandidateTable::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("candidate table: ") + e.what());
  }
  CandidateTable t;
  for (const auto& jl : j.at("layers")) {
    LayerCandidates lc;
    lc.layer_id = jl.at("layer_id").get<int>();
    for (const auto& jm : jl.at("modes")) {
      CandidateMode m;
      m.layer_id = lc.layer_id;
      m.mode_id = jm.at("mode_id").get<int>();
      m.fmu_used = jm.at("fmu_used").get<int>();
      m.cu_used = jm.at("cu_used").get<int>();
      m.latency_s = jm.at("latency_s").get<double>();
      m.geom.fmu_lhs = jm.at("fmu_lhs").get<int>();
      m.geom.fmu_rhs = jm.at("fmu_rhs").get<int>();
      m.geom.fmu_out = jm.at("fmu_out").get<int>();
      m.geom.cu = m.cu_used;
      auto ta = jm.at("tile_atoms");
      m.geom.tile = TileShape{ta.at(0).get<i64>(), ta.at(1).get<i64>(),
                              ta.at(2).get<i64>()};
      auto sl = jm.at("slab");
      m.geom.slab_rows = sl.at(0).get<i64>();
      m.geom.slab_cols = sl.at(1).get<i64>();
      m.geom.slab_k = sl.at(2).get<i64>();
      m.geom.static_kernel = jm.at("static_kernel").get<bool>();
      for (const auto& r : jm.at("fmu_roles"))
        m.fmu_roles.push_back(role_from(r.get<std::string>()));
      for (const auto& v : jm.at("views"))
        m.views.emplace_back(v.at(0).get<i64>(), v.at(1).get<i64>());
      lc.modes.push_back(std::move(m));
    }
    t.per_layer.push_back(std::move(lc));
  }
  return t;
}

}  // namespace filco::stage1
