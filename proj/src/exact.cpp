#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>

#include "filco/milp.hpp"

namespace filco::sched {

namespace {

constexpr TimeNs kInf = std::numeric_limits<TimeNs>::max() / 4;

struct ExactCtx {
  const MilpModel& model;
  const WorkloadDag& dag;
  int n;
  std::vector<std::vector<int>> preds, succs;  // by index
  std::vector<int> topo;                       // indices in topological order
  std::vector<TimeNs> emin;
  std::vector<TimeNs> tail;  // emin-weighted longest path to a sink
  std::vector<double> fmu_area_min, cu_area_min;
  double fmu_cap, cu_cap;

  std::chrono::steady_clock::time_point deadline;
  bool stopped = false;
  i64 nodes = 0;

  TimeNs best_T = kInf;
  Schedule best;
  bool have_incumbent = false;
  TimeNs frontier_lb = kInf;

  std::vector<TimeNs> est_scratch;

  explicit ExactCtx(const MilpModel& m, double budget_seconds)
      : model(m), dag(*m.dag), n(static_cast<int>(m.dag->layers.size())) {
    deadline = std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(budget_seconds));
    preds.resize(static_cast<std::size_t>(n));
    succs.resize(static_cast<std::size_t>(n));
    for (const auto& [a, b] : dag.edges) {
      int ia = dag.index_of(a), ib = dag.index_of(b);
      preds[static_cast<std::size_t>(ib)].push_back(ia);
      succs[static_cast<std::size_t>(ia)].push_back(ib);
    }
    for (int id : dag.topo_order()) topo.push_back(dag.index_of(id));

    emin.resize(static_cast<std::size_t>(n));
    fmu_area_min.resize(static_cast<std::size_t>(n));
    cu_area_min.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      TimeNs e = kInf;
      double fa = 1e300, ca = 1e300;
      const auto& es = model.e_ns[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < es.size(); ++k) {
        e = std::min(e, es[k]);
        fa = std::min(fa, static_cast<double>(es[k]) *
                              model.f_of[static_cast<std::size_t>(i)][k]);
        ca = std::min(ca, static_cast<double>(es[k]) *
                              model.c_of[static_cast<std::size_t>(i)][k]);
      }
      emin[static_cast<std::size_t>(i)] = e;
      fmu_area_min[static_cast<std::size_t>(i)] = fa;
      cu_area_min[static_cast<std::size_t>(i)] = ca;
    }
    tail.assign(static_cast<std::size_t>(n), 0);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      TimeNs t = 0;
      for (int s : succs[static_cast<std::size_t>(*it)])
        t = std::max(t, tail[static_cast<std::size_t>(s)]);
      tail[static_cast<std::size_t>(*it)] = emin[static_cast<std::size_t>(*it)] + t;
    }
    fmu_cap = static_cast<double>(m.n_fmu);
    cu_cap = static_cast<double>(m.n_cu);
    est_scratch.assign(static_cast<std::size_t>(n), 0);
  }

  bool out_of_time() {
    if (stopped) return true;
    if ((++nodes & 255) == 0 && std::chrono::steady_clock::now() >= deadline)
      stopped = true;
    return stopped;
  }
};

struct SearchState {
  PlacementState place;
  std::vector<TimeNs> end_of;
  u64 mask = 0;
  TimeNs makespan = 0;
  double fmu_area = 0, cu_area = 0;
  std::vector<LayerPlacement> placements;
};

TimeNs lower_bound(ExactCtx& ctx, const SearchState& st) {
  TimeNs lb = st.makespan;
  auto& est = ctx.est_scratch;
  for (int i : ctx.topo) {
    if (st.mask & (u64{1} << i)) continue;
    TimeNs e = 0;
    for (int p : ctx.preds[static_cast<std::size_t>(i)]) {
      TimeNs v = (st.mask & (u64{1} << p))
                     ? st.end_of[static_cast<std::size_t>(p)]
                     : est[static_cast<std::size_t>(p)] +
                           ctx.emin[static_cast<std::size_t>(p)];
      e = std::max(e, v);
    }
    est[static_cast<std::size_t>(i)] = e;
    lb = std::max(lb, e + ctx.tail[static_cast<std::size_t>(i)]);
  }
  double fa = st.fmu_area, ca = st.cu_area;
  for (int i = 0; i < ctx.n; ++i)
    if (!(st.mask & (u64{1} << i))) {
      fa += ctx.fmu_area_min[static_cast<std::size_t>(i)];
      ca += ctx.cu_area_min[static_cast<std::size_t>(i)];
    }
  lb = std::max<TimeNs>(lb, static_cast<TimeNs>(std::ceil(fa / ctx.fmu_cap)));
  lb = std::max<TimeNs>(lb, static_cast<TimeNs>(std::ceil(ca / ctx.cu_cap)));
  return lb;
}

void apply_child(ExactCtx& ctx, SearchState& st, int idx,
                 const LayerPlacement& p) {
  (void)ctx;
  st.place.commit(p);
  st.mask |= u64{1} << idx;
  st.end_of[static_cast<std::size_t>(idx)] = p.end;
  st.fmu_area += static_cast<double>(p.end - p.start) *
                 static_cast<double>(p.fmus.size());
  st.cu_area += static_cast<double>(p.end - p.start) *
                static_cast<double>(p.cus.size());
  st.placements.push_back(p);
}

void undo_child(SearchState& st, int idx, const LayerPlacement& p,
                TimeNs prev_makespan) {
  st.place.retract(p);
  st.mask &= ~(u64{1} << idx);
  st.end_of[static_cast<std::size_t>(idx)] = -1;
  st.fmu_area -= static_cast<double>(p.end - p.start) *
                 static_cast<double>(p.fmus.size());
  st.cu_area -= static_cast<double>(p.end - p.start) *
                static_cast<double>(p.cus.size());
  st.placements.pop_back();
  st.makespan = prev_makespan;
}

void dfs(ExactCtx& ctx, SearchState& st, TimeNs node_lb) {
  if (ctx.out_of_time()) {
    ctx.frontier_lb = std::min(ctx.frontier_lb, node_lb);
    return;
  }
  if (std::popcount(st.mask) == ctx.n) {
    if (st.makespan < ctx.best_T) {
      ctx.best_T = st.makespan;
      ctx.best.items = st.placements;
      ctx.best.makespan = st.makespan;
      ctx.have_incumbent = true;
    }
    return;
  }

  struct Child {
    int idx;
    int mode;
    LayerPlacement p;
    TimeNs lb;
  };
  std::vector<Child> children;
  for (int i = 0; i < ctx.n; ++i) {
    if (st.mask & (u64{1} << i)) continue;
    bool eligible = true;
    TimeNs ready = 0;
    for (int p : ctx.preds[static_cast<std::size_t>(i)]) {
      if (!(st.mask & (u64{1} << p))) {
        eligible = false;
        break;
      }
      ready = std::max(ready, st.end_of[static_cast<std::size_t>(p)]);
    }
    if (!eligible) continue;
    int id = ctx.dag.layers[static_cast<std::size_t>(i)].id;
    const auto& es = ctx.model.e_ns[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < es.size(); ++k) {
      LayerPlacement p = st.place.tentative(
          id, static_cast<int>(k), ready, es[k],
          ctx.model.f_of[static_cast<std::size_t>(i)][k],
          ctx.model.c_of[static_cast<std::size_t>(i)][k]);
      // duplicate placements (same window, same units) are interchangeable
      bool dup = false;
      for (const auto& c : children)
        if (c.idx == i && c.p.start == p.start && c.p.end == p.end &&
            c.p.fmus == p.fmus && c.p.cus == p.cus) {
          dup = true;
          break;
        }
      if (dup) continue;
      TimeNs prev_mk = st.makespan;
      apply_child(ctx, st, i, p);
      st.makespan = std::max(prev_mk, p.end);
      TimeNs lb = lower_bound(ctx, st);
      undo_child(st, i, p, prev_mk);
      if (ctx.have_incumbent && lb >= ctx.best_T) continue;
      children.push_back({i, static_cast<int>(k), std::move(p), lb});
    }
  }
  std::sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
    if (a.lb != b.lb) return a.lb < b.lb;
    if (a.p.end != b.p.end) return a.p.end < b.p.end;
    if (a.idx != b.idx) return a.idx < b.idx;
    return a.mode < b.mode;
  });

  for (const auto& ch : children) {
    if (ctx.out_of_time()) {
      ctx.frontier_lb = std::min(ctx.frontier_lb, node_lb);
      return;
    }
    if (ctx.have_incumbent && ch.lb >= ctx.best_T) continue;  // bound moved
    TimeNs prev_mk = st.makespan;
    apply_child(ctx, st, ch.idx, ch.p);
    st.makespan = std::max(prev_mk, ch.p.end);
    dfs(ctx, st, ch.lb);
    undo_child(st, ch.idx, ch.p, prev_mk);
  }
}

/// Multi-start greedy seeding: random topological orders with a mix of
/// min-latency, min-footprint and random mode choices.
void warm_start(ExactCtx& ctx) {
  Rng rng(0x5eedf00d);
  const int trials = std::min(400, 40 * ctx.n);
  for (int t = 0; t < trials; ++t) {
    SearchState st;
    st.place = PlacementState(ctx.model.n_fmu, ctx.model.n_cu);
    st.end_of.assign(static_cast<std::size_t>(ctx.n), -1);

    std::vector<double> key(static_cast<std::size_t>(ctx.n));
    for (auto& v : key) v = rng.next_unit();
    std::vector<int> indeg(static_cast<std::size_t>(ctx.n), 0);
    for (int i = 0; i < ctx.n; ++i)
      for (int p : ctx.preds[static_cast<std::size_t>(i)]) {
        (void)p;
        indeg[static_cast<std::size_t>(i)]++;
      }
    std::vector<int> ready;
    for (int i = 0; i < ctx.n; ++i)
      if (!indeg[static_cast<std::size_t>(i)]) ready.push_back(i);

    while (!ready.empty()) {
      std::size_t pick = 0;
      for (std::size_t i = 1; i < ready.size(); ++i)
        if (key[static_cast<std::size_t>(ready[i])] <
            key[static_cast<std::size_t>(ready[pick])])
          pick = i;
      int i = ready[pick];
      ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(pick));

      const auto& es = ctx.model.e_ns[static_cast<std::size_t>(i)];
      std::size_t k = 0;
      if (t % 3 == 0) {
        for (std::size_t q = 1; q < es.size(); ++q)
          if (es[q] < es[k]) k = q;
      } else if (t % 3 == 1) {
        auto cost = [&](std::size_t q) {
          return static_cast<double>(es[q]) *
                 (ctx.model.f_of[static_cast<std::size_t>(i)][q] +
                  ctx.model.c_of[static_cast<std::size_t>(i)][q]);
        };
        for (std::size_t q = 1; q < es.size(); ++q)
          if (cost(q) < cost(k)) k = q;
      } else {
        k = rng.next_below(es.size());
      }

      TimeNs rdy = 0;
      for (int p : ctx.preds[static_cast<std::size_t>(i)])
        rdy = std::max(rdy, st.end_of[static_cast<std::size_t>(p)]);
      int id = ctx.dag.layers[static_cast<std::size_t>(i)].id;
      LayerPlacement p = st.place.tentative(
          id, static_cast<int>(k), rdy, es[k],
          ctx.model.f_of[static_cast<std::size_t>(i)][k],
          ctx.model.c_of[static_cast<std::size_t>(i)][k]);
      apply_child(ctx, st, i, p);
      st.makespan = std::max(st.makespan, p.end);
      for (int s : ctx.succs[static_cast<std::size_t>(i)])
        if (--indeg[static_cast<std::size_t>(s)] == 0) ready.push_back(s);
    }
    if (st.makespan < ctx.best_T) {
      ctx.best_T = st.makespan;
      ctx.best.items = st.placements;
      ctx.best.makespan = st.makespan;
      ctx.have_incumbent = true;
    }
  }
}

}  // namespace

SolveOutcome solve_exact(const MilpModel& model, double budget_seconds) {
  if (model.dag->layers.size() > 64)
    throw ModelError("built-in exact solver handles at most 64 layers; export the LP");
  const auto t0 = std::chrono::steady_clock::now();
  ExactCtx ctx(model, budget_seconds);

  SearchState root;
  root.place = PlacementState(model.n_fmu, model.n_cu);
  root.end_of.assign(model.dag->layers.size(), -1);
  TimeNs root_lb = lower_bound(ctx, root);

  warm_start(ctx);
  if (std::chrono::steady_clock::now() < ctx.deadline && ctx.best_T > root_lb)
    dfs(ctx, root, root_lb);

  SolveOutcome out;
  out.nodes_explored = ctx.nodes;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!ctx.have_incumbent)
    throw TimeoutError("exact solve exhausted its budget with no incumbent",
                       std::min(ctx.frontier_lb, root_lb));
  out.schedule = ctx.best;
  if (ctx.stopped && ctx.frontier_lb < ctx.best_T) {
    out.proven_optimal = false;
    out.lower_bound = std::max(root_lb, std::min(ctx.frontier_lb, ctx.best_T));
  } else {
    out.proven_optimal = true;
    out.lower_bound = ctx.best_T;
  }
  return out;
}

}  // namespace filco::sched
