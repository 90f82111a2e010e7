#include "filco/workload.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace filco {

using nlohmann::ordered_json;

void WorkloadDag::validate() const {
  std::set<int> ids;
  for (const auto& l : layers) {
    if (l.m < 1 || l.k < 1 || l.n < 1)
      throw ValidationError("layer " + std::to_string(l.id) +
                            ": dimensions must be >= 1");
    if (!ids.insert(l.id).second)
      throw ValidationError("duplicate layer id " + std::to_string(l.id));
  }
  for (const auto& [a, b] : edges) {
    if (a == b)
      throw ValidationError("self-edge on layer " + std::to_string(a));
    if (!ids.count(a) || !ids.count(b))
      throw ValidationError("edge (" + std::to_string(a) + "," +
                            std::to_string(b) + ") references unknown layer id");
  }
  // Kahn; leftovers expose a cycle which we name via parent chase.
  std::map<int, int> indeg;
  std::map<int, std::vector<int>> adj;
  for (const auto& l : layers) indeg[l.id] = 0;
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    indeg[b]++;
  }
  std::queue<int> q;
  for (auto& [id, d] : indeg)
    if (d == 0) q.push(id);
  std::size_t seen = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    ++seen;
    for (int v : adj[u])
      if (--indeg[v] == 0) q.push(v);
  }
  if (seen != layers.size()) {
    int start = -1;
    for (auto& [id, d] : indeg)
      if (d > 0) {
        start = id;
        break;
      }
    std::set<int> on_stack;
    std::vector<int> cycle;
    int cur = start;
    while (on_stack.insert(cur).second) {
      cycle.push_back(cur);
      for (int v : adj[cur])
        if (indeg[v] > 0) {
          cur = v;
          break;
        }
    }
    cycle.push_back(cur);
    std::ostringstream os;
    os << "workload graph has a cycle:";
    for (int id : cycle) os << " " << id;
    throw ValidationError(os.str());
  }
}

bool WorkloadDag::has_layer(int id) const {
  return std::any_of(layers.begin(), layers.end(),
                     [&](const LayerNode& l) { return l.id == id; });
}

int WorkloadDag::index_of(int id) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].id == id) return static_cast<int>(i);
  throw ValidationError("no layer with id " + std::to_string(id));
}

const LayerNode& WorkloadDag::layer(int id) const {
  return layers[static_cast<std::size_t>(index_of(id))];
}

std::vector<int> WorkloadDag::predecessors(int id) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges)
    if (b == id) out.push_back(a);
  return out;
}

std::vector<int> WorkloadDag::successors(int id) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges)
    if (a == id) out.push_back(b);
  return out;
}

std::vector<int> WorkloadDag::topo_order() const {
  std::map<int, int> indeg;
  for (const auto& l : layers) indeg[l.id] = 0;
  for (const auto& [a, b] : edges) indeg[b]++;
  std::set<int> ready;
  for (auto& [id, d] : indeg)
    if (d == 0) ready.insert(id);
  std::vector<int> order;
  while (!ready.empty()) {
    int u = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(u);
    for (int v : successors(u))
      if (--indeg[v] == 0) ready.insert(v);
  }
  return order;
}

std::string WorkloadDag::to_json() const {
  ordered_json j;
  j["layers"] = ordered_json::array();
  for (const auto& l : layers) {
    j["layers"].push_back({{"id", l.id},
                           {"m", l.m},
                           {"k", l.k},
                           {"n", l.n},
                           {"dtype", dtype_name(l.dtype)},
                           {"name", l.name}});
  }
  j["edges"] = ordered_json::array();
  for (const auto& [a, b] : edges) j["edges"].push_back({a, b});
  return j.dump(2) + "\n";
}

WorkloadDag parse_workload(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("workload file: ") + e.what());
  }
  WorkloadDag dag;
  try {
    if (!j.contains("layers") || !j["layers"].is_array())
      throw ParseError("workload file: missing 'layers' array");
    for (const auto& jl : j["layers"]) {
      LayerNode l;
      l.id = jl.at("id").get<int>();
      l.m = jl.at("m").get<i64>();
      l.k = jl.at("k").get<i64>();
      l.n = jl.at("n").get<i64>();
      l.dtype = jl.contains("dtype") ? dtype_from_name(jl["dtype"].get<std::string>())
                                     : Dtype::f32;
      l.name = jl.value("name", "L" + std::to_string(l.id));
      dag.layers.push_back(std::move(l));
    }
    if (j.contains("edges"))
      for (const auto& je : j["edges"])
        dag.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("workload file: ") + e.what());
  }
  std::sort(dag.edges.begin(), dag.edges.end());
  dag.edges.erase(std::unique(dag.edges.begin(), dag.edges.end()),
                  dag.edges.end());
  dag.validate();
  return dag;
}

WorkloadDag gen_transformer(int seq_len, int heads, int head_dim,
                            double mlp_ratio, int blocks, Dtype dtype) {
  if (seq_len < 1 || heads < 1 || head_dim < 1 || blocks < 1 || mlp_ratio <= 0)
    throw DimensionError("gen_transformer: all arguments must be >= 1");
  const i64 d = static_cast<i64>(heads) * head_dim;
  const double hidden_f = mlp_ratio * static_cast<double>(d);
  if (hidden_f != std::floor(hidden_f))
    throw DimensionError("gen_transformer: mlp_ratio*d is not an integer");
  const i64 hidden = static_cast<i64>(hidden_f);

  WorkloadDag dag;
  int next_id = 0;
  int block_tail = -1;  // last layer of the previous block
  auto add = [&](i64 m, i64 k, i64 n, const std::string& name,
                 const std::vector<int>& preds) {
    LayerNode l{next_id++, m, k, n, dtype, name};
    dag.layers.push_back(l);
    for (int p : preds) dag.edges.emplace_back(p, l.id);
    return l.id;
  };

  for (int b = 0; b < blocks; ++b) {
    const std::string tag = "b" + std::to_string(b) + ".";
    std::vector<int> in = block_tail < 0 ? std::vector<int>{}
                                         : std::vector<int>{block_tail};
    int q = add(seq_len, d, d, tag + "q_proj", in);
    int kk = add(seq_len, d, d, tag + "k_proj", in);
    int v = add(seq_len, d, d, tag + "v_proj", in);
    std::vector<int> av_ids;
    for (int h = 0; h < heads; ++h) {
      int sc = add(seq_len, head_dim, seq_len,
                   tag + "score.h" + std::to_string(h), {q, kk});
      int av = add(seq_len, seq_len, head_dim,
                   tag + "attnv.h" + std::to_string(h), {sc, v});
      av_ids.push_back(av);
    }
    int proj = add(seq_len, d, d, tag + "out_proj", av_ids);
    int ff1 = add(seq_len, d, hidden, tag + "ffn_up", {proj});
    int ff2 = add(seq_len, hidden, d, tag + "ffn_down", {ff1});
    block_tail = ff2;
  }
  std::sort(dag.edges.begin(), dag.edges.end());
  dag.validate();
  return dag;
}

WorkloadDag gen_mlp(const std::vector<std::array<i64, 3>>& layer_dims,
                    Dtype dtype) {
  if (layer_dims.empty()) throw DimensionError("gen_mlp: empty layer list");
  WorkloadDag dag;
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    const auto& [m, k, n] = layer_dims[i];
    if (i > 0 && k != layer_dims[i - 1][2])
      throw DimensionError("gen_mlp: layer " + std::to_string(i) +
                           " k=" + std::to_string(k) +
                           " does not chain from previous n=" +
                           std::to_string(layer_dims[i - 1][2]));
    dag.layers.push_back({static_cast<int>(i), m, k, n, dtype,
                          "fc" + std::to_string(i)});
    if (i > 0) dag.edges.emplace_back(static_cast<int>(i) - 1, static_cast<int>(i));
  }
  dag.validate();
  return dag;
}

DiversityProfile diversity_profile(const WorkloadDag& dag) {
  DiversityProfile p;
  for (const auto& l : dag.layers) p.total_ops += l.ops();
  if (dag.layers.size() < 2) return p;  // diversity 0 by definition

  auto cv = [&](auto dim_of) {
    double mean = 0;
    for (const auto& l : dag.layers) mean += static_cast<double>(dim_of(l));
    mean /= static_cast<double>(dag.layers.size());
    double var = 0;
    for (const auto& l : dag.layers) {
      double d = static_cast<double>(dim_of(l)) - mean;
      var += d * d;
    }
    var /= static_cast<double>(dag.layers.size());
    return std::sqrt(var) / mean;
  };
  p.diversity = (cv([](const LayerNode& l) { return l.m; }) +
                 cv([](const LayerNode& l) { return l.k; }) +
                 cv([](const LayerNode& l) { return l.n; })) /
                3.0;
  return p;
}

}  // namespace filco
