#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "filco/common.hpp"

namespace filco {

/// One dense matrix-multiply layer: (m x k) * (k x n).
struct LayerNode {
  int id = 0;
  i64 m = 1, k = 1, n = 1;
  Dtype dtype = Dtype::f32;
  std::string name;

  i64 ops() const { return m * k * n; }  // multiply-accumulates
};

/// DAG of MM layers. Edge (i, j) means layer j depends on layer i.
/// Edges order execution only; every layer owns its operand buffers.
class WorkloadDag {
 public:
  std::vector<LayerNode> layers;
  std::vector<std::pair<int, int>> edges;  // sorted, unique, by id

  /// Throws ValidationError on duplicate ids, dangling edge endpoints,
  /// self-edges, or cycles (the message names one cycle).
  void validate() const;

  bool has_layer(int id) const;
  const LayerNode& layer(int id) const;
  int index_of(int id) const;

  std::vector<int> predecessors(int id) const;
  std::vector<int> successors(int id) const;

  /// Ids in a deterministic topological order (Kahn, lowest id first).
  std::vector<int> topo_order() const;

  std::string to_json() const;
};

struct DiversityProfile {
  i64 total_ops = 0;    // sum of m*k*n over layers
  double diversity = 0; // mean coefficient of variation of m, k, n
};

WorkloadDag parse_workload(const std::string& text);

/// Transformer block(s) as MM layers only: QKV projections, per-head
/// score and attention-times-V, output projection, FFN up/down.
/// d = heads * head_dim; mlp hidden dim = mlp_ratio * d (must be integral).
WorkloadDag gen_transformer(int seq_len, int heads, int head_dim,
                            double mlp_ratio, int blocks,
                            Dtype dtype = Dtype::f32);

/// Linear chain of MM layers; requires k[i+1] == n[i].
WorkloadDag gen_mlp(const std::vector<std::array<i64, 3>>& layer_dims,
                    Dtype dtype = Dtype::f32);

DiversityProfile diversity_profile(const WorkloadDag& dag);

}  // namespace filco
