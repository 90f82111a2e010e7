#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "filco/workload.hpp"

using namespace filco;

TEST_CASE("parse minimal two-layer chain") {
  const char* text = R"({
    "layers": [
      {"id": 0, "m": 64, "k": 64, "n": 64, "dtype": "fp32", "name": "a"},
      {"id": 1, "m": 64, "k": 64, "n": 64, "dtype": "fp32", "name": "b"}
    ],
    "edges": [[0, 1]]
  })";
  WorkloadDag dag = parse_workload(text);
  CHECK(dag.layers.size() == 2);
  REQUIRE(dag.edges.size() == 1);
  CHECK(dag.edges[0] == std::pair<int, int>(0, 1));
}

TEST_CASE("edge to unknown id rejected") {
  const char* text = R"({
    "layers": [{"id": 0, "m": 4, "k": 4, "n": 4}],
    "edges": [[0, 9]]
  })";
  CHECK_THROWS_AS(parse_workload(text), ValidationError);
}

TEST_CASE("cycle detection names a cycle") {
  const char* text = R"({
    "layers": [{"id": 0, "m": 4, "k": 4, "n": 4},
               {"id": 1, "m": 4, "k": 4, "n": 4}],
    "edges": [[0, 1], [1, 0]]
  })";
  try {
    parse_workload(text);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("cycle") != std::string::npos);
  }
}

TEST_CASE("three-layer diamond fan-out") {
  const char* text = R"({
    "layers": [{"id": 0, "m": 8, "k": 8, "n": 8},
               {"id": 1, "m": 8, "k": 8, "n": 8},
               {"id": 2, "m": 8, "k": 8, "n": 8}],
    "edges": [[0, 1], [0, 2]]
  })";
  WorkloadDag dag = parse_workload(text);
  CHECK(dag.predecessors(1) == std::vector<int>{0});
  CHECK(dag.predecessors(2) == std::vector<int>{0});
  CHECK(dag.successors(0) == std::vector<int>({1, 2}));
  // 1 and 2 unblock only after 0
  auto order = dag.topo_order();
  CHECK(order[0] == 0);
}

TEST_CASE("malformed json gives parse error") {
  CHECK_THROWS_AS(parse_workload("{nope"), ParseError);
  CHECK_THROWS_AS(parse_workload(R"({"layers": "what"})"), ParseError);
}

TEST_CASE("transformer generator: BERT-32 single block") {
  WorkloadDag dag = gen_transformer(32, 12, 64, 4.0, 1);
  dag.validate();
  // d = 768, hidden = 3072
  bool found_ffn_up = false;
  for (const auto& l : dag.layers) {
    if (l.name.find("ffn_up") != std::string::npos) {
      found_ffn_up = true;
      CHECK(l.m == 32);
      CHECK(l.k == 768);
      CHECK(l.n == 3072);
    }
  }
  CHECK(found_ffn_up);
  // qkv + 2 per head + proj + 2 ffn
  CHECK(dag.layers.size() == 3 + 2 * 12 + 1 + 2);
}

TEST_CASE("transformer generator: per-head score dims") {
  WorkloadDag dag = gen_transformer(128, 4, 64, 1.0, 1);
  for (const auto& l : dag.layers) {
    if (l.name.find("score") != std::string::npos) {
      CHECK(l.m == 128);
      CHECK(l.k == 64);
      CHECK(l.n == 128);
    }
  }
}

TEST_CASE("transformer generator: degenerate seq length stays acyclic") {
  WorkloadDag dag = gen_transformer(1, 1, 8, 1.0, 1);
  dag.validate();
  for (const auto& l : dag.layers)
    if (l.name.find("proj") != std::string::npos || l.name.find("ffn") != std::string::npos ||
        l.name.find("score") != std::string::npos)
      CHECK(l.m == 1);
}

TEST_CASE("transformer generator: non-integer hidden dim rejected") {
  CHECK_THROWS_AS(gen_transformer(8, 3, 3, 0.5, 1), DimensionError);
}

TEST_CASE("transformer generator: blocks scale layers and ops linearly") {
  WorkloadDag one = gen_transformer(16, 2, 16, 2.0, 1);
  WorkloadDag three = gen_transformer(16, 2, 16, 2.0, 3);
  CHECK(three.layers.size() == 3 * one.layers.size());
  CHECK(diversity_profile(three).total_ops == 3 * diversity_profile(one).total_ops);
}

TEST_CASE("mlp generator: identical layers have zero diversity") {
  std::vector<std::array<i64, 3>> dims(4, {4096, 4096, 4096});
  WorkloadDag dag = gen_mlp(dims);
  CHECK(diversity_profile(dag).diversity == doctest::Approx(0.0));
  CHECK(dag.edges.size() == 3);
}

TEST_CASE("mlp generator: chain mismatch rejected") {
  CHECK_THROWS_AS(gen_mlp({{8, 8, 16}, {8, 8, 8}}), DimensionError);
}

TEST_CASE("diversity matches an independent CV computation") {
  WorkloadDag dag = gen_mlp({{256, 256, 256}, {256, 256, 1024}});
  // CV of m: 0; k: 0; n over {256, 1024}: mean 640, stdev 384
  double expect = (0.0 + 0.0 + 384.0 / 640.0) / 3.0;
  CHECK(diversity_profile(dag).diversity == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("total_ops is the plain sum over layers") {
  WorkloadDag dag = gen_transformer(32, 12, 64, 4.0, 1);
  i64 sum = 0;
  for (const auto& l : dag.layers) sum += l.m * l.k * l.n;
  CHECK(diversity_profile(dag).total_ops == sum);
}

TEST_CASE("diversity is permutation-invariant and scale-covariant") {
  WorkloadDag dag = gen_mlp({{64, 64, 128}, {64, 128, 256}, {64, 256, 32}});
  auto base = diversity_profile(dag);

  WorkloadDag shuffled = dag;
  std::reverse(shuffled.layers.begin(), shuffled.layers.end());
  auto p2 = diversity_profile(shuffled);
  CHECK(p2.diversity == doctest::Approx(base.diversity));
  CHECK(p2.total_ops == base.total_ops);

  WorkloadDag scaled = dag;
  for (auto& l : scaled.layers) {
    l.m *= 3;
    l.k *= 3;
    l.n *= 3;
  }
  auto p3 = diversity_profile(scaled);
  CHECK(p3.diversity == doctest::Approx(base.diversity));
  CHECK(p3.total_ops == 27 * base.total_ops);
}

TEST_CASE("generated dags round-trip through the file format") {
  WorkloadDag dag = gen_transformer(16, 2, 8, 2.0, 2);
  WorkloadDag back = parse_workload(dag.to_json());
  CHECK(back.layers.size() == dag.layers.size());
  CHECK(back.edges == dag.edges);
  CHECK(back.to_json() == dag.to_json());
}
