#pragma once

#include "filco/schedule.hpp"

namespace filco::sched {

/// 2N decision variables: N reals in [0,1] ordering the layers, N candidate
/// indices selecting each layer's execution mode.
struct Chromosome {
  std::vector<double> encode;
  std::vector<int> candidate;
};

/// Dependency-aware decoding: repeatedly pick, among layers whose
/// predecessors are all ordered, the one with the smallest encode value
/// (ties to the lower id), then list-schedule in that order.
Schedule decode_chromosome(const Chromosome& chrom, const WorkloadDag& dag,
                           const stage1::CandidateTable& table,
                           const HardwareConfig& hw);

struct GaParams {
  int population = 64;
  int iterations = 500;
  double crossover_p = 0.9;
  double mutation_p = -1;  // <0 selects 1/(2N)
  u64 seed = 1;
};

struct GaResult {
  Schedule best;
  Chromosome best_chrom;
  std::vector<TimeNs> best_per_generation;
  double wall_seconds = 0;
};

/// Elitist GA over uniform crossover and uniform-resample mutation; parents
/// drawn uniformly at random. Deterministic for a given seed.
GaResult solve_ga(const WorkloadDag& dag, const stage1::CandidateTable& table,
                  const HardwareConfig& hw, const GaParams& params);

}  // namespace filco::sched
