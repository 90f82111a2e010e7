#include "filco/ga.hpp"

#include <algorithm>
#include <chrono>
#include <map>

namespace filco::sched {

Schedule decode_chromosome(const Chromosome& chrom, const WorkloadDag& dag,
                           const stage1::CandidateTable& table,
                           const HardwareConfig& hw) {
  const std::size_t n = dag.layers.size();
  if (chrom.encode.size() != n || chrom.candidate.size() != n)
    throw ValidationError("chromosome length does not match layer count");

  // resolved list -> schedule order list
  std::map<int, int> indeg;
  for (const auto& l : dag.layers) indeg[l.id] = 0;
  for (const auto& [a, b] : dag.edges) indeg[b]++;

  std::vector<int> resolved;
  for (const auto& l : dag.layers)
    if (indeg[l.id] == 0) resolved.push_back(l.id);

  std::vector<int> order;
  order.reserve(n);
  while (!resolved.empty()) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < resolved.size(); ++i) {
      double ei = chrom.encode[static_cast<std::size_t>(dag.index_of(resolved[i]))];
      double ep = chrom.encode[static_cast<std::size_t>(dag.index_of(resolved[pick]))];
      if (ei < ep || (ei == ep && resolved[i] < resolved[pick])) pick = i;
    }
    int id = resolved[pick];
    resolved.erase(resolved.begin() + static_cast<std::ptrdiff_t>(pick));
    order.push_back(id);
    for (int succ : dag.successors(id))
      if (--indeg[succ] == 0) resolved.push_back(succ);
  }

  std::vector<int> modes(n);
  for (std::size_t i = 0; i < n; ++i) {
    int c = chrom.candidate[i];
    const auto& lc = table.for_layer(dag.layers[i].id);
    if (c < 0 || c >= static_cast<int>(lc.modes.size()))
      throw ValidationError("candidate gene out of range for layer " +
                            std::to_string(dag.layers[i].id));
    modes[i] = c;
  }
  return place_in_order(order, modes, dag, table, hw);
}

namespace {

Chromosome random_chromosome(Rng& rng, const WorkloadDag& dag,
                             const stage1::CandidateTable& table) {
  Chromosome c;
  c.encode.reserve(dag.layers.size());
  c.candidate.reserve(dag.layers.size());
  for (const auto& l : dag.layers) {
    c.encode.push_back(rng.next_unit());
    const auto& lc = table.for_layer(l.id);
    c.candidate.push_back(static_cast<int>(rng.next_below(lc.modes.size())));
  }
  return c;
}

}  // namespace

GaResult solve_ga(const WorkloadDag& dag, const stage1::CandidateTable& table,
                  const HardwareConfig& hw, const GaParams& params) {
  if (params.population < 2 || params.iterations < 1)
    throw ValidationError("GA needs population >= 2 and iterations >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = dag.layers.size();
  const double mut_p =
      params.mutation_p >= 0 ? params.mutation_p : 1.0 / (2.0 * static_cast<double>(n));

  struct Individual {
    Chromosome chrom;
    TimeNs fitness = 0;
  };

  auto evaluate = [&](const Chromosome& c) {
    return decode_chromosome(c, dag, table, hw).makespan;
  };

  std::vector<Individual> pop(static_cast<std::size_t>(params.population));
  for (std::size_t i = 0; i < pop.size(); ++i) {
    Rng rng = Rng::fork(params.seed, i);
    pop[i].chrom = random_chromosome(rng, dag, table);
    pop[i].fitness = evaluate(pop[i].chrom);
  }

  auto best_of = [&](const std::vector<Individual>& v) {
    std::size_t b = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].fitness < v[b].fitness) b = i;
    return b;
  };

  GaResult res;
  std::size_t elite = best_of(pop);
  res.best_chrom = pop[elite].chrom;
  res.best_per_generation.push_back(pop[elite].fitness);

  for (int gen = 1; gen <= params.iterations; ++gen) {
    std::vector<Individual> next(pop.size());
    next[0] = pop[elite];  // elitist survival
    for (std::size_t i = 1; i < pop.size(); ++i) {
      Rng rng = Rng::fork(params.seed,
                          (static_cast<u64>(gen) << 24) ^ static_cast<u64>(i));
      const Chromosome& pa = pop[rng.next_below(pop.size())].chrom;
      const Chromosome& pb = pop[rng.next_below(pop.size())].chrom;
      Chromosome child = pa;
      if (rng.next_bool(params.crossover_p)) {
        for (std::size_t g = 0; g < n; ++g) {
          if (rng.next_bool(0.5)) child.encode[g] = pb.encode[g];
          if (rng.next_bool(0.5)) child.candidate[g] = pb.candidate[g];
        }
      }
      for (std::size_t g = 0; g < n; ++g) {
        if (rng.next_bool(mut_p)) child.encode[g] = rng.next_unit();
        if (rng.next_bool(mut_p)) {
          const auto& lc = table.for_layer(dag.layers[g].id);
          child.candidate[g] = static_cast<int>(rng.next_below(lc.modes.size()));
        }
      }
      next[i].fitness = evaluate(child);
      next[i].chrom = std::move(child);
    }
    pop = std::move(next);
    elite = best_of(pop);
    res.best_chrom = pop[elite].chrom;
    res.best_per_generation.push_back(pop[elite].fitness);
  }

  res.best = decode_chromosome(pop[elite].chrom, dag, table, hw);
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace filco::sched
