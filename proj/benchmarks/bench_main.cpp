// Micro benchmarks for the hot numeric paths: forward recursion, one
// Baum-Welch round, the factorial joint likelihood, and k-means init.
// Run with --benchmark_filter=... to pick a subset.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "motionhmm/fhmm.hpp"
#include "motionhmm/hmm.hpp"
#include "motionhmm/rng.hpp"

namespace {

using namespace motionhmm;

// A trained-ish model plus sequences drawn from it, sized by the benchmark
// arguments so state/frame scaling is visible.
struct Setup {
  HmmParams model;
  std::vector<ObservationSequence> sequences;
};

// Hand-rolled generator model; make_hmm needs data, which we are about to
// draw from this one.
HmmParams seed_model(std::size_t num_states, std::size_t dim) {
  Topology topo{TopologyKind::kLeftToRight, 1};
  HmmParams p;
  p.num_states = num_states;
  p.dim = dim;
  p.topology = topo;
  TransitionInit init = init_transition(num_states, topo, InitMode::kUniform, 17);
  p.start = init.start;
  p.transition = init.transition;
  p.transition_mask = init.mask;
  p.means = Matrix(num_states, dim);
  p.covariances = Matrix(num_states, dim);
  for (std::size_t k = 0; k < num_states; ++k)
    for (std::size_t d = 0; d < dim; ++d) {
      p.means(k, d) = 2.0 * double(k) + 0.1 * double(d);
      p.covariances(k, d) = 0.5;
    }
  return p;
}

Setup make_setup(std::size_t num_states, std::size_t dim, std::size_t frames,
                 std::size_t count) {
  Topology topo{TopologyKind::kLeftToRight, 1};
  Setup s;
  s.sequences.reserve(count);
  HmmParams gen = seed_model(num_states, dim);
  for (std::size_t n = 0; n < count; ++n)
    s.sequences.push_back(sample(gen, frames, derive_seed(17, "bench", n)));
  s.model = make_hmm(num_states, dim, topo, InitMode::kUniform, 17, s.sequences);
  return s;
}

void BM_Forward(benchmark::State& state) {
  Setup s = make_setup(static_cast<std::size_t>(state.range(0)), 6,
                       static_cast<std::size_t>(state.range(1)), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(forward_log(s.model, s.sequences.front()));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Forward)->Args({5, 100})->Args({10, 100})->Args({10, 1000});

void BM_BaumWelchIteration(benchmark::State& state) {
  Setup s = make_setup(static_cast<std::size_t>(state.range(0)), 6, 100, 10);
  TrainConfig cfg;
  cfg.iterations = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(train(s.model, s.sequences, cfg));
}
BENCHMARK(BM_BaumWelchIteration)->Arg(5)->Arg(10);

void BM_FhmmJointLikelihood(benchmark::State& state) {
  const auto chains = static_cast<std::size_t>(state.range(0));
  Setup s = make_setup(3, 6, 50, 4);
  TrainConfig cfg;
  cfg.iterations = 3;
  cfg.seed = 17;
  FhmmParams fhmm = sequential_train(3, chains, {TopologyKind::kLeftToRight, 1},
                                     InitMode::kUniform, s.sequences, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(log_likelihood(fhmm, s.sequences.front()));
}
BENCHMARK(BM_FhmmJointLikelihood)->Arg(1)->Arg(2)->Arg(3);

void BM_KmeansInit(benchmark::State& state) {
  Setup s = make_setup(static_cast<std::size_t>(state.range(0)), 6, 200, 10);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        init_emission_kmeans(s.sequences, static_cast<std::size_t>(state.range(0)), 17));
}
BENCHMARK(BM_KmeansInit)->Arg(5)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
