#include <benchmark/benchmark.h>

#include <random>

#include "agsfh/anchor_graph.hpp"
#include "agsfh/retrieval.hpp"
#include "agsfh/simplex_opt.hpp"
#include "agsfh/training.hpp"

namespace {

using namespace agsfh;

Eigen::MatrixXd gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(gen);
  return m;
}

void BM_ProjectSimplex(benchmark::State& state) {
  const Eigen::VectorXd v = gaussian(state.range(0), 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(project_simplex(v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProjectSimplex)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_OgmSolve(benchmark::State& state) {
  const Index p = state.range(0);
  const QuadraticTerm q = QuadraticTerm::low_rank(gaussian(p, 60, 2) / std::sqrt(double(p)), 10.0);
  const ColumnQP qp(q, gaussian(p, 1, 3));
  for (auto _ : state) benchmark::DoNotOptimize(ogm_solve(qp, std::nullopt));
}
BENCHMARK(BM_OgmSolve)->Arg(64)->Arg(256)->Arg(900);

void BM_AnchorGraph(benchmark::State& state) {
  const Eigen::MatrixXd x = gaussian(150, state.range(0), 4);
  const Eigen::MatrixXd anchors = gaussian(150, 900, 5);
  for (auto _ : state) benchmark::DoNotOptimize(build_anchor_graph(x, anchors, 45));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AnchorGraph)->Arg(1000)->Arg(2000)->Arg(4000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_HammingRank(benchmark::State& state) {
  const Index bits = state.range(0);
  const PackedCodes db = PackedCodes::pack(sign_of(gaussian(bits, 20000, 6)));
  const PackedCodes query = PackedCodes::pack(sign_of(gaussian(bits, 1, 7)));
  const CodeIndex index(db);
  for (auto _ : state) benchmark::DoNotOptimize(hamming_rank(query.code(0), index));
}
BENCHMARK(BM_HammingRank)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_TrainIteration(benchmark::State& state) {
  SynthSpec spec;
  spec.count = state.range(0);
  const Dataset data = synth_multimodal(spec);
  Hyperparams h;
  h.anchors = 64;
  h.neighbors = 8;
  h.clusters = 4;
  Trainer trainer(data, h);
  for (auto _ : state) trainer.iterate();
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TrainIteration)->Arg(2000)->Arg(4000)->Arg(8000)->Unit(benchmark::kMillisecond)->Complexity();

}  // namespace

BENCHMARK_MAIN();
