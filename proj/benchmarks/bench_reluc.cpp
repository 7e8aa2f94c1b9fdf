// Throughput benchmarks for the hot paths: forward evaluation, explicit
// construction, certification grids, and the SGD trainer.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "reluc/builders.hpp"
#include "reluc/erm.hpp"
#include "reluc/network.hpp"
#include "reluc/rng.hpp"
#include "reluc/targets.hpp"

using namespace reluc;

namespace {

Network holder_net(int d, int NM) {
  const auto target = builtin_target("affine", d, 1.0, 1.0);
  return build_holder_approximant(target, NM, NM,
                                  BuildProfile::paper_budget)
      .first;
}

}  // namespace

static void BM_evaluate_holder(benchmark::State& state) {
  const int d = 2;
  const Network net = holder_net(d, static_cast<int>(state.range(0)));
  Rng rng(1);
  Eigen::VectorXd x(d);
  for (auto _ : state) {
    for (int i = 0; i < d; ++i) x(i) = rng.uniform01();
    benchmark::DoNotOptimize(evaluate(net, x));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_evaluate_holder)->Arg(1)->Arg(2)->Arg(3);

static void BM_evaluate_batch(benchmark::State& state) {
  const Network net = holder_net(2, 2);
  const int cols = static_cast<int>(state.range(0));
  Rng rng(2);
  Eigen::MatrixXd X(2, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < 2; ++i) X(i, j) = rng.uniform01();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_batch(net, X));
  state.SetItemsProcessed(state.iterations() * cols);
}
BENCHMARK(BM_evaluate_batch)->Arg(64)->Arg(1024);

static void BM_build_holder(benchmark::State& state) {
  const int NM = static_cast<int>(state.range(0));
  const auto target = builtin_target("affine", 2, 1.0, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_holder_approximant(
        target, NM, NM, BuildProfile::paper_budget));
}
BENCHMARK(BM_build_holder)->Arg(1)->Arg(2)->Arg(3);

static void BM_build_product(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(build_product_net(
        static_cast<int>(state.range(0)), 6, -1.0, 1.0,
        BuildProfile::paper_budget));
}
BENCHMARK(BM_build_product)->Arg(2)->Arg(8);

static void BM_fit_points_grouped(benchmark::State& state) {
  const int P = 256;
  Rng rng(3);
  std::vector<double> values(P);
  for (double& v : values) v = rng.uniform01();
  for (auto _ : state)
    benchmark::DoNotOptimize(build_point_fitter(
        values, 1, 16, 1, BuildProfile::paper_budget));
}
BENCHMARK(BM_fit_points_grouped);

static void BM_certify_product(benchmark::State& state) {
  const Network net =
      build_product_net(2, 6, -1.0, 1.0, BuildProfile::paper_budget);
  const int axis = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        certify_product_net(net, 2, 6, -1.0, 1.0,
                            BuildProfile::paper_budget, axis));
  state.SetItemsProcessed(state.iterations() * axis * axis);
}
BENCHMARK(BM_certify_product)->Arg(101)->Arg(201);

static void BM_train_small(benchmark::State& state) {
  const auto target = builtin_target("affine", 1, 1.0, 1.0);
  SupportSpec spec;
  spec.kind = SupportSpec::Kind::cube;
  spec.d = 1;
  NoiseSpec noise;
  noise.kind = NoiseSpec::Kind::gaussian;
  noise.scale = 0.1;
  const Dataset ds = generate_dataset(target, spec, noise, 512, 7);
  TrainConfig cfg;
  cfg.plan.W = 16;
  cfg.plan.D = 3;
  cfg.plan.B = 1.0;
  cfg.epochs = static_cast<int>(state.range(0));
  cfg.batch_size = 64;
  cfg.seed = 5;
  for (auto _ : state) benchmark::DoNotOptimize(train_erm(ds, cfg));
}
BENCHMARK(BM_train_small)->Arg(10)->Arg(40);

BENCHMARK_MAIN();
