#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "hetnet/baselines.hpp"
#include "hetnet/optimizer.hpp"

using namespace hetnet;

static void BM_UpdateSideEpochs(benchmark::State& state) {
    const auto data = bench::linear_data(100, 200);
    const auto net = init_skipnet(data.x.p(), {32, 16}, 10.0, 5);
    const Eigen::VectorXd fixed = Eigen::VectorXd::Zero(Eigen::Index(data.x.n()));
    UpdateParams params;
    params.lambda = 1.0;
    params.gamma = 0.01;
    params.z_n = 5.0;
    params.inner_epochs = int(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(update_side(Side::alpha, net, data.x, data.network, fixed, params));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UpdateSideEpochs)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_MleFit(benchmark::State& state) {
    const auto data = bench::linear_data(std::size_t(state.range(0)), 10);
    for (auto _ : state) benchmark::DoNotOptimize(mle_fit(data.network, 5.0));
}
BENCHMARK(BM_MleFit)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

static void BM_TwoStage(benchmark::State& state) {
    const auto data = bench::linear_data(100, std::size_t(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(two_stage_select(data.network, data.x, 5.0));
}
BENCHMARK(BM_TwoStage)->Arg(200)->Unit(benchmark::kMillisecond);
