#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "hetnet/objective.hpp"
#include "hetnet/skipnet.hpp"

using namespace hetnet;

static void BM_PoissonNll(benchmark::State& state) {
    const auto data = bench::linear_data(std::size_t(state.range(0)), 10);
    const auto f = bench::random_vector(data.x.n(), 1);
    const auto g = bench::random_vector(data.x.n(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(poisson_nll(f, g, data.network, 5.0));
}
BENCHMARK(BM_PoissonNll)->Arg(100)->Arg(400)->Arg(1600);

static void BM_PoissonNllNaive(benchmark::State& state) {
    const auto data = bench::linear_data(std::size_t(state.range(0)), 10);
    const auto f = bench::random_vector(data.x.n(), 1);
    const auto g = bench::random_vector(data.x.n(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(poisson_nll_naive(f, g, data.network, 5.0));
}
BENCHMARK(BM_PoissonNllNaive)->Arg(100)->Arg(400)->Arg(1600);

static void BM_NodeGradients(benchmark::State& state) {
    const auto data = bench::linear_data(std::size_t(state.range(0)), 10);
    const auto f = bench::random_vector(data.x.n(), 1);
    const auto g = bench::random_vector(data.x.n(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(nll_node_gradients(f, g, data.network, 5.0, Side::alpha));
}
BENCHMARK(BM_NodeGradients)->Arg(100)->Arg(1600);

static void BM_ForwardBatch(benchmark::State& state) {
    const auto data = bench::linear_data(100, std::size_t(state.range(0)));
    const auto net = init_skipnet(data.x.p(), {32, 16}, 10.0, 3);
    for (auto _ : state) benchmark::DoNotOptimize(forward_batch(net, data.x));
}
BENCHMARK(BM_ForwardBatch)->Arg(200)->Arg(1000);

static void BM_Backward(benchmark::State& state) {
    const auto data = bench::linear_data(100, std::size_t(state.range(0)));
    const auto net = init_skipnet(data.x.p(), {32, 16}, 10.0, 3);
    const auto u = bench::random_vector(data.x.n(), 4);
    for (auto _ : state) benchmark::DoNotOptimize(backward(net, data.x, u));
}
BENCHMARK(BM_Backward)->Arg(200)->Arg(1000);
