#include "apls/netsim.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace apls;

flow::DataFlowGraph make_graph(plan::Strategy s, std::size_t packets) {
    const rs::CodeParams p{6, 6, packets * 4096, 4096};
    const auto g = gf::build_generator_matrix(6, 6);
    std::vector<plan::Agent> survivors;
    for (std::size_t c = 1; c < 12; ++c) {
        survivors.push_back({static_cast<plan::NodeId>(c), c});
    }
    plan::LoadTable load;
    std::mt19937_64 rng(1);
    plan::PlanOptions opts;
    opts.starter = 100;
    return flow::build_flow(plan::build_plan(p, g, 0, survivors, s, load, 0, rng, opts));
}

void BM_BuildFlow(benchmark::State& state) {
    const auto packets = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(make_graph(plan::Strategy::APLSPipelined, packets));
    }
}
BENCHMARK(BM_BuildFlow)->Arg(64)->Arg(1024);

void BM_Simulate(benchmark::State& state) {
    const auto s = static_cast<plan::Strategy>(state.range(0));
    const auto graph = make_graph(s, static_cast<std::size_t>(state.range(1)));
    std::map<plan::NodeId, sim::NodeProfile> prof;
    for (plan::NodeId n = 1; n < 12; ++n) {
        prof[n] = {100e6, 100e6};
    }
    prof[100] = {sim::kUnlimited, sim::kUnlimited};
    for (auto _ : state) {
        benchmark::DoNotOptimize(sim::simulate(graph, prof));
    }
}
BENCHMARK(BM_Simulate)
    ->Args({static_cast<int>(plan::Strategy::ECPipe), 256})
    ->Args({static_cast<int>(plan::Strategy::APLSPipelined), 256})
    ->Args({static_cast<int>(plan::Strategy::APLSParallel), 256})
    ->Unit(benchmark::kMillisecond);

} // namespace
