#include "apls/gf.hpp"
#include "apls/rscode.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace apls;

std::vector<std::uint8_t> random_buffer(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(rng());
    }
    return out;
}

void BM_MulAddRegion(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto src = random_buffer(n, 1);
    auto dst = random_buffer(n, 2);
    for (auto _ : state) {
        gf::mul_add_region(0x8E, src, dst);
        benchmark::DoNotOptimize(dst.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_MulAddRegion)->Arg(4 << 10)->Arg(64 << 10)->Arg(1 << 20);

void BM_Encode(benchmark::State& state) {
    const auto k = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const rs::CodeParams p{k, m, 1 << 20, 64 << 10};
    const auto g = gf::build_generator_matrix(k, m);
    std::vector<rs::Buffer> data;
    for (std::size_t i = 0; i < k; ++i) {
        data.push_back(random_buffer(p.chunk_size, i));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(rs::encode(p, g, data));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * k * p.chunk_size));
}
BENCHMARK(BM_Encode)->Args({6, 3})->Args({6, 6})->Args({10, 4})->Unit(benchmark::kMillisecond);

void BM_DecodingCoefficients(benchmark::State& state) {
    const auto k = static_cast<std::size_t>(state.range(0));
    const rs::CodeParams p{k, 4, 1024, 1024};
    const auto g = gf::build_generator_matrix(k, 4);
    std::vector<rs::ChunkIndex> helpers;
    for (std::size_t i = 1; i <= k; ++i) {
        helpers.push_back(i);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(rs::decoding_coefficients(p, g, 0, helpers));
    }
}
BENCHMARK(BM_DecodingCoefficients)->Arg(6)->Arg(10)->Arg(20);

} // namespace
