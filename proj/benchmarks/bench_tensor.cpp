#include "quadbraid/sampling.hpp"
#include "quadbraid/tensor.hpp"

#include <benchmark/benchmark.h>

using namespace quadbraid;

namespace {

DenseOperator random_op(std::vector<int> legs, Sampler& s) {
    int sz = 1;
    for (size_t i = 0; i < legs.size(); ++i) sz *= 2;
    Matrix m(sz, sz);
    for (int r = 0; r < sz; ++r)
        for (int c = 0; c < sz; ++c) m(r, c) = Cplx(s.uniform(-1, 1), s.uniform(-1, 1));
    return DenseOperator(std::move(legs), 2, std::move(m));
}

void BM_embed(benchmark::State& state) {
    Sampler s(1);
    const DenseOperator op = random_op({2, 4}, s);
    const std::vector<int> total{1, 2, 3, 4, 5, 6};
    for (auto _ : state) benchmark::DoNotOptimize(embed(op, total));
}
BENCHMARK(BM_embed);

void BM_partial_trace(benchmark::State& state) {
    Sampler s(2);
    const DenseOperator op = random_op({0, 1, 2, 3, 4}, s);
    for (auto _ : state) benchmark::DoNotOptimize(partial_trace(op, 0));
}
BENCHMARK(BM_partial_trace);

void BM_leg_product(benchmark::State& state) {
    Sampler s(3);
    const DenseOperator a = random_op({1, 2, 3}, s);
    const DenseOperator b = random_op({3, 4, 5}, s);
    for (auto _ : state) benchmark::DoNotOptimize(a * b);
}
BENCHMARK(BM_leg_product);

}  // namespace
