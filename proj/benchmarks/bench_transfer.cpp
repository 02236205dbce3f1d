#include "quadbraid/chains.hpp"
#include "quadbraid/hamiltonians.hpp"

#include <benchmark/benchmark.h>

using namespace quadbraid;

namespace {

void BM_transfer_eval(benchmark::State& state) {
    const int N = static_cast<int>(state.range(0));
    ModelSpec m = gl2_model();
    ChainSpec chain = make_chain(m, N);
    chain.chi_mode = ChiMode::Diagonal;
    const auto lambdas = sample_lambdas(m, 1, 5);
    const TransferMatrix t = transfer(chain, Cplx(0.31, 0.05));
    for (auto _ : state) benchmark::DoNotOptimize(t.op.evaluate(lambdas[0]));
}
BENCHMARK(BM_transfer_eval)->Arg(2)->Arg(3);

void BM_commutator(benchmark::State& state) {
    ModelSpec m = gl2_model();
    ChainSpec chain = make_chain(m, 2);
    chain.chi_mode = ChiMode::Diagonal;
    const auto lambdas = sample_lambdas(m, 1, 5);
    const DiffOp tu = transfer(chain, Cplx(0.31, 0.05)).op;
    const DiffOp tv = transfer(chain, Cplx(-0.12, 0.02)).op;
    const DiffOp comm = diffop_commutator(tu, tv);
    for (auto _ : state) benchmark::DoNotOptimize(comm.evaluate(lambdas[0]));
}
BENCHMARK(BM_commutator);

void BM_log_derivative(benchmark::State& state) {
    ModelSpec m = sixvertex_model();
    ChainSpec chain = make_chain(m, 2);
    const auto lambdas = sample_lambdas(m, 1, 5);
    FdOptions fd;
    for (auto _ : state) {
        const DiffOp H = log_derivative(chain, fd);
        benchmark::DoNotOptimize(H.evaluate(lambdas[0]));
    }
}
BENCHMARK(BM_log_derivative);

}  // namespace
