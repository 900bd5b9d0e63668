// OpenMP kernels against the serial reference, and chain vs explicit Gram.
// RTR_NUM_THREADS / OMP_NUM_THREADS select the thread count of the parallel side.

#include <benchmark/benchmark.h>

#include <random>

#include "rtr/gram.hpp"
#include "rtr/kernels.hpp"
#include "rtr/solver.hpp"

namespace {

using rtr::Matrix;

struct Block {
    Matrix xk, pk, z2, m, e, omega, d;
};

Block make_block(Eigen::Index rows, Eigen::Index cols, Eigen::Index r) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::bernoulli_distribution coin(0.3);
    Block b;
    b.xk = Matrix::NullaryExpr(rows, cols, [&](Eigen::Index, Eigen::Index) { return g(rng); });
    b.pk = Matrix::NullaryExpr(rows, cols, [&](Eigen::Index, Eigen::Index) { return coin(rng) ? 1.0 : 0.0; });
    b.z2 = Matrix::NullaryExpr(rows, r, [&](Eigen::Index, Eigen::Index) { return g(rng); });
    b.m = Matrix::NullaryExpr(cols, r, [&](Eigen::Index, Eigen::Index) { return g(rng); });
    b.e = rtr::reference::block_residual(b.xk, b.z2, b.m);
    rtr::reference::weighted_gradient(b.e, b.pk, b.m, 1.0, b.omega, b.d);
    return b;
}

// rows = I_k, cols = prod_{j != k} I_j, rank product 9
void block_args(benchmark::internal::Benchmark* bm) {
    for (long cols : {1L << 10, 1L << 13, 1L << 16}) bm->Args({32, cols});
}

template <bool Parallel>
void BM_BlockResidual(benchmark::State& state) {
    const Block b = make_block(state.range(0), state.range(1), 9);
    for (auto _ : state) {
        Matrix e = Parallel ? rtr::kernels::block_residual(b.xk, b.z2, b.m)
                            : rtr::reference::block_residual(b.xk, b.z2, b.m);
        benchmark::DoNotOptimize(e.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

template <bool Parallel>
void BM_WeightedGradient(benchmark::State& state) {
    const Block b = make_block(state.range(0), state.range(1), 9);
    Matrix omega, d;
    for (auto _ : state) {
        if (Parallel) {
            rtr::kernels::weighted_gradient(b.e, b.pk, b.m, 0.5, omega, d);
        } else {
            rtr::reference::weighted_gradient(b.e, b.pk, b.m, 0.5, omega, d);
        }
        benchmark::DoNotOptimize(d.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

template <bool Parallel>
void BM_WeightedQuadratic(benchmark::State& state) {
    const Block b = make_block(state.range(0), state.range(1), 9);
    for (auto _ : state) {
        double q = Parallel ? rtr::kernels::weighted_quadratic(b.omega, b.d, b.m)
                            : rtr::reference::weighted_quadratic(b.omega, b.d, b.m);
        benchmark::DoNotOptimize(q);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

template <bool Parallel>
void BM_MaskedSquares(benchmark::State& state) {
    const Block b = make_block(state.range(0), state.range(1), 9);
    for (auto _ : state) {
        auto s = Parallel ? rtr::kernels::masked_squares(b.e, b.pk) : rtr::reference::masked_squares(b.e, b.pk);
        benchmark::DoNotOptimize(s.sum);
    }
}

BENCHMARK(BM_BlockResidual<true>)->Name("block_residual/openmp")->Apply(block_args);
BENCHMARK(BM_BlockResidual<false>)->Name("block_residual/reference")->Apply(block_args);
BENCHMARK(BM_WeightedGradient<true>)->Name("weighted_gradient/openmp")->Apply(block_args);
BENCHMARK(BM_WeightedGradient<false>)->Name("weighted_gradient/reference")->Apply(block_args);
BENCHMARK(BM_WeightedQuadratic<true>)->Name("weighted_quadratic/openmp")->Apply(block_args);
BENCHMARK(BM_WeightedQuadratic<false>)->Name("weighted_quadratic/reference")->Apply(block_args);
BENCHMARK(BM_MaskedSquares<true>)->Name("masked_squares/openmp")->Apply(block_args);
BENCHMARK(BM_MaskedSquares<false>)->Name("masked_squares/reference")->Apply(block_args);

// Gram of Z^{!=1} for an order-N ring with I = 4, r = 3.
rtr::TRCores ring(std::size_t n) {
    return rtr::init_cores(rtr::Shape(n, 4), std::vector<std::size_t>(n, 3), 7);
}

void BM_GramChain(benchmark::State& state) {
    const auto cores = ring(static_cast<std::size_t>(state.range(0)));
    const rtr::GramCache cache(cores);
    for (auto _ : state) {
        Matrix g = rtr::gram_via_chain(cache, 0);
        benchmark::DoNotOptimize(g.data());
    }
}

void BM_GramExplicit(benchmark::State& state) {
    const auto cores = ring(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        Matrix g = rtr::gram_explicit(cores, 0);
        benchmark::DoNotOptimize(g.data());
    }
}

BENCHMARK(BM_GramChain)->Name("gram/chain")->DenseRange(3, 12, 3);
BENCHMARK(BM_GramExplicit)->Name("gram/explicit")->DenseRange(3, 9, 3);

}  // namespace

BENCHMARK_MAIN();
