#include <benchmark/benchmark.h>

#include "rpcl/cluster.hpp"
#include "rpcl/margin_loss.hpp"
#include "rpcl/numeric.hpp"
#include "rpcl/rng.hpp"

namespace {

rpcl::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    rpcl::Rng rng(seed);
    rpcl::Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
    return m;
}

void bm_cosine_matrix(benchmark::State& state) {
    std::size_t n = static_cast<std::size_t>(state.range(0));
    rpcl::Matrix a = random_matrix(n, 128, 1);
    rpcl::Matrix b = random_matrix(64, 128, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rpcl::cosine_matrix(a, b));
    }
    state.SetItemsProcessed(state.iterations() * n * 64);
}
BENCHMARK(bm_cosine_matrix)->Arg(64)->Arg(256)->Arg(1024);

void bm_loss_and_grads(benchmark::State& state) {
    std::size_t n = static_cast<std::size_t>(state.range(0));
    rpcl::Matrix x = random_matrix(n, 128, 3);
    rpcl::ClassifierHead head(rpcl::normalize_rows(random_matrix(32, 128, 4)).matrix);
    std::vector<std::size_t> y(n);
    rpcl::Rng rng(5);
    for (auto& l : y) l = rng.below(32);
    rpcl::MarginConfig cfg{.variant = rpcl::Variant::rpcl_arc, .s = 30.0, .m = 0.5,
                           .gamma = 0.05};
    for (auto _ : state) {
        benchmark::DoNotOptimize(rpcl::loss_and_grads(x, y, head, cfg));
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_loss_and_grads)->Arg(32)->Arg(128)->Arg(512);

void bm_rpcl_epoch(benchmark::State& state) {
    std::size_t n = static_cast<std::size_t>(state.range(0));
    rpcl::Matrix data = random_matrix(n, 8, 6);
    rpcl::CenterSet cs;
    cs.centers = random_matrix(5, 8, 7);
    cs.active.assign(5, true);
    cs.wins.assign(5, 0);
    rpcl::RpclParams params;
    for (auto _ : state) {
        for (std::size_t i = 0; i < data.rows(); ++i)
            rpcl::rpcl_step(data.row(i), cs, params);
        benchmark::DoNotOptimize(cs.centers.data().data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_rpcl_epoch)->Arg(256)->Arg(1024)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
