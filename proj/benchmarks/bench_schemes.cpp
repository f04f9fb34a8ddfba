// SPDX-License-Identifier: Apache-2.0
#include "dmimo/baselines.hpp"
#include "dmimo/channel_gen.hpp"
#include "dmimo/greedy.hpp"
#include "dmimo/misocp.hpp"
#include "dmimo/precoding.hpp"

#include <benchmark/benchmark.h>

namespace {

dmimo::ChannelMatrix channel(int n, std::uint64_t seed) {
    dmimo::DropConfig cfg = dmimo::DropConfig::dense();
    cfg.m_aps = n;
    cfg.k_ues = n;
    cfg.seed = seed;
    return dmimo::generate_drop(cfg).channel;
}

void BM_FullSharingBisection(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const dmimo::ChannelMatrix h = channel(n, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dmimo::max_common_sinr(h, dmimo::ZeroSet(n, n), dmimo::PowerBudget(1.0)).t_star);
    }
}
BENCHMARK(BM_FullSharingBisection)->Arg(3)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

// b_tot = K: the greedy loop runs MK - K removals.
void BM_Approx(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const dmimo::ChannelMatrix h = channel(n, 5);
    for (auto _ : state) {
        const auto r = dmimo::greedy_pairing(h, {dmimo::SharingVariant::Total, n}, dmimo::PowerBudget(1.0));
        benchmark::DoNotOptimize(r.solution.t_star);
    }
}
BENCHMARK(BM_Approx)->Arg(3)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Clust1(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const dmimo::ChannelMatrix h = channel(n, 7);
    for (auto _ : state) {
        const auto r = dmimo::baseline_scheme(h, {dmimo::BaselineKind::Clust1, 1, 1}, dmimo::PowerBudget(1.0));
        benchmark::DoNotOptimize(r.solution.t_star);
    }
}
BENCHMARK(BM_Clust1)->Arg(3)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Opt(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const dmimo::ChannelMatrix h = channel(n, 9);
    for (auto _ : state) {
        const auto r = dmimo::opt_scheme(h, {dmimo::SharingVariant::Total, n}, dmimo::PowerBudget(1.0));
        benchmark::DoNotOptimize(r.solution.t_star);
    }
}
BENCHMARK(BM_Opt)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
