#include <benchmark/benchmark.h>

#include <iegds/conic.hpp>
#include <iegds/game.hpp>
#include <iegds/gasflow.hpp>
#include <iegds/log.hpp>
#include <iegds/netmodel.hpp>
#include <iegds/recovery.hpp>

#include <map>
#include <string>

using namespace iegds;

namespace {

const Network& bundled(int H) {
    static std::map<int, Network> cache;
    auto it = cache.find(H);
    if (it == cache.end()) {
        const Network base = load_network(std::string(IEGDS_DATA_DIR) + "/cases/ieee33_gas20.json");
        it = cache.emplace(H, truncate_horizon(generate_case(base, 1), H)).first;
    }
    return it->second;
}

gas::ModelSpec model_of(int r) { return r == 0 ? gas::ModelSpec::misoc() : gas::ModelSpec::pwa(r); }

// range(0): horizon, range(1): 0 for MISOC, else PWA region count
void BM_Assemble(benchmark::State& state) {
    const Network& net = bundled(static_cast<int>(state.range(0)));
    const auto model = model_of(static_cast<int>(state.range(1)));
    std::size_t nnz = 0;
    for (auto _ : state) {
        const auto g = game::assemble(net, model);
        nnz = static_cast<std::size_t>(g.problem.eq_matrix.nonZeros() + g.problem.ineq_matrix.nonZeros());
        benchmark::DoNotOptimize(nnz);
    }
    state.counters["nnz"] = static_cast<double>(nnz);
}
BENCHMARK(BM_Assemble)
    ->ArgsProduct({{6, 24}, {0, 20, 45}})
    ->ArgNames({"H", "r"})
    ->Unit(benchmark::kMillisecond);

void BM_Penalized(benchmark::State& state) {
    const auto g = game::assemble(bundled(static_cast<int>(state.range(0))), gas::ModelSpec::misoc());
    for (auto _ : state) benchmark::DoNotOptimize(game::penalized(g, 1.0).num_penalty);
}
BENCHMARK(BM_Penalized)->Arg(6)->Arg(24)->ArgName("H")->Unit(benchmark::kMillisecond);

void BM_Stage1Solve(benchmark::State& state) {
    const auto g = game::assemble(bundled(static_cast<int>(state.range(0))), model_of(static_cast<int>(state.range(1))));
    int iters = 0;
    for (auto _ : state) {
        const auto res = conic::solve(g.problem);
        iters = res.iterations;
        benchmark::DoNotOptimize(res.objective);
    }
    state.counters["ipm_iterations"] = iters;
}
BENCHMARK(BM_Stage1Solve)
    ->Args({6, 0})
    ->Args({6, 20})
    ->Args({24, 0})
    ->ArgNames({"H", "r"})
    ->Unit(benchmark::kMillisecond)
    ->Iterations(3);

void BM_PressureRecovery(benchmark::State& state) {
    const Network& net = bundled(static_cast<int>(state.range(0)));
    const auto g = game::assemble(net, model_of(static_cast<int>(state.range(1))));
    const auto sol = conic::solve(g.problem);
    const recovery::Mat phi = recovery::flows(g, sol.x);
    const auto bin = recovery::recover_binaries(g.gas, phi);
    for (auto _ : state) benchmark::DoNotOptimize(recovery::recover_pressures(net, g.gas, bin, phi).violation());
}
BENCHMARK(BM_PressureRecovery)
    ->Args({6, 0})
    ->Args({6, 20})
    ->Args({24, 0})
    ->ArgNames({"H", "r"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
    log::set_level("off");
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
