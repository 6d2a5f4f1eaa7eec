#include "nlflow/fv_oracle.hpp"
#include "nlflow/tracking.hpp"
#include "nlflow/transport.hpp"

#include <benchmark/benchmark.h>

using namespace nlflow;

namespace {

CharacteristicProblem transfer_problem(double horizon) {
    return {Inflow::boundary_density(ControlSignal::constant(horizon, 3.0)), DensityProfile::constant(1.0),
            SpeedLaw::reciprocal(), horizon};
}

CharacteristicProblem step_problem(std::size_t cells) {
    std::vector<double> rho(cells);
    std::vector<double> u(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        rho[k] = 0.5 + 0.4 * static_cast<double>(k % 3);
        u[k] = 0.2 + 0.3 * static_cast<double>((k * 7) % 5) / 4.0;
    }
    return {Inflow::flux(ControlSignal::uniform(3.0, u)), DensityProfile::uniform(rho), SpeedLaw::reciprocal(),
            3.0};
}

void BM_SolveXiTransfer(benchmark::State& state) {
    const auto p = transfer_problem(3.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_xi(p));
    }
}
BENCHMARK(BM_SolveXiTransfer)->Unit(benchmark::kMillisecond);

void BM_SolveXiSteps(benchmark::State& state) {
    const auto p = step_problem(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_xi(p));
    }
}
BENCHMARK(BM_SolveXiSteps)->Arg(4)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FvSolve(benchmark::State& state) {
    const auto p = step_problem(16);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fv_solve(p, static_cast<std::size_t>(state.range(0))));
    }
}
BENCHMARK(BM_FvSolve)->Arg(250)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_TrackingCost(benchmark::State& state) {
    const double T = 2.0;
    const TrackingProblem p{DensityProfile::constant(0.5), ControlSignal({0.0, 0.5, 1.5, T}, {0.3, 0.45, 0.3}),
                            SpeedLaw::reciprocal(), T, uniform_grid(T, static_cast<std::size_t>(state.range(0)))};
    const std::vector<double> values(p.cell_count(), 0.35);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cost(p, values));
    }
}
BENCHMARK(BM_TrackingCost)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
