#include "elastovb/config.hpp"

#include <benchmark/benchmark.h>

using namespace elastovb;

namespace {

// Solve plus full adjoint Jacobian on square meshes of growing size.
void BM_ForwardWithJacobian(benchmark::State& state) {
    RunConfig cfg = RunConfig::example1();
    const int n = int(state.range(0));
    cfg.mesh = Mesh2D(n, n, double(n), double(n));
    cfg.shapes.clear();
    const Problem p = build_problem(cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(p.model->evaluate(p.truth));
    }
    state.counters["d_psi"] = double(p.model->parameter_dim());
    state.counters["d_y"] = double(p.model->output_dim());
}
BENCHMARK(BM_ForwardWithJacobian)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
