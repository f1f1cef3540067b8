#include <random>

#include <benchmark/benchmark.h>

#include "nldiss/evolve.hpp"
#include "nldiss/gadgets.hpp"
#include "nldiss/liouvillian.hpp"
#include "nldiss/steady.hpp"

using namespace nldiss;

namespace {

DensityMatrix random_state(int dim)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = complex(g(rng), g(rng));
    Matrix rho = m * m.adjoint();
    rho /= rho.trace();
    return DensityMatrix(FockOperator(rho));
}

void BM_NclApply(benchmark::State& state)
{
    const int d = static_cast<int>(state.range(0));
    const Generator gen = make_generator(ncl_master_equation(d, 1.0, 0.2, 0.0, 2.0, NonlinearFunction::preset("x-1")));
    const Matrix rho = random_state(d).matrix();
    for (auto _ : state) benchmark::DoNotOptimize(gen.apply(rho));
    state.SetComplexityN(d);
}
BENCHMARK(BM_NclApply)->Arg(30)->Arg(64)->Arg(130)->Complexity();

// Rank-one engineered channel, dense in the Fock basis.
void BM_ProjectorApply(benchmark::State& state)
{
    const int d = static_cast<int>(state.range(0));
    const ProjectorGadget g(fock_state(2, d), coherent_state(3.0, d), 2);
    const Generator gen = make_generator(projector_master_equation(g, 1.0, 0.2, 0.0, 0.0));
    const Matrix rho = random_state(d).matrix();
    for (auto _ : state) benchmark::DoNotOptimize(gen.apply(rho));
}
BENCHMARK(BM_ProjectorApply)->Arg(60)->Arg(90);

// Reference: the same map through the dense term-by-term rhs.
void BM_DenseRhs(benchmark::State& state)
{
    const int d = static_cast<int>(state.range(0));
    const MasterEquation me = ncl_master_equation(d, 1.0, 0.2, 0.0, 2.0, NonlinearFunction::preset("x-1"));
    const DensityMatrix rho = random_state(d);
    for (auto _ : state) benchmark::DoNotOptimize(rhs(me, rho));
}
BENCHMARK(BM_DenseRhs)->Arg(30)->Arg(64);

void BM_Nullspace(benchmark::State& state)
{
    const int d = static_cast<int>(state.range(0));
    const MasterEquation me = ncl_master_equation(d, 0.2, 1.0, 0.0, 5.0, NonlinearFunction::preset("x-1"));
    for (auto _ : state) benchmark::DoNotOptimize(steady_state_nullspace(me));
}
BENCHMARK(BM_Nullspace)->Arg(20)->Arg(40)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_NclRecurrence(benchmark::State& state)
{
    const NonlinearFunction f = NonlinearFunction::preset("x-1");
    for (auto _ : state) benchmark::DoNotOptimize(ncl_recurrence(f, 1e4, 0.0, 400, 2));
}
BENCHMARK(BM_NclRecurrence);

void BM_Propagate(benchmark::State& state)
{
    const int d = 130;
    const MasterEquation me = ncl_master_equation(d, 1.0, 0.2, 0.0, 0.0, NonlinearFunction::preset("x-1"));
    const DensityMatrix rho0 = DensityMatrix::pure(coherent_state(8.0, d));
    const std::vector<double> grid{0.0, 0.01};
    PropagateOptions opt;
    opt.method = static_cast<Integrator>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(propagate(me, rho0, grid, opt));
    state.SetLabel(to_string(opt.method));
}
BENCHMARK(BM_Propagate)
    ->Arg(static_cast<int>(Integrator::LawsonDopri5))
    ->Arg(static_cast<int>(Integrator::Dopri5))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
