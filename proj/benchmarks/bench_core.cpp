#include <geolp/flat.hpp>
#include <geolp/harness.hpp>
#include <geolp/heat.hpp>
#include <geolp/lp.hpp>
#include <geolp/norms.hpp>
#include <geolp/surface.hpp>

#include <benchmark/benchmark.h>

using namespace geolp;

namespace {

std::shared_ptr<const FoliatedMetric> compliant(int n, int n_s)
{
    FoliationConfig c;
    c.n = n;
    c.n_s = n_s;
    c.r0 = 20.0;
    c.trchi_amplitude = c.chihat_amplitude = c.zeta_amplitude = c.beta_amplitude = 1e-3;
    return build_foliation(c);
}

void BM_TorusEigenbasis(benchmark::State& state)
{
    const auto m = build_torus_metric(int(state.range(0)), MetricRecipe::conformal(0.2, 1, 1));
    for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(*m, 0));
}
BENCHMARK(BM_TorusEigenbasis)->Arg(12)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_HeatEvolve(benchmark::State& state)
{
    const auto m = build_torus_metric(int(state.range(0)), MetricRecipe::conformal(0.2, 1, 1));
    const EigenBasis b = eigendecompose(*m, 0);
    const TensorField f = TensorField::scalar(VectorXd::Random(m->nodes()));
    for (auto _ : state) benchmark::DoNotOptimize(evolve(f, 0.1, b));
}
BENCHMARK(BM_HeatEvolve)->Arg(16)->Arg(24)->Unit(benchmark::kMicrosecond);

void BM_ProjectSpectral(benchmark::State& state)
{
    SpectralSphere s(int(state.range(0)), 1.0);
    const EigenBasis b = eigendecompose(s, 0);
    const LPFamily fam(LPKernel(), -4, 4, LPMode::normalized);
    const TensorField f = TensorField::scalar(VectorXd::Random(s.nodes()));
    for (auto _ : state) benchmark::DoNotOptimize(project(f, 2, fam, b));
}
BENCHMARK(BM_ProjectSpectral)->Arg(12)->Arg(24)->Unit(benchmark::kMicrosecond);

void BM_ProjectQuadrature(benchmark::State& state)
{
    SpectralSphere s(int(state.range(0)), 1.0);
    const EigenBasis b = eigendecompose(s, 0);
    const TensorField f = TensorField::scalar(VectorXd::Random(s.nodes()));
    const LPKernel kernel;
    for (auto _ : state) benchmark::DoNotOptimize(project_quadrature(f, 2, kernel, b));
}
BENCHMARK(BM_ProjectQuadrature)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_BuildFoliation(benchmark::State& state)
{
    for (auto _ : state) benchmark::DoNotOptimize(compliant(int(state.range(0)), 17));
}
BENCHMARK(BM_BuildFoliation)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_N1Norm(benchmark::State& state)
{
    const auto fol = compliant(int(state.range(0)), 17);
    SampleSpec spec;
    const FoliatedTensor f = sample_field(spec, fol, 0);
    for (auto _ : state) benchmark::DoNotOptimize(n1(f));
}
BENCHMARK(BM_N1Norm)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TheoremRatio(benchmark::State& state)
{
    const auto fol = compliant(12, 9);
    const LPFamily lp = harness_family(*fol, LPKernel());
    SampleSpec spec;
    spec.count = 1;
    const auto family = theorem_family("product_I", spec, fol);
    for (auto _ : state) benchmark::DoNotOptimize(theorem_ratio("product_I", family, lp));
}
BENCHMARK(BM_TheoremRatio)->Unit(benchmark::kMillisecond);

void BM_FlatBesov(benchmark::State& state)
{
    FlatSampleSpec spec;
    const FlatField f = flat_random_field(int(state.range(0)), 64, spec, 0);
    for (auto _ : state) benchmark::DoNotOptimize(flat_besov(f));
}
BENCHMARK(BM_FlatBesov)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
