// Serial reference vs OpenMP for every kernel and the library calls built on them.
// Arg 0 = serial, 1 = parallel.

#include "floquet/kernels.hpp"
#include "floquet/periodic.hpp"
#include "floquet/riccati.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

namespace {

using floquet::kernels::Exec;
constexpr double two_pi = 2.0 * std::numbers::pi;

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

void label(benchmark::State& state) {
    state.SetLabel(state.range(0) == 0 ? "serial" : "openmp x" + std::to_string(floquet::kernels::max_threads()));
}

floquet::PeriodicFn pfn(const char* s) { return floquet::PeriodicFn::parse(s, two_pi); }

void BM_sample(benchmark::State& state) {
    const floquet::PeriodicFn f = pfn("exp(sin(t))*cos(3*t)/(2+cos(t))");
    const auto g = f.as_function();
    const auto n = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(floquet::kernels::sample(g, 0.0, two_pi / n, n, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
    label(state);
}

void BM_green_exponent_rise(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(1));
    std::vector<double> primitive(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = two_pi * static_cast<double>(i) / static_cast<double>(n - 1);
        primitive[i] = std::sin(t) - 0.3 * std::cos(2 * t) + 0.1 * t;
    }
    for (auto _ : state) benchmark::DoNotOptimize(floquet::kernels::green_exponent_rise(primitive, exec_of(state)));
    label(state);
}

void BM_arg_max(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(1));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::sin(0.001 * static_cast<double>(i)) * std::cos(1e-7 * i * i);
    for (auto _ : state) benchmark::DoNotOptimize(floquet::kernels::arg_max(v, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
    label(state);
}

void BM_green_sup_abs(benchmark::State& state) {
    const floquet::GreenKernel g(pfn("1+0.5*sin(t)"));
    const auto n = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(g.sup_abs(n, exec_of(state)));
    label(state);
}

void BM_riccati_residual(benchmark::State& state) {
    const floquet::RiccatiProblem prob(pfn("0.1*sin(t)"), pfn("1"), pfn("cos(t)"));
    const floquet::PicardResult r = floquet::picard_solve(prob);
    const auto n = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(floquet::riccati_residual(prob, r.certificate.sigma, n, exec_of(state)));
    label(state);
}

void BM_shooting_solve(benchmark::State& state) {
    const floquet::RiccatiProblem prob(pfn("sin(t)"), pfn("1"), pfn("cos(t)-sin(t)-sin(t)^3"));
    floquet::ShootingOptions opts;
    opts.lo = -2.0;
    opts.hi = 2.0;
    opts.grid = static_cast<std::size_t>(state.range(1));
    opts.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(floquet::shooting_solve(prob, opts));
    label(state);
}

}  // namespace

BENCHMARK(BM_sample)->ArgsProduct({{0, 1}, {1 << 12, 1 << 16}});
BENCHMARK(BM_green_exponent_rise)->ArgsProduct({{0, 1}, {1024, 4096}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_arg_max)->ArgsProduct({{0, 1}, {1 << 16, 1 << 20}});
BENCHMARK(BM_green_sup_abs)->ArgsProduct({{0, 1}, {256, 1024}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_riccati_residual)->ArgsProduct({{0, 1}, {4096}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_shooting_solve)->ArgsProduct({{0, 1}, {32}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
