#include <benchmark/benchmark.h>

#include <memory>

#include "bornfast/born_inversion.hpp"
#include "bornfast/radial_model.hpp"
#include "bornfast/special_functions.hpp"

namespace {

using namespace bornfast;

struct Problem {
  radial::ModelParams params;
  std::unique_ptr<radial::RadialForwardModel> model;
  linalg::RegularizedInverse pinv;
  BoundaryData phi;

  Problem() {
    params.threads = 1;
    model = radial::assemble_model(params);
    pinv = linalg::truncated_pinv(model->k1_matrix(), 23);
    phi = radial::forward_exact(params);
  }
};

const Problem& problem() {
  static const Problem p;
  return p;
}

void run_method(benchmark::State& state, inversion::Method method) {
  const auto& p = problem();
  inversion::InversionConfig cfg;
  cfg.method = method;
  cfg.order = static_cast<int>(state.range(0));
  std::uint64_t kernels = 0;
  for (auto _ : state) {
    auto trace = inversion::run_inversion(*p.model, p.pinv, p.phi, cfg);
    kernels = trace.kernel_applications.back();
    benchmark::DoNotOptimize(trace.iterates.back().values.data());
  }
  state.counters["kernel_applications"] = static_cast<double>(kernels);
}

void BM_Fast(benchmark::State& state) { run_method(state, inversion::Method::fast); }
void BM_Ibs(benchmark::State& state) { run_method(state, inversion::Method::ibs); }
void BM_Hoskins(benchmark::State& state) { run_method(state, inversion::Method::hoskins_reduced); }
void BM_Newton(benchmark::State& state) { run_method(state, inversion::Method::newton); }

BENCHMARK(BM_Fast)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ibs)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hoskins)->DenseRange(1, 5)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Newton)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_BesselTable(benchmark::State& state) {
  for (auto _ : state) {
    auto t = special::scaled_bessel_table(static_cast<int>(state.range(0)), 3.0);
    benchmark::DoNotOptimize(t.log_i.data());
  }
}
BENCHMARK(BM_BesselTable)->Arg(90)->Arg(150);

void BM_Svd(benchmark::State& state) {
  const auto& k1 = problem().model->k1_matrix();
  for (auto _ : state) {
    auto f = linalg::svd(k1);
    benchmark::DoNotOptimize(f.singular_values.data());
  }
}
BENCHMARK(BM_Svd)->Unit(benchmark::kMillisecond);

void BM_AssembleModel(benchmark::State& state) {
  radial::ModelParams p;
  p.grid_n = static_cast<int>(state.range(0));
  p.threads = 1;
  for (auto _ : state) {
    auto m = radial::assemble_model(p);
    benchmark::DoNotOptimize(m.get());
  }
}
BENCHMARK(BM_AssembleModel)->Arg(90)->Arg(180)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
