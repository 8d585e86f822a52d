// Serial vs OpenMP kernels, and one tracked turn at the desk configuration.

#include <benchmark/benchmark.h>

#include <vector>

#include "bdst/kernels.hpp"
#include "bdst/rng.hpp"
#include "bdst/tracker.hpp"

using namespace bdst;
namespace k = bdst::kernels;

namespace {

std::vector<Real> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Real> v(n);
  for (auto& x : v) x = static_cast<Real>(rng.normal());
  return v;
}

template <auto Gemm>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<Real> c(n * n);
  for (auto _ : state) {
    Gemm(k::Trans::No, k::Trans::No, n, n, n, a.data(), b.data(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

template <auto Softmax>
void BM_softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_values(n * n, 3);
  std::vector<Real> y(n * n);
  for (auto _ : state) {
    Softmax(n, n, x.data(), nullptr, y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_predict_turn(benchmark::State& state) {
  const std::vector<std::string> texts{"how about cascal at 7 pm", "book a table for two tomorrow"};
  const auto vocab = Vocab::build(texts, 100);
  Rng rng(4);
  const auto mode = state.range(0) ? SharingMode::SlotSpecific : SharingMode::Shared;
  const auto model = ModelBundle::create(EncoderConfig{}, mode, {"date", "time", "restaurant_name", "num_people", "meal"},
                                         vocab, ContextOptions{}, DecodeMode::Independent, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_turn(model, "how about cascal at 7 pm ?", "book a table for two tomorrow"));
  }
}

}  // namespace

BENCHMARK(BM_gemm<k::serial::gemm>)->Name("gemm/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_gemm<k::omp::gemm>)->Name("gemm/omp")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_softmax<k::serial::softmax_rows>)->Name("softmax_rows/serial")->Range(64, 512);
BENCHMARK(BM_softmax<k::omp::softmax_rows>)->Name("softmax_rows/omp")->Range(64, 512);
BENCHMARK(BM_predict_turn)->Name("predict_turn")->Arg(0)->Arg(1);

BENCHMARK_MAIN();
