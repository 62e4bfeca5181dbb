#include <benchmark/benchmark.h>

#include "trimodal/contrastive.hpp"
#include "trimodal/hsi.hpp"
#include "trimodal/random.hpp"
#include "trimodal/retrieval.hpp"
#include "trimodal/synthgen.hpp"
#include "trimodal/trainer.hpp"

using namespace trimodal;

namespace {

const std::vector<TrimodalSample>& samples() {
  static const auto s = gen_split(GeneratorConfig{}, 64, 0, "b");
  return s;
}

Eigen::MatrixXd gaussian_rows(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

static void BM_PrepareInputs(benchmark::State& state) {
  const ModelConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(prepare_inputs(samples()[0], cfg));
}
BENCHMARK(BM_PrepareInputs);

static void BM_ForwardEval(benchmark::State& state) {
  const Model<float> model{ModelConfig{}};
  const auto in = prepare_inputs(samples()[0], model.config());
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(in, nullptr, nullptr));
}
BENCHMARK(BM_ForwardEval)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  TrainerConfig tc;
  tc.batch_size = static_cast<int>(state.range(0));
  Trainer trainer(ModelConfig{}, tc, samples());
  std::vector<std::size_t> batch(static_cast<std::size_t>(tc.batch_size));
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch));
}
BENCHMARK(BM_TrainStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_TotalLoss(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  LatentBatch b;
  for (int s = 0; s < kNumSources; ++s) b[s] = gaussian_rows(n, 32, s);
  const auto terms = build_term_set(Variant::Full);
  LatentBatch g;
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(b, terms, 0.1, &g));
}
BENCHMARK(BM_TotalLoss)->Arg(32)->Arg(256);

static void BM_EvaluateAll(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  EmbeddingStore store(32);
  for (int i = 0; i < n; ++i) {
    for (Source s : kAllSources) {
      std::vector<float> v(32);
      for (auto& x : v) x = static_cast<float>(rng.normal());
      store.add("s" + std::to_string(i), s, v);
    }
  }
  const auto p = state.range(1) ? Protocol::small_batches(0) : Protocol::all();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_all(store, p));
}
BENCHMARK(BM_EvaluateAll)->Args({256, 0})->Args({256, 1})->Unit(benchmark::kMillisecond);

static void BM_FrechetDistance(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto a = fit_gaussian(gaussian_rows(256, d, 1));
  const auto b = fit_gaussian(gaussian_rows(256, d, 2));
  for (auto _ : state) benchmark::DoNotOptimize(frechet_distance(a, b));
}
BENCHMARK(BM_FrechetDistance)->Arg(32)->Arg(128);

static void BM_GenerateSample(benchmark::State& state) {
  const GeneratorConfig g;
  std::uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gen_split(g, 4, 0, "g" + std::to_string(k++)));
}
BENCHMARK(BM_GenerateSample)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
