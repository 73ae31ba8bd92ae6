#include <benchmark/benchmark.h>

#include "scenerouter/classifier.hpp"
#include "scenerouter/encoder.hpp"
#include "scenerouter/features.hpp"
#include "scenerouter/pipeline.hpp"
#include "scenerouter/random.hpp"
#include "scenerouter/synth.hpp"

using namespace scenerouter;

namespace {

const SynthDataset& data() {
  static const SynthDataset d = [] {
    SynthParams p;
    p.windows_per_regime = 40;
    return synth_benchmark(p);
  }();
  return d;
}

struct Fitted {
  PipelineConfig cfg;
  PreparedData prepared;
  PipelineModel model;
};

const Fitted& fitted() {
  static const Fitted f = [] {
    Fitted out;
    out.cfg.synth_windows_per_regime = 40;
    out.prepared = prepare(data().windows, out.cfg);
    out.model = fit_model(out.prepared, out.cfg, out.cfg.k);
    return out;
  }();
  return f;
}

void BM_ExtractWindow(benchmark::State& state) {
  const FeatureConfig cfg;
  const auto& windows = data().windows;
  std::size_t w = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_all(windows[w], cfg));
    w = (w + 1) % windows.size();
  }
}
BENCHMARK(BM_ExtractWindow);

void BM_ClassifierPredict(benchmark::State& state) {
  const auto& f = fitted();
  const auto& rows = f.prepared.train_rows;
  std::vector<std::vector<double>> inputs;
  for (const auto& r : rows) {
    inputs.push_back(classifier_input(r.features, f.model.cluster.model, f.cfg.classifier_on_encoded));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.model.classifier.model.predict(inputs[i]));
    i = (i + 1) % inputs.size();
  }
}
BENCHMARK(BM_ClassifierPredict);

void BM_RouteWindow(benchmark::State& state) {
  const auto& f = fitted();
  const auto router = f.model.router();
  const auto& windows = f.prepared.split.test;
  std::size_t w = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(router.route(windows[w]));
    w = (w + 1) % windows.size();
  }
}
BENCHMARK(BM_RouteWindow);

void BM_KMeans(benchmark::State& state) {
  Rng rng(7);
  Matrix rows;
  for (int64_t i = 0; i < state.range(0); ++i) {
    std::vector<double> row(32);
    for (auto& v : row) v = rng.normal();
    rows.push_back(row);
  }
  KMeansOptions opt;
  opt.k = 5;
  opt.restarts = 1;
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_fit(rows, opt));
}
BENCHMARK(BM_KMeans)->Arg(500)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
