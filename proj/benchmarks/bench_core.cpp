#include <benchmark/benchmark.h>

#include <vector>

#include "gaze_attn/align.hpp"
#include "gaze_attn/divergence.hpp"
#include "gaze_attn/regression.hpp"
#include "gaze_attn/resemblance.hpp"
#include "gaze_attn/rng.hpp"
#include "gaze_attn/synth.hpp"

using namespace gaze_attn;

namespace {

Matrix causal_stochastic(std::size_t n, SplitMix64& rng) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j <= i; ++j) sum += (m(i, j) = 0.01 + rng.uniform());
    for (std::size_t j = 0; j <= i; ++j) m(i, j) /= sum;
  }
  return m;
}

SynthRun make_run(std::uint32_t layers, std::uint32_t heads, std::size_t sentences, std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.corpus.n_sentences = sentences;
  spec.corpus.min_words = 8;
  spec.corpus.max_words = 20;
  spec.n_layers = layers;
  spec.n_heads = heads;
  return gen_attention_run(spec);
}

}  // namespace

static void BM_SentenceDivergence(benchmark::State& state) {
  SplitMix64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = renormalize_rows(causal_stochastic(n, rng));
  const auto b = renormalize_rows(causal_stochastic(n, rng));
  for (auto _ : state) benchmark::DoNotOptimize(sentence_divergence(a, b));
}
BENCHMARK(BM_SentenceDivergence)->Arg(8)->Arg(32)->Arg(128);

static void BM_LayerwiseDivergence(benchmark::State& state) {
  const SynthRun a = make_run(16, 8, 40, 1);
  const SynthRun b = make_run(16, 8, 40, 2);
  DivergenceOptions options;
  options.jobs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(layerwise_divergence(a.run, b.run, options));
}
BENCHMARK(BM_LayerwiseDivergence)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_WordAlign(benchmark::State& state) {
  SplitMix64 rng(3);
  TokenMap map;
  map.tokens.push_back({-1, SpanRole::bos});
  for (int w = 0; w < state.range(0); ++w) {
    for (std::size_t p = 0, pieces = 1 + rng.below(3); p < pieces; ++p) {
      map.tokens.push_back({w, SpanRole::sentence});
    }
  }
  const Matrix m = causal_stochastic(map.size(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(word_align(m, map));
}
BENCHMARK(BM_WordAlign)->Arg(10)->Arg(40);

static void BM_OlsFit(benchmark::State& state) {
  SplitMix64 rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  for (auto& c : cols)
    for (double& v : c) v = rng.normal();
  std::vector<double> y(n);
  for (double& v : y) v = rng.normal();
  const auto x = DesignMatrix::from_columns(cols);
  for (auto _ : state) benchmark::DoNotOptimize(ols_fit(x, y));
}
BENCHMARK(BM_OlsFit)->Args({60, 8})->Args({2000, 32})->Args({20000, 40})->Unit(benchmark::kMicrosecond);

static void BM_ModelResemblance(benchmark::State& state) {
  SynthSpec spec;
  spec.seed = 5;
  spec.corpus.n_sentences = 40;
  spec.n_layers = 12;
  spec.n_heads = 8;
  spec.structure = LinearCombo{6, std::vector<double>(8, 0.5), 0.1, 0.05, 20.0};
  const SynthRun synth = gen_attention_run(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model_resemblance(synth.run, {*synth.planted_subject}, Group::L1,
                                               static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_ModelResemblance)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
