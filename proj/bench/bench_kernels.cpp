// Serial reference vs OpenMP kernels.

#include <random>

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "inferalign/backends/builtin.hpp"
#include "inferalign/eval/cosiatec.hpp"
#include "inferalign/search/search.hpp"

using namespace inferalign;

namespace {

std::vector<eval::Point> points(int n) {
  std::mt19937_64 rng(7);
  std::vector<eval::Point> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({static_cast<std::int64_t>(rng() % (4 * n)), 40 + static_cast<std::int64_t>(rng() % 24)});
  }
  return eval::normalize(out);
}

void BM_SiatecSerial(benchmark::State& state) {
  const auto data = points(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::siatec_serial(data));
}

void BM_SiatecParallel(benchmark::State& state) {
  const auto data = points(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::siatec_parallel(data));
}

void BM_Cosiatec(benchmark::State& state, Execution execution) {
  const auto data = points(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::cosiatec(data, execution).compression_ratio());
}

void BM_ExtendAndScore(benchmark::State& state, Execution execution) {
  backends::ToyGenerator generator;
  backends::RuleMutator mutator;
  backends::MockScorer scorer;
  search::SearchConfig config;
  config.m = 200;
  config.max_tokens = 2000;
  const std::string caption = "A lively Allegro in Bb major";
  const auto attrs = rewards::parse_caption(caption);
  const search::CycleContext ctx{caption, attrs, config, 0, 2};
  const int beams = static_cast<int>(state.range(0));
  for (auto _ : state) {
    std::vector<search::SearchState> states(beams);
    for (int i = 0; i < beams; ++i) states[i].state_id = i, states[i].caption = caption;
    if (execution == Execution::Serial) {
      search::extend_and_score_serial(states, ctx, {generator, mutator, scorer});
    } else {
      search::extend_and_score_parallel(states, ctx, {generator, mutator, scorer});
    }
    benchmark::DoNotOptimize(states);
  }
}

void BM_Search(benchmark::State& state, Execution execution) {
  backends::ToyGenerator generator;
  backends::RuleMutator mutator;
  backends::MockScorer scorer;
  search::SearchConfig config;
  config.T = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        search::run_inferalign("A calm piece in D minor at 80 bpm", config, {generator, mutator, scorer}, execution));
  }
}

}  // namespace

BENCHMARK(BM_SiatecSerial)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SiatecParallel)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Cosiatec, serial, Execution::Serial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Cosiatec, parallel, Execution::Parallel)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ExtendAndScore, serial, Execution::Serial)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_ExtendAndScore, parallel, Execution::Parallel)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Search, serial, Execution::Serial)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Search, parallel, Execution::Parallel)->Arg(5)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
