#include <acnet/ingest.hpp>

#include "test_support.hpp"

#include <benchmark/benchmark.h>

#include <sstream>

namespace {

void BM_ParseRecords(benchmark::State& state) {
  const auto corpus = acnet::testing::synthetic_corpus(static_cast<std::uint32_t>(state.range(0)), 1, state.range(1) != 0);
  for (auto _ : state) {
    std::istringstream in(corpus.text);
    acnet::V14Reader reader(in);
    acnet::PaperRecord r;
    std::size_t n = 0;
    while (reader.next(r)) ++n;
    benchmark::DoNotOptimize(n);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(corpus.text.size()));
}
BENCHMARK(BM_ParseRecords)->Args({20000, 0})->Args({20000, 1});

void BM_IngestToGraph(benchmark::State& state) {
  const auto corpus = acnet::testing::synthetic_corpus(static_cast<std::uint32_t>(state.range(0)), 2, true);
  for (auto _ : state) {
    std::istringstream in(corpus.text);
    auto [g, stats] = acnet::ingest_stream(in);
    benchmark::DoNotOptimize(g);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IngestToGraph)->Arg(20000);

}  // namespace
