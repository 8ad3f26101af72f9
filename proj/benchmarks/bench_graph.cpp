#include <acnet/expansion.hpp>
#include <acnet/link_task.hpp>
#include <acnet/seedgraph.hpp>
#include <acnet/synth.hpp>

#include <benchmark/benchmark.h>

namespace {

const acnet::HeteroTemporalGraph& corpus() {
  static const acnet::HeteroTemporalGraph g = [] {
    acnet::SynthConfig c;
    c.n_authors = 2000;
    c.papers_per_year = 600;
    return acnet::synth_generate(c, 1);
  }();
  return g;
}

std::vector<acnet::NodeRef> snapshot_authors(const acnet::Snapshot& s, std::size_t limit) {
  std::vector<acnet::NodeRef> out;
  for (std::uint32_t a = 0; a < corpus().node_count(acnet::NodeType::Author) && out.size() < limit; ++a) {
    if (s.contains(acnet::author(a))) out.push_back(acnet::author(a));
  }
  return out;
}

void BM_Seedgraphs(benchmark::State& state) {
  const auto& g = corpus();
  const acnet::Snapshot s(g, g.max_year() - 1), next(g, g.max_year());
  const auto authors = snapshot_authors(s, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(acnet::build_seedgraphs(authors, s, next));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(authors.size()));
}
BENCHMARK(BM_Seedgraphs)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Expand(benchmark::State& state) {
  const auto& g = corpus();
  const acnet::Snapshot s(g, g.max_year() - 1), next(g, g.max_year());
  const auto sgs = acnet::build_seedgraphs(snapshot_authors(s, 200), s, next);
  const acnet::ExpansionParams p{0.3, 0.2, 0.1, static_cast<std::uint32_t>(state.range(0))};
  for (auto _ : state) {
    for (const auto& sg : sgs) benchmark::DoNotOptimize(acnet::expand(sg, s, p, 3));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sgs.size()));
}
BENCHMARK(BM_Expand)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_BuildDataset(benchmark::State& state) {
  const auto& g = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(acnet::build_dataset(g, g.max_year() - 1, 5));
}
BENCHMARK(BM_BuildDataset)->Unit(benchmark::kMillisecond);

}  // namespace
