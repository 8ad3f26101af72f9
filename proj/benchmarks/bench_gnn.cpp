#include <acnet/gnn/message_graph.hpp>
#include <acnet/gnn/model.hpp>
#include <acnet/link_task.hpp>
#include <acnet/synth.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace acnet;

struct Fixture {
  HeteroTemporalGraph g;
  LinkDataset ds;
  gnn::MessageGraph mg;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    SynthConfig c;
    c.n_authors = 2000;
    c.papers_per_year = 600;
    Fixture x{synth_generate(c, 1), {}, {}};
    x.ds = build_dataset(x.g, x.g.max_year() - 1, 1);
    x.mg = gnn::build_message_graph(Snapshot(x.g, x.ds.year));
    return x;
  }();
  return f;
}

void BM_LossAndGrad(benchmark::State& state) {
  const auto& f = fixture();
  const auto agg = static_cast<gnn::Aggregation>(state.range(0));
  gnn::Model<double> m({16, 16, agg}, f.mg.counts, 1);
  const std::size_t n = std::min<std::size_t>(256, f.ds.examples.size());
  const std::vector<LabeledPair> batch(f.ds.examples.begin(), f.ds.examples.begin() + static_cast<std::ptrdiff_t>(n));
  gnn::Tensors<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(m.loss_and_grad(f.mg, batch, &grad));
  state.SetLabel(std::string(gnn::to_string(agg)));
}
BENCHMARK(BM_LossAndGrad)
    ->Arg(static_cast<int>(gnn::Aggregation::Sum))
    ->Arg(static_cast<int>(gnn::Aggregation::Max))
    ->Unit(benchmark::kMillisecond);

void BM_BuildMessageGraph(benchmark::State& state) {
  const auto& f = fixture();
  const Snapshot s(f.g, f.ds.year);
  for (auto _ : state) benchmark::DoNotOptimize(gnn::build_message_graph(s));
}
BENCHMARK(BM_BuildMessageGraph)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
