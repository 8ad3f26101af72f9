// Acceptance checks. One PASS/FAIL line per criterion; exit status is the number of failures.

#include <acnet/expansion.hpp>
#include <acnet/gnn/checkpoint.hpp>
#include <acnet/gnn/message_graph.hpp>
#include <acnet/gnn/model.hpp>
#include <acnet/gnn/train.hpp>
#include <acnet/ingest.hpp>
#include <acnet/link_task.hpp>
#include <acnet/pipeline.hpp>
#include <acnet/seedgraph.hpp>

#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace acnet;
namespace t = acnet::testing;

namespace {

// Tolerances and limits.
constexpr double kSeedgraphSeconds = 10;
constexpr double kExpansionTolerance = 0.03;
constexpr std::uint64_t kMinDecisions = 10000;
constexpr double kExpansionSeconds = 5;
constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientSeconds = 60;
constexpr double kToyAccuracy = 0.99;
constexpr std::uint32_t kToyEpochs = 200;
constexpr double kToySeconds = 120;
constexpr double kAuthorMargin = 0.05;
constexpr double kTopPaperSlack = 0.02;
constexpr double kReproSeconds = 600;
constexpr double kDropNoise = 0.02;
constexpr double kIngestRecordsPerSecond = 50000;
constexpr std::uint64_t kBufferSlack = 64;  // bytes of framing beyond twice the largest record
constexpr std::int32_t kYear = 2003;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<NodeRef> all_authors(const t::RawGraph& raw) {
  std::vector<NodeRef> out;
  for (std::uint32_t a = 0; a < raw.authors; ++a) out.push_back(author(a));
  return out;
}

// ---- 1 ----

void seedgraph_oracle() {
  const auto start = Clock::now();
  std::uint64_t paths = 0, mismatches = 0, missed = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto raw = t::random_connected_graph(seed, 200);
    const auto g = raw.build();
    const Snapshot s(g, kYear), next(g, kYear + 1);
    for (const auto& sg : build_seedgraphs(all_authors(raw), s, next, {1000})) {
      const auto dist = t::bfs_distances(raw, kYear, sg.author);
      for (const auto& p : sg.paths) {
        ++paths;
        const auto it = dist.find(p.seed.key());
        if (it == dist.end() || it->second != p.length()) ++mismatches;
      }
      missed += sg.unreachable.size();  // every snapshot here is connected
    }
  }
  const double secs = seconds_since(start);
  report(1, "seedgraph shortest paths", mismatches == 0 && missed == 0 && paths > 0 && secs < kSeedgraphSeconds,
         fmt("%llu paths on 100 graphs, %llu length mismatches, %llu missed seeds, %.2fs", (unsigned long long)paths,
             (unsigned long long)mismatches, (unsigned long long)missed, secs));
}

// ---- 2, 3 ----

struct DenseWorld {
  HeteroTemporalGraph g;
  std::vector<Seedgraph> seedgraphs;
};

DenseWorld dense_world(std::uint64_t seed) {
  auto raw = t::random_connected_graph(seed, 200);
  t::raise_min_degree(raw, 4, seed + 1);
  DenseWorld w;
  w.g = raw.build();
  const Snapshot s(w.g, kYear), next(w.g, kYear + 1);
  w.seedgraphs = build_seedgraphs(all_authors(raw), s, next);
  return w;
}

void expansion_statistics() {
  const auto start = Clock::now();
  // Some white mass remains, so every category has positive probability.
  const ExpansionParams p{0.3, 0.2, 0.1, 6};
  const auto masses = category_masses(p);
  ExpansionStats st;
  auto total = [&] { return st.full_decisions[0] + st.full_decisions[1] + st.full_decisions[2] + st.full_decisions[3]; };
  for (std::uint64_t seed = 30; seed < 200 && total() < 2 * kMinDecisions; ++seed) {
    const auto w = dense_world(seed);
    const Snapshot s(w.g, kYear);
    for (const auto& sg : w.seedgraphs) (void)expand(sg, s, p, seed, &st);
  }
  const double n = static_cast<double>(total());
  double worst = 0;
  for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(st.full_decisions[k] / n - masses[k]));

  ExpansionStats orange;
  for (std::uint64_t seed = 70; seed < 75; ++seed) {
    const auto w = dense_world(seed);
    const Snapshot s(w.g, kYear);
    for (const auto& sg : w.seedgraphs) (void)expand(sg, s, {1.0, 0.0, 0.0, 2}, seed, &orange);
  }
  const auto orange_total = orange.decisions[0] + orange.decisions[1] + orange.decisions[2] + orange.decisions[3];
  const double secs = seconds_since(start);
  report(2, "expansion decision frequencies",
         n >= kMinDecisions && worst <= kExpansionTolerance && orange_total > 0 &&
             orange.decisions[0] == orange_total && secs < kExpansionSeconds,
         fmt("%.0f decisions at (0.3,0.2,0.1), max |freq-mass| %.4f (tol %.2f); p1=1: %llu/%llu orange; %.2fs", n,
             worst, kExpansionTolerance, (unsigned long long)orange.decisions[0], (unsigned long long)orange_total,
             secs));
}

void f_accounting() {
  std::uint64_t paths = 0, wrong = 0;
  for (std::uint32_t f : {2u, 4u, 6u}) {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
      const auto w = dense_world(seed);
      const Snapshot s(w.g, kYear);
      for (const auto& sg : w.seedgraphs) {
        ExpansionStats st;
        (void)expand(sg, s, {0.2, 0.2, 0.2, f}, seed, &st);
        paths += st.green_per_path.size();
        for (auto g : st.green_per_path) wrong += g != f;
      }
    }
  }
  report(3, "green nodes per seed path", paths > 0 && wrong == 0,
         fmt("%llu paths over f in {2,4,6} at (0.2,0.2,0.2), %llu with a different green count",
             (unsigned long long)paths, (unsigned long long)wrong));
}

// ---- 4 ----

void negative_sampling() {
  std::uint64_t pos = 0, neg = 0, bad = 0, unbalanced = 0;
  auto check = [&](const t::RawGraph& raw, std::uint64_t seed) {
    const auto g = raw.build();
    const auto ds = build_dataset(g, kYear, seed);
    // Brute force: every pair that shares a paper of year <= kYear + 1.
    std::map<std::uint32_t, std::vector<std::uint32_t>> by_paper;
    for (const Edge& e : raw.edges) {
      if (e.relation == Relation::Writes && raw.years[e.dst.index] <= kYear + 1) by_paper[e.dst.index].push_back(e.src.index);
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> ever;
    for (const auto& [_, as] : by_paper)
      for (auto x : as)
        for (auto y : as)
          if (x < y) ever.emplace(x, y);
    const auto present = raw.nodes_in(kYear);
    unbalanced += ds.positives() != ds.negatives();
    pos += ds.positives();
    neg += ds.negatives();
    for (const auto& e : ds.examples) {
      if (e.label != 0) continue;
      const bool ok = !ever.contains({e.pair.a, e.pair.b}) && present.contains(author(e.pair.a).key()) &&
                      present.contains(author(e.pair.b).key());
      bad += !ok;
    }
  };
  for (std::uint64_t seed = 0; seed < 50; ++seed) check(t::random_connected_graph(seed, 200), seed);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto raw = t::random_connected_graph(900 + seed, 2000);
    if (raw.authors <= 1000) check(raw, seed);
  }
  report(4, "balanced negatives", unbalanced == 0 && bad == 0 && pos > 0,
         fmt("%llu positives, %llu negatives, %llu unbalanced instances, %llu negatives failing brute force",
             (unsigned long long)pos, (unsigned long long)neg, (unsigned long long)unbalanced,
             (unsigned long long)bad));
}

// ---- 5 ----

InfosphereEdgeSet exposure_for(const t::RawGraph& raw) {
  InfosphereEdgeSet set{kYear, {}};
  AuthorExposure a0{author(0), {}};
  a0.edges.push_back({{author(0), Relation::Writes, paper(raw.papers - 1)}, ExposureSource::AuthorFuture});
  a0.edges.push_back({{paper(0), Relation::DealsWith, topic(raw.topics - 1)}, ExposureSource::AuthorFuture});
  a0.edges.push_back({{paper(1), Relation::Cites, paper(raw.papers - 2)}, ExposureSource::AuthorFuture});
  set.per_author = {a0};
  return set;
}

void gradient_check() {
  using namespace acnet::gnn;
  const auto start = Clock::now();
  const auto raw = t::random_connected_graph(7, 30);
  const auto g = raw.build();
  const auto exposure = exposure_for(raw);
  const auto mg = build_message_graph(Snapshot(g, kYear), &exposure);
  std::vector<LabeledPair> batch;
  for (std::uint32_t a = 0; a + 1 < raw.authors && batch.size() < 8; ++a) {
    batch.push_back({AuthorPair::of(a, a + 1), static_cast<std::uint8_t>(a % 2), Split::Train});
  }
  double worst = 0;
  std::size_t groups = 0, empty_channels = 0;
  for (std::size_t c = 0; c < kNumChannels; ++c) empty_channels += mg.in[c].edge_count() == 0;
  for (Aggregation agg : {Aggregation::Sum, Aggregation::Mean, Aggregation::Min, Aggregation::Max}) {
    Model<long double> m({4, 5, agg}, mg.counts, 1);
    std::mt19937_64 rng(100 + static_cast<int>(agg));
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (auto& p : m.params())
      for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = u(rng);
    Tensors<long double> grad;
    (void)m.loss_and_grad(mg, batch, &grad);
    constexpr long double h = 1e-6L;
    for (std::size_t i = 0; i < layout::kTensorCount; ++i) {
      ++groups;
      auto& p = m.params()[i];
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        const long double keep = p.data()[k];
        p.data()[k] = keep + h;
        const long double up = m.loss_and_grad(mg, batch, nullptr);
        p.data()[k] = keep - h;
        const long double down = m.loss_and_grad(mg, batch, nullptr);
        p.data()[k] = keep;
        const long double fd = (up - down) / (2 * h);
        const long double an = grad[i].data()[k];
        const long double scale = std::max({std::abs(fd), std::abs(an), 1e-7L});
        worst = std::max(worst, static_cast<double>(std::abs(fd - an) / scale));
      }
    }
  }
  const double secs = seconds_since(start);
  report(5, "gradient check", worst < kGradientTolerance && empty_channels == 0 && secs < kGradientSeconds,
         fmt("%zu tensor groups over 4 aggregations on %zu nodes, max relative error %.3g (tol %.0e), %.2fs", groups,
             static_cast<std::size_t>(raw.authors + raw.papers + raw.topics), worst, kGradientTolerance, secs));
}

// ---- 6 ----

void training_sanity() {
  using namespace acnet::gnn;
  const auto start = Clock::now();
  // Two author communities, each publishing on its own topic; pairs inside community 1
  // are positives, pairs inside community 0 negatives.
  t::RawGraph raw;
  raw.authors = 24;
  raw.topics = 2;
  for (std::uint32_t a = 0; a < raw.authors; ++a) {
    for (int k = 0; k < 2; ++k) {
      const std::uint32_t p = raw.papers++;
      raw.years.push_back(2000 + k);
      raw.edges.push_back({author(a), Relation::Writes, paper(p)});
      raw.edges.push_back({paper(p), Relation::DealsWith, topic(a % 2)});
    }
  }
  const auto g = raw.build();
  LinkDataset ds{2001, {}};
  for (std::uint32_t a = 0; a < raw.authors; ++a)
    for (std::uint32_t b = a + 2; b < raw.authors; b += 2) {
      const AuthorPair p = AuthorPair::of(a, b);
      ds.examples.push_back({p, static_cast<std::uint8_t>(a % 2), split_of(p)});
    }
  const auto mg = build_message_graph(Snapshot(g, ds.year));
  TrainConfig cfg;
  cfg.epochs = kToyEpochs;
  cfg.patience = kToyEpochs;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.01;
  cfg.model = {8, 8, Aggregation::Sum};
  const auto r = train(mg, ds, cfg);
  const double acc = evaluate(r.model, mg, ds.examples).accuracy;
  const double secs = seconds_since(start);
  report(6, "separable toy training", acc >= kToyAccuracy && r.history.size() <= kToyEpochs && secs < kToySeconds,
         fmt("accuracy %.4f after %zu epochs (need >= %.2f within %u), %.2fs", acc, r.history.size(), kToyAccuracy,
             kToyEpochs, secs));
}

// ---- 7, 8 ----

ExperimentSpec repro_spec(std::uint64_t seed, const std::filesystem::path& out) {
  auto s = parse_spec(R"({
    "corpus": {"synth": {"n_authors": 4000, "n_years": 6, "papers_per_year": 1500, "rho": 0.7}},
    "train": {"epochs": 100, "patience": 10, "batch_size": 256, "learning_rate": 0.001, "dim": 16, "hidden": 16}
  })");
  s.seed = seed;
  s.train.seed = seed;
  s.out_dir = out;
  return s;
}

void directional_reproduction() {
  const auto start = Clock::now();
  t::TempDir dir("acceptance-repro");
  const double drops[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  double none = 0, top = 0;
  std::array<double, 5> author_at{};
  constexpr int kSeeds = 5;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    const auto base_dir = dir / ("seed" + std::to_string(seed));
    none += run(repro_spec(seed, base_dir / "none")).row.accuracy / kSeeds;
    auto tp = repro_spec(seed, base_dir / "top");
    tp.infosphere.type = InfosphereType::TopPaper;
    top += run(tp).row.accuracy / kSeeds;
    for (std::size_t d = 0; d < 5; ++d) {
      auto au = repro_spec(seed, base_dir / ("author" + std::to_string(d)));
      au.infosphere.type = InfosphereType::Author;
      au.drop = drops[d];
      author_at[d] += run(au).row.accuracy / kSeeds;
    }
  }
  const double secs = seconds_since(start);
  const double author = author_at[0];
  report(7, "infosphere ordering at rho=0.7",
         author >= none + kAuthorMargin && top <= none + kTopPaperSlack && secs < kReproSeconds,
         fmt("mean accuracy over %d seeds: none %.4f, author %.4f (%+.4f, need >= %+.2f), top-paper %.4f (%+.4f, "
             "need <= %+.2f); %.1fs for all runs of 7 and 8",
             kSeeds, none, author, author - none, kAuthorMargin, top, top - none, kTopPaperSlack, secs));

  bool monotone = true;
  for (std::size_t d = 0; d + 1 < 5; ++d) monotone &= author_at[d + 1] <= author_at[d] + kDropNoise;
  const bool matches_none = std::abs(author_at[4] - none) <= kDropNoise;
  report(8, "dropout trend", monotone && matches_none,
         fmt("author accuracy at drop 0/.25/.5/.75/1: %.4f %.4f %.4f %.4f %.4f; none %.4f (noise %.2f)",
             author_at[0], author_at[1], author_at[2], author_at[3], author_at[4], none, kDropNoise));
}

// ---- 9 ----

void ingest_fidelity() {
  bool counts_ok = true, memory_ok = true;
  std::string detail;
  for (bool ndjson : {false, true}) {
    const auto c = t::synthetic_corpus(1000, 17, ndjson);
    std::istringstream in(c.text);
    V14Reader reader(in);
    GraphIngestor ing;
    PaperRecord r;
    while (reader.next(r)) ing.add(r);
    const auto [g, st] = ing.finish(reader.stats());
    const bool ok = st.parse.records_parsed == c.valid_records && st.parse.records_skipped == c.skipped &&
                    st.duplicate_records == c.duplicates && st.dangling_references == c.dangling &&
                    g.node_count(NodeType::Author) == c.authors && g.node_count(NodeType::Paper) == c.papers &&
                    g.node_count(NodeType::Topic) == c.topics && g.edge_count(Relation::Writes) == c.writes &&
                    g.edge_count(Relation::DealsWith) == c.deals_with && g.edge_count(Relation::Cites) == c.cites;
    counts_ok &= ok;
    memory_ok &= st.parse.peak_record_buffer <= 2 * st.parse.max_record_bytes + kBufferSlack;
    detail += fmt("%s: %llu papers/%llu cites %s, buffer %llu for largest record %llu; ", ndjson ? "ndjson" : "array",
                  (unsigned long long)g.node_count(NodeType::Paper), (unsigned long long)g.edge_count(Relation::Cites),
                  ok ? "match" : "MISMATCH", (unsigned long long)st.parse.peak_record_buffer,
                  (unsigned long long)st.parse.max_record_bytes);
  }
  // Throughput on a larger sample, parse plus graph construction.
  const auto big = t::synthetic_corpus(200000, 5, true);
  const auto start = Clock::now();
  std::istringstream in(big.text);
  const auto [g, st] = ingest_stream(in);
  const double secs = seconds_since(start);
  const double rate = static_cast<double>(st.parse.records_parsed + st.parse.records_skipped) / secs;
  detail += fmt("%.0f records/s (need >= %.0f)", rate, kIngestRecordsPerSecond);
  report(9, "ingest fidelity", counts_ok && memory_ok && rate >= kIngestRecordsPerSecond, detail);
}

// ---- 10 ----

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  t::TempDir a("acceptance-det-a"), b("acceptance-det-b");
  auto spec_for = [](const std::filesystem::path& out) {
    auto s = parse_spec(R"({
      "corpus": {"synth": {"n_authors": 300, "n_years": 5, "papers_per_year": 120}},
      "infosphere": {"type": "author", "p1": 0.3, "p2": 0.2, "p3": 0.1, "f": 2},
      "train": {"epochs": 8, "batch_size": 64, "learning_rate": 0.01, "dim": 8, "hidden": 8},
      "seed": 11, "jobs": 1
    })");
    s.out_dir = out;
    return s;
  };
  const auto ra = run(spec_for(a.path())).row;
  const auto rb = run(spec_for(b.path())).row;
  const bool dataset = slurp(a / "dataset.ndjson") == slurp(b / "dataset.ndjson");
  const bool checkpoint = slurp(a / "model.anpm") == slurp(b / "model.anpm");
  const bool infosphere = slurp(a / "infosphere.anpi") == slurp(b / "infosphere.anpi");
  const bool rows = ra.same_outcome(rb);
  report(10, "determinism", dataset && checkpoint && infosphere && rows,
         fmt("dataset %s, infosphere %s, checkpoint %s, result row %s (accuracy %.6f)",
             dataset ? "identical" : "DIFFERS", infosphere ? "identical" : "DIFFERS",
             checkpoint ? "identical" : "DIFFERS", rows ? "identical" : "DIFFERS", ra.accuracy));
}

void guarded(int id, const char* name, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("threw: ") + e.what());
    if (id == 7) report(8, "dropout trend", false, "not measured");
  }
}

}  // namespace

int main() {
  guarded(1, "seedgraph shortest paths", seedgraph_oracle);
  guarded(2, "expansion decision frequencies", expansion_statistics);
  guarded(3, "green nodes per seed path", f_accounting);
  guarded(4, "balanced negatives", negative_sampling);
  guarded(5, "gradient check", gradient_check);
  guarded(6, "separable toy training", training_sanity);
  guarded(7, "infosphere ordering at rho=0.7", directional_reproduction);
  guarded(9, "ingest fidelity", ingest_fidelity);
  guarded(10, "determinism", determinism);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
