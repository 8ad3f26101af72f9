#include <acnet/gnn/checkpoint.hpp>
#include <acnet/gnn/message_graph.hpp>
#include <acnet/gnn/model.hpp>
#include <acnet/gnn/train.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace acnet;
using namespace acnet::gnn;
using acnet::testing::random_connected_graph;

namespace {

constexpr std::int32_t kYear = 2003;

// Exposure edges touching every relation, drawn from the raw node ranges.
InfosphereEdgeSet some_exposure(const acnet::testing::RawGraph& raw) {
  InfosphereEdgeSet set{kYear, {}};
  AuthorExposure a0{author(0), {}};
  a0.edges.push_back({{author(0), Relation::Writes, paper(raw.papers - 1)}, ExposureSource::AuthorFuture});
  a0.edges.push_back({{paper(0), Relation::DealsWith, topic(raw.topics - 1)}, ExposureSource::AuthorFuture});
  a0.edges.push_back({{paper(1), Relation::Cites, paper(raw.papers - 2)}, ExposureSource::AuthorFuture});
  AuthorExposure a1{author(1), {}};
  a1.edges.push_back({{author(1), Relation::Writes, paper(2)}, ExposureSource::TopPaper});
  a1.edges.push_back({{author(raw.authors - 1), Relation::Writes, paper(0)}, ExposureSource::TopPaper});
  set.per_author = {a0, a1};
  return set;
}

// Independent message graph: plain neighbour lists from the raw edge list.
struct OracleGraph {
  std::array<std::uint32_t, kNumNodeTypes> counts{};
  std::array<std::vector<std::set<std::uint32_t>>, kNumChannels> in;
  std::vector<long double> year;
};

OracleGraph oracle_graph(const acnet::testing::RawGraph& raw, const InfosphereEdgeSet* exposure) {
  OracleGraph o;
  o.counts = {raw.authors, raw.papers, raw.topics};
  for (std::size_t c = 0; c < kNumChannels; ++c) o.in[c].resize(o.counts[to_index(channel_target(c))]);
  auto add = [&](const Edge& e, bool exp) {
    o.in[channel_index(e.relation, Direction::Forward, exp)][e.dst.index].insert(e.src.index);
    o.in[channel_index(e.relation, Direction::Reverse, exp)][e.src.index].insert(e.dst.index);
  };
  for (const Edge& e : raw.edges) {
    if (raw.edge_in(e, kYear)) add(e, false);
  }
  if (exposure) {
    for (const auto& ae : exposure->per_author)
      for (const auto& x : ae.edges) add(x.edge, true);
  }
  const auto [lo, hi] = std::minmax_element(raw.years.begin(), raw.years.end());
  for (auto y : raw.years) o.year.push_back(static_cast<long double>(y - *lo) / (*hi - *lo));
  return o;
}

using Rows = std::vector<std::vector<long double>>;

Rows to_rows(const Matrix<long double>& m) {
  Rows r(static_cast<std::size_t>(m.rows()), std::vector<long double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

Rows matmul(const Rows& x, const Matrix<long double>& w) {
  Rows out(x.size(), std::vector<long double>(static_cast<std::size_t>(w.cols()), 0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (Eigen::Index k = 0; k < w.cols(); ++k)
      for (Eigen::Index j = 0; j < w.rows(); ++j) out[i][k] += x[i][j] * w(j, k);
  return out;
}

std::array<Rows, kNumNodeTypes> oracle_layer(const OracleGraph& o, const Model<long double>& m,
                                             const std::array<Rows, kNumNodeTypes>& x, std::size_t layer) {
  const auto& P = m.params();
  std::array<Rows, kNumNodeTypes> z;
  for (NodeType t : kAllNodeTypes) {
    z[to_index(t)] = matmul(x[to_index(t)], P[layout::self(layer, t)]);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      if (channel_target(c) != t) continue;
      const Rows& src = x[to_index(channel_source(c))];
      const std::size_t d = src.empty() ? 0 : src[0].size();
      for (std::size_t v = 0; v < o.in[c].size(); ++v) {
        const auto& nb = o.in[c][v];
        if (nb.empty()) continue;
        std::vector<long double> a(d);
        for (std::size_t j = 0; j < d; ++j) {
          std::vector<long double> vals;
          for (auto u : nb) vals.push_back(src[u][j]);
          switch (m.config().aggregation) {
            case Aggregation::Sum: a[j] = std::accumulate(vals.begin(), vals.end(), 0.0L); break;
            case Aggregation::Mean: a[j] = std::accumulate(vals.begin(), vals.end(), 0.0L) / vals.size(); break;
            case Aggregation::Min: a[j] = *std::min_element(vals.begin(), vals.end()); break;
            case Aggregation::Max: a[j] = *std::max_element(vals.begin(), vals.end()); break;
          }
        }
        const auto msg = matmul(Rows{a}, P[layout::weight(layer, c)]);
        for (std::size_t k = 0; k < msg[0].size(); ++k) z[to_index(t)][v][k] += msg[0][k] + P[layout::bias(layer, c)](0, k);
      }
    }
  }
  return z;
}

std::array<Rows, kNumNodeTypes> oracle_encode(const OracleGraph& o, const Model<long double>& m) {
  std::array<Rows, kNumNodeTypes> x;
  for (NodeType t : kAllNodeTypes) x[to_index(t)] = to_rows(m.params()[layout::embedding(t)]);
  const auto& proj = m.params()[layout::kYearProjection];
  for (std::size_t p = 0; p < x[1].size(); ++p)
    for (std::size_t k = 0; k < x[1][p].size(); ++k) x[1][p][k] += o.year[p] * proj(0, k);
  auto h = oracle_layer(o, m, x, 0);
  for (auto& rows : h)
    for (auto& r : rows)
      for (auto& v : r) v = std::max(v, 0.0L);
  return oracle_layer(o, m, h, 1);
}

long double oracle_loss(const OracleGraph& o, const Model<long double>& m, const std::vector<LabeledPair>& batch) {
  const auto z = oracle_encode(o, m);
  const auto& P = m.params();
  long double total = 0;
  for (const auto& ex : batch) {
    std::vector<long double> e(z[0][ex.pair.a]);
    e.insert(e.end(), z[0][ex.pair.b].begin(), z[0][ex.pair.b].end());
    auto u = matmul(Rows{e}, P[layout::kDecoderW1])[0];
    long double s = P[layout::kDecoderB2](0, 0);
    for (std::size_t k = 0; k < u.size(); ++k) s += std::max(u[k] + P[layout::kDecoderB1](0, k), 0.0L) * P[layout::kDecoderW2](k, 0);
    const long double p = 1 / (1 + std::exp(-s));
    total -= ex.label ? std::log(p) : std::log(1 - p);
  }
  return total / batch.size();
}

std::vector<LabeledPair> some_pairs(std::uint32_t authors) {
  std::vector<LabeledPair> out;
  std::uint8_t label = 0;
  for (std::uint32_t a = 0; a + 1 < authors && out.size() < 8; ++a) {
    out.push_back({AuthorPair::of(a, (a * 5 + 1) % authors == a ? a + 1 : (a * 5 + 1) % authors), label, Split::Train});
    label ^= 1;
  }
  return out;
}

void randomize(Model<long double>& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (auto& t : m.params())
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
}

// Parameters the author-only link loss cannot reach: second-layer paper and topic outputs, and
// first-layer topic outputs (topics only feed papers, which are two hops from the author readout).
bool unused_by_link_loss(std::size_t i) {
  const auto unused_target = [](std::size_t layer, NodeType t) {
    return t == NodeType::Topic || (layer == 1 && t == NodeType::Paper);
  };
  for (std::size_t layer : {0u, 1u}) {
    for (NodeType t : kAllNodeTypes) {
      if (unused_target(layer, t) && i == layout::self(layer, t)) return true;
    }
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      if (!unused_target(layer, channel_target(c))) continue;
      if (i == layout::weight(layer, c) || i == layout::bias(layer, c)) return true;
    }
  }
  return false;
}

}  // namespace

TEST(Channels, IndexingIsABijection) {
  std::set<std::size_t> seen;
  for (bool exp : {false, true})
    for (Relation r : kAllRelations)
      for (Direction d : {Direction::Forward, Direction::Reverse}) {
        const std::size_t c = channel_index(r, d, exp);
        ASSERT_LT(c, kNumChannels);
        EXPECT_TRUE(seen.insert(c).second);
        const Channel ch = channel_at(c);
        EXPECT_EQ(ch.relation, r);
        EXPECT_EQ(ch.direction, d);
        EXPECT_EQ(ch.exposure, exp);
      }
  EXPECT_EQ(channel_target(channel_index(Relation::Writes, Direction::Forward, false)), NodeType::Paper);
  EXPECT_EQ(channel_source(channel_index(Relation::Writes, Direction::Reverse, true)), NodeType::Paper);
  EXPECT_EQ(channel_name(channel_index(Relation::Cites, Direction::Reverse, true)), "cites.rev.exposure");
}

TEST(MessageGraph, MatchesOracleNeighbourhoods) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto raw = random_connected_graph(seed, 120);
    const auto g = raw.build();
    const auto exposure = some_exposure(raw);
    const auto mg = build_message_graph(Snapshot(g, kYear), &exposure);
    const auto o = oracle_graph(raw, &exposure);
    EXPECT_EQ(mg.counts, o.counts);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      ASSERT_EQ(mg.in[c].rows(), o.in[c].size());
      for (std::uint32_t v = 0; v < mg.in[c].rows(); ++v) {
        const auto row = mg.in[c].row(v);
        EXPECT_EQ(std::set<std::uint32_t>(row.begin(), row.end()), o.in[c][v]);
        EXPECT_TRUE(std::is_sorted(row.begin(), row.end()));
      }
      if (channel_at(c).exposure) {
        EXPECT_GT(mg.in[c].edge_count(), 0u);
      }
    }
    for (std::size_t p = 0; p < o.year.size(); ++p) EXPECT_NEAR(mg.paper_year[p], static_cast<double>(o.year[p]), 1e-15);
  }
}

TEST(MessageGraph, WithoutExposureChannelsAreEmpty) {
  const auto raw = random_connected_graph(1, 80);
  const auto g = raw.build();
  const InfosphereEdgeSet empty{kYear, {}};
  const auto a = build_message_graph(Snapshot(g, kYear));
  const auto b = build_message_graph(Snapshot(g, kYear), &empty);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (channel_at(c).exposure) {
      EXPECT_EQ(a.in[c].edge_count(), 0u);
    }
    EXPECT_EQ(a.in[c].targets, b.in[c].targets);
  }
}

TEST(MessageGraph, NeighbourCapSubsamples) {
  const auto raw = random_connected_graph(2, 150);
  const auto g = raw.build();
  const auto full = build_message_graph(Snapshot(g, kYear));
  const auto capped = build_message_graph(Snapshot(g, kYear), nullptr, {2, 5});
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    for (std::uint32_t v = 0; v < full.in[c].rows(); ++v) {
      const auto f = full.in[c].row(v);
      const auto k = capped.in[c].row(v);
      EXPECT_EQ(k.size(), std::min<std::size_t>(2, f.size()));
      for (auto u : k) EXPECT_TRUE(std::binary_search(f.begin(), f.end(), u));
    }
  }
}

TEST(MessageGraph, RejectsForeignExposure) {
  const auto raw = random_connected_graph(3, 60);
  const auto g = raw.build();
  InfosphereEdgeSet bad{kYear, {{author(0), {{{author(0), Relation::Writes, paper(100000)}, ExposureSource::TopPaper}}}}};
  EXPECT_THROW((void)build_message_graph(Snapshot(g, kYear), &bad), std::invalid_argument);
}

TEST(Model, InitialisationFollowsShapesAndSeed) {
  const ModelConfig cfg{6, 5, Aggregation::Mean};
  const Model<double> a(cfg, {4, 7, 3}, 11), b(cfg, {4, 7, 3}, 11), c(cfg, {4, 7, 3}, 12);
  ASSERT_EQ(a.params().size(), layout::kTensorCount);
  EXPECT_EQ(a.params()[layout::embedding(NodeType::Paper)].rows(), 7);
  EXPECT_EQ(a.params()[layout::kDecoderW1].rows(), 12);
  EXPECT_EQ(a.params()[layout::kDecoderW1].cols(), 5);
  EXPECT_TRUE(a.params()[layout::bias(0, 3)].isZero());
  const double bound = 1.0 / std::sqrt(6.0);
  EXPECT_LE(a.params()[layout::weight(1, 2)].cwiseAbs().maxCoeff(), bound);
  for (std::size_t i = 0; i < layout::kTensorCount; ++i) {
    EXPECT_EQ(a.params()[i], b.params()[i]) << layout::tensor_name(i);
  }
  EXPECT_NE(a.params()[layout::embedding(NodeType::Author)], c.params()[layout::embedding(NodeType::Author)]);
  EXPECT_NO_THROW(a.check_shapes());
  EXPECT_THROW(Model<double>({0, 5, Aggregation::Sum}, {1, 1, 1}, 0), std::invalid_argument);
}

TEST(Model, TensorNamesAreUnique) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < layout::kTensorCount; ++i) EXPECT_TRUE(names.insert(layout::tensor_name(i)).second);
  EXPECT_EQ(layout::tensor_name(layout::kDecoderB2), "decoder.b2");
  EXPECT_EQ(layout::tensor_name(layout::self(1, NodeType::Topic)), "layer1.self.topic");
}

TEST(Model, EncodeMatchesDenseOracle) {
  for (Aggregation agg : {Aggregation::Sum, Aggregation::Mean, Aggregation::Min, Aggregation::Max}) {
    const auto raw = random_connected_graph(40 + static_cast<int>(agg), 60);
    const auto g = raw.build();
    const auto exposure = some_exposure(raw);
    const auto mg = build_message_graph(Snapshot(g, kYear), &exposure);
    Model<long double> m({5, 4, agg}, mg.counts, 3);
    randomize(m, 9);
    const auto o = oracle_graph(raw, &exposure);
    const auto expected = oracle_encode(o, m);
    const auto got = m.encode(mg);
    for (std::size_t t = 0; t < kNumNodeTypes; ++t) {
      ASSERT_EQ(static_cast<std::size_t>(got[t].rows()), expected[t].size());
      for (std::size_t v = 0; v < expected[t].size(); ++v)
        for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(static_cast<double>(got[t](v, k)), static_cast<double>(expected[t][v][k]), 1e-12);
    }
    const auto batch = some_pairs(raw.authors);
    EXPECT_NEAR(static_cast<double>(m.loss_and_grad(mg, batch, nullptr)), static_cast<double>(oracle_loss(o, m, batch)), 1e-12);
    // Author-only encoding agrees with the full one.
    const auto authors_only = m.encode(mg, {true, false, false});
    EXPECT_EQ(authors_only[0], got[0]);
    EXPECT_EQ(authors_only[1].size(), 0);
  }
}

TEST(Model, GradientMatchesFiniteDifferences) {
  for (Aggregation agg : {Aggregation::Sum, Aggregation::Mean, Aggregation::Min, Aggregation::Max}) {
    const auto raw = random_connected_graph(7, 30);
    const auto g = raw.build();
    const auto exposure = some_exposure(raw);
    const auto mg = build_message_graph(Snapshot(g, kYear), &exposure);
    for (std::size_t c = 0; c < kNumChannels; ++c) ASSERT_GT(mg.in[c].edge_count(), 0u) << channel_name(c);
    Model<long double> m({4, 5, agg}, mg.counts, 1);
    randomize(m, 100 + static_cast<int>(agg));
    const auto batch = some_pairs(raw.authors);
    Tensors<long double> grad;
    (void)m.loss_and_grad(mg, batch, &grad);
    constexpr long double h = 1e-6L;
    double worst = 0;
    for (std::size_t i = 0; i < layout::kTensorCount; ++i) {
      auto& t = m.params()[i];
      long double largest = 0;
      for (Eigen::Index k = 0; k < t.size(); ++k) {
        const long double keep = t.data()[k];
        t.data()[k] = keep + h;
        const long double up = m.loss_and_grad(mg, batch, nullptr);
        t.data()[k] = keep - h;
        const long double down = m.loss_and_grad(mg, batch, nullptr);
        t.data()[k] = keep;
        const long double fd = (up - down) / (2 * h);
        const long double an = grad[i].data()[k];
        const long double scale = std::max({std::abs(fd), std::abs(an), 1e-7L});
        worst = std::max(worst, static_cast<double>(std::abs(fd - an) / scale));
        largest = std::max(largest, std::abs(an));
      }
      if (unused_by_link_loss(i)) {
        EXPECT_EQ(largest, 0.0L) << layout::tensor_name(i);
      } else {
        EXPECT_GT(largest, 0.0L) << layout::tensor_name(i) << " " << to_string(agg);
      }
    }
    EXPECT_LT(worst, 1e-4) << to_string(agg);
  }
}

TEST(Model, CastPreservesValues) {
  const Model<double> m({3, 2, Aggregation::Max}, {2, 2, 2}, 4);
  const auto back = m.cast<long double>().cast<double>();
  for (std::size_t i = 0; i < layout::kTensorCount; ++i) EXPECT_EQ(back.params()[i], m.params()[i]);
  EXPECT_EQ(back.config(), m.config());
}

TEST(Model, BceMatchesDirectFormula) {
  for (double s : {-30.0, -2.0, 0.0, 0.7, 25.0}) {
    const double p = 1 / (1 + std::exp(-s));
    if (s > -20 && s < 20) {
      EXPECT_NEAR(bce_with_logit(s, 1.0), -std::log(p), 1e-12);
      EXPECT_NEAR(bce_with_logit(s, 0.0), -std::log(1 - p), 1e-12);
    }
    EXPECT_TRUE(std::isfinite(bce_with_logit(s, 1.0)));
  }
  EXPECT_NEAR(bce_with_logit(-800.0, 1.0), 800.0, 1e-9);
}

TEST(Aggregation, ParseAndPrint) {
  for (Aggregation a : {Aggregation::Sum, Aggregation::Mean, Aggregation::Min, Aggregation::Max}) {
    EXPECT_EQ(parse_aggregation(to_string(a)), a);
  }
  EXPECT_THROW(parse_aggregation("median"), std::invalid_argument);
}

TEST(Adam, MatchesHandComputedSteps) {
  Tensors<double> p{Matrix<double>::Constant(1, 2, 1.0)};
  Adam adam(0.1, 0.9, 0.999, 1e-8);
  // Reference recurrence written out for the first element.
  double x = 1.0, m = 0, v = 0;
  const double grads[] = {0.5, -0.25, 2.0};
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    Tensors<double> gr{Matrix<double>::Constant(1, 2, g)};
    gr[0](0, 1) = 0.0;
    adam.step(p, gr);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    x -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p[0](0, 0), x, 1e-15);
    EXPECT_EQ(p[0](0, 1), 1.0);
  }
  EXPECT_EQ(adam.state().step, 3u);
  // First step moves by almost exactly the learning rate.
  Tensors<double> q{Matrix<double>::Constant(1, 1, 0.0)};
  Adam fresh(0.01, 0.9, 0.999, 1e-8);
  fresh.step(q, {Matrix<double>::Constant(1, 1, 3.0)});
  EXPECT_NEAR(q[0](0, 0), -0.01, 1e-10);
}

TEST(EarlyStopping, CountsEpochsWithoutStrictImprovement) {
  EarlyStopping s(2);
  EXPECT_TRUE(s.observe(1.0));
  EXPECT_FALSE(s.observe(1.0));
  EXPECT_FALSE(s.should_stop());
  EXPECT_TRUE(s.observe(0.5));
  EXPECT_FALSE(s.observe(0.7));
  EXPECT_FALSE(s.observe(0.6));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best(), 0.5);
}

TEST(Evaluate, MetricsMatchBruteForce) {
  std::uint64_t seed = 12;
  auto raw = random_connected_graph(seed, 200);
  while (build_dataset(raw.build(), kYear, 3).examples.size() < 12) raw = random_connected_graph(++seed, 200);
  const auto g = raw.build();
  const auto ds = build_dataset(g, kYear, 3);
  const auto mg = build_message_graph(Snapshot(g, kYear));
  const Model<double> m({4, 4, Aggregation::Sum}, mg.counts, 2);
  const auto probs = m.predict(mg, ds.examples);
  const auto met = evaluate(m, mg, ds.examples);
  double wins = 0, pairs = 0, correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    correct += (probs[i] >= 0.5) == (ds.examples[i].label == 1);
    if (ds.examples[i].label != 1) continue;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (ds.examples[j].label != 0) continue;
      pairs += 1;
      wins += probs[i] > probs[j] ? 1.0 : probs[i] == probs[j] ? 0.5 : 0.0;
    }
  }
  EXPECT_NEAR(met.auc, wins / pairs, 1e-12);
  EXPECT_NEAR(met.accuracy, correct / probs.size(), 1e-12);
  EXPECT_EQ(met.count, ds.examples.size());
  EXPECT_THROW((void)evaluate(m, mg, {}), std::invalid_argument);
}

namespace {

// Two communities: group-0 authors publish on topic 0, group-1 authors on topic 1.
// Pairs inside group 1 are positives, pairs inside group 0 negatives.
std::pair<HeteroTemporalGraph, LinkDataset> separable_task(std::uint32_t per_group) {
  acnet::testing::RawGraph raw;
  raw.authors = 2 * per_group;
  raw.topics = 2;
  for (std::uint32_t a = 0; a < raw.authors; ++a) {
    for (int k = 0; k < 2; ++k) {
      const std::uint32_t p = raw.papers++;
      raw.years.push_back(2000 + k);
      raw.edges.push_back({author(a), Relation::Writes, paper(p)});
      raw.edges.push_back({paper(p), Relation::DealsWith, topic(a % 2)});
    }
  }
  LinkDataset ds{2001, {}};
  for (std::uint32_t a = 0; a < raw.authors; ++a)
    for (std::uint32_t b = a + 2; b < raw.authors; b += 2) {
      const AuthorPair p = AuthorPair::of(a, b);
      ds.examples.push_back({p, static_cast<std::uint8_t>(a % 2), split_of(p)});
    }
  return {raw.build(), ds};
}

}  // namespace

TEST(Train, SeparableTaskIsLearned) {
  const auto [g, ds] = separable_task(12);
  const auto mg = build_message_graph(Snapshot(g, ds.year));
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.patience = 200;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.01;
  cfg.model = {8, 8, Aggregation::Sum};
  const auto result = train(mg, ds, cfg);
  EXPECT_GE(evaluate(result.model, mg, ds.examples).accuracy, 0.99);
  EXPECT_FALSE(result.history.empty());
  EXPECT_LE(result.best_epoch, result.history.size());
}

TEST(Train, DeterministicAndResumable) {
  const auto [g, ds] = separable_task(8);
  const auto mg = build_message_graph(Snapshot(g, ds.year));
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.01;
  cfg.seed = 5;
  cfg.model = {4, 4, Aggregation::Max};
  const auto a = train(mg, ds, cfg);
  const auto b = train(mg, ds, cfg);
  std::stringstream sa, sb;
  save_checkpoint({cfg, a.model, a.optimizer, a.best_epoch}, sa);
  save_checkpoint({cfg, b.model, b.optimizer, b.best_epoch}, sb);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.history, b.history);
  std::vector<std::uint32_t> seen;
  const auto c = train(mg, ds, cfg, [&](const EpochRecord& r) { seen.push_back(r.epoch); });
  EXPECT_EQ(seen.size(), c.history.size());
}

TEST(Train, EarlyStoppingTriggers) {
  const auto [g, ds] = separable_task(6);
  const auto mg = build_message_graph(Snapshot(g, ds.year));
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.patience = 3;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.5;  // overshoots, so the monitored loss stops improving quickly
  cfg.model = {4, 4, Aggregation::Sum};
  const auto r = train(mg, ds, cfg);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_LT(r.history.size(), 500u);
  EXPECT_EQ(r.history.size(), r.best_epoch + 3);
}

TEST(Train, RejectsBadConfigs) {
  const auto [g, ds] = separable_task(4);
  const auto mg = build_message_graph(Snapshot(g, ds.year));
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW((void)train(mg, ds, cfg), std::invalid_argument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW((void)train(mg, ds, cfg), std::invalid_argument);
  cfg = {};
  LinkDataset only_test{ds.year, {}};
  for (auto e : ds.examples) {
    e.split = Split::Test;
    only_test.examples.push_back(e);
  }
  EXPECT_THROW((void)train(mg, only_test, cfg), std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TrainConfig cfg;
  cfg.seed = 77;
  cfg.learning_rate = 3e-4;
  cfg.model = {5, 3, Aggregation::Min};
  Model<double> m(cfg.model, {3, 4, 2}, 8);
  AdamState st;
  st.step = 12;
  st.m = m.zeros_like();
  st.v = m.zeros_like();
  st.m[4](0, 0) = 0.25;
  const Checkpoint ck{cfg, m, st, 9};
  std::stringstream buf;
  save_checkpoint(ck, buf);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "ANPM");
  const auto back = load_checkpoint(buf);
  EXPECT_EQ(back.config, cfg);
  EXPECT_EQ(back.best_epoch, 9u);
  EXPECT_EQ(back.optimizer.step, 12u);
  EXPECT_EQ(back.optimizer.m[4](0, 0), 0.25);
  for (std::size_t i = 0; i < layout::kTensorCount; ++i) EXPECT_EQ(back.model.params()[i], m.params()[i]);
  std::stringstream again;
  save_checkpoint(back, again);
  EXPECT_EQ(again.str(), bytes);

  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW((void)load_checkpoint(truncated), DataError);
  std::string wrong = bytes;
  wrong[0] = 'X';
  std::stringstream bad(wrong);
  EXPECT_THROW((void)load_checkpoint(bad), DataError);
}

TEST(Checkpoint, HistoryCsvRoundTrip) {
  const std::vector<EpochRecord> h{{1, 0.6931471805599453, 0.7, 0.5}, {2, 1.0 / 3.0, 0.123456789012345678, 0.75}};
  std::stringstream buf;
  write_history_csv(h, buf);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "epoch,train_loss,val_loss,val_acc");
  EXPECT_EQ(read_history_csv(buf), h);
}
