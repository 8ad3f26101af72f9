#include <acnet/link_task.hpp>
#include <acnet/synth.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace acnet;
using acnet::testing::random_connected_graph;

namespace {

constexpr std::int32_t kYear = 2003;

// Co-author pairs with at least one joint paper of year <= `year`, from raw edges.
std::set<std::pair<std::uint32_t, std::uint32_t>> brute_coauthors(const acnet::testing::RawGraph& raw, std::int32_t year) {
  std::map<std::uint32_t, std::vector<std::uint32_t>> by_paper;
  for (const Edge& e : raw.edges) {
    if (e.relation == Relation::Writes && raw.years[e.dst.index] <= year) by_paper[e.dst.index].push_back(e.src.index);
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> out;
  for (const auto& [_, as] : by_paper) {
    for (auto x : as)
      for (auto y : as)
        if (x < y) out.emplace(x, y);
  }
  return out;
}

}  // namespace

TEST(AuthorPair, Canonical) {
  EXPECT_EQ(AuthorPair::of(5, 2), (AuthorPair{2, 5}));
  EXPECT_EQ(AuthorPair::of(author(1), author(3)), (AuthorPair{1, 3}));
  EXPECT_THROW(AuthorPair::of(4, 4), std::invalid_argument);
  EXPECT_THROW(AuthorPair::of(author(1), paper(3)), std::invalid_argument);
  EXPECT_EQ((AuthorPair{1, 2}).key(), (1ull << 32) | 2);
}

TEST(Split, HashSplitIsStableAndRoughlyEightyTenTen) {
  std::array<int, 3> hist{};
  for (std::uint32_t a = 0; a < 300; ++a)
    for (std::uint32_t b = a + 1; b < 300; ++b) ++hist[static_cast<int>(split_of({a, b}))];
  const double total = hist[0] + hist[1] + hist[2];
  EXPECT_NEAR(hist[0] / total, 0.8, 0.01);
  EXPECT_NEAR(hist[1] / total, 0.1, 0.01);
  EXPECT_NEAR(hist[2] / total, 0.1, 0.01);
  EXPECT_EQ(split_of({3, 9}), split_of({3, 9}));
  EXPECT_EQ(parse_split("val"), Split::Val);
  EXPECT_THROW(parse_split("dev"), std::invalid_argument);
}

TEST(CoauthorPairs, MatchBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto raw = random_connected_graph(seed, 150);
    const auto g = raw.build();
    for (std::int32_t y : {kYear - 1, kYear, kYear + 1}) {
      std::set<std::pair<std::uint32_t, std::uint32_t>> lib;
      for (const auto& p : coauthor_pairs(Snapshot(g, y))) lib.emplace(p.a, p.b);
      EXPECT_EQ(lib, brute_coauthors(raw, y));
    }
  }
}

TEST(PositiveLabels, MatchBruteForce) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto raw = random_connected_graph(seed, 150);
    const auto g = raw.build();
    const auto present = raw.nodes_in(kYear);
    const auto before = brute_coauthors(raw, kYear);
    std::set<std::pair<std::uint32_t, std::uint32_t>> expected;
    for (const auto& p : brute_coauthors(raw, kYear + 1)) {
      if (before.contains(p)) continue;
      if (present.contains(author(p.first).key()) && present.contains(author(p.second).key())) expected.insert(p);
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> lib;
    for (const auto& p : positive_labels(g, kYear)) lib.emplace(p.a, p.b);
    EXPECT_EQ(lib, expected);
  }
}

TEST(NegativeSample, BalancedAndVerifiedByBruteForce) {
  std::size_t total_pos = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto raw = random_connected_graph(seed, 180);
    const auto g = raw.build();
    const auto ds = build_dataset(g, kYear, seed);
    const auto present = raw.nodes_in(kYear);
    const auto ever = brute_coauthors(raw, kYear + 1);
    EXPECT_EQ(ds.positives(), ds.negatives());
    total_pos += ds.positives();
    std::set<AuthorPair> seen;
    for (const auto& e : ds.examples) {
      EXPECT_TRUE(seen.insert(e.pair).second);
      EXPECT_EQ(e.split, split_of(e.pair));
      if (e.label == 0) {
        EXPECT_TRUE(present.contains(author(e.pair.a).key()));
        EXPECT_TRUE(present.contains(author(e.pair.b).key()));
        EXPECT_FALSE(ever.contains({e.pair.a, e.pair.b}));
      }
    }
  }
  EXPECT_GT(total_pos, 30u);
}

TEST(NegativeSample, DenseRegimeAndExhaustion) {
  // Four authors, three already co-authored pairs: exactly three candidates remain.
  acnet::testing::RawGraph raw;
  raw.authors = 4;
  raw.papers = 2;
  raw.years = {2000, 2000};
  raw.edges = {{author(0), Relation::Writes, paper(0)},
               {author(1), Relation::Writes, paper(0)},
               {author(2), Relation::Writes, paper(1)},
               {author(3), Relation::Writes, paper(1)}};
  const auto g = raw.build();
  const Snapshot s(g, 2000), next(g, 2001);
  const std::vector<AuthorPair> two{{0, 2}, {0, 3}};
  const auto neg = negative_sample(two, s, next, 1);
  ASSERT_EQ(neg.size(), 2u);
  for (const auto& p : neg) EXPECT_TRUE(p == (AuthorPair{1, 2}) || p == (AuthorPair{1, 3}));
  const std::vector<AuthorPair> three{{0, 2}, {0, 3}, {1, 2}};
  EXPECT_THROW((void)negative_sample(three, s, next, 1), DataError);
  EXPECT_TRUE(negative_sample({}, s, next, 1).empty());
}

TEST(BuildDataset, DeterministicPerSeed) {
  SynthConfig c;
  const auto g = synth_generate(c, 4);
  const auto a = build_dataset(g, g.max_year() - 1, 7);
  const auto b = build_dataset(g, g.max_year() - 1, 7);
  const auto d = build_dataset(g, g.max_year() - 1, 8);
  EXPECT_EQ(a.examples, b.examples);
  EXPECT_NE(a.examples, d.examples);
  EXPECT_GT(a.examples.size(), 0u);
}

TEST(ValidateDataset, CatchesViolations) {
  const auto raw = random_connected_graph(2, 150);
  const auto g = raw.build();
  auto ds = build_dataset(g, kYear, 1);
  ASSERT_GT(ds.examples.size(), 0u);
  EXPECT_NO_THROW(validate_dataset(g, ds));
  auto unbalanced = ds;
  unbalanced.examples.pop_back();
  EXPECT_THROW(validate_dataset(g, unbalanced), DataError);
  auto wrong = ds;
  for (auto& e : wrong.examples) {
    if (e.label == 1) {
      e.label = 0;  // a future co-author pair cannot be a negative
      break;
    }
  }
  EXPECT_THROW(validate_dataset(g, wrong), DataError);
}

TEST(DatasetIo, NdjsonRoundTrip) {
  const auto raw = random_connected_graph(3, 150);
  const auto g = raw.build();
  const auto ds = build_dataset(g, kYear, 1);
  std::stringstream buf;
  write_dataset_ndjson(g, ds, buf);
  const auto back = read_dataset_ndjson(g, buf);
  EXPECT_EQ(back.year, ds.year);
  EXPECT_EQ(back.examples, ds.examples);
  acnet::testing::TempDir dir("ds");
  save_dataset(g, ds, dir / "ds.ndjson");
  EXPECT_EQ(load_dataset(g, dir / "ds.ndjson").examples, ds.examples);
}
