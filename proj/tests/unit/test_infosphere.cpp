#include <acnet/infosphere.hpp>
#include <acnet/link_task.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace acnet;
using acnet::testing::random_connected_graph;

namespace {

constexpr std::int32_t kYear = 2003;

std::map<std::uint32_t, std::uint32_t> brute_citations(const acnet::testing::RawGraph& raw, std::int32_t year) {
  std::map<std::uint32_t, std::uint32_t> c;
  for (std::uint32_t p = 0; p < raw.papers; ++p) {
    if (raw.years[p] <= year) c[p] = 0;
  }
  for (const Edge& e : raw.edges) {
    if (e.relation == Relation::Cites && raw.edge_in(e, year)) ++c[e.dst.index];
  }
  return c;
}

std::vector<NodeRef> brute_rank(const std::vector<std::uint32_t>& candidates,
                                const std::map<std::uint32_t, std::uint32_t>& counts, std::size_t n) {
  std::vector<std::pair<long, std::uint32_t>> keyed;
  for (auto p : candidates) keyed.emplace_back(-static_cast<long>(counts.at(p)), p);
  std::sort(keyed.begin(), keyed.end());
  std::vector<NodeRef> out;
  for (std::size_t i = 0; i < std::min(n, keyed.size()); ++i) out.push_back(paper(keyed[i].second));
  return out;
}

}  // namespace

TEST(TopPapers, ToyDegrees) {
  // In-degrees P0:3, P1:1, P2:0 in the 2000 snapshot.
  acnet::testing::RawGraph raw;
  raw.papers = 6;
  raw.years = {2000, 2000, 2000, 2000, 2000, 2000};
  raw.edges = {{paper(3), Relation::Cites, paper(0)}, {paper(4), Relation::Cites, paper(0)},
               {paper(5), Relation::Cites, paper(0)}, {paper(5), Relation::Cites, paper(1)}};
  const auto g = raw.build();
  const Snapshot s(g, 2000);
  EXPECT_EQ(top_papers(s, 2), (std::vector<NodeRef>{paper(0), paper(1)}));
  EXPECT_EQ(top_papers(s, 3), (std::vector<NodeRef>{paper(0), paper(1), paper(2)}));  // ties by index
  EXPECT_TRUE(top_papers(s, 0).empty());
  EXPECT_EQ(top_papers(s, 100).size(), 6u);
}

TEST(TopPapers, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto raw = random_connected_graph(seed, 150);
    const auto g = raw.build();
    for (std::int32_t y : {kYear - 1, kYear, kYear + 1}) {
      const Snapshot s(g, y);
      const auto counts = brute_citations(raw, y);
      const auto lib = citation_counts(s);
      for (std::uint32_t p = 0; p < raw.papers; ++p) {
        EXPECT_EQ(lib[p], counts.contains(p) ? counts.at(p) : 0u);
      }
      std::vector<std::uint32_t> all;
      for (const auto& [p, _] : counts) all.push_back(p);
      for (std::size_t n : {1u, 5u, 10u, 50u}) EXPECT_EQ(top_papers(s, n), brute_rank(all, counts, n));
    }
  }
}

TEST(TopPapersPerTopic, MatchesBruteForce) {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const auto raw = random_connected_graph(seed, 150);
    const auto g = raw.build();
    const Snapshot s(g, kYear);
    const auto counts = brute_citations(raw, kYear);
    for (std::uint32_t a = 0; a < raw.authors; ++a) {
      std::map<std::uint32_t, std::uint32_t> usage;
      for (const Edge& w : raw.edges) {
        if (w.relation != Relation::Writes || w.src != author(a) || !raw.edge_in(w, kYear)) continue;
        for (const Edge& d : raw.edges) {
          if (d.relation == Relation::DealsWith && d.src == w.dst) ++usage[d.dst.index];
        }
      }
      std::vector<std::pair<long, std::uint32_t>> ranked;
      for (const auto& [t, c] : usage) ranked.emplace_back(-static_cast<long>(c), t);
      std::sort(ranked.begin(), ranked.end());
      for (auto [m, n] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 10}, {2, 5}, {10, 1}, {3, 50}}) {
        std::vector<NodeRef> expected;
        std::set<NodeRef> seen;
        for (std::size_t i = 0; i < std::min(m, ranked.size()); ++i) {
          std::vector<std::uint32_t> cand;
          for (const Edge& d : raw.edges) {
            if (d.relation == Relation::DealsWith && d.dst == topic(ranked[i].second) && raw.edge_in(d, kYear)) {
              cand.push_back(d.src.index);
            }
          }
          for (NodeRef p : brute_rank(cand, counts, n)) {
            if (seen.insert(p).second) expected.push_back(p);
          }
        }
        EXPECT_EQ(top_papers_per_topic(s, author(a), m, n), expected) << "author " << a << " m " << m << " n " << n;
      }
    }
  }
}

TEST(Materialize, PopularitySelectionsBecomeWritesExposure) {
  const auto raw = random_connected_graph(3, 80);
  const auto g = raw.build();
  const Snapshot s(g, kYear);
  const auto top = top_papers(s, 5);
  std::vector<std::pair<NodeRef, std::vector<NodeRef>>> sel{{author(0), top}, {author(1), top}};
  const auto set = materialize(s, sel, ExposureSource::TopPaper);
  EXPECT_EQ(set.year, kYear);
  ASSERT_EQ(set.per_author.size(), 2u);
  EXPECT_EQ(set.size(), 10u);
  for (const auto& ae : set.per_author) {
    for (const auto& e : ae.edges) {
      EXPECT_EQ(e.edge.src, ae.author);
      EXPECT_EQ(e.edge.relation, Relation::Writes);
      EXPECT_EQ(e.source, ExposureSource::TopPaper);
    }
  }
  EXPECT_EQ(set.unique_edges().size(), 10u);
}

TEST(Materialize, RejectsNodesOutsideSnapshot) {
  const auto raw = random_connected_graph(3, 80);
  const auto g = raw.build();
  const Snapshot s(g, kYear);
  const NodeRef future = paper(raw.papers - 1);  // always a next-year paper
  std::vector<std::pair<NodeRef, std::vector<NodeRef>>> sel{{author(0), {future}}};
  EXPECT_THROW((void)materialize(s, sel, ExposureSource::TopPaper), std::invalid_argument);
}

TEST(Materialize, ColoredInfosphereEdgesVerbatim) {
  const auto raw = random_connected_graph(4, 120);
  const auto g = raw.build();
  const Snapshot s(g, kYear), next(g, kYear + 1);
  std::vector<NodeRef> authors;
  for (std::uint32_t a = 0; a < raw.authors; ++a) authors.push_back(author(a));
  const auto sgs = build_seedgraphs(authors, s, next);
  std::vector<ColoredInfosphere> infs;
  for (const auto& sg : sgs) infs.push_back(expand(sg, s, {0.3, 0.3, 0.1, 2}, 1));
  const auto set = materialize(s, infs);
  std::size_t expected = 0;
  for (const auto& inf : infs) expected += inf.edges.size();
  EXPECT_EQ(set.size(), expected);
}

TEST(DropInfosphere, RemovesRoundedFraction) {
  const auto raw = random_connected_graph(5, 150);
  const auto g = raw.build();
  const Snapshot s(g, kYear);
  std::vector<std::pair<NodeRef, std::vector<NodeRef>>> sel;
  for (std::uint32_t a = 0; a < raw.authors; ++a) sel.push_back({author(a), top_papers(s, 7)});
  const auto set = materialize(s, sel, ExposureSource::TopPaper);
  const std::size_t total = set.size();
  EXPECT_EQ(drop_infosphere(set, 0.0, 1).size(), total);
  EXPECT_EQ(drop_infosphere(set, 1.0, 1).size(), 0u);
  EXPECT_TRUE(drop_infosphere(set, 1.0, 1).per_author.empty());
  for (double f : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    EXPECT_EQ(drop_infosphere(set, f, 1).size(), total - static_cast<std::size_t>(std::llround(f * total)));
  }
  EXPECT_THROW((void)drop_infosphere(set, 1.5, 1), std::invalid_argument);
}

TEST(DropInfosphere, LargerFractionsAreNestedAndNeverResurrect) {
  const auto raw = random_connected_graph(6, 150);
  const auto g = raw.build();
  const Snapshot s(g, kYear);
  std::vector<std::pair<NodeRef, std::vector<NodeRef>>> sel;
  for (std::uint32_t a = 0; a < raw.authors; ++a) sel.push_back({author(a), top_papers_per_topic(s, author(a), 2, 5)});
  const auto set = materialize(s, sel, ExposureSource::TopPaperPerTopic);
  auto flat = [](const InfosphereEdgeSet& x) {
    std::set<std::pair<NodeRef, Edge>> out;
    for (const auto& ae : x.per_author)
      for (const auto& e : ae.edges) out.emplace(ae.author, e.edge);
    return out;
  };
  const auto quarter = flat(drop_infosphere(set, 0.25, 9));
  const auto half = flat(drop_infosphere(set, 0.5, 9));
  for (const auto& e : half) EXPECT_TRUE(quarter.contains(e));
  // Dropping again from a reduced set only removes more.
  const auto twice = flat(drop_infosphere(drop_infosphere(set, 0.5, 9), 0.5, 10));
  for (const auto& e : twice) EXPECT_TRUE(half.contains(e));
}

TEST(InfosphereIo, SaveLoadRoundTrip) {
  const auto raw = random_connected_graph(7, 100);
  const auto g = raw.build();
  const Snapshot s(g, kYear);
  std::vector<std::pair<NodeRef, std::vector<NodeRef>>> sel{{author(0), top_papers(s, 3)}, {author(2), top_papers(s, 2)}};
  const auto set = materialize(s, sel, ExposureSource::TopPaper);
  acnet::testing::TempDir dir("inf");
  save_infosphere(set, dir / "inf.bin");
  const auto back = load_infosphere(dir / "inf.bin");
  EXPECT_EQ(back.year, set.year);
  ASSERT_EQ(back.per_author.size(), set.per_author.size());
  for (std::size_t i = 0; i < set.per_author.size(); ++i) {
    EXPECT_EQ(back.per_author[i].author, set.per_author[i].author);
    EXPECT_EQ(back.per_author[i].edges, set.per_author[i].edges);
  }
  std::ostringstream nd;
  write_infosphere_ndjson(g, set, nd);
  EXPECT_FALSE(nd.str().empty());
}
