#include <acnet/binary_io.hpp>
#include <acnet/infosphere.hpp>
#include <acnet/seedgraph.hpp>

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace acnet {

std::string_view to_string(ExposureSource s) noexcept {
  switch (s) {
    case ExposureSource::AuthorFuture:
      return "author";
    case ExposureSource::TopPaper:
      return "top-paper";
    case ExposureSource::TopPaperPerTopic:
      return "top-paper-per-topic";
    case ExposureSource::Random:
      return "random";
  }
  return "?";
}

std::size_t InfosphereEdgeSet::size() const noexcept {
  std::size_t n = 0;
  for (const auto& a : per_author) n += a.edges.size();
  return n;
}

std::vector<Edge> InfosphereEdgeSet::unique_edges() const {
  std::vector<Edge> out;
  out.reserve(size());
  for (const auto& a : per_author) {
    for (const auto& e : a.edges) out.push_back(e.edge);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint32_t> citation_counts(const Snapshot& s) {
  const HeteroTemporalGraph& g = s.graph();
  std::vector<std::uint32_t> counts(g.node_count(NodeType::Paper), 0);
  for (std::uint32_t p = 0; p < counts.size(); ++p) {
    if (!s.contains(paper(p))) continue;
    s.for_each_neighbor(paper(p), Relation::Cites, Direction::Reverse, [&](NodeRef) { ++counts[p]; });
  }
  return counts;
}

namespace {

/// Orders candidates by (count desc, index asc) and keeps the first n.
std::vector<NodeRef> rank_papers(std::vector<std::uint32_t> candidates, std::span<const std::uint32_t> counts,
                                 std::size_t n) {
  const std::size_t keep = std::min(n, candidates.size());
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    return counts[a] != counts[b] ? counts[a] > counts[b] : a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    better);
  std::vector<NodeRef> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(paper(candidates[i]));
  return out;
}

}  // namespace

std::vector<NodeRef> top_papers(const Snapshot& s, std::size_t n) { return top_papers(s, citation_counts(s), n); }

std::vector<NodeRef> top_papers(const Snapshot& s, std::span<const std::uint32_t> counts, std::size_t n) {
  if (n == 0) return {};
  return rank_papers(s.paper_indices(), counts, n);
}

std::vector<NodeRef> top_papers_per_topic(const Snapshot& s, NodeRef author, std::size_t m, std::size_t n) {
  return top_papers_per_topic(s, citation_counts(s), author, m, n);
}

std::vector<NodeRef> top_papers_per_topic(const Snapshot& s, std::span<const std::uint32_t> counts, NodeRef author,
                                          std::size_t m, std::size_t n) {
  if (m == 0 || n == 0 || !s.contains(author)) return {};
  std::vector<std::pair<std::uint32_t, std::uint32_t>> usage;  // (topic, own paper count)
  s.for_each_neighbor(author, Relation::Writes, Direction::Forward, [&](NodeRef p) {
    s.for_each_neighbor(p, Relation::DealsWith, Direction::Forward, [&](NodeRef t) {
      auto it = std::find_if(usage.begin(), usage.end(), [&](const auto& u) { return u.first == t.index; });
      if (it == usage.end()) {
        usage.emplace_back(t.index, 1);
      } else {
        ++it->second;
      }
    });
  });
  std::sort(usage.begin(), usage.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  if (usage.size() > m) usage.resize(m);

  std::vector<NodeRef> out;
  std::unordered_set<std::uint32_t> seen;
  for (const auto& [t, _] : usage) {
    std::vector<std::uint32_t> candidates;
    s.for_each_neighbor(topic(t), Relation::DealsWith, Direction::Reverse,
                        [&](NodeRef p) { candidates.push_back(p.index); });
    for (NodeRef p : rank_papers(std::move(candidates), counts, n)) {
      if (seen.insert(p.index).second) out.push_back(p);
    }
  }
  return out;
}

namespace {

void require_member(const Snapshot& s, NodeRef n) {
  if (!s.contains(n)) throw std::invalid_argument("materialize: " + to_string(n) + " is not in the snapshot");
}

void dedup(std::vector<ExposureEdge>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.edge == b.edge; }), v.end());
}

}  // namespace

InfosphereEdgeSet materialize(const Snapshot& s, std::span<const ColoredInfosphere> infospheres,
                              ExposureSource source) {
  InfosphereEdgeSet out{s.year(), {}};
  for (const auto& inf : infospheres) {
    AuthorExposure ae{inf.author, {}};
    for (const auto& [e, _] : inf.edges) {
      require_member(s, e.src);
      require_member(s, e.dst);
      ae.edges.push_back({e, source});
    }
    dedup(ae.edges);
    if (!ae.edges.empty()) out.per_author.push_back(std::move(ae));
  }
  return out;
}

InfosphereEdgeSet materialize(const Snapshot& s, std::span<const std::pair<NodeRef, std::vector<NodeRef>>> selections,
                              ExposureSource source) {
  InfosphereEdgeSet out{s.year(), {}};
  for (const auto& [a, papers] : selections) {
    require_member(s, a);
    AuthorExposure ae{a, {}};
    for (NodeRef p : papers) {
      require_member(s, p);
      ae.edges.push_back({Edge{a, Relation::Writes, p}, source});
    }
    dedup(ae.edges);
    if (!ae.edges.empty()) out.per_author.push_back(std::move(ae));
  }
  return out;
}

void write_infosphere_ndjson(const HeteroTemporalGraph& g, const InfosphereEdgeSet& set, std::ostream& out) {
  for (const auto& a : set.per_author) {
    nlohmann::ordered_json j;
    j["author"] = g.external_id(a.author);
    j["year"] = set.year;
    j["exposures"] = nlohmann::ordered_json::array();
    for (const auto& e : a.edges) {
      j["exposures"].push_back({node_label(g, e.edge.src), std::string(to_string(e.edge.relation)),
                                node_label(g, e.edge.dst), std::string(to_string(e.source))});
    }
    out << j.dump() << '\n';
  }
}

namespace {
constexpr std::uint32_t kInfosphereFormatVersion = 1;
}

void save_infosphere(const InfosphereEdgeSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  io::LeWriter w(out);
  w.magic("ANPI");
  w.u32(kInfosphereFormatVersion);
  w.i32(set.year);
  w.u64(set.per_author.size());
  for (const auto& a : set.per_author) {
    w.u64(a.author.key());
    w.u64(a.edges.size());
    for (const auto& e : a.edges) {
      w.u64(e.edge.src.key());
      w.u8(static_cast<std::uint8_t>(e.edge.relation));
      w.u64(e.edge.dst.key());
      w.u8(static_cast<std::uint8_t>(e.source));
    }
  }
}

InfosphereEdgeSet load_infosphere(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open infosphere file " + path.string());
  io::LeReader r(in);
  r.expect_magic("ANPI");
  if (r.u32() != kInfosphereFormatVersion) throw DataError("unsupported infosphere format version");
  InfosphereEdgeSet set;
  set.year = r.i32();
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    AuthorExposure a{NodeRef::from_key(r.u64()), {}};
    const std::uint64_t m = r.u64();
    for (std::uint64_t k = 0; k < m; ++k) {
      ExposureEdge e;
      e.edge.src = NodeRef::from_key(r.u64());
      const auto rel = r.u8();
      e.edge.dst = NodeRef::from_key(r.u64());
      const auto src = r.u8();
      if (rel >= kNumRelations || src > 3) throw DataError("corrupt infosphere edge");
      e.edge.relation = static_cast<Relation>(rel);
      e.source = static_cast<ExposureSource>(src);
      a.edges.push_back(e);
    }
    set.per_author.push_back(std::move(a));
  }
  return set;
}

}  // namespace acnet
