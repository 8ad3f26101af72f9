#include <acnet/binary_io.hpp>
#include <acnet/graph_io.hpp>

#include <fstream>

namespace acnet {

void save_graph(const HeteroTemporalGraph& g, std::ostream& out) {
  io::LeWriter w(out);
  w.magic("ANPG");
  w.u32(kGraphFormatVersion);
  for (NodeType t : kAllNodeTypes) w.u32(g.node_count(t));
  for (std::int32_t y : g.paper_years()) w.i32(y);
  for (Relation r : kAllRelations) {
    const Csr& f = g.adjacency(r, Direction::Forward);
    w.u64(f.targets.size());
    for (std::uint64_t o : f.offsets) w.u64(o);
    for (std::uint32_t t : f.targets) w.u32(t);
  }
  for (NodeType t : kAllNodeTypes) {
    for (std::uint32_t i = 0; i < g.node_count(t); ++i) w.str(g.external_id({t, i}));
  }
}

void save_graph(const HeteroTemporalGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_graph(g, out);
}

HeteroTemporalGraph load_graph(std::istream& in) {
  io::LeReader r(in);
  r.expect_magic("ANPG");
  if (const auto v = r.u32(); v != kGraphFormatVersion) {
    throw DataError("unsupported graph format version " + std::to_string(v));
  }
  std::array<std::uint32_t, kNumNodeTypes> counts{};
  for (auto& c : counts) c = r.u32();

  std::vector<std::int32_t> years(counts[to_index(NodeType::Paper)]);
  for (auto& y : years) y = r.i32();

  std::array<Csr, kNumRelations> forward;
  for (Relation rel : kAllRelations) {
    const std::uint64_t edges = r.u64();
    const std::uint32_t rows = counts[to_index(triple_of(rel).src_type)];
    Csr& c = forward[to_index(rel)];
    c.offsets.resize(static_cast<std::size_t>(rows) + 1);
    for (auto& o : c.offsets) o = r.u64();
    if (c.offsets.back() != edges) throw DataError("edge count does not match offsets");
    c.targets.resize(static_cast<std::size_t>(edges));
    for (auto& t : c.targets) t = r.u32();
  }

  std::array<std::vector<std::string>, kNumNodeTypes> ids;
  for (NodeType t : kAllNodeTypes) {
    auto& v = ids[to_index(t)];
    v.resize(counts[to_index(t)]);
    for (auto& s : v) s = r.str();
  }
  return assemble_graph(std::move(ids), std::move(years), std::move(forward));
}

HeteroTemporalGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open graph file " + path.string());
  return load_graph(in);
}

}  // namespace acnet
