#include <acnet/gnn/message_graph.hpp>
#include <acnet/rng.hpp>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace acnet::gnn {

std::string channel_name(std::size_t c) {
  const Channel ch = channel_at(c);
  return std::string(to_string(ch.relation)) + (ch.direction == Direction::Forward ? ".fwd" : ".rev") +
         (ch.exposure ? ".exposure" : ".history");
}

namespace {

Csr rows_from_pairs(std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs, std::uint32_t rows) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  Csr csr;
  csr.offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (const auto& [r, _] : pairs) ++csr.offsets[r + 1];
  std::partial_sum(csr.offsets.begin(), csr.offsets.end(), csr.offsets.begin());
  csr.targets.reserve(pairs.size());
  for (const auto& [_, s] : pairs) csr.targets.push_back(s);
  return csr;
}

void cap_rows(Csr& csr, std::uint32_t cap, std::uint64_t seed, std::size_t channel) {
  Csr out;
  out.offsets.assign(csr.offsets.size(), 0);
  for (std::uint32_t v = 0; v < csr.rows(); ++v) {
    auto row = csr.row(v);
    std::vector<std::uint32_t> keep(row.begin(), row.end());
    if (keep.size() > cap) {
      KeyedRng rng(seed, {channel, v});
      for (std::size_t i = 0; i < cap; ++i) std::swap(keep[i], keep[i + rng.below(keep.size() - i)]);
      keep.resize(cap);
      std::sort(keep.begin(), keep.end());
    }
    out.targets.insert(out.targets.end(), keep.begin(), keep.end());
    out.offsets[v + 1] = out.targets.size();
  }
  csr = std::move(out);
}

}  // namespace

MessageGraph build_message_graph(const Snapshot& s, const InfosphereEdgeSet* exposure,
                                 const MessageGraphOptions& options) {
  const HeteroTemporalGraph& g = s.graph();
  MessageGraph mg;
  for (NodeType t : kAllNodeTypes) mg.counts[to_index(t)] = g.node_count(t);

  std::array<std::vector<std::pair<std::uint32_t, std::uint32_t>>, kNumChannels> pairs;
  auto add = [&](const Edge& e, bool exp) {
    // Forward channel: dst receives from src. Reverse channel: src receives from dst.
    pairs[channel_index(e.relation, Direction::Forward, exp)].emplace_back(e.dst.index, e.src.index);
    pairs[channel_index(e.relation, Direction::Reverse, exp)].emplace_back(e.src.index, e.dst.index);
  };

  for (Relation r : kAllRelations) {
    const EdgeTriple t = triple_of(r);
    for (std::uint32_t src = 0; src < g.node_count(t.src_type); ++src) {
      s.for_each_neighbor(NodeRef{t.src_type, src}, r, Direction::Forward,
                          [&](NodeRef dst) { add(Edge{NodeRef{t.src_type, src}, r, dst}, false); });
    }
  }
  if (exposure) {
    for (const Edge& e : exposure->unique_edges()) {
      const EdgeTriple t = triple_of(e.relation);
      if (e.src.type != t.src_type || e.dst.type != t.dst_type || !g.valid(e.src) || !g.valid(e.dst)) {
        throw std::invalid_argument("exposure edge does not fit the graph: " + to_string(e.src) + " -> " +
                                    to_string(e.dst));
      }
      add(e, true);
    }
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    mg.in[c] = rows_from_pairs(pairs[c], mg.counts[to_index(channel_target(c))]);
    if (options.max_neighbors > 0) cap_rows(mg.in[c], options.max_neighbors, options.seed, c);
  }

  const auto years = g.paper_years();
  mg.paper_year.assign(years.size(), 0.0);
  if (!years.empty() && g.max_year() > g.min_year()) {
    const double span = static_cast<double>(g.max_year() - g.min_year());
    for (std::size_t i = 0; i < years.size(); ++i) mg.paper_year[i] = (years[i] - g.min_year()) / span;
  }
  return mg;
}

}  // namespace acnet::gnn
