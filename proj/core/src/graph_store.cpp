#include <acnet/graph_store.hpp>

#include <algorithm>
#include <numeric>

namespace acnet {

std::string_view to_string(NodeType t) noexcept {
  switch (t) {
    case NodeType::Author:
      return "author";
    case NodeType::Paper:
      return "paper";
    case NodeType::Topic:
      return "topic";
  }
  return "?";
}

std::string_view to_string(Relation r) noexcept {
  switch (r) {
    case Relation::Writes:
      return "writes";
    case Relation::DealsWith:
      return "deals_with";
    case Relation::Cites:
      return "cites";
  }
  return "?";
}

std::string to_string(NodeRef n) {
  return std::string(to_string(n.type)) + "#" + std::to_string(n.index);
}

namespace {

Csr csr_from_pairs(std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs, std::uint32_t rows) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  Csr csr;
  csr.offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
  csr.targets.reserve(pairs.size());
  for (const auto& [s, d] : pairs) {
    ++csr.offsets[s + 1];
    csr.targets.push_back(d);
  }
  std::partial_sum(csr.offsets.begin(), csr.offsets.end(), csr.offsets.begin());
  return csr;
}

Csr transpose(const Csr& fwd, std::uint32_t dst_rows) {
  Csr rev;
  rev.offsets.assign(static_cast<std::size_t>(dst_rows) + 1, 0);
  for (std::uint32_t t : fwd.targets) ++rev.offsets[t + 1];
  std::partial_sum(rev.offsets.begin(), rev.offsets.end(), rev.offsets.begin());
  rev.targets.resize(fwd.targets.size());
  std::vector<std::uint64_t> cursor(rev.offsets.begin(), rev.offsets.end() - 1);
  // Sources are visited in ascending order, so each reverse row comes out sorted.
  for (std::uint32_t s = 0; s < fwd.rows(); ++s) {
    for (std::uint32_t t : fwd.row(s)) rev.targets[cursor[t]++] = s;
  }
  return rev;
}

}  // namespace

std::int32_t HeteroTemporalGraph::first_year(NodeRef n) const noexcept {
  switch (n.type) {
    case NodeType::Author:
      return author_first_year_[n.index];
    case NodeType::Paper:
      return paper_year_[n.index];
    case NodeType::Topic:
      return topic_first_year_[n.index];
  }
  return kNoYear;
}

bool HeteroTemporalGraph::has_edge(const Edge& e) const noexcept {
  const EdgeTriple t = triple_of(e.relation);
  if (e.src.type != t.src_type || e.dst.type != t.dst_type || !valid(e.src) || !valid(e.dst)) return false;
  const auto row = adjacency(e.relation, Direction::Forward).row(e.src.index);
  return std::binary_search(row.begin(), row.end(), e.dst.index);
}

std::optional<NodeRef> HeteroTemporalGraph::find(NodeType t, const std::string& external_id) const {
  const auto& m = lookup_[to_index(t)];
  if (auto it = m.find(external_id); it != m.end()) return NodeRef{t, it->second};
  return std::nullopt;
}

void HeteroTemporalGraph::finish() {
  for (NodeType t : kAllNodeTypes) {
    counts_[to_index(t)] = static_cast<std::uint32_t>(ids_[to_index(t)].size());
    auto& m = lookup_[to_index(t)];
    m.clear();
    m.reserve(ids_[to_index(t)].size());
    for (std::uint32_t i = 0; i < ids_[to_index(t)].size(); ++i) m.emplace(ids_[to_index(t)][i], i);
  }
  for (Relation r : kAllRelations) {
    reverse_[to_index(r)] = transpose(forward_[to_index(r)], node_count(triple_of(r).dst_type));
  }
  min_year_ = kNoYear;
  max_year_ = std::numeric_limits<std::int32_t>::min();
  for (std::int32_t y : paper_year_) {
    min_year_ = std::min(min_year_, y);
    max_year_ = std::max(max_year_, y);
  }

  // An author appears with its first paper; a topic with the first paper dealing with it.
  author_first_year_.assign(node_count(NodeType::Author), kNoYear);
  const Csr& writes = forward_[to_index(Relation::Writes)];
  for (std::uint32_t a = 0; a < writes.rows(); ++a) {
    for (std::uint32_t p : writes.row(a)) author_first_year_[a] = std::min(author_first_year_[a], paper_year_[p]);
  }
  topic_first_year_.assign(node_count(NodeType::Topic), kNoYear);
  const Csr& deals = forward_[to_index(Relation::DealsWith)];
  for (std::uint32_t p = 0; p < deals.rows(); ++p) {
    for (std::uint32_t t : deals.row(p)) topic_first_year_[t] = std::min(topic_first_year_[t], paper_year_[p]);
  }
}

void HeteroTemporalGraph::validate() const {
  if (paper_year_.size() != node_count(NodeType::Paper)) throw DataError("paper year table size mismatch");
  for (NodeType t : kAllNodeTypes) {
    if (lookup_[to_index(t)].size() != node_count(t)) {
      throw DataError("duplicate external id among " + std::string(to_string(t)) + " nodes");
    }
  }
  for (std::int32_t y : paper_year_) {
    if (y == kNoYear) throw DataError("paper without a year");
  }
  for (Relation r : kAllRelations) {
    const EdgeTriple t = triple_of(r);
    const Csr& f = forward_[to_index(r)];
    const Csr& b = reverse_[to_index(r)];
    if (f.rows() != node_count(t.src_type) || b.rows() != node_count(t.dst_type)) {
      throw DataError("adjacency row count mismatch for " + std::string(to_string(r)));
    }
    for (const Csr* c : {&f, &b}) {
      if (c->offsets.front() != 0 || c->offsets.back() != c->targets.size()) {
        throw DataError("corrupt adjacency offsets for " + std::string(to_string(r)));
      }
      const std::uint32_t limit = c == &f ? node_count(t.dst_type) : node_count(t.src_type);
      for (std::size_t i = 0; i < c->rows(); ++i) {
        if (c->offsets[i] > c->offsets[i + 1]) throw DataError("non-monotone adjacency offsets");
        const auto row = c->row(static_cast<std::uint32_t>(i));
        for (std::size_t k = 0; k < row.size(); ++k) {
          if (row[k] >= limit) throw DataError("edge endpoint out of range");
          if (k > 0 && row[k - 1] >= row[k]) throw DataError("adjacency row not strictly ascending");
        }
      }
    }
    if (f.edge_count() != b.edge_count()) throw DataError("forward/reverse edge count mismatch");
    for (std::uint32_t d = 0; d < b.rows(); ++d) {
      for (std::uint32_t s : b.row(d)) {
        const auto row = f.row(s);
        if (!std::binary_search(row.begin(), row.end(), d)) throw DataError("reverse edge missing from forward");
      }
    }
  }
}

HeteroTemporalGraph assemble_graph(std::array<std::vector<std::string>, kNumNodeTypes> ids,
                                   std::vector<std::int32_t> years, std::array<Csr, kNumRelations> forward) {
  HeteroTemporalGraph g;
  g.ids_ = std::move(ids);
  g.paper_year_ = std::move(years);
  g.forward_ = std::move(forward);
  for (NodeType t : kAllNodeTypes) g.counts_[to_index(t)] = static_cast<std::uint32_t>(g.ids_[to_index(t)].size());
  // Shape checks before finish() so a corrupt file cannot index out of range.
  if (g.paper_year_.size() != g.node_count(NodeType::Paper)) throw DataError("paper year table size mismatch");
  for (Relation r : kAllRelations) {
    const EdgeTriple t = triple_of(r);
    const Csr& f = g.forward_[to_index(r)];
    if (f.rows() != g.node_count(t.src_type)) throw DataError("adjacency row count mismatch");
    if (f.offsets.front() != 0 || f.offsets.back() != f.targets.size()) throw DataError("corrupt adjacency offsets");
    for (std::size_t i = 0; i + 1 < f.offsets.size(); ++i) {
      if (f.offsets[i] > f.offsets[i + 1]) throw DataError("non-monotone adjacency offsets");
    }
    for (std::uint32_t x : f.targets) {
      if (x >= g.node_count(t.dst_type)) throw DataError("edge endpoint out of range");
    }
  }
  g.finish();
  g.validate();
  return g;
}

void GraphBuilder::require_open() const {
  if (closed_) throw std::logic_error("graph build phase is closed");
}

NodeRef GraphBuilder::add_node(NodeType type, const std::string& external_id) {
  require_open();
  auto& m = lookup_[to_index(type)];
  auto& ids = ids_[to_index(type)];
  auto [it, inserted] = m.try_emplace(external_id, static_cast<std::uint32_t>(ids.size()));
  if (inserted) {
    ids.push_back(external_id);
    if (type == NodeType::Paper) paper_year_.push_back(kNoYear);
  }
  return {type, it->second};
}

NodeRef GraphBuilder::add_paper(const std::string& external_id, std::int32_t year) {
  NodeRef p = add_node(NodeType::Paper, external_id);
  set_paper_year(p, year);
  return p;
}

void GraphBuilder::set_paper_year(NodeRef paper, std::int32_t year) {
  require_open();
  if (paper.type != NodeType::Paper || paper.index >= paper_year_.size()) {
    throw std::invalid_argument("set_paper_year: not a registered paper");
  }
  if (year == kNoYear) throw std::invalid_argument("set_paper_year: reserved year value");
  paper_year_[paper.index] = year;
}

void GraphBuilder::add_edge(const EdgeTriple& triple, NodeRef src, NodeRef dst) {
  require_open();
  if (!is_legal(triple)) throw std::invalid_argument("add_edge: illegal edge triple");
  if (src.type != triple.src_type || dst.type != triple.dst_type) {
    throw std::invalid_argument("add_edge: endpoint types do not match " + std::string(to_string(triple.relation)));
  }
  if (src.index >= node_count(src.type) || dst.index >= node_count(dst.type)) {
    throw std::out_of_range("add_edge: unknown node");
  }
  edges_[to_index(triple.relation)].emplace_back(src.index, dst.index);
}

std::optional<NodeRef> GraphBuilder::find(NodeType type, const std::string& external_id) const {
  const auto& m = lookup_[to_index(type)];
  if (auto it = m.find(external_id); it != m.end()) return NodeRef{type, it->second};
  return std::nullopt;
}

HeteroTemporalGraph GraphBuilder::build() {
  require_open();
  for (std::size_t p = 0; p < paper_year_.size(); ++p) {
    if (paper_year_[p] == kNoYear) throw DataError("paper '" + ids_[to_index(NodeType::Paper)][p] + "' has no year");
  }
  closed_ = true;
  HeteroTemporalGraph g;
  for (Relation r : kAllRelations) {
    g.forward_[to_index(r)] = csr_from_pairs(edges_[to_index(r)], node_count(triple_of(r).src_type));
    edges_[to_index(r)].clear();
    edges_[to_index(r)].shrink_to_fit();
  }
  g.ids_ = std::move(ids_);
  g.paper_year_ = std::move(paper_year_);
  for (auto& m : lookup_) m.clear();
  g.finish();
  return g;
}

bool Snapshot::contains(const Edge& e) const noexcept {
  if (!graph_->has_edge(e)) return false;
  if (e.src.type == NodeType::Paper && !paper_ok(e.src.index)) return false;
  if (e.dst.type == NodeType::Paper && !paper_ok(e.dst.index)) return false;
  return true;
}

std::vector<NodeRef> Snapshot::neighbors(NodeRef node, Relation r, Direction d) const {
  if (!contains(node)) throw std::out_of_range("neighbors: " + to_string(node) + " not in snapshot");
  std::vector<NodeRef> out;
  for_each_neighbor(node, r, d, [&](NodeRef nb) { out.push_back(nb); });
  return out;
}

std::size_t Snapshot::node_count(NodeType t) const {
  std::size_t n = 0;
  for (std::uint32_t i = 0; i < graph_->node_count(t); ++i) n += contains(NodeRef{t, i}) ? 1 : 0;
  return n;
}

std::size_t Snapshot::edge_count(Relation r) const {
  const Csr& f = graph_->adjacency(r, Direction::Forward);
  const EdgeTriple t = triple_of(r);
  std::size_t n = 0;
  for (std::uint32_t s = 0; s < f.rows(); ++s) {
    if (t.src_type == NodeType::Paper && !paper_ok(s)) continue;
    if (t.dst_type != NodeType::Paper) {
      n += f.row(s).size();
      continue;
    }
    for (std::uint32_t d : f.row(s)) n += paper_ok(d) ? 1 : 0;
  }
  return n;
}

std::vector<std::uint32_t> Snapshot::paper_indices() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t p = 0; p < graph_->node_count(NodeType::Paper); ++p) {
    if (paper_ok(p)) out.push_back(p);
  }
  return out;
}

}  // namespace acnet
