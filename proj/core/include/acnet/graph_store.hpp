#pragma once

#include <acnet/types.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace acnet {

/// Compressed sorted-neighbour adjacency for one orientation of one relation.
struct Csr {
  std::vector<std::uint64_t> offsets;  // size = number of source rows + 1
  std::vector<std::uint32_t> targets;  // ascending within each row, no duplicates

  std::span<const std::uint32_t> row(std::uint32_t i) const noexcept {
    return {targets.data() + offsets[i], targets.data() + offsets[i + 1]};
  }
  std::size_t rows() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t edge_count() const noexcept { return targets.size(); }
};

inline constexpr std::int32_t kNoYear = std::numeric_limits<std::int32_t>::max();

/// Immutable heterogeneous graph of authors, papers and topics. Papers carry a
/// publication year; every other node is timeless and enters a snapshot through
/// its incident edges.
class HeteroTemporalGraph {
 public:
  HeteroTemporalGraph() = default;

  std::uint32_t node_count(NodeType t) const noexcept { return counts_[to_index(t)]; }
  std::int32_t paper_year(std::uint32_t paper_index) const { return paper_year_.at(paper_index); }
  std::span<const std::int32_t> paper_years() const noexcept { return paper_year_; }

  /// Earliest snapshot year in which the node is present (kNoYear if never).
  std::int32_t first_year(NodeRef n) const noexcept;

  std::int32_t min_year() const noexcept { return min_year_; }
  std::int32_t max_year() const noexcept { return max_year_; }

  const Csr& adjacency(Relation r, Direction d) const noexcept {
    return d == Direction::Forward ? forward_[to_index(r)] : reverse_[to_index(r)];
  }
  std::size_t edge_count(Relation r) const noexcept { return forward_[to_index(r)].edge_count(); }

  bool valid(NodeRef n) const noexcept { return n.index < node_count(n.type); }
  bool has_edge(const Edge& e) const noexcept;

  const std::string& external_id(NodeRef n) const { return ids_[to_index(n.type)].at(n.index); }
  std::optional<NodeRef> find(NodeType t, const std::string& external_id) const;

  /// Verifies every structural invariant; throws DataError on the first violation.
  void validate() const;

 private:
  friend class GraphBuilder;
  friend HeteroTemporalGraph assemble_graph(std::array<std::vector<std::string>, kNumNodeTypes> ids,
                                            std::vector<std::int32_t> years,
                                            std::array<Csr, kNumRelations> forward);

  void finish();  // derives reverse adjacency, first-year tables and the id lookup

  std::array<std::uint32_t, kNumNodeTypes> counts_{};
  std::array<std::vector<std::string>, kNumNodeTypes> ids_;
  std::array<std::unordered_map<std::string, std::uint32_t>, kNumNodeTypes> lookup_;
  std::vector<std::int32_t> paper_year_;
  std::vector<std::int32_t> author_first_year_;
  std::vector<std::int32_t> topic_first_year_;
  std::array<Csr, kNumRelations> forward_;
  std::array<Csr, kNumRelations> reverse_;
  std::int32_t min_year_{kNoYear};
  std::int32_t max_year_{std::numeric_limits<std::int32_t>::min()};
};

/// Builds a graph from already-sorted forward adjacency (used by the binary loader).
HeteroTemporalGraph assemble_graph(std::array<std::vector<std::string>, kNumNodeTypes> ids,
                                   std::vector<std::int32_t> years,
                                   std::array<Csr, kNumRelations> forward);

/// Single-writer build phase. Once build() has been called every mutator throws.
class GraphBuilder {
 public:
  /// Returns the existing node when the external id is already registered for the type.
  NodeRef add_node(NodeType type, const std::string& external_id);
  NodeRef add_paper(const std::string& external_id, std::int32_t year);
  void set_paper_year(NodeRef paper, std::int32_t year);

  /// Duplicate insertions collapse to one edge.
  void add_edge(const EdgeTriple& triple, NodeRef src, NodeRef dst);
  void add_edge(Relation r, NodeRef src, NodeRef dst) { add_edge(triple_of(r), src, dst); }

  std::optional<NodeRef> find(NodeType type, const std::string& external_id) const;
  std::uint32_t node_count(NodeType t) const noexcept {
    return static_cast<std::uint32_t>(ids_[to_index(t)].size());
  }
  bool closed() const noexcept { return closed_; }

  HeteroTemporalGraph build();

 private:
  void require_open() const;

  bool closed_{false};
  std::array<std::vector<std::string>, kNumNodeTypes> ids_;
  std::array<std::unordered_map<std::string, std::uint32_t>, kNumNodeTypes> lookup_;
  std::vector<std::int32_t> paper_year_;
  std::array<std::vector<std::pair<std::uint32_t, std::uint32_t>>, kNumRelations> edges_;
};

/// Read-only view of everything observable up to and including `year`.
/// A paper is present iff its year <= `year`; an edge iff all its paper endpoints
/// are present; authors and topics iff incident to a present edge.
class Snapshot {
 public:
  Snapshot(const HeteroTemporalGraph& graph, std::int32_t year) noexcept : graph_(&graph), year_(year) {}

  const HeteroTemporalGraph& graph() const noexcept { return *graph_; }
  std::int32_t year() const noexcept { return year_; }

  bool contains(NodeRef n) const noexcept {
    return graph_->valid(n) && graph_->first_year(n) <= year_;
  }
  bool contains(const Edge& e) const noexcept;

  /// Sorted, duplicate-free neighbours restricted to the snapshot. Throws
  /// std::out_of_range when `node` is not in the snapshot.
  std::vector<NodeRef> neighbors(NodeRef node, Relation r, Direction d) const;

  /// Visits snapshot neighbours of `node` through one relation orientation, ascending.
  template <typename Fn>
  void for_each_neighbor(NodeRef node, Relation r, Direction d, Fn&& fn) const;

  /// Visits every snapshot neighbour over all relations and both orientations,
  /// passing the neighbour and the edge in its native orientation.
  template <typename Fn>
  void for_each_adjacent(NodeRef node, Fn&& fn) const;

  std::size_t node_count(NodeType t) const;
  std::size_t edge_count(Relation r) const;
  std::vector<std::uint32_t> paper_indices() const;

 private:
  bool paper_ok(std::uint32_t p) const noexcept { return graph_->paper_years()[p] <= year_; }

  const HeteroTemporalGraph* graph_;
  std::int32_t year_;
};

template <typename Fn>
void Snapshot::for_each_neighbor(NodeRef node, Relation r, Direction d, Fn&& fn) const {
  const EdgeTriple t = triple_of(r);
  const NodeType from = d == Direction::Forward ? t.src_type : t.dst_type;
  const NodeType to = d == Direction::Forward ? t.dst_type : t.src_type;
  if (node.type != from) return;
  const bool from_is_paper = from == NodeType::Paper;
  const bool to_is_paper = to == NodeType::Paper;
  if (from_is_paper && !paper_ok(node.index)) return;
  for (std::uint32_t nb : graph_->adjacency(r, d).row(node.index)) {
    if (to_is_paper && !paper_ok(nb)) continue;
    fn(NodeRef{to, nb});
  }
}

template <typename Fn>
void Snapshot::for_each_adjacent(NodeRef node, Fn&& fn) const {
  for (Relation r : kAllRelations) {
    for_each_neighbor(node, r, Direction::Forward, [&](NodeRef nb) { fn(nb, Edge{node, r, nb}); });
    for_each_neighbor(node, r, Direction::Reverse, [&](NodeRef nb) { fn(nb, Edge{nb, r, node}); });
  }
}

}  // namespace acnet
