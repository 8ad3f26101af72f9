#pragma once

#include <acnet/graph_store.hpp>

#include <cstdint>
#include <functional>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

namespace acnet {

/// Elements of an author's year y+1 history that already exist in G_y:
/// new co-authors, papers cited by the new papers, and their topics.
struct FutureSeeds {
  NodeRef author;
  std::int32_t year{0};
  std::vector<NodeRef> elements;  // ascending, unique, never the author itself
};

/// `snapshot_next` must be the year + 1 view of the same graph. Throws
/// std::out_of_range when the author does not exist in the base graph.
FutureSeeds future_history(NodeRef author, const Snapshot& snapshot, const Snapshot& snapshot_next);

/// Breadth-first ball around a root, grown one hop at a time over the
/// undirected view of a snapshot.
class Frontier {
 public:
  explicit Frontier(NodeRef root);

  /// Adds every unreached neighbour of the current outer layer. Layer members
  /// are processed in ascending order, so each node's predecessor is its
  /// smallest parent in the previous layer.
  void expand(const Snapshot& s);

  bool reached(NodeRef n) const { return pred_.contains(n.key()); }
  NodeRef root() const noexcept { return root_; }
  std::uint32_t depth() const noexcept { return depth_; }
  bool exhausted() const noexcept { return layer_.empty(); }
  std::size_t size() const noexcept { return pred_.size(); }
  const std::unordered_map<std::uint64_t, std::uint64_t>& predecessors() const noexcept { return pred_; }

  /// Nodes from `n` back to the root, inclusive.
  std::vector<NodeRef> chain_to_root(NodeRef n) const;

 private:
  NodeRef root_;
  std::uint32_t depth_{0};
  std::vector<NodeRef> layer_;
  std::unordered_map<std::uint64_t, std::uint64_t> pred_;
};

/// Nodes reached by both frontiers, ascending by (type, index).
std::vector<NodeRef> compare_frontiers(const Frontier& author_side, const Frontier& seed_side);

struct SeedPath {
  NodeRef seed;
  std::vector<NodeRef> nodes;  // author first, seed last
  std::size_t length() const noexcept { return nodes.empty() ? 0 : nodes.size() - 1; }
};

/// Union of one shortest path per reachable seed. Nodes are the orange set.
struct Seedgraph {
  NodeRef author;
  std::int32_t year{0};
  std::vector<NodeRef> nodes;  // ascending
  std::vector<Edge> edges;     // native orientation, ascending, unique
  std::vector<SeedPath> paths;
  std::vector<NodeRef> unreachable;
  std::uint32_t hop_limit_hits{0};
};

struct SeedgraphOptions {
  std::uint32_t hop_limit{10};
};

/// Native-orientation edge joining two adjacent snapshot nodes.
Edge native_edge(const Snapshot& s, NodeRef u, NodeRef v);

Seedgraph build_seedgraph(NodeRef author, const Snapshot& snapshot, const FutureSeeds& seeds,
                          const SeedgraphOptions& options = {});

/// Seedgraphs for many authors; results are in `authors` order and identical
/// for any `jobs` value.
std::vector<Seedgraph> build_seedgraphs(std::span<const NodeRef> authors, const Snapshot& snapshot,
                                        const Snapshot& snapshot_next, const SeedgraphOptions& options = {},
                                        unsigned jobs = 1);

/// Runs fn(i) for i in [0, n) over up to `jobs` worker threads.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

/// Human-readable node label "<type>:<external id>".
std::string node_label(const HeteroTemporalGraph& g, NodeRef n);

void write_seedgraphs_ndjson(const HeteroTemporalGraph& g, std::span<const Seedgraph> sgs, std::ostream& out);
void save_seedgraphs(std::span<const Seedgraph> sgs, const std::filesystem::path& path);
std::vector<Seedgraph> load_seedgraphs(const std::filesystem::path& path);

}  // namespace acnet
