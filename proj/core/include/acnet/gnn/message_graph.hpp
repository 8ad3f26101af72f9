#pragma once

#include <acnet/graph_store.hpp>
#include <acnet/infosphere.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace acnet::gnn {

/// Message channels: every base relation in both orientations, once for history
/// edges and once for exposure (infosphere) edges.
inline constexpr std::size_t kNumChannels = 2 * kNumRelations * 2;

struct Channel {
  Relation relation;
  Direction direction;
  bool exposure;
};

constexpr std::size_t channel_index(Relation r, Direction d, bool exposure) noexcept {
  return ((exposure ? kNumRelations : 0) + to_index(r)) * 2 + static_cast<std::size_t>(d);
}

constexpr Channel channel_at(std::size_t c) noexcept {
  return {static_cast<Relation>((c / 2) % kNumRelations), static_cast<Direction>(c % 2), c / 2 >= kNumRelations};
}

/// Node type that sends messages over channel c.
constexpr NodeType channel_source(std::size_t c) noexcept {
  const Channel ch = channel_at(c);
  const EdgeTriple t = triple_of(ch.relation);
  return ch.direction == Direction::Forward ? t.src_type : t.dst_type;
}

/// Node type that receives messages over channel c.
constexpr NodeType channel_target(std::size_t c) noexcept {
  const Channel ch = channel_at(c);
  const EdgeTriple t = triple_of(ch.relation);
  return ch.direction == Direction::Forward ? t.dst_type : t.src_type;
}

std::string channel_name(std::size_t c);

/// In-neighbour lists per channel over dense base-graph indices. Row v of
/// `in[c]` lists the senders of v (ascending).
struct MessageGraph {
  std::array<std::uint32_t, kNumNodeTypes> counts{};
  std::array<Csr, kNumChannels> in;
  /// Paper year scaled to [0, 1] over the base graph's year range.
  std::vector<double> paper_year;
};

struct MessageGraphOptions {
  /// 0 keeps full neighbourhoods; otherwise rows longer than this are subsampled.
  std::uint32_t max_neighbors{0};
  std::uint64_t seed{0};
};

/// History channels come from the snapshot; exposure channels from the union
/// of infosphere edges (absent or empty set leaves them empty). Throws
/// std::invalid_argument when an exposure edge references an unknown node.
MessageGraph build_message_graph(const Snapshot& s, const InfosphereEdgeSet* exposure = nullptr,
                                 const MessageGraphOptions& options = {});

}  // namespace acnet::gnn
