#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace acnet {

enum class NodeType : std::uint8_t { Author = 0, Paper = 1, Topic = 2 };
inline constexpr std::size_t kNumNodeTypes = 3;
inline constexpr std::array<NodeType, kNumNodeTypes> kAllNodeTypes{NodeType::Author, NodeType::Paper,
                                                                   NodeType::Topic};

enum class Relation : std::uint8_t { Writes = 0, DealsWith = 1, Cites = 2 };
inline constexpr std::size_t kNumRelations = 3;
inline constexpr std::array<Relation, kNumRelations> kAllRelations{Relation::Writes, Relation::DealsWith,
                                                                   Relation::Cites};

/// Forward follows the stored edge orientation (src -> dst); Reverse walks it backwards.
enum class Direction : std::uint8_t { Forward = 0, Reverse = 1 };

constexpr std::size_t to_index(NodeType t) noexcept { return static_cast<std::size_t>(t); }
constexpr std::size_t to_index(Relation r) noexcept { return static_cast<std::size_t>(r); }

std::string_view to_string(NodeType t) noexcept;
std::string_view to_string(Relation r) noexcept;

/// A node is identified by its type and a dense per-type index.
struct NodeRef {
  NodeType type{NodeType::Author};
  std::uint32_t index{0};

  friend constexpr auto operator<=>(const NodeRef&, const NodeRef&) = default;

  /// Packs (type, index) into one integer whose ordering matches operator<=>.
  constexpr std::uint64_t key() const noexcept {
    return (static_cast<std::uint64_t>(type) << 32) | index;
  }
  static constexpr NodeRef from_key(std::uint64_t k) noexcept {
    return {static_cast<NodeType>(k >> 32), static_cast<std::uint32_t>(k & 0xffffffffu)};
  }
};

constexpr NodeRef author(std::uint32_t i) noexcept { return {NodeType::Author, i}; }
constexpr NodeRef paper(std::uint32_t i) noexcept { return {NodeType::Paper, i}; }
constexpr NodeRef topic(std::uint32_t i) noexcept { return {NodeType::Topic, i}; }

std::string to_string(NodeRef n);

struct EdgeTriple {
  NodeType src_type;
  Relation relation;
  NodeType dst_type;

  friend constexpr bool operator==(const EdgeTriple&, const EdgeTriple&) = default;
};

/// The only legal (src, relation, dst) triples; the relation determines the endpoint types.
constexpr EdgeTriple triple_of(Relation r) noexcept {
  switch (r) {
    case Relation::Writes:
      return {NodeType::Author, Relation::Writes, NodeType::Paper};
    case Relation::DealsWith:
      return {NodeType::Paper, Relation::DealsWith, NodeType::Topic};
    case Relation::Cites:
      break;
  }
  return {NodeType::Paper, Relation::Cites, NodeType::Paper};
}

constexpr bool is_legal(const EdgeTriple& t) noexcept { return triple_of(t.relation) == t; }

/// A typed edge in its native orientation.
struct Edge {
  NodeRef src;
  Relation relation{Relation::Writes};
  NodeRef dst;

  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

/// Thrown when input data (files, corpora, configs) is malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace acnet

template <>
struct std::hash<acnet::NodeRef> {
  std::size_t operator()(const acnet::NodeRef& n) const noexcept {
    return std::hash<std::uint64_t>{}(n.key());
  }
};
