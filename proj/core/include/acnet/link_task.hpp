#pragma once

#include <acnet/graph_store.hpp>
#include <acnet/infosphere.hpp>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace acnet {

/// Unordered author pair stored canonically (a < b).
struct AuthorPair {
  std::uint32_t a{0};
  std::uint32_t b{0};

  /// Throws std::invalid_argument for equal or non-author endpoints.
  static AuthorPair of(NodeRef x, NodeRef y);
  static AuthorPair of(std::uint32_t x, std::uint32_t y);

  std::uint64_t key() const noexcept { return (static_cast<std::uint64_t>(a) << 32) | b; }
  friend constexpr auto operator<=>(const AuthorPair&, const AuthorPair&) = default;
};

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };
std::string_view to_string(Split s) noexcept;
Split parse_split(std::string_view s);

/// 80/10/10 assignment from a hash of the canonical pair.
Split split_of(const AuthorPair& p) noexcept;

struct LabeledPair {
  AuthorPair pair;
  std::uint8_t label{0};
  Split split{Split::Train};
  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

struct LinkDataset {
  std::int32_t year{0};
  std::vector<LabeledPair> examples;

  std::vector<LabeledPair> subset(Split s) const;
  std::size_t positives() const;
  std::size_t negatives() const;
};

/// Pairs of authors sharing at least one snapshot paper, ascending.
std::vector<AuthorPair> coauthor_pairs(const Snapshot& s);

/// Pairs co-authoring for the first time in year + 1 whose authors both exist in G_year.
std::vector<AuthorPair> positive_labels(const HeteroTemporalGraph& g, std::int32_t year);

/// Exactly positives.size() distinct pairs of snapshot authors that have never
/// co-authored up to and including year + 1. Throws DataError when fewer such
/// pairs exist than requested.
std::vector<AuthorPair> negative_sample(std::span<const AuthorPair> positives, const Snapshot& snapshot,
                                        const Snapshot& snapshot_next, std::uint64_t rng_seed);

/// Balanced dataset for predicting year + 1 co-authorships from G_year.
LinkDataset build_dataset(const HeteroTemporalGraph& g, std::int32_t year, std::uint64_t rng_seed);

/// Throws DataError when a LinkDataset invariant is violated.
void validate_dataset(const HeteroTemporalGraph& g, const LinkDataset& ds);

/// Removes round(fraction * |edges|) exposure edges chosen uniformly.
InfosphereEdgeSet drop_infosphere(const InfosphereEdgeSet& set, double fraction, std::uint64_t rng_seed);

void write_dataset_ndjson(const HeteroTemporalGraph& g, const LinkDataset& ds, std::ostream& out);
LinkDataset read_dataset_ndjson(const HeteroTemporalGraph& g, std::istream& in);
void save_dataset(const HeteroTemporalGraph& g, const LinkDataset& ds, const std::filesystem::path& path);
LinkDataset load_dataset(const HeteroTemporalGraph& g, const std::filesystem::path& path);

}  // namespace acnet
