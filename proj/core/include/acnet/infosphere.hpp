#pragma once

#include <acnet/expansion.hpp>
#include <acnet/graph_store.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace acnet {

enum class ExposureSource : std::uint8_t { AuthorFuture = 0, TopPaper = 1, TopPaperPerTopic = 2, Random = 3 };
std::string_view to_string(ExposureSource s) noexcept;

/// One materialised infosphere edge. The edge reuses a base relation but lives
/// in that relation's exposure channel, never in the history channel.
struct ExposureEdge {
  Edge edge;
  ExposureSource source{ExposureSource::AuthorFuture};
  friend auto operator<=>(const ExposureEdge&, const ExposureEdge&) = default;
};

struct AuthorExposure {
  NodeRef author;
  std::vector<ExposureEdge> edges;  // unique per author
};

struct InfosphereEdgeSet {
  std::int32_t year{0};
  std::vector<AuthorExposure> per_author;

  std::size_t size() const noexcept;
  /// Union over authors, ascending, duplicates removed.
  std::vector<Edge> unique_edges() const;
};

/// Citation in-degree of every paper within the snapshot (0 for absent papers).
std::vector<std::uint32_t> citation_counts(const Snapshot& s);

/// The n most-cited snapshot papers, ties by ascending index.
std::vector<NodeRef> top_papers(const Snapshot& s, std::size_t n);
std::vector<NodeRef> top_papers(const Snapshot& s, std::span<const std::uint32_t> counts, std::size_t n);

/// The author's m most-used topics (by number of own papers, ties by topic
/// index), then the n most-cited papers of each, concatenated with first
/// occurrences kept.
std::vector<NodeRef> top_papers_per_topic(const Snapshot& s, NodeRef author, std::size_t m, std::size_t n);
std::vector<NodeRef> top_papers_per_topic(const Snapshot& s, std::span<const std::uint32_t> counts, NodeRef author,
                                          std::size_t m, std::size_t n);

/// Author-future (or random) infospheres contribute their edges verbatim.
InfosphereEdgeSet materialize(const Snapshot& s, std::span<const ColoredInfosphere> infospheres,
                              ExposureSource source = ExposureSource::AuthorFuture);

/// Popularity infospheres: one (author, writes, paper) exposure edge per selected paper.
InfosphereEdgeSet materialize(const Snapshot& s, std::span<const std::pair<NodeRef, std::vector<NodeRef>>> selections,
                              ExposureSource source);

void write_infosphere_ndjson(const HeteroTemporalGraph& g, const InfosphereEdgeSet& set, std::ostream& out);
void save_infosphere(const InfosphereEdgeSet& set, const std::filesystem::path& path);
InfosphereEdgeSet load_infosphere(const std::filesystem::path& path);

}  // namespace acnet
