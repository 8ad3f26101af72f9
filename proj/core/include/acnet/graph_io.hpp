#pragma once

#include <acnet/graph_store.hpp>

#include <filesystem>
#include <iosfwd>

namespace acnet {

/// On-disk graph layout, all integers little-endian:
///   "ANPG" | u32 version | u32 count[author,paper,topic]
///   | i32 year[paper count]
///   | per relation (writes, deals_with, cites): u64 edges, u64 offsets[src count + 1], u32 targets[edges]
///   | per type: u32-length-prefixed external ids
inline constexpr std::uint32_t kGraphFormatVersion = 1;

void save_graph(const HeteroTemporalGraph& g, std::ostream& out);
void save_graph(const HeteroTemporalGraph& g, const std::filesystem::path& path);

/// Loads and validates every structural invariant; throws DataError on corruption.
HeteroTemporalGraph load_graph(std::istream& in);
HeteroTemporalGraph load_graph(const std::filesystem::path& path);

}  // namespace acnet
