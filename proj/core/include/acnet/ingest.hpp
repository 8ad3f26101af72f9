#pragma once

#include <acnet/graph_store.hpp>

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace acnet {

/// One paper as read from the citation corpus.
struct PaperRecord {
  std::string paper_id;
  std::int32_t year{0};
  std::vector<std::string> author_ids;
  std::vector<std::string> topic_names;
  std::vector<std::string> reference_ids;
};

enum class InputFormat { Auto, Array, Ndjson };
InputFormat parse_input_format(std::string_view s);

struct ParseStats {
  std::uint64_t records_parsed{0};
  std::uint64_t records_skipped{0};
  std::uint64_t skipped_malformed{0};
  std::uint64_t skipped_missing_id{0};
  std::uint64_t skipped_missing_year{0};
  std::uint64_t bytes_read{0};
  std::uint64_t max_record_bytes{0};
  /// Largest number of bytes ever held for a single record; bounded by max_record_bytes.
  std::uint64_t peak_record_buffer{0};
};

/// Streaming reader for the citation-network JSON corpus. Accepts either a
/// top-level JSON array of paper objects or newline-delimited objects, detected
/// from the first significant byte. Holds at most one record in memory; records
/// that fail to parse or lack an id/year are skipped and counted.
class V14Reader {
 public:
  explicit V14Reader(std::istream& in, InputFormat format = InputFormat::Auto);

  /// Fills `out` with the next valid record; false once the input is exhausted.
  bool next(PaperRecord& out);

  InputFormat detected_format() const noexcept { return format_; }
  const ParseStats& stats() const noexcept { return stats_; }

  /// Converts one JSON object text into a record; nullopt means "skip" and
  /// bumps the matching counter.
  std::optional<PaperRecord> decode(std::string_view text);

 private:
  int get();
  int peek();
  int skip_ws();
  bool frame_array_element(std::string& out);
  bool frame_line(std::string& out);
  void detect();

  std::istream& in_;
  InputFormat format_;
  bool started_{false};
  bool done_{false};
  std::vector<char> chunk_;
  std::size_t pos_{0};
  std::size_t len_{0};
  std::string record_;
  ParseStats stats_;
};

/// Reads every record from a stream (convenience for small inputs and tests).
std::vector<PaperRecord> parse_v14_stream(std::istream& in, InputFormat format = InputFormat::Auto,
                                          ParseStats* stats = nullptr);

struct IngestStats {
  ParseStats parse;
  std::uint64_t duplicate_records{0};
  std::uint64_t dangling_references{0};
  std::array<std::uint64_t, kNumNodeTypes> nodes{};
  std::array<std::uint64_t, kNumRelations> edges{};
};

std::string ingest_stats_json(const IngestStats& s);

/// Incremental graph construction from records: one Writes edge per
/// (author, paper), one DealsWith per (paper, topic), one Cites per reference
/// that resolves to a paper of the corpus. Topics are matched by exact name after
/// trimming; a repeated paper id keeps the first record.
class GraphIngestor {
 public:
  void add(const PaperRecord& r);
  std::pair<HeteroTemporalGraph, IngestStats> finish(const ParseStats& parse = {});

 private:
  GraphBuilder builder_;
  IngestStats stats_;
  std::vector<std::pair<std::uint32_t, std::string>> pending_refs_;
};

std::pair<HeteroTemporalGraph, IngestStats> build_graph(std::span<const PaperRecord> records);

/// Streams a corpus file straight into a graph.
std::pair<HeteroTemporalGraph, IngestStats> ingest_stream(std::istream& in, InputFormat format = InputFormat::Auto);

std::string trim(std::string_view s);

}  // namespace acnet
