#pragma once

#include <acnet/expansion.hpp>
#include <acnet/gnn/train.hpp>
#include <acnet/infosphere.hpp>
#include <acnet/ingest.hpp>
#include <acnet/link_task.hpp>
#include <acnet/synth.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace acnet {

enum class InfosphereType : std::uint8_t { None = 0, Author = 1, TopPaper = 2, TopPaperPerTopic = 3, Random = 4 };
std::string_view to_string(InfosphereType t) noexcept;
InfosphereType parse_infosphere_type(std::string_view s);

struct InfosphereSpec {
  InfosphereType type{InfosphereType::None};
  /// Author variant: "0" (seedgraph only), "trial1".."trial5", or "custom".
  std::string preset{"0"};
  ExpansionParams expansion{0.5, 0.5, 0.5, 0};
  std::uint32_t hop_limit{10};
  std::uint32_t top_n{10};      // top-paper, and papers per topic for top-paper-per-topic
  std::uint32_t topics_m{1};    // top-paper-per-topic
  std::uint32_t random_size{10};

  /// Label for the "params" column, e.g. "0", "trial5", "10", "[1,10]".
  std::string params_label() const;
  void validate() const;  // throws std::invalid_argument
};

/// Builds the exposure set of every author present in snapshot(year).
/// `expansion_stats` is filled for the author variant when non-null.
InfosphereEdgeSet build_infosphere(const HeteroTemporalGraph& g, std::int32_t year, const InfosphereSpec& spec,
                                   std::uint64_t seed, unsigned jobs = 1, ExpansionStats* expansion_stats = nullptr);

/// Latest year whose successor year still has papers.
std::int32_t default_prediction_year(const HeteroTemporalGraph& g);

struct CorpusSpec {
  /// v14 JSON (array or NDJSON) or a saved graph binary; detected by content.
  std::optional<std::filesystem::path> input;
  InputFormat format{InputFormat::Auto};
  std::optional<SynthConfig> synth;
  /// Generator seed; the experiment seed when unset.
  std::optional<std::uint64_t> synth_seed;
};

struct ExperimentSpec {
  CorpusSpec corpus;
  std::optional<std::int32_t> year;
  InfosphereSpec infosphere;
  double drop{0.0};
  gnn::TrainConfig train;
  std::uint32_t max_neighbors{0};
  std::uint64_t seed{0};
  std::filesystem::path out_dir;
  unsigned jobs{1};
  bool dump_infosphere{false};

  void validate() const;  // throws std::invalid_argument (DataError for missing files)
};

/// Parses a JSON experiment file. Each override is "dotted.key=value"; the value
/// is read as JSON when it parses, otherwise as a string. Unknown keys throw.
ExperimentSpec parse_spec(std::string_view json_text, const std::vector<std::string>& overrides = {});
ExperimentSpec load_spec(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
/// Fully resolved spec with every default written out.
std::string spec_to_json(const ExperimentSpec& spec);

/// Output directory used when a spec leaves it empty: $ACNET_CACHE_DIR (or
/// ~/.cache/acnet) joined with a hash of the spec.
std::filesystem::path default_out_dir(const ExperimentSpec& spec);

struct ResultRow {
  std::string infosphere;  // "none", "author", ...
  std::string params;
  double drop{0};
  double accuracy{0};
  std::string aggregation;
  std::string encoder{"SAGE"};
  std::uint64_t seed{0};
  double runtime_s{0};
  // Diagnostics on the test split.
  double precision{0};
  double recall{0};
  double auc{0};
  std::uint64_t test_pairs{0};
  std::uint32_t best_epoch{0};
  std::uint32_t epochs_run{0};

  /// Equality ignores runtime_s.
  bool same_outcome(const ResultRow& o) const;
};

std::string result_to_json(const ResultRow& r);
ResultRow result_from_json(std::string_view text);

/// Sorted in grid order: infosphere type (none, author, top-paper,
/// top-paper-per-topic, random), params, drop, aggregation (max, mean, min, sum).
std::vector<ResultRow> sort_for_report(std::vector<ResultRow> rows);
std::string report_text(std::vector<ResultRow> rows);
std::string report_csv(std::vector<ResultRow> rows);

/// Specs for the full comparison grid derived from `base`; each gets its
/// own subdirectory of base.out_dir.
std::vector<ExperimentSpec> experiment_grid(const ExperimentSpec& base);

struct RunOptions {
  bool force{false};
  std::ostream* log{nullptr};
};

struct RunOutcome {
  ResultRow row;
  std::vector<std::string> executed;  // stage names that ran
  std::vector<std::string> skipped;   // stage names satisfied from the output directory
};

/// Raised for a failure inside a stage; wraps the original message.
class StageError : public std::runtime_error {
 public:
  enum class Kind { Usage, Data, Divergence, Other };
  StageError(std::string stage, Kind kind, const std::string& what)
      : std::runtime_error("stage '" + stage + "': " + what), stage_(std::move(stage)), kind_(kind) {}
  const std::string& stage() const noexcept { return stage_; }
  Kind kind() const noexcept { return kind_; }

 private:
  std::string stage_;
  Kind kind_;
};

/// graph -> dataset -> infosphere -> train -> evaluate. Every stage writes its
/// artifact and a content hash of its inputs into spec.out_dir; a stage whose
/// hash and artifact are present is loaded instead of recomputed.
RunOutcome run(const ExperimentSpec& spec, const RunOptions& options = {});

/// Loads a graph from a v14 corpus or a graph binary (detected by magic bytes).
std::pair<HeteroTemporalGraph, std::optional<IngestStats>> load_corpus(const CorpusSpec& corpus);

std::string hex64(std::uint64_t v);
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace acnet
