#pragma once

#include <acnet/graph_store.hpp>

#include <cstdint>

namespace acnet {

/// Parameters of the synthetic academic corpus.
///
/// Every author is registered up front ("a<i>"), every topic too ("t<i>").
/// Each year emits `papers_per_year` papers ("p<year>_<i>"). A paper has a lead
/// author drawn from authors with history (any author in the first year), a main
/// topic taken from the lead's past topics, `authors_per_paper` distinct authors,
/// `topics_per_paper` distinct topics and cites min(refs_per_paper, #earlier
/// papers) distinct earlier papers.
///
/// Each co-author slot is filled by one of two mechanisms:
///  - with probability `rho` (recommender influence) from exposure: an earlier
///    paper on the main topic is drawn proportionally to (citations + 1), one of its authors joins
///    and the new paper cites it;
///  - otherwise locally: an author who has already published on the main topic,
///    preferring the lead's previous co-authors.
struct SynthConfig {
  std::uint32_t n_authors{200};
  std::uint32_t n_topics{10};
  std::int32_t first_year{2000};
  std::uint32_t n_years{6};
  std::uint32_t papers_per_year{50};
  std::uint32_t authors_per_paper{3};
  std::uint32_t topics_per_paper{2};
  std::uint32_t refs_per_paper{4};
  /// Probability that a secondary topic is the author's home topic rather than uniform.
  double topic_affinity{0.7};
  /// Probability that a local co-author slot repeats a previous collaborator.
  double repeat_bias{0.5};
  double rho{0.5};

  void validate() const;  // throws std::invalid_argument on degenerate configs
};

/// Deterministic for a given (config, seed).
HeteroTemporalGraph synth_generate(const SynthConfig& config, std::uint64_t seed);

}  // namespace acnet
