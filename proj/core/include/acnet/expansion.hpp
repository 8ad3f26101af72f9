#pragma once

#include <acnet/graph_store.hpp>
#include <acnet/seedgraph.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace acnet {

/// p1: follow orange (seedgraph) nodes; p2: follow green (expansion) nodes;
/// p3: return to the author; f: new nodes per seed path.
struct ExpansionParams {
  double p1{0.5};
  double p2{0.5};
  double p3{0.5};
  std::uint32_t f{2};
  /// The walk for one path stops after step_budget_factor * f steps.
  double step_budget_factor{50.0};

  void validate() const;  // throws std::invalid_argument
  friend bool operator==(const ExpansionParams&, const ExpansionParams&) = default;
};

/// Named parameterisations trial0..trial5; trial0 is the random infosphere and
/// therefore has no expansion parameters.
struct TrialPreset {
  bool random{false};
  ExpansionParams params;
};
std::optional<TrialPreset> trial_preset(std::string_view name);

enum class Color : std::uint8_t { White = 0, Orange = 1, Green = 2 };
enum class Provenance : std::uint8_t { SeedPath = 0, Expansion = 1 };

/// Seedgraph plus expansion. Nodes absent from `nodes` are white.
struct ColoredInfosphere {
  NodeRef author;
  std::int32_t year{0};
  std::vector<std::pair<NodeRef, Color>> nodes;     // ascending by node
  std::vector<std::pair<Edge, Provenance>> edges;  // ascending by edge

  Color color(NodeRef n) const;
  std::size_t count(Color c) const;
};

/// Category of one walk decision, in mass order (p1, p2, p3, remainder).
enum class StepCategory : std::uint8_t { Orange = 0, Green = 1, Author = 2, White = 3 };

struct ExpansionStats {
  std::array<std::uint64_t, 4> decisions{};
  /// Decisions taken while all four categories were available.
  std::array<std::uint64_t, 4> full_decisions{};
  std::uint64_t author_jumps{0};
  std::uint64_t budget_exhausted{0};
  std::uint64_t green_added{0};
  std::vector<std::uint32_t> green_per_path;

  void merge(const ExpansionStats& o);
};

/// Normalised category masses (p1, p2, p3, max(0, 1 - p1 - p2 - p3)).
std::array<double, 4> category_masses(const ExpansionParams& p);

/// Walks from a uniformly chosen node of each seed path until f previously
/// white nodes have been coloured green or the step budget runs out. At each
/// step one categorical draw picks orange/green/author/white with the masses
/// above, restricted to categories that are non-empty at the current node; the
/// neighbour inside the category is uniform. A p3 draw relocates the walk to the
/// author without adding an edge. Randomness is keyed by (seed, author, path).
ColoredInfosphere expand(const Seedgraph& seedgraph, const Snapshot& snapshot, const ExpansionParams& params,
                         std::uint64_t rng_seed, ExpansionStats* stats = nullptr);

/// `size` snapshot papers sampled uniformly without replacement, each attached to
/// the author by an exposure edge. `capped` reports whether size exceeded the
/// number of papers.
ColoredInfosphere random_infosphere(const Snapshot& snapshot, NodeRef author, std::size_t size, std::uint64_t rng_seed,
                                    bool* capped = nullptr);

}  // namespace acnet
