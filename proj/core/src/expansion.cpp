#include <acnet/expansion.hpp>
#include <acnet/rng.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace acnet {

void ExpansionParams::validate() const {
  for (double p : {p1, p2, p3}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("expansion probabilities must lie in [0, 1]");
  }
  if (f != 0 && f != 2 && f != 4 && f != 6) throw std::invalid_argument("expansion f must be one of 0, 2, 4, 6");
  if (!(step_budget_factor >= 0.0)) throw std::invalid_argument("step budget factor must be non-negative");
}

std::optional<TrialPreset> trial_preset(std::string_view name) {
  if (name == "trial0") return TrialPreset{true, {}};
  if (name == "trial1") return TrialPreset{false, {0.5, 0.5, 0.5, 2}};
  if (name == "trial2") return TrialPreset{false, {0.75, 0.5, 0.5, 2}};
  if (name == "trial3") return TrialPreset{false, {0.5, 0.75, 0.5, 2}};
  if (name == "trial4") return TrialPreset{false, {0.5, 0.5, 0.75, 2}};
  if (name == "trial5") return TrialPreset{false, {0.25, 0.75, 0.25, 2}};
  return std::nullopt;
}

Color ColoredInfosphere::color(NodeRef n) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), n,
                             [](const std::pair<NodeRef, Color>& a, NodeRef b) { return a.first < b; });
  return it != nodes.end() && it->first == n ? it->second : Color::White;
}

std::size_t ColoredInfosphere::count(Color c) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [c](const auto& x) { return x.second == c; }));
}

void ExpansionStats::merge(const ExpansionStats& o) {
  for (std::size_t i = 0; i < 4; ++i) {
    decisions[i] += o.decisions[i];
    full_decisions[i] += o.full_decisions[i];
  }
  author_jumps += o.author_jumps;
  budget_exhausted += o.budget_exhausted;
  green_added += o.green_added;
  green_per_path.insert(green_per_path.end(), o.green_per_path.begin(), o.green_per_path.end());
}

std::array<double, 4> category_masses(const ExpansionParams& p) {
  std::array<double, 4> m{p.p1, p.p2, p.p3, std::max(0.0, 1.0 - p.p1 - p.p2 - p.p3)};
  double total = 0;
  for (double x : m) total += x;
  for (double& x : m) x /= total;
  return m;
}

ColoredInfosphere expand(const Seedgraph& seedgraph, const Snapshot& snapshot, const ExpansionParams& params,
                         std::uint64_t rng_seed, ExpansionStats* stats) {
  params.validate();
  const NodeRef author = seedgraph.author;
  std::unordered_map<std::uint64_t, Color> color;
  for (NodeRef n : seedgraph.nodes) color.emplace(n.key(), Color::Orange);
  std::map<Edge, Provenance> edges;
  for (const Edge& e : seedgraph.edges) edges.emplace(e, Provenance::SeedPath);

  const std::array<double, 4> masses = category_masses(params);
  const auto budget = static_cast<std::uint64_t>(std::ceil(params.step_budget_factor * params.f));
  ExpansionStats local;

  std::array<std::vector<std::pair<NodeRef, Edge>>, 4> bucket;
  for (std::size_t path_i = 0; path_i < seedgraph.paths.size() && params.f > 0; ++path_i) {
    const auto& path = seedgraph.paths[path_i].nodes;
    if (path.empty()) continue;
    KeyedRng rng(rng_seed, {stream::kExpansion, author.index, path_i});
    NodeRef current = path[rng.below(path.size())];
    std::uint32_t added = 0;
    for (std::uint64_t step = 0; added < params.f && step < budget; ++step) {
      for (auto& b : bucket) b.clear();
      snapshot.for_each_adjacent(current, [&](NodeRef nb, const Edge& e) {
        auto it = color.find(nb.key());
        const Color c = it == color.end() ? Color::White : it->second;
        const StepCategory cat = c == Color::Orange  ? StepCategory::Orange
                                 : c == Color::Green ? StepCategory::Green
                                                     : StepCategory::White;
        bucket[static_cast<std::size_t>(cat)].emplace_back(nb, e);
      });
      // Returning to the author is always possible.
      std::array<bool, 4> available{!bucket[0].empty(), !bucket[1].empty(), true, !bucket[3].empty()};
      std::array<double, 4> w{};
      bool any_mass = false;
      for (std::size_t k = 0; k < 4; ++k) {
        w[k] = available[k] ? masses[k] : 0.0;
        any_mass = any_mass || w[k] > 0;
      }
      if (!any_mass) {
        for (std::size_t k = 0; k < 4; ++k) w[k] = available[k] ? 1.0 : 0.0;
      }
      const auto cat = static_cast<StepCategory>(rng.categorical(w));
      const auto ci = static_cast<std::size_t>(cat);
      ++local.decisions[ci];
      if (available[0] && available[1] && available[3]) ++local.full_decisions[ci];

      if (cat == StepCategory::Author) {
        current = author;
        ++local.author_jumps;
        continue;
      }
      const auto& [next, edge] = bucket[ci][rng.below(bucket[ci].size())];
      edges.emplace(edge, Provenance::Expansion);
      if (cat == StepCategory::White) {
        color.emplace(next.key(), Color::Green);
        ++added;
      }
      current = next;
    }
    if (added < params.f) ++local.budget_exhausted;
    local.green_added += added;
    local.green_per_path.push_back(added);
  }

  ColoredInfosphere out{author, seedgraph.year, {}, {}};
  out.nodes.reserve(color.size());
  for (const auto& [k, c] : color) out.nodes.emplace_back(NodeRef::from_key(k), c);
  std::sort(out.nodes.begin(), out.nodes.end());
  out.edges.assign(edges.begin(), edges.end());
  if (stats) stats->merge(local);
  return out;
}

ColoredInfosphere random_infosphere(const Snapshot& snapshot, NodeRef author, std::size_t size,
                                    std::uint64_t rng_seed, bool* capped) {
  ColoredInfosphere out{author, snapshot.year(), {}, {}};
  if (capped) *capped = false;
  if (size == 0) return out;
  std::vector<std::uint32_t> papers = snapshot.paper_indices();
  if (size > papers.size()) {
    size = papers.size();
    if (capped) *capped = true;
  }
  KeyedRng rng(rng_seed, {stream::kRandomInfosphere, author.index});
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + rng.below(papers.size() - i);
    std::swap(papers[i], papers[j]);
  }
  papers.resize(size);
  std::sort(papers.begin(), papers.end());
  out.nodes.emplace_back(author, Color::Orange);
  for (std::uint32_t p : papers) {
    out.nodes.emplace_back(paper(p), Color::Green);
    out.edges.emplace_back(Edge{author, Relation::Writes, paper(p)}, Provenance::Expansion);
  }
  std::sort(out.nodes.begin(), out.nodes.end());
  return out;
}

}  // namespace acnet
