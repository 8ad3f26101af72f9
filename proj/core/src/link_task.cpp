#include <acnet/link_task.hpp>
#include <acnet/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

namespace acnet {

AuthorPair AuthorPair::of(NodeRef x, NodeRef y) {
  if (x.type != NodeType::Author || y.type != NodeType::Author) {
    throw std::invalid_argument("AuthorPair: both endpoints must be authors");
  }
  return of(x.index, y.index);
}

AuthorPair AuthorPair::of(std::uint32_t x, std::uint32_t y) {
  if (x == y) throw std::invalid_argument("AuthorPair: endpoints must differ");
  return x < y ? AuthorPair{x, y} : AuthorPair{y, x};
}

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

Split split_of(const AuthorPair& p) noexcept {
  const double u = static_cast<double>(mix64(p.key() ^ 0x5eed5a1175ull) >> 11) * 0x1.0p-53;
  if (u < 0.8) return Split::Train;
  if (u < 0.9) return Split::Val;
  return Split::Test;
}

std::vector<LabeledPair> LinkDataset::subset(Split s) const {
  std::vector<LabeledPair> out;
  std::copy_if(examples.begin(), examples.end(), std::back_inserter(out),
               [s](const LabeledPair& e) { return e.split == s; });
  return out;
}

std::size_t LinkDataset::positives() const {
  return static_cast<std::size_t>(
      std::count_if(examples.begin(), examples.end(), [](const LabeledPair& e) { return e.label == 1; }));
}

std::size_t LinkDataset::negatives() const { return examples.size() - positives(); }

std::vector<AuthorPair> coauthor_pairs(const Snapshot& s) {
  std::vector<AuthorPair> out;
  std::vector<std::uint32_t> authors;
  for (std::uint32_t p : s.paper_indices()) {
    authors.clear();
    s.for_each_neighbor(paper(p), Relation::Writes, Direction::Reverse,
                        [&](NodeRef a) { authors.push_back(a.index); });
    for (std::size_t i = 0; i < authors.size(); ++i) {
      for (std::size_t j = i + 1; j < authors.size(); ++j) out.push_back(AuthorPair::of(authors[i], authors[j]));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<AuthorPair> positive_labels(const HeteroTemporalGraph& g, std::int32_t year) {
  const Snapshot now(g, year);
  const auto before = coauthor_pairs(now);
  const auto after = coauthor_pairs(Snapshot(g, year + 1));
  std::vector<AuthorPair> fresh;
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(), std::back_inserter(fresh));
  std::erase_if(fresh, [&](const AuthorPair& p) { return !now.contains(author(p.a)) || !now.contains(author(p.b)); });
  return fresh;
}

std::vector<AuthorPair> negative_sample(std::span<const AuthorPair> positives, const Snapshot& snapshot,
                                        const Snapshot& snapshot_next, std::uint64_t rng_seed) {
  const std::size_t want = positives.size();
  if (want == 0) return {};
  std::vector<std::uint32_t> universe;
  for (std::uint32_t a = 0; a < snapshot.graph().node_count(NodeType::Author); ++a) {
    if (snapshot.contains(author(a))) universe.push_back(a);
  }
  std::vector<std::uint8_t> in_universe(snapshot.graph().node_count(NodeType::Author), 0);
  for (auto a : universe) in_universe[a] = 1;

  std::unordered_set<std::uint64_t> forbidden;
  for (const AuthorPair& p : coauthor_pairs(snapshot_next)) {
    if (in_universe[p.a] && in_universe[p.b]) forbidden.insert(p.key());
  }
  for (const AuthorPair& p : positives) forbidden.insert(p.key());

  const std::uint64_t n = universe.size();
  const std::uint64_t all_pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
  const std::uint64_t candidates = all_pairs - std::min<std::uint64_t>(all_pairs, forbidden.size());
  if (candidates < want) {
    throw DataError("negative sampling exhausted: " + std::to_string(n) + " authors admit only " +
                    std::to_string(candidates) + " non-co-author pairs but " + std::to_string(want) +
                    " are required");
  }

  KeyedRng rng(rng_seed, {stream::kNegatives, static_cast<std::uint64_t>(snapshot.year())});
  std::vector<AuthorPair> out;
  out.reserve(want);
  if (candidates <= 4 * want) {
    // Dense regime: enumerate the candidate space and sample without replacement.
    std::vector<AuthorPair> pool;
    for (std::size_t i = 0; i < universe.size(); ++i) {
      for (std::size_t j = i + 1; j < universe.size(); ++j) {
        const AuthorPair p{universe[i], universe[j]};
        if (!forbidden.contains(p.key())) pool.push_back(p);
      }
    }
    for (std::size_t i = 0; i < want; ++i) {
      std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      out.push_back(pool[i]);
    }
    return out;
  }
  std::unordered_set<std::uint64_t> drawn;
  while (out.size() < want) {
    const auto x = universe[rng.below(n)];
    const auto y = universe[rng.below(n)];
    if (x == y) continue;
    const AuthorPair p = AuthorPair::of(x, y);
    if (forbidden.contains(p.key()) || !drawn.insert(p.key()).second) continue;
    out.push_back(p);
  }
  return out;
}

LinkDataset build_dataset(const HeteroTemporalGraph& g, std::int32_t year, std::uint64_t rng_seed) {
  const auto positives = positive_labels(g, year);
  const auto negatives = negative_sample(positives, Snapshot(g, year), Snapshot(g, year + 1), rng_seed);
  LinkDataset ds{year, {}};
  ds.examples.reserve(positives.size() + negatives.size());
  for (const auto& p : positives) ds.examples.push_back({p, 1, split_of(p)});
  for (const auto& p : negatives) ds.examples.push_back({p, 0, split_of(p)});
  validate_dataset(g, ds);
  return ds;
}

void validate_dataset(const HeteroTemporalGraph& g, const LinkDataset& ds) {
  const auto before = coauthor_pairs(Snapshot(g, ds.year));
  const auto after = coauthor_pairs(Snapshot(g, ds.year + 1));
  std::unordered_set<std::uint64_t> pos, neg;
  for (const auto& e : ds.examples) {
    if (e.pair.a >= e.pair.b || e.pair.b >= g.node_count(NodeType::Author)) {
      throw DataError("dataset pair is not canonical or references an unknown author");
    }
    if (e.label == 1) {
      if (std::binary_search(before.begin(), before.end(), e.pair)) {
        throw DataError("positive pair already co-authored in or before the snapshot year");
      }
      pos.insert(e.pair.key());
    } else if (e.label == 0) {
      if (std::binary_search(after.begin(), after.end(), e.pair)) {
        throw DataError("negative pair co-authored in or before the label year");
      }
      neg.insert(e.pair.key());
    } else {
      throw DataError("dataset label must be 0 or 1");
    }
  }
  if (pos.size() != neg.size() || pos.size() + neg.size() != ds.examples.size()) {
    throw DataError("dataset is not a balanced set of distinct pairs");
  }
  for (auto k : pos) {
    if (neg.contains(k)) throw DataError("pair is both positive and negative");
  }
}

InfosphereEdgeSet drop_infosphere(const InfosphereEdgeSet& set, double fraction, std::uint64_t rng_seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("drop fraction must lie in [0, 1]");
  const std::size_t total = set.size();
  const auto remove = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  KeyedRng rng(rng_seed, {stream::kDropout});
  for (std::size_t i = 0; i < remove; ++i) std::swap(order[i], order[i + rng.below(total - i)]);
  std::vector<std::uint8_t> dropped(total, 0);
  for (std::size_t i = 0; i < remove; ++i) dropped[order[i]] = 1;

  InfosphereEdgeSet out{set.year, {}};
  std::size_t flat = 0;
  for (const auto& a : set.per_author) {
    AuthorExposure kept{a.author, {}};
    for (const auto& e : a.edges) {
      if (!dropped[flat++]) kept.edges.push_back(e);
    }
    if (!kept.edges.empty()) out.per_author.push_back(std::move(kept));
  }
  return out;
}

void write_dataset_ndjson(const HeteroTemporalGraph& g, const LinkDataset& ds, std::ostream& out) {
  for (const auto& e : ds.examples) {
    nlohmann::ordered_json j;
    j["author_a"] = g.external_id(author(e.pair.a));
    j["author_b"] = g.external_id(author(e.pair.b));
    j["label"] = e.label;
    j["split"] = std::string(to_string(e.split));
    j["year"] = ds.year;
    out << j.dump() << '\n';
  }
}

LinkDataset read_dataset_ndjson(const HeteroTemporalGraph& g, std::istream& in) {
  LinkDataset ds;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError("malformed dataset row");
    try {
      const auto a = g.find(NodeType::Author, j.at("author_a").get<std::string>());
      const auto b = g.find(NodeType::Author, j.at("author_b").get<std::string>());
      if (!a || !b) throw DataError("dataset row references an unknown author");
      const auto year = j.at("year").get<std::int32_t>();
      if (first) ds.year = year;
      if (year != ds.year) throw DataError("dataset mixes prediction years");
      first = false;
      ds.examples.push_back({AuthorPair::of(*a, *b), j.at("label").get<std::uint8_t>(),
                             parse_split(j.at("split").get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed dataset row: ") + e.what());
    }
  }
  return ds;
}

void save_dataset(const HeteroTemporalGraph& g, const LinkDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_dataset_ndjson(g, ds, out);
}

LinkDataset load_dataset(const HeteroTemporalGraph& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path.string());
  return read_dataset_ndjson(g, in);
}

}  // namespace acnet
