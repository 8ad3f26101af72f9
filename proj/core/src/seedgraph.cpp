#include <acnet/binary_io.hpp>
#include <acnet/seedgraph.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

namespace acnet {

FutureSeeds future_history(NodeRef author, const Snapshot& snapshot, const Snapshot& snapshot_next) {
  const HeteroTemporalGraph& g = snapshot.graph();
  if (author.type != NodeType::Author || !g.valid(author)) {
    throw std::out_of_range("future_history: unknown author " + to_string(author));
  }
  if (&g != &snapshot_next.graph() || snapshot_next.year() != snapshot.year() + 1) {
    throw std::invalid_argument("future_history: snapshots must be consecutive years of one graph");
  }
  FutureSeeds out{author, snapshot.year(), {}};
  const std::int32_t next_year = snapshot_next.year();
  for (std::uint32_t p : g.adjacency(Relation::Writes, Direction::Forward).row(author.index)) {
    if (g.paper_year(p) != next_year) continue;
    const NodeRef np = paper(p);
    auto keep = [&](NodeRef n) {
      if (n != author && snapshot.contains(n)) out.elements.push_back(n);
    };
    snapshot_next.for_each_neighbor(np, Relation::Writes, Direction::Reverse, keep);
    snapshot_next.for_each_neighbor(np, Relation::Cites, Direction::Forward, keep);
    snapshot_next.for_each_neighbor(np, Relation::DealsWith, Direction::Forward, keep);
  }
  std::sort(out.elements.begin(), out.elements.end());
  out.elements.erase(std::unique(out.elements.begin(), out.elements.end()), out.elements.end());
  return out;
}

Frontier::Frontier(NodeRef root) : root_(root), layer_{root} { pred_.emplace(root.key(), root.key()); }

void Frontier::expand(const Snapshot& s) {
  std::vector<NodeRef> next;
  for (NodeRef u : layer_) {
    s.for_each_adjacent(u, [&](NodeRef nb, const Edge&) {
      if (pred_.try_emplace(nb.key(), u.key()).second) next.push_back(nb);
    });
  }
  std::sort(next.begin(), next.end());
  layer_ = std::move(next);
  ++depth_;
}

std::vector<NodeRef> Frontier::chain_to_root(NodeRef n) const {
  std::vector<NodeRef> out{n};
  std::uint64_t k = n.key();
  while (k != root_.key()) {
    k = pred_.at(k);
    out.push_back(NodeRef::from_key(k));
  }
  return out;
}

std::vector<NodeRef> compare_frontiers(const Frontier& author_side, const Frontier& seed_side) {
  const auto& a = author_side.predecessors();
  const auto& b = seed_side.predecessors();
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  std::vector<NodeRef> out;
  for (const auto& [k, _] : small) {
    if (large.contains(k)) out.push_back(NodeRef::from_key(k));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Edge native_edge(const Snapshot& s, NodeRef u, NodeRef v) {
  const HeteroTemporalGraph& g = s.graph();
  for (Relation r : kAllRelations) {
    if (Edge e{u, r, v}; g.has_edge(e)) return e;
    if (Edge e{v, r, u}; g.has_edge(e)) return e;
  }
  throw std::logic_error("native_edge: " + to_string(u) + " and " + to_string(v) + " are not adjacent");
}

namespace {

struct LiveSeed {
  NodeRef seed;
  Frontier frontier;
};

SeedPath join_paths(NodeRef seed, NodeRef meet, const Frontier& author_side, const Frontier& seed_side) {
  SeedPath p{seed, author_side.chain_to_root(meet)};
  std::reverse(p.nodes.begin(), p.nodes.end());
  const auto tail = seed_side.chain_to_root(meet);
  p.nodes.insert(p.nodes.end(), tail.begin() + 1, tail.end());
  return p;
}

}  // namespace

Seedgraph build_seedgraph(NodeRef author, const Snapshot& snapshot, const FutureSeeds& seeds,
                          const SeedgraphOptions& options) {
  Seedgraph sg{author, snapshot.year(), {}, {}, {}, {}, 0};
  std::vector<LiveSeed> live;
  for (NodeRef s : seeds.elements) {
    if (s == author) continue;
    if (!snapshot.contains(s) || !snapshot.contains(author)) {
      sg.unreachable.push_back(s);
      continue;
    }
    live.push_back({s, Frontier(s)});
  }

  Frontier from_author(author);
  std::uint32_t seed_depth = 0;

  auto retire_overlaps = [&] {
    std::erase_if(live, [&](LiveSeed& ls) {
      const auto overlap = compare_frontiers(from_author, ls.frontier);
      if (overlap.empty()) return false;
      sg.paths.push_back(join_paths(ls.seed, overlap.front(), from_author, ls.frontier));
      return true;
    });
  };
  auto give_up = [&](bool hop_limited) {
    for (const auto& ls : live) {
      sg.unreachable.push_back(ls.seed);
      if (hop_limited) ++sg.hop_limit_hits;
    }
    live.clear();
  };

  while (!live.empty()) {
    if (from_author.depth() + seed_depth >= options.hop_limit) {
      give_up(true);
      break;
    }
    from_author.expand(snapshot);
    retire_overlaps();
    if (from_author.exhausted()) {
      give_up(false);
      break;
    }
    if (live.empty()) break;
    if (from_author.depth() + seed_depth >= options.hop_limit) {
      give_up(true);
      break;
    }
    for (auto& ls : live) ls.frontier.expand(snapshot);
    ++seed_depth;
    retire_overlaps();
    std::erase_if(live, [&](const LiveSeed& ls) {
      if (!ls.frontier.exhausted()) return false;
      sg.unreachable.push_back(ls.seed);
      return true;
    });
  }

  std::sort(sg.paths.begin(), sg.paths.end(), [](const SeedPath& a, const SeedPath& b) { return a.seed < b.seed; });
  std::sort(sg.unreachable.begin(), sg.unreachable.end());
  for (const auto& p : sg.paths) {
    sg.nodes.insert(sg.nodes.end(), p.nodes.begin(), p.nodes.end());
    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) sg.edges.push_back(native_edge(snapshot, p.nodes[i], p.nodes[i + 1]));
  }
  std::sort(sg.nodes.begin(), sg.nodes.end());
  sg.nodes.erase(std::unique(sg.nodes.begin(), sg.nodes.end()), sg.nodes.end());
  std::sort(sg.edges.begin(), sg.edges.end());
  sg.edges.erase(std::unique(sg.edges.begin(), sg.edges.end()), sg.edges.end());
  return sg;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

std::vector<Seedgraph> build_seedgraphs(std::span<const NodeRef> authors, const Snapshot& snapshot,
                                        const Snapshot& snapshot_next, const SeedgraphOptions& options,
                                        unsigned jobs) {
  std::vector<Seedgraph> out(authors.size());
  parallel_for(authors.size(), jobs, [&](std::size_t i) {
    out[i] = build_seedgraph(authors[i], snapshot, future_history(authors[i], snapshot, snapshot_next), options);
  });
  return out;
}

std::string node_label(const HeteroTemporalGraph& g, NodeRef n) {
  return std::string(to_string(n.type)) + ":" + g.external_id(n);
}

void write_seedgraphs_ndjson(const HeteroTemporalGraph& g, std::span<const Seedgraph> sgs, std::ostream& out) {
  for (const auto& sg : sgs) {
    nlohmann::ordered_json j;
    j["author"] = g.external_id(sg.author);
    j["year"] = sg.year;
    j["paths"] = nlohmann::ordered_json::array();
    for (const auto& p : sg.paths) {
      nlohmann::ordered_json jp;
      jp["seed"] = node_label(g, p.seed);
      jp["nodes"] = nlohmann::ordered_json::array();
      for (NodeRef n : p.nodes) jp["nodes"].push_back(node_label(g, n));
      jp["edges"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
        const Edge e = native_edge(Snapshot(g, sg.year), p.nodes[i], p.nodes[i + 1]);
        jp["edges"].push_back({node_label(g, e.src), std::string(to_string(e.relation)), node_label(g, e.dst)});
      }
      j["paths"].push_back(std::move(jp));
    }
    j["unreachable"] = nlohmann::ordered_json::array();
    for (NodeRef n : sg.unreachable) j["unreachable"].push_back(node_label(g, n));
    out << j.dump() << '\n';
  }
}

namespace {
constexpr std::uint32_t kSeedgraphFormatVersion = 1;

void write_nodes(io::LeWriter& w, const std::vector<NodeRef>& v) {
  w.u64(v.size());
  for (NodeRef n : v) w.u64(n.key());
}

std::vector<NodeRef> read_nodes(io::LeReader& r) {
  std::vector<NodeRef> v;
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    const NodeRef x = NodeRef::from_key(r.u64());
    if (to_index(x.type) >= kNumNodeTypes) throw DataError("bad node type in seedgraph file");
    v.push_back(x);
  }
  return v;
}
}  // namespace

void save_seedgraphs(std::span<const Seedgraph> sgs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  io::LeWriter w(out);
  w.magic("ANPS");
  w.u32(kSeedgraphFormatVersion);
  w.u64(sgs.size());
  for (const auto& sg : sgs) {
    w.u64(sg.author.key());
    w.i32(sg.year);
    w.u32(sg.hop_limit_hits);
    write_nodes(w, sg.nodes);
    w.u64(sg.edges.size());
    for (const Edge& e : sg.edges) {
      w.u64(e.src.key());
      w.u8(static_cast<std::uint8_t>(e.relation));
      w.u64(e.dst.key());
    }
    w.u64(sg.paths.size());
    for (const auto& p : sg.paths) {
      w.u64(p.seed.key());
      write_nodes(w, p.nodes);
    }
    write_nodes(w, sg.unreachable);
  }
}

std::vector<Seedgraph> load_seedgraphs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open seedgraph file " + path.string());
  io::LeReader r(in);
  r.expect_magic("ANPS");
  if (r.u32() != kSeedgraphFormatVersion) throw DataError("unsupported seedgraph format version");
  std::vector<Seedgraph> out(static_cast<std::size_t>(r.u64()));
  for (auto& sg : out) {
    sg.author = NodeRef::from_key(r.u64());
    sg.year = r.i32();
    sg.hop_limit_hits = r.u32();
    sg.nodes = read_nodes(r);
    sg.edges.resize(static_cast<std::size_t>(r.u64()));
    for (Edge& e : sg.edges) {
      e.src = NodeRef::from_key(r.u64());
      const std::uint8_t rel = r.u8();
      if (rel >= kNumRelations) throw DataError("bad relation in seedgraph file");
      e.relation = static_cast<Relation>(rel);
      e.dst = NodeRef::from_key(r.u64());
    }
    sg.paths.resize(static_cast<std::size_t>(r.u64()));
    for (auto& p : sg.paths) {
      p.seed = NodeRef::from_key(r.u64());
      p.nodes = read_nodes(r);
    }
    sg.unreachable = read_nodes(r);
  }
  return out;
}

}  // namespace acnet
