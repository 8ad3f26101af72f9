#include <acnet/rng.hpp>
#include <acnet/synth.hpp>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace acnet {

void SynthConfig::validate() const {
  if (n_authors == 0) throw std::invalid_argument("synth: n_authors must be positive");
  if (n_topics == 0) throw std::invalid_argument("synth: n_topics must be positive");
  if (n_years == 0) throw std::invalid_argument("synth: n_years must be positive");
  if (authors_per_paper == 0) throw std::invalid_argument("synth: authors_per_paper must be positive");
  if (first_year <= 0) throw std::invalid_argument("synth: first_year must be positive");
  for (double p : {rho, topic_affinity, repeat_bias}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("synth: probabilities must lie in [0, 1]");
  }
}

namespace {

struct PaperDraft {
  std::vector<std::uint32_t> authors;
  std::vector<std::uint32_t> topics;
  std::vector<std::uint32_t> refs;
};

class Generator {
 public:
  Generator(const SynthConfig& c, std::uint64_t seed)
      : c_(c),
        rng_(seed, {stream::kSynth}),
        k_(std::min(c.authors_per_paper, c.n_authors)),
        tpp_(std::min(c.topics_per_paper, c.n_topics)),
        author_topic_(static_cast<std::size_t>(c.n_authors) * c.n_topics, 0),
        coauthors_(c.n_authors),
        has_history_(c.n_authors, false),
        topic_authors_(c.n_topics),
        topic_papers_(c.n_topics) {
    home_.resize(c.n_authors);
    for (auto& h : home_) h = static_cast<std::uint32_t>(rng_.below(c.n_topics));
  }

  HeteroTemporalGraph run() {
    GraphBuilder b;
    for (std::uint32_t a = 0; a < c_.n_authors; ++a) b.add_node(NodeType::Author, "a" + std::to_string(a));
    for (std::uint32_t t = 0; t < c_.n_topics; ++t) b.add_node(NodeType::Topic, "t" + std::to_string(t));

    for (std::uint32_t yi = 0; yi < c_.n_years; ++yi) {
      const std::int32_t year = c_.first_year + static_cast<std::int32_t>(yi);
      std::vector<PaperDraft> drafts = yi == 0 ? first_year() : later_year();
      const auto base = static_cast<std::uint32_t>(papers_.size());
      for (std::uint32_t i = 0; i < drafts.size(); ++i) {
        const NodeRef p = b.add_paper("p" + std::to_string(year) + "_" + std::to_string(i), year);
        for (auto a : drafts[i].authors) b.add_edge(Relation::Writes, author(a), p);
        for (auto t : drafts[i].topics) b.add_edge(Relation::DealsWith, p, topic(t));
        for (auto q : drafts[i].refs) b.add_edge(Relation::Cites, p, paper(q));
      }
      commit(drafts, base);
    }
    return b.build();
  }

 private:
  std::uint32_t affinity_topic(std::uint32_t a) {
    if (rng_.bernoulli(c_.topic_affinity)) return home_[a];
    return static_cast<std::uint32_t>(rng_.below(c_.n_topics));
  }

  void fill_topics(PaperDraft& d, std::uint32_t main_topic) {
    d.topics.push_back(main_topic);
    while (d.topics.size() < tpp_) {
      std::uint32_t t = affinity_topic(d.authors.front());
      for (int tries = 0; tries < 8 && contains(d.topics, t); ++tries) t = affinity_topic(d.authors.front());
      while (contains(d.topics, t)) t = (t + 1) % c_.n_topics;
      d.topics.push_back(t);
    }
  }

  std::vector<PaperDraft> first_year() {
    std::vector<std::uint32_t> order(c_.n_authors);
    for (std::uint32_t a = 0; a < c_.n_authors; ++a) order[a] = a;
    rng_.shuffle(std::span<std::uint32_t>(order));
    std::size_t cursor = 0;
    std::vector<PaperDraft> out(c_.papers_per_year);
    for (auto& d : out) {
      while (d.authors.size() < k_) {
        const std::uint32_t a = order[cursor++ % order.size()];
        if (!contains(d.authors, a)) d.authors.push_back(a);
      }
      fill_topics(d, home_[d.authors.front()]);
    }
    return out;
  }

  std::vector<PaperDraft> later_year() {
    std::vector<std::uint32_t> historical;
    for (std::uint32_t a = 0; a < c_.n_authors; ++a) {
      if (has_history_[a]) historical.push_back(a);
    }
    // Popularity weights are frozen at the start of the year, globally and per topic.
    std::vector<double> cumulative(papers_.size());
    double acc = 0;
    for (std::size_t p = 0; p < papers_.size(); ++p) {
      acc += static_cast<double>(citations_[p]) + 1.0;
      cumulative[p] = acc;
    }
    std::vector<std::vector<double>> topic_cumulative(c_.n_topics);
    for (std::uint32_t t = 0; t < c_.n_topics; ++t) {
      double sum = 0;
      for (auto p : topic_papers_[t]) {
        sum += static_cast<double>(citations_[p]) + 1.0;
        topic_cumulative[t].push_back(sum);
      }
    }

    std::vector<PaperDraft> out(c_.papers_per_year);
    for (auto& d : out) {
      const std::uint32_t lead = historical[rng_.below(historical.size())];
      d.authors.push_back(lead);
      const std::uint32_t main_topic = history_topic(lead);
      while (d.authors.size() < k_) {
        std::optional<std::uint32_t> pick;
        if (rng_.bernoulli(c_.rho)) {
          pick = exposure_author(d, topic_papers_[main_topic], topic_cumulative[main_topic]);
        } else {
          pick = local_author(d, lead, main_topic);
        }
        if (!pick) pick = any_author(d, historical);
        d.authors.push_back(*pick);
      }
      fill_topics(d, main_topic);
      fill_refs(d, main_topic, cumulative);
    }
    return out;
  }

  std::uint32_t history_topic(std::uint32_t a) {
    std::vector<double> w(c_.n_topics);
    for (std::uint32_t t = 0; t < c_.n_topics; ++t) w[t] = author_topic_[static_cast<std::size_t>(a) * c_.n_topics + t];
    const std::size_t t = rng_.categorical(w);
    return t == w.size() ? home_[a] : static_cast<std::uint32_t>(t);
  }

  // Draws an earlier paper of the main topic proportionally to (citations + 1).
  std::optional<std::uint32_t> exposure_author(PaperDraft& d, const std::vector<std::uint32_t>& candidates,
                                               const std::vector<double>& cumulative) {
    if (cumulative.empty()) return std::nullopt;
    for (int tries = 0; tries < 8; ++tries) {
      const double target = rng_.uniform() * cumulative.back();
      const auto i = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), target) -
                                              cumulative.begin());
      const std::uint32_t q = candidates[std::min(i, candidates.size() - 1)];
      const auto& authors = papers_[q].authors;
      std::vector<std::uint32_t> free;
      for (auto a : authors) {
        if (!contains(d.authors, a)) free.push_back(a);
      }
      if (free.empty()) continue;
      if (!contains(d.refs, q) && d.refs.size() < c_.refs_per_paper) d.refs.push_back(q);
      return free[rng_.below(free.size())];
    }
    return std::nullopt;
  }

  std::optional<std::uint32_t> local_author(const PaperDraft& d, std::uint32_t lead, std::uint32_t main_topic) {
    const auto& pool = topic_authors_[main_topic];
    if (rng_.bernoulli(c_.repeat_bias)) {
      std::vector<std::uint32_t> repeat;
      for (auto a : coauthors_[lead]) {
        if (!contains(d.authors, a) && std::binary_search(pool.begin(), pool.end(), a)) repeat.push_back(a);
      }
      if (!repeat.empty()) return repeat[rng_.below(repeat.size())];
    }
    std::vector<std::uint32_t> free;
    for (auto a : pool) {
      if (!contains(d.authors, a)) free.push_back(a);
    }
    if (free.empty()) return std::nullopt;
    return free[rng_.below(free.size())];
  }

  std::uint32_t any_author(const PaperDraft& d, const std::vector<std::uint32_t>& historical) {
    std::vector<std::uint32_t> free;
    for (auto a : historical) {
      if (!contains(d.authors, a)) free.push_back(a);
    }
    if (free.empty()) {
      for (std::uint32_t a = 0; a < c_.n_authors; ++a) {
        if (!contains(d.authors, a)) free.push_back(a);
      }
    }
    return free[rng_.below(free.size())];
  }

  void fill_refs(PaperDraft& d, std::uint32_t main_topic, const std::vector<double>& cumulative) {
    const std::size_t want = std::min<std::size_t>(c_.refs_per_paper, papers_.size());
    const auto& on_topic = topic_papers_[main_topic];
    while (d.refs.size() < want) {
      std::uint32_t q;
      if (!on_topic.empty() && rng_.bernoulli(0.5)) {
        q = on_topic[rng_.below(on_topic.size())];
      } else {
        const double target = rng_.uniform() * cumulative.back();
        q = static_cast<std::uint32_t>(std::upper_bound(cumulative.begin(), cumulative.end(), target) -
                                       cumulative.begin());
        q = std::min<std::uint32_t>(q, static_cast<std::uint32_t>(papers_.size() - 1));
      }
      while (contains(d.refs, q)) q = (q + 1) % static_cast<std::uint32_t>(papers_.size());
      d.refs.push_back(q);
    }
  }

  void commit(const std::vector<PaperDraft>& drafts, std::uint32_t base) {
    for (std::uint32_t i = 0; i < drafts.size(); ++i) {
      const auto& d = drafts[i];
      const std::uint32_t pid = base + i;
      for (auto a : d.authors) {
        has_history_[a] = true;
        for (auto t : d.topics) {
          if (author_topic_[static_cast<std::size_t>(a) * c_.n_topics + t]++ == 0) {
            auto& pool = topic_authors_[t];
            pool.insert(std::lower_bound(pool.begin(), pool.end(), a), a);
          }
        }
        for (auto b : d.authors) {
          if (a != b) coauthors_[a].insert(b);
        }
      }
      for (auto t : d.topics) topic_papers_[t].push_back(pid);
      for (auto q : d.refs) ++citations_[q];
      papers_.push_back(d);
      citations_.push_back(0);
    }
  }

  template <typename C>
  static bool contains(const C& c, std::uint32_t v) {
    return std::find(c.begin(), c.end(), v) != c.end();
  }

  const SynthConfig& c_;
  KeyedRng rng_;
  std::uint32_t k_;
  std::uint32_t tpp_;
  std::vector<std::uint32_t> home_;
  std::vector<std::uint32_t> author_topic_;
  std::vector<std::set<std::uint32_t>> coauthors_;
  std::vector<bool> has_history_;
  std::vector<std::vector<std::uint32_t>> topic_authors_;
  std::vector<std::vector<std::uint32_t>> topic_papers_;
  std::vector<PaperDraft> papers_;
  std::vector<std::uint32_t> citations_;
};

}  // namespace

HeteroTemporalGraph synth_generate(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  return Generator(config, seed).run();
}

}  // namespace acnet
