#include <acnet/gnn/checkpoint.hpp>
#include <acnet/gnn/message_graph.hpp>
#include <acnet/graph_io.hpp>
#include <acnet/pipeline.hpp>
#include <acnet/rng.hpp>
#include <acnet/seedgraph.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace acnet {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(InfosphereType t) noexcept {
  switch (t) {
    case InfosphereType::None:
      return "none";
    case InfosphereType::Author:
      return "author";
    case InfosphereType::TopPaper:
      return "top-paper";
    case InfosphereType::TopPaperPerTopic:
      return "top-paper-per-topic";
    case InfosphereType::Random:
      return "random";
  }
  return "?";
}

InfosphereType parse_infosphere_type(std::string_view s) {
  for (auto t : {InfosphereType::None, InfosphereType::Author, InfosphereType::TopPaper,
                 InfosphereType::TopPaperPerTopic, InfosphereType::Random}) {
    if (s == to_string(t)) return t;
  }
  throw std::invalid_argument("unknown infosphere type '" + std::string(s) + "'");
}

std::string InfosphereSpec::params_label() const {
  switch (type) {
    case InfosphereType::None:
      return "-";
    case InfosphereType::Author:
      if (preset != "custom") return preset;
      {
        char buf[96];
        std::snprintf(buf, sizeof buf, "p1=%g;p2=%g;p3=%g;f=%u", expansion.p1, expansion.p2, expansion.p3,
                      expansion.f);
        return buf;
      }
    case InfosphereType::TopPaper:
      return std::to_string(top_n);
    case InfosphereType::TopPaperPerTopic:
      return "[" + std::to_string(topics_m) + "," + std::to_string(top_n) + "]";
    case InfosphereType::Random:
      return std::to_string(random_size);
  }
  return "?";
}

void InfosphereSpec::validate() const {
  if (type == InfosphereType::Author) {
    expansion.validate();
    if (hop_limit == 0) throw std::invalid_argument("hop limit must be positive");
  }
}

std::int32_t default_prediction_year(const HeteroTemporalGraph& g) {
  if (g.node_count(NodeType::Paper) == 0) throw DataError("corpus has no papers");
  if (g.max_year() <= g.min_year()) throw DataError("corpus spans a single year; nothing to predict");
  return g.max_year() - 1;
}

InfosphereEdgeSet build_infosphere(const HeteroTemporalGraph& g, std::int32_t year, const InfosphereSpec& spec,
                                   std::uint64_t seed, unsigned jobs, ExpansionStats* expansion_stats) {
  spec.validate();
  const Snapshot snap(g, year);
  std::vector<NodeRef> authors;
  for (std::uint32_t a = 0; a < g.node_count(NodeType::Author); ++a) {
    if (snap.contains(author(a))) authors.push_back(author(a));
  }

  switch (spec.type) {
    case InfosphereType::None:
      return {year, {}};
    case InfosphereType::Author: {
      const Snapshot next(g, year + 1);
      const auto sgs = build_seedgraphs(authors, snap, next, SeedgraphOptions{spec.hop_limit}, jobs);
      std::vector<ColoredInfosphere> colored(sgs.size());
      std::vector<ExpansionStats> stats(sgs.size());
      parallel_for(sgs.size(), jobs, [&](std::size_t i) { colored[i] = expand(sgs[i], snap, spec.expansion, seed, &stats[i]); });
      if (expansion_stats) {
        for (const auto& s : stats) expansion_stats->merge(s);
      }
      return materialize(snap, colored, ExposureSource::AuthorFuture);
    }
    case InfosphereType::Random: {
      std::vector<ColoredInfosphere> colored(authors.size());
      parallel_for(authors.size(), jobs,
                   [&](std::size_t i) { colored[i] = random_infosphere(snap, authors[i], spec.random_size, seed); });
      return materialize(snap, colored, ExposureSource::Random);
    }
    case InfosphereType::TopPaper:
    case InfosphereType::TopPaperPerTopic: {
      const auto counts = citation_counts(snap);
      std::vector<std::pair<NodeRef, std::vector<NodeRef>>> selections(authors.size());
      const auto global = spec.type == InfosphereType::TopPaper ? top_papers(snap, counts, spec.top_n)
                                                               : std::vector<NodeRef>{};
      parallel_for(authors.size(), jobs, [&](std::size_t i) {
        selections[i].first = authors[i];
        selections[i].second = spec.type == InfosphereType::TopPaper
                                   ? global
                                   : top_papers_per_topic(snap, counts, authors[i], spec.topics_m, spec.top_n);
      });
      return materialize(snap, selections,
                         spec.type == InfosphereType::TopPaper ? ExposureSource::TopPaper
                                                                : ExposureSource::TopPaperPerTopic);
    }
  }
  return {year, {}};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<char> buf(1 << 16);
  std::uint64_t h = fnv1a64("");
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

// ---- spec (de)serialization ----

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw std::invalid_argument("unknown key '" + k + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ordered_json synth_json(const SynthConfig& c) {
  ordered_json j;
  j["n_authors"] = c.n_authors;
  j["n_topics"] = c.n_topics;
  j["first_year"] = c.first_year;
  j["n_years"] = c.n_years;
  j["papers_per_year"] = c.papers_per_year;
  j["authors_per_paper"] = c.authors_per_paper;
  j["topics_per_paper"] = c.topics_per_paper;
  j["refs_per_paper"] = c.refs_per_paper;
  j["topic_affinity"] = c.topic_affinity;
  j["repeat_bias"] = c.repeat_bias;
  j["rho"] = c.rho;
  return j;
}

SynthConfig synth_from_json(const json& j) {
  check_keys(j,
             {"n_authors", "n_topics", "first_year", "n_years", "papers_per_year", "authors_per_paper",
              "topics_per_paper", "refs_per_paper", "topic_affinity", "repeat_bias", "rho"},
             "corpus.synth");
  SynthConfig c;
  read_opt(j, "n_authors", c.n_authors);
  read_opt(j, "n_topics", c.n_topics);
  read_opt(j, "first_year", c.first_year);
  read_opt(j, "n_years", c.n_years);
  read_opt(j, "papers_per_year", c.papers_per_year);
  read_opt(j, "authors_per_paper", c.authors_per_paper);
  read_opt(j, "topics_per_paper", c.topics_per_paper);
  read_opt(j, "refs_per_paper", c.refs_per_paper);
  read_opt(j, "topic_affinity", c.topic_affinity);
  read_opt(j, "repeat_bias", c.repeat_bias);
  read_opt(j, "rho", c.rho);
  return c;
}

std::string_view format_name(InputFormat f) {
  switch (f) {
    case InputFormat::Auto:
      return "auto";
    case InputFormat::Array:
      return "array";
    case InputFormat::Ndjson:
      return "ndjson";
  }
  return "auto";
}

ordered_json infosphere_json(const InfosphereSpec& s) {
  ordered_json j;
  j["type"] = std::string(to_string(s.type));
  j["preset"] = s.preset;
  j["p1"] = s.expansion.p1;
  j["p2"] = s.expansion.p2;
  j["p3"] = s.expansion.p3;
  j["f"] = s.expansion.f;
  j["step_budget_factor"] = s.expansion.step_budget_factor;
  j["hop_limit"] = s.hop_limit;
  j["top_n"] = s.top_n;
  j["topics_m"] = s.topics_m;
  j["random_size"] = s.random_size;
  return j;
}

ordered_json train_json(const gnn::TrainConfig& t) {
  ordered_json j;
  j["epochs"] = t.epochs;
  j["patience"] = t.patience;
  j["batch_size"] = t.batch_size;
  j["learning_rate"] = t.learning_rate;
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["epsilon"] = t.epsilon;
  j["dim"] = t.model.dim;
  j["hidden"] = t.model.hidden;
  return j;
}

void apply_override(json& root, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override must be key=value: '" + item + "'");
  const std::string key = item.substr(0, eq);
  const std::string raw = item.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw std::invalid_argument("malformed override key '" + key + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace

ExperimentSpec parse_spec(std::string_view json_text, const std::vector<std::string>& overrides) {
  json root = json_text.find_first_not_of(" \t\r\n") == std::string_view::npos
                  ? json::object()
                  : json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (root.is_discarded()) throw std::invalid_argument("experiment spec is not valid JSON");
  for (const auto& o : overrides) apply_override(root, o);

  ExperimentSpec spec;
  try {
    check_keys(root,
               {"corpus", "year", "infosphere", "drop", "aggregation", "train", "max_neighbors", "seed", "out_dir",
                "jobs", "dump_infosphere"},
               "spec");
    read_opt(root, "seed", spec.seed);
    if (root.contains("corpus")) {
      const json& c = root.at("corpus");
      check_keys(c, {"input", "format", "synth", "synth_seed"}, "corpus");
      if (c.contains("input") && !c.at("input").is_null()) spec.corpus.input = c.at("input").get<std::string>();
      if (c.contains("format")) spec.corpus.format = parse_input_format(c.at("format").get<std::string>());
      if (c.contains("synth") && !c.at("synth").is_null()) spec.corpus.synth = synth_from_json(c.at("synth"));
      if (c.contains("synth_seed") && !c.at("synth_seed").is_null())
        spec.corpus.synth_seed = c.at("synth_seed").get<std::uint64_t>();
    }
    if (root.contains("year") && !root.at("year").is_null()) spec.year = root.at("year").get<std::int32_t>();
    if (root.contains("infosphere")) {
      const json& i = root.at("infosphere");
      check_keys(i,
                 {"type", "preset", "p1", "p2", "p3", "f", "step_budget_factor", "hop_limit", "top_n", "topics_m",
                  "random_size"},
                 "infosphere");
      InfosphereSpec& s = spec.infosphere;
      if (i.contains("type")) s.type = parse_infosphere_type(i.at("type").get<std::string>());
      read_opt(i, "preset", s.preset);
      if (s.preset == "trial0") {
        s.type = InfosphereType::Random;
      } else if (s.preset != "0" && s.preset != "custom") {
        const auto p = trial_preset(s.preset);
        if (!p) throw std::invalid_argument("unknown trial preset '" + s.preset + "'");
        s.expansion = p->params;
      }
      const bool explicit_params = i.contains("p1") || i.contains("p2") || i.contains("p3") || i.contains("f");
      read_opt(i, "p1", s.expansion.p1);
      read_opt(i, "p2", s.expansion.p2);
      read_opt(i, "p3", s.expansion.p3);
      read_opt(i, "f", s.expansion.f);
      read_opt(i, "step_budget_factor", s.expansion.step_budget_factor);
      if (explicit_params) {
        const auto p = trial_preset(s.preset);
        const bool matches = s.preset == "0" ? s.expansion.f == 0 : (p && p->params == s.expansion);
        if (!matches) s.preset = "custom";
      }
      read_opt(i, "hop_limit", s.hop_limit);
      read_opt(i, "top_n", s.top_n);
      read_opt(i, "topics_m", s.topics_m);
      read_opt(i, "random_size", s.random_size);
    }
    read_opt(root, "drop", spec.drop);
    if (root.contains("train")) {
      const json& t = root.at("train");
      check_keys(t, {"epochs", "patience", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "dim", "hidden"},
                 "train");
      read_opt(t, "epochs", spec.train.epochs);
      read_opt(t, "patience", spec.train.patience);
      read_opt(t, "batch_size", spec.train.batch_size);
      read_opt(t, "learning_rate", spec.train.learning_rate);
      read_opt(t, "beta1", spec.train.beta1);
      read_opt(t, "beta2", spec.train.beta2);
      read_opt(t, "epsilon", spec.train.epsilon);
      read_opt(t, "dim", spec.train.model.dim);
      read_opt(t, "hidden", spec.train.model.hidden);
    }
    if (root.contains("aggregation"))
      spec.train.model.aggregation = gnn::parse_aggregation(root.at("aggregation").get<std::string>());
    read_opt(root, "max_neighbors", spec.max_neighbors);
    if (root.contains("out_dir")) spec.out_dir = root.at("out_dir").get<std::string>();
    read_opt(root, "jobs", spec.jobs);
    read_opt(root, "dump_infosphere", spec.dump_infosphere);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("experiment spec: ") + e.what());
  }
  spec.train.seed = spec.seed;
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str(), overrides);
}

namespace {

ordered_json spec_json(const ExperimentSpec& spec, bool with_out_dir) {
  ordered_json j;
  ordered_json c;
  c["input"] = spec.corpus.input ? ordered_json(spec.corpus.input->string()) : ordered_json(nullptr);
  c["format"] = std::string(format_name(spec.corpus.format));
  c["synth"] = spec.corpus.synth ? synth_json(*spec.corpus.synth) : ordered_json(nullptr);
  c["synth_seed"] = spec.corpus.synth_seed.value_or(spec.seed);
  j["corpus"] = c;
  j["year"] = spec.year ? ordered_json(*spec.year) : ordered_json(nullptr);
  j["infosphere"] = infosphere_json(spec.infosphere);
  j["drop"] = spec.drop;
  j["aggregation"] = std::string(gnn::to_string(spec.train.model.aggregation));
  j["train"] = train_json(spec.train);
  j["max_neighbors"] = spec.max_neighbors;
  j["seed"] = spec.seed;
  if (with_out_dir) {
    j["out_dir"] = spec.out_dir.string();
    j["jobs"] = spec.jobs;
  }
  j["dump_infosphere"] = spec.dump_infosphere;
  return j;
}

}  // namespace

std::string spec_to_json(const ExperimentSpec& spec) { return spec_json(spec, true).dump(2); }

void ExperimentSpec::validate() const {
  if (corpus.input.has_value() == corpus.synth.has_value())
    throw std::invalid_argument("spec needs exactly one of corpus.input and corpus.synth");
  if (corpus.input && !std::filesystem::exists(*corpus.input))
    throw DataError("corpus file does not exist: " + corpus.input->string());
  if (corpus.synth) corpus.synth->validate();
  infosphere.validate();
  if (!(drop >= 0.0 && drop <= 1.0)) throw std::invalid_argument("drop must lie in [0, 1]");
  train.validate();
  if (jobs == 0) throw std::invalid_argument("jobs must be at least 1");
}

std::filesystem::path default_out_dir(const ExperimentSpec& spec) {
  std::filesystem::path root;
  if (const char* env = std::getenv("ACNET_CACHE_DIR"); env && *env) {
    root = env;
  } else if (const char* home = std::getenv("HOME"); home && *home) {
    root = std::filesystem::path(home) / ".cache" / "acnet";
  } else {
    root = ".acnet-cache";
  }
  return root / ("run-" + hex64(fnv1a64(spec_json(spec, false).dump())));
}

// ---- results and report ----

bool ResultRow::same_outcome(const ResultRow& o) const {
  return infosphere == o.infosphere && params == o.params && drop == o.drop && accuracy == o.accuracy &&
         aggregation == o.aggregation && encoder == o.encoder && seed == o.seed && precision == o.precision &&
         recall == o.recall && auc == o.auc && test_pairs == o.test_pairs && best_epoch == o.best_epoch &&
         epochs_run == o.epochs_run;
}

std::string result_to_json(const ResultRow& r) {
  ordered_json j;
  j["infosphere"] = r.infosphere;
  j["params"] = r.params;
  j["drop"] = r.drop;
  j["accuracy"] = r.accuracy;
  j["aggregation"] = r.aggregation;
  j["encoder"] = r.encoder;
  j["seed"] = r.seed;
  j["runtime_s"] = r.runtime_s;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["auc"] = r.auc;
  j["test_pairs"] = r.test_pairs;
  j["best_epoch"] = r.best_epoch;
  j["epochs_run"] = r.epochs_run;
  return j.dump();
}

ResultRow result_from_json(std::string_view text) {
  const json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("result row is not a JSON object");
  ResultRow r;
  try {
    r.infosphere = j.at("infosphere").get<std::string>();
    r.params = j.at("params").get<std::string>();
    r.drop = j.at("drop").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.aggregation = j.at("aggregation").get<std::string>();
    read_opt(j, "encoder", r.encoder);
    read_opt(j, "seed", r.seed);
    read_opt(j, "runtime_s", r.runtime_s);
    read_opt(j, "precision", r.precision);
    read_opt(j, "recall", r.recall);
    read_opt(j, "auc", r.auc);
    read_opt(j, "test_pairs", r.test_pairs);
    read_opt(j, "best_epoch", r.best_epoch);
    read_opt(j, "epochs_run", r.epochs_run);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed result row: ") + e.what());
  }
  if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) throw DataError("result accuracy outside [0, 1]");
  return r;
}

namespace {

int type_rank(const std::string& t) {
  static const char* order[] = {"none", "author", "top-paper", "top-paper-per-topic", "random"};
  for (int i = 0; i < 5; ++i) {
    if (t == order[i]) return i;
  }
  return 5;
}

int aggregation_rank(const std::string& a) {
  static const char* order[] = {"max", "mean", "min", "sum"};
  for (int i = 0; i < 4; ++i) {
    if (a == order[i]) return i;
  }
  return 4;
}

std::vector<double> numbers_in(const std::string& s) {
  std::vector<double> out;
  for (std::size_t i = 0; i < s.size();) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      std::size_t used = 0;
      out.push_back(std::stod(s.substr(i), &used));
      i += used;
    } else {
      ++i;
    }
  }
  return out;
}

std::string drop_label(double d) {
  if (d == 0.0) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g%%", d * 100.0);
  return buf;
}

}  // namespace

std::vector<ResultRow> sort_for_report(std::vector<ResultRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    const auto ka = std::make_tuple(type_rank(a.infosphere), numbers_in(a.params), a.params, a.drop,
                                    aggregation_rank(a.aggregation), a.encoder, a.seed);
    const auto kb = std::make_tuple(type_rank(b.infosphere), numbers_in(b.params), b.params, b.drop,
                                    aggregation_rank(b.aggregation), b.encoder, b.seed);
    return ka < kb;
  });
  return rows;
}

std::string report_text(std::vector<ResultRow> rows) {
  rows = sort_for_report(std::move(rows));
  const char* headers[] = {"Inf. Type", "Inf. Params", "Inf. Dropped", "Accuracy", "Aggregation", "GNN Type", "Seed"};
  std::vector<std::array<std::string, 7>> cells;
  for (const auto& r : rows) {
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.3f", r.accuracy);
    cells.push_back({r.infosphere == "none" ? "-" : r.infosphere, r.params, drop_label(r.drop), acc, r.aggregation,
                     r.encoder, std::to_string(r.seed)});
  }
  std::array<std::size_t, 7> width{};
  for (std::size_t c = 0; c < 7; ++c) {
    width[c] = std::string_view(headers[c]).size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::string rule = "+";
  for (auto w : width) rule += std::string(w + 2, '-') + "+";
  rule += "\n";
  auto line = [&](auto get) {
    std::string s = "|";
    for (std::size_t c = 0; c < 7; ++c) {
      const std::string v = get(c);
      s += " " + v + std::string(width[c] - v.size(), ' ') + " |";
    }
    return s + "\n";
  };
  std::string out = rule + line([&](std::size_t c) { return std::string(headers[c]); }) + rule;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0 && (rows[i].infosphere != rows[i - 1].infosphere || rows[i].params != rows[i - 1].params ||
                  (rows[i].drop > 0) != (rows[i - 1].drop > 0))) {
      out += rule;
    }
    out += line([&](std::size_t c) { return cells[i][c]; });
  }
  return out + rule;
}

std::string report_csv(std::vector<ResultRow> rows) {
  rows = sort_for_report(std::move(rows));
  std::string out = "infosphere,params,drop,accuracy,aggregation,encoder,seed,runtime_s,precision,recall,auc,test_pairs\n";
  for (const auto& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, ",%g,%.6f,%s,%s,%llu,%.3f,%.6f,%.6f,%.6f,%llu\n", r.drop, r.accuracy,
                  r.aggregation.c_str(), r.encoder.c_str(), static_cast<unsigned long long>(r.seed), r.runtime_s,
                  r.precision, r.recall, r.auc, static_cast<unsigned long long>(r.test_pairs));
    const bool quote = r.params.find_first_of(",\"") != std::string::npos;
    out += r.infosphere + "," + (quote ? "\"" + r.params + "\"" : r.params) + buf;
  }
  return out;
}

std::vector<ExperimentSpec> experiment_grid(const ExperimentSpec& base) {
  std::vector<ExperimentSpec> out;
  const gnn::Aggregation all[] = {gnn::Aggregation::Max, gnn::Aggregation::Mean, gnn::Aggregation::Min,
                                  gnn::Aggregation::Sum};
  auto add = [&](InfosphereSpec inf, double drop, gnn::Aggregation agg) {
    ExperimentSpec s = base;
    s.infosphere = inf;
    s.drop = drop;
    s.train.model.aggregation = agg;
    std::string slug = std::string(to_string(inf.type));
    if (inf.type != InfosphereType::None) slug += "-" + inf.params_label();
    if (drop > 0) slug += "-drop" + std::to_string(static_cast<int>(std::lround(drop * 100)));
    slug += "-" + std::string(gnn::to_string(agg));
    std::erase_if(slug, [](char ch) { return ch == '[' || ch == ']'; });
    std::replace(slug.begin(), slug.end(), ',', 'x');
    s.out_dir = base.out_dir / slug;
    out.push_back(std::move(s));
  };

  InfosphereSpec none;
  for (auto a : all) add(none, 0, a);

  InfosphereSpec author;
  author.type = InfosphereType::Author;
  author.preset = "0";
  author.expansion.f = 0;
  for (auto a : all) add(author, 0, a);
  InfosphereSpec author5 = author;
  author5.preset = "trial5";
  author5.expansion = trial_preset("trial5")->params;
  for (auto a : all) add(author5, 0, a);
  for (double d : {0.10, 0.25, 0.50, 0.75, 0.90, 1.00}) add(author, d, gnn::Aggregation::Sum);

  for (std::uint32_t n : {10u, 50u}) {
    InfosphereSpec top;
    top.type = InfosphereType::TopPaper;
    top.top_n = n;
    for (auto a : all) add(top, 0, a);
  }
  const std::pair<std::uint32_t, std::uint32_t> topic_grid[] = {{1, 10}, {1, 50}, {2, 5}, {5, 10},
                                                                 {10, 1}, {10, 5}, {50, 1}};
  for (const auto& [m, n] : topic_grid) {
    InfosphereSpec tpt;
    tpt.type = InfosphereType::TopPaperPerTopic;
    tpt.topics_m = m;
    tpt.top_n = n;
    if (m == 1) {
      for (auto a : all) add(tpt, 0, a);
    } else {
      add(tpt, 0, gnn::Aggregation::Sum);
    }
  }
  return out;
}

// ---- run ----

std::pair<HeteroTemporalGraph, std::optional<IngestStats>> load_corpus(const CorpusSpec& corpus) {
  if (corpus.synth) {
    return {synth_generate(*corpus.synth, corpus.synth_seed.value_or(0)), std::nullopt};
  }
  if (!corpus.input) throw std::invalid_argument("corpus has neither an input file nor a synthetic config");
  std::ifstream in(*corpus.input, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + corpus.input->string());
  char magic[4] = {};
  in.read(magic, 4);
  const bool binary = in.gcount() == 4 && std::string_view(magic, 4) == "ANPG";
  in.clear();
  in.seekg(0);
  if (binary) return {load_graph(in), std::nullopt};
  auto [g, stats] = ingest_stream(in, corpus.format);
  return {std::move(g), stats};
}

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  out << s;
}

std::uint64_t key_of(std::initializer_list<std::string> parts) {
  std::uint64_t h = fnv1a64("acnet-stage-v1");
  for (const auto& p : parts) h = fnv1a64(p, mix64(h));
  return h;
}

class StageRunner {
 public:
  StageRunner(const std::filesystem::path& dir, const RunOptions& opt, RunOutcome& outcome)
      : dir_(dir), opt_(opt), outcome_(outcome) {}

  bool fresh(const std::string& stage, std::uint64_t key, const std::filesystem::path& artifact) const {
    if (opt_.force) return false;
    const auto hash_path = dir_ / (stage + ".hash");
    if (!std::filesystem::exists(hash_path) || !std::filesystem::exists(dir_ / artifact)) return false;
    std::string stored = read_text(hash_path);
    while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
    return stored == hex64(key);
  }

  void done(const std::string& stage, std::uint64_t key, bool skipped) {
    if (skipped) {
      outcome_.skipped.push_back(stage);
      log(stage + ": up to date");
    } else {
      write_text(dir_ / (stage + ".hash"), hex64(key) + "\n");
      outcome_.executed.push_back(stage);
    }
  }

  void log(const std::string& msg) const {
    if (opt_.log) *opt_.log << "[acnet] " << msg << '\n';
  }

  template <typename Fn>
  auto guarded(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const gnn::DivergenceError& e) {
      throw StageError(stage, StageError::Kind::Divergence, e.what());
    } catch (const DataError& e) {
      throw StageError(stage, StageError::Kind::Data, e.what());
    } catch (const std::invalid_argument& e) {
      throw StageError(stage, StageError::Kind::Usage, e.what());
    } catch (const std::exception& e) {
      throw StageError(stage, StageError::Kind::Other, e.what());
    }
  }

 private:
  std::filesystem::path dir_;
  const RunOptions& opt_;
  RunOutcome& outcome_;
};

}  // namespace

RunOutcome run(const ExperimentSpec& spec_in, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec spec = spec_in;
  spec.train.seed = spec.seed;
  if (spec.corpus.synth && !spec.corpus.synth_seed) spec.corpus.synth_seed = spec.seed;
  RunOutcome outcome;
  StageRunner sr(spec.out_dir, options, outcome);
  sr.guarded("config", [&] {
    spec.validate();
    if (spec.out_dir.empty()) spec.out_dir = default_out_dir(spec);
    std::filesystem::create_directories(spec.out_dir);
    write_text(spec.out_dir / "spec.json", spec_to_json(spec) + "\n");
    return 0;
  });
  const auto& dir = spec.out_dir;
  StageRunner stages(dir, options, outcome);

  // Keys chain every upstream input, so any change invalidates all later stages.
  const std::uint64_t graph_key = stages.guarded("graph", [&] {
    if (spec.corpus.synth)
      return key_of({"synth", synth_json(*spec.corpus.synth).dump(), std::to_string(*spec.corpus.synth_seed)});
    return key_of({"input", hex64(hash_file(*spec.corpus.input)), std::string(format_name(spec.corpus.format))});
  });

  HeteroTemporalGraph g = stages.guarded("graph", [&] {
    const bool skip = stages.fresh("graph", graph_key, "graph.anpg");
    if (skip) {
      stages.done("graph", graph_key, true);
      return load_graph(dir / "graph.anpg");
    }
    stages.log("graph: building");
    auto [graph, stats] = load_corpus(spec.corpus);
    save_graph(graph, dir / "graph.anpg");
    if (stats) write_text(dir / "ingest_stats.json", ingest_stats_json(*stats) + "\n");
    stages.done("graph", graph_key, false);
    return std::move(graph);
  });

  const std::int32_t year = stages.guarded("dataset", [&] {
    const std::int32_t y = spec.year.value_or(default_prediction_year(g));
    if (y < g.min_year() || y >= g.max_year())
      throw DataError("prediction year " + std::to_string(y) + " needs papers in year " + std::to_string(y + 1));
    return y;
  });

  const std::uint64_t dataset_key = key_of({hex64(graph_key), std::to_string(year), std::to_string(spec.seed)});
  const LinkDataset ds = stages.guarded("dataset", [&] {
    if (stages.fresh("dataset", dataset_key, "dataset.ndjson")) {
      auto loaded = load_dataset(g, dir / "dataset.ndjson");
      validate_dataset(g, loaded);
      stages.done("dataset", dataset_key, true);
      return loaded;
    }
    stages.log("dataset: sampling pairs for year " + std::to_string(year + 1));
    auto built = build_dataset(g, year, spec.seed);
    if (built.examples.empty()) throw DataError("no new co-author pairs in year " + std::to_string(year + 1));
    save_dataset(g, built, dir / "dataset.ndjson");
    stages.done("dataset", dataset_key, false);
    return built;
  });

  const std::uint64_t infosphere_key =
      key_of({hex64(graph_key), std::to_string(year), infosphere_json(spec.infosphere).dump(), std::to_string(spec.seed)});
  const InfosphereEdgeSet infosphere = stages.guarded("infosphere", [&] {
    if (stages.fresh("infosphere", infosphere_key, "infosphere.anpi")) {
      stages.done("infosphere", infosphere_key, true);
      return load_infosphere(dir / "infosphere.anpi");
    }
    stages.log("infosphere: " + std::string(to_string(spec.infosphere.type)) + " " + spec.infosphere.params_label());
    ExpansionStats xs;
    auto set = build_infosphere(g, year, spec.infosphere, spec.seed, spec.jobs, &xs);
    save_infosphere(set, dir / "infosphere.anpi");
    if (spec.dump_infosphere) {
      std::ofstream out(dir / "infosphere.ndjson", std::ios::trunc);
      write_infosphere_ndjson(g, set, out);
    }
    stages.done("infosphere", infosphere_key, false);
    return set;
  });

  char drop_buf[40];
  std::snprintf(drop_buf, sizeof drop_buf, "%.17g", spec.drop);
  const std::uint64_t train_key = key_of({hex64(dataset_key), hex64(infosphere_key), drop_buf,
                                          train_json(spec.train).dump(),
                                          std::string(gnn::to_string(spec.train.model.aggregation)),
                                          std::to_string(spec.max_neighbors), std::to_string(spec.seed)});
  const std::uint64_t eval_key = key_of({hex64(train_key), "test"});

  if (stages.fresh("train", train_key, "model.anpm") && stages.fresh("evaluate", eval_key, "result.json")) {
    stages.done("train", train_key, true);
    stages.done("evaluate", eval_key, true);
    outcome.row = stages.guarded("evaluate", [&] { return result_from_json(read_text(dir / "result.json")); });
    return outcome;
  }

  const Snapshot snap(g, year);
  const InfosphereEdgeSet exposure = drop_infosphere(infosphere, spec.drop, spec.seed);
  const gnn::MessageGraph mg = stages.guarded("train", [&] {
    return gnn::build_message_graph(snap, &exposure, {spec.max_neighbors, spec.seed});
  });

  gnn::Checkpoint ck = stages.guarded("train", [&] {
    if (stages.fresh("train", train_key, "model.anpm")) {
      stages.done("train", train_key, true);
      return gnn::load_checkpoint(dir / "model.anpm");
    }
    stages.log("train: " + std::to_string(ds.examples.size()) + " pairs, " + std::to_string(exposure.size()) +
               " exposure edges");
    try {
      auto result = gnn::train(mg, ds, spec.train);
      gnn::save_history_csv(result.history, dir / "history.csv");
      gnn::Checkpoint c{spec.train, std::move(result.model), std::move(result.optimizer), result.best_epoch};
      gnn::save_checkpoint(c, dir / "model.anpm");
      stages.done("train", train_key, false);
      return c;
    } catch (const gnn::DivergenceError& e) {
      gnn::save_checkpoint({spec.train, e.last_finite(), {}, 0}, dir / "model.diverged.anpm");
      gnn::save_history_csv(e.history(), dir / "history.csv");
      throw;
    }
  });

  outcome.row = stages.guarded("evaluate", [&] {
    const auto test = ds.subset(Split::Test);
    if (test.empty()) throw DataError("test split is empty");
    const auto m = gnn::evaluate(ck.model, mg, test);
    ResultRow r;
    r.infosphere = std::string(to_string(spec.infosphere.type));
    r.params = spec.infosphere.params_label();
    r.drop = spec.drop;
    r.accuracy = m.accuracy;
    r.aggregation = std::string(gnn::to_string(spec.train.model.aggregation));
    r.seed = spec.seed;
    r.precision = m.precision;
    r.recall = m.recall;
    r.auc = m.auc;
    r.test_pairs = m.count;
    r.best_epoch = ck.best_epoch;
    if (std::filesystem::exists(dir / "history.csv")) {
      std::ifstream in(dir / "history.csv");
      r.epochs_run = static_cast<std::uint32_t>(gnn::read_history_csv(in).size());
    }
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "result.json", result_to_json(r) + "\n");
    stages.done("evaluate", eval_key, false);
    return r;
  });
  return outcome;
}

}  // namespace acnet
