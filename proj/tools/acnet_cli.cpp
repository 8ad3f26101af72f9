// acnet: command line front end for the co-authorship infosphere pipeline.

#include <acnet/gnn/checkpoint.hpp>
#include <acnet/gnn/message_graph.hpp>
#include <acnet/graph_io.hpp>
#include <acnet/pipeline.hpp>
#include <acnet/seedgraph.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace acnet;
namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kDiverged = 3 };

struct InfosphereArgs {
  std::string type{"none"};
  std::string trial;
  double p1{0.5}, p2{0.5}, p3{0.5};
  std::uint32_t f{0};
  bool explicit_params{false};
  std::uint32_t hop_limit{10};
  std::uint32_t top_n{10};
  std::uint32_t topics_m{1};
  std::uint32_t random_size{10};
};

void add_expansion_flags(CLI::App* cmd, InfosphereArgs& a) {
  cmd->add_option("--trial", a.trial, "Preset trial0..trial5")->check(CLI::IsMember({"trial0", "trial1", "trial2",
                                                                                      "trial3", "trial4", "trial5"}));
  cmd->add_option("--p1", a.p1, "Probability of following orange nodes")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--p2", a.p2, "Probability of following green nodes")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--p3", a.p3, "Probability of returning to the author")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--f", a.f, "Green nodes added per seed path (0, 2, 4 or 6)")->check(CLI::IsMember({0, 2, 4, 6}));
  cmd->add_option("--hop-limit", a.hop_limit, "Maximum seedgraph path length")->check(CLI::PositiveNumber);
}

InfosphereSpec resolve(const InfosphereArgs& a, CLI::App* cmd) {
  InfosphereSpec s;
  s.type = parse_infosphere_type(a.type);
  s.hop_limit = a.hop_limit;
  s.top_n = a.top_n;
  s.topics_m = a.topics_m;
  s.random_size = a.random_size;
  const bool custom = cmd->count("--p1") || cmd->count("--p2") || cmd->count("--p3") || cmd->count("--f");
  if (!a.trial.empty()) {
    if (a.trial == "trial0") {
      s.type = InfosphereType::Random;
      return s;
    }
    s.preset = a.trial;
    s.expansion = trial_preset(a.trial)->params;
  }
  if (custom) {
    if (cmd->count("--p1")) s.expansion.p1 = a.p1;
    if (cmd->count("--p2")) s.expansion.p2 = a.p2;
    if (cmd->count("--p3")) s.expansion.p3 = a.p3;
    if (cmd->count("--f")) s.expansion.f = a.f;
    const auto p = trial_preset(s.preset);
    if (!(s.preset == "0" && s.expansion.f == 0) && !(p && p->params == s.expansion)) s.preset = "custom";
  }
  return s;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return out;
}

std::int32_t year_or_default(const HeteroTemporalGraph& g, const std::optional<std::int32_t>& y) {
  return y ? *y : default_prediction_year(g);
}

void print_metrics(const gnn::Metrics& m) {
  nlohmann::ordered_json j;
  j["count"] = m.count;
  j["loss"] = m.loss;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["auc"] = m.auc;
  std::cout << j.dump() << '\n';
}

std::vector<ResultRow> collect_rows(const std::vector<std::string>& inputs) {
  std::vector<ResultRow> rows;
  auto add_file = [&](const fs::path& p) {
    std::istringstream lines(read_all(p));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) rows.push_back(result_from_json(line));
    }
  };
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().filename() == "result.json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      for (const auto& p : found) add_file(p);
    } else {
      add_file(in);
    }
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-authorship link prediction with simulated infospheres"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "acnet 0.1.0");

  // ingest
  std::string in_path, out_path, stats_path, format{"auto"};
  auto* ingest = app.add_subcommand("ingest", "Parse a v14 corpus into a graph binary");
  ingest->add_option("--input", in_path, "v14 JSON (array or NDJSON)")->required();
  ingest->add_option("--output", out_path, "Graph binary to write")->required();
  ingest->add_option("--stats", stats_path, "Write an ingest report (JSON)");
  ingest->add_option("--format", format, "Input framing")->check(CLI::IsMember({"auto", "array", "ndjson"}));

  // synth
  SynthConfig synth_cfg;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus graph");
  synth->add_option("--output", out_path, "Graph binary to write")->required();
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--authors", synth_cfg.n_authors);
  synth->add_option("--topics", synth_cfg.n_topics);
  synth->add_option("--first-year", synth_cfg.first_year);
  synth->add_option("--years", synth_cfg.n_years);
  synth->add_option("--papers-per-year", synth_cfg.papers_per_year);
  synth->add_option("--authors-per-paper", synth_cfg.authors_per_paper);
  synth->add_option("--topics-per-paper", synth_cfg.topics_per_paper);
  synth->add_option("--refs-per-paper", synth_cfg.refs_per_paper);
  synth->add_option("--topic-affinity", synth_cfg.topic_affinity)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--repeat-bias", synth_cfg.repeat_bias)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--rho", synth_cfg.rho, "Recommender influence")->check(CLI::Range(0.0, 1.0));

  // seedgraph
  std::string graph_path, ndjson_path;
  std::optional<std::int32_t> year;
  std::vector<std::string> author_ids;
  unsigned jobs = 1;
  InfosphereArgs inf;
  auto* seedgraph = app.add_subcommand("seedgraph", "Build per-author seedgraphs");
  seedgraph->add_option("--graph", graph_path)->required();
  seedgraph->add_option("--year", year, "Snapshot year (default: penultimate corpus year)");
  seedgraph->add_option("--author", author_ids, "Restrict to these author ids (default: all)");
  seedgraph->add_option("--output", out_path, "Binary seedgraph file");
  seedgraph->add_option("--ndjson", ndjson_path, "NDJSON dump ('-' for stdout)");
  seedgraph->add_option("--hop-limit", inf.hop_limit)->check(CLI::PositiveNumber);
  seedgraph->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

  // expand
  std::string seedgraph_path;
  auto* expand_cmd = app.add_subcommand("expand", "Expand seedgraphs into author infospheres");
  expand_cmd->add_option("--graph", graph_path)->required();
  expand_cmd->add_option("--seedgraphs", seedgraph_path)->required();
  expand_cmd->add_option("--output", out_path, "Infosphere binary");
  expand_cmd->add_option("--ndjson", ndjson_path, "Per-author exposure dump ('-' for stdout)");
  expand_cmd->add_option("--seed", seed);
  add_expansion_flags(expand_cmd, inf);

  // infosphere
  auto* infosphere = app.add_subcommand("infosphere", "Materialize an infosphere variant");
  infosphere->add_option("--graph", graph_path)->required();
  infosphere->add_option("--year", year);
  infosphere->add_option("--infosphere", inf.type)
      ->check(CLI::IsMember({"none", "author", "top-paper", "top-paper-per-topic", "random"}));
  infosphere->add_option("--top-n", inf.top_n, "Papers (per topic)");
  infosphere->add_option("--topics-m", inf.topics_m, "Topics per author");
  infosphere->add_option("--random-size", inf.random_size);
  infosphere->add_option("--output", out_path);
  infosphere->add_option("--ndjson", ndjson_path, "Per-author exposure dump ('-' for stdout)");
  infosphere->add_option("--seed", seed);
  infosphere->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  add_expansion_flags(infosphere, inf);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Build the balanced link dataset");
  dataset->add_option("--graph", graph_path)->required();
  dataset->add_option("--year", year);
  dataset->add_option("--seed", seed);
  dataset->add_option("--output", out_path, "NDJSON rows")->required();

  // train / evaluate
  std::string dataset_path, infosphere_path, checkpoint_path, history_path, split{"test"};
  double drop = 0.0;
  std::uint32_t max_neighbors = 0;
  std::string aggregation{"sum"};
  gnn::TrainConfig tc;
  auto add_model_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--graph", graph_path)->required();
    cmd->add_option("--dataset", dataset_path)->required();
    cmd->add_option("--infosphere", infosphere_path, "Infosphere binary (omit for none)");
    cmd->add_option("--drop", drop, "Fraction of exposure edges removed")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--max-neighbors", max_neighbors, "Neighbour cap per channel (0 = none)");
    cmd->add_option("--seed", seed);
  };
  auto* train_cmd = app.add_subcommand("train", "Train the link predictor");
  add_model_inputs(train_cmd);
  train_cmd->add_option("--aggregation", aggregation)->check(CLI::IsMember({"sum", "mean", "min", "max"}));
  train_cmd->add_option("--epochs", tc.epochs);
  train_cmd->add_option("--patience", tc.patience);
  train_cmd->add_option("--batch-size", tc.batch_size)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tc.learning_rate);
  train_cmd->add_option("--dim", tc.model.dim)->check(CLI::PositiveNumber);
  train_cmd->add_option("--hidden", tc.model.hidden)->check(CLI::PositiveNumber);
  train_cmd->add_option("--output", checkpoint_path, "Checkpoint to write")->required();
  train_cmd->add_option("--history", history_path, "Training history CSV");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a dataset split");
  add_model_inputs(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint_path)->required();
  eval_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));

  // run
  std::string spec_path, out_dir;
  std::vector<std::string> overrides;
  bool force = false, grid = false, quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Run the full pipeline for an experiment spec");
  run_cmd->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  run_cmd->add_option("--set", overrides, "Override a spec field, e.g. --set train.epochs=50");
  run_cmd->add_option("--out", out_dir, "Output directory (default: under $ACNET_CACHE_DIR)");
  run_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  run_cmd->add_flag("--force", force, "Recompute every stage");
  run_cmd->add_flag("--grid", grid, "Run the full comparison grid from this base spec");
  run_cmd->add_flag("--quiet", quiet, "No stage log on stderr");

  // report
  std::vector<std::string> report_inputs;
  std::string csv_path;
  auto* report_cmd = app.add_subcommand("report", "Tabulate result rows");
  report_cmd->add_option("inputs", report_inputs, "result.json files or run directories")->required();
  report_cmd->add_option("--csv", csv_path, "Also write CSV here ('-' for stdout instead of the text table)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest) {
      std::ifstream in(in_path, std::ios::binary);
      if (!in) throw DataError("cannot open " + in_path);
      auto [g, stats] = ingest_stream(in, parse_input_format(format));
      save_graph(g, fs::path(out_path));
      const std::string report = ingest_stats_json(stats);
      if (!stats_path.empty()) open_out(stats_path) << report << '\n';
      std::cerr << report << '\n';
    } else if (*synth) {
      const auto g = synth_generate(synth_cfg, seed);
      save_graph(g, fs::path(out_path));
      std::cerr << "papers=" << g.node_count(NodeType::Paper) << " authors=" << g.node_count(NodeType::Author)
                << " years=" << g.min_year() << ".." << g.max_year() << '\n';
    } else if (*seedgraph) {
      const auto g = load_graph(fs::path(graph_path));
      const std::int32_t y = year_or_default(g, year);
      const Snapshot snap(g, y), next(g, y + 1);
      std::vector<NodeRef> authors;
      if (author_ids.empty()) {
        for (std::uint32_t a = 0; a < g.node_count(NodeType::Author); ++a) {
          if (snap.contains(author(a))) authors.push_back(author(a));
        }
      } else {
        for (const auto& id : author_ids) {
          const auto a = g.find(NodeType::Author, id);
          if (!a) throw DataError("unknown author '" + id + "'");
          authors.push_back(*a);
        }
      }
      const auto sgs = build_seedgraphs(authors, snap, next, SeedgraphOptions{inf.hop_limit}, jobs);
      if (!out_path.empty()) save_seedgraphs(sgs, out_path);
      if (ndjson_path == "-") {
        write_seedgraphs_ndjson(g, sgs, std::cout);
      } else if (!ndjson_path.empty()) {
        auto out = open_out(ndjson_path);
        write_seedgraphs_ndjson(g, sgs, out);
      }
    } else if (*expand_cmd) {
      const auto g = load_graph(fs::path(graph_path));
      const auto sgs = load_seedgraphs(seedgraph_path);
      if (sgs.empty()) throw DataError("seedgraph file is empty");
      const Snapshot snap(g, sgs.front().year);
      InfosphereSpec spec = resolve(inf, expand_cmd);
      if (spec.type == InfosphereType::Random) throw std::invalid_argument("trial0 is not an expansion; use 'infosphere --infosphere=random'");
      std::vector<ColoredInfosphere> colored;
      ExpansionStats stats;
      for (const auto& sg : sgs) {
        if (sg.year != snap.year()) throw DataError("seedgraphs mix snapshot years");
        colored.push_back(expand(sg, snap, spec.expansion, seed, &stats));
      }
      const auto set = materialize(snap, colored, ExposureSource::AuthorFuture);
      if (!out_path.empty()) save_infosphere(set, out_path);
      if (ndjson_path == "-") {
        write_infosphere_ndjson(g, set, std::cout);
      } else if (!ndjson_path.empty()) {
        auto out = open_out(ndjson_path);
        write_infosphere_ndjson(g, set, out);
      }
      std::cerr << "green_added=" << stats.green_added << " budget_exhausted=" << stats.budget_exhausted
                << " author_jumps=" << stats.author_jumps << " exposure_edges=" << set.size() << '\n';
    } else if (*infosphere) {
      const auto g = load_graph(fs::path(graph_path));
      const std::int32_t y = year_or_default(g, year);
      InfosphereSpec spec = resolve(inf, infosphere);
      const auto set = build_infosphere(g, y, spec, seed, jobs);
      if (!out_path.empty()) save_infosphere(set, out_path);
      if (ndjson_path == "-") {
        write_infosphere_ndjson(g, set, std::cout);
      } else if (!ndjson_path.empty()) {
        auto out = open_out(ndjson_path);
        write_infosphere_ndjson(g, set, out);
      }
      std::cerr << "authors=" << set.per_author.size() << " exposure_edges=" << set.size() << '\n';
    } else if (*dataset) {
      const auto g = load_graph(fs::path(graph_path));
      const auto ds = build_dataset(g, year_or_default(g, year), seed);
      save_dataset(g, ds, out_path);
      std::cerr << "year=" << ds.year << " positives=" << ds.positives() << " negatives=" << ds.negatives() << '\n';
    } else if (*train_cmd || *eval_cmd) {
      const auto g = load_graph(fs::path(graph_path));
      const auto ds = load_dataset(g, dataset_path);
      validate_dataset(g, ds);
      InfosphereEdgeSet exposure{ds.year, {}};
      if (!infosphere_path.empty()) {
        exposure = load_infosphere(infosphere_path);
        if (exposure.year != ds.year) throw DataError("infosphere and dataset years differ");
      }
      exposure = drop_infosphere(exposure, drop, seed);
      const auto mg = gnn::build_message_graph(Snapshot(g, ds.year), &exposure, {max_neighbors, seed});
      if (*train_cmd) {
        tc.seed = seed;
        tc.model.aggregation = gnn::parse_aggregation(aggregation);
        try {
          auto result = gnn::train(mg, ds, tc, [](const gnn::EpochRecord& r) {
            std::cerr << "epoch " << r.epoch << " train_loss=" << r.train_loss << " val_loss=" << r.val_loss
                      << " val_acc=" << r.val_acc << '\n';
          });
          if (!history_path.empty()) gnn::save_history_csv(result.history, history_path);
          gnn::save_checkpoint({tc, std::move(result.model), std::move(result.optimizer), result.best_epoch},
                               fs::path(checkpoint_path));
        } catch (const gnn::DivergenceError& e) {
          gnn::save_checkpoint({tc, e.last_finite(), {}, 0}, fs::path(checkpoint_path + ".diverged"));
          if (!history_path.empty()) gnn::save_history_csv(e.history(), history_path);
          throw;
        }
      } else {
        const auto ck = gnn::load_checkpoint(fs::path(checkpoint_path));
        const auto rows = ds.subset(parse_split(split));
        print_metrics(gnn::evaluate(ck.model, mg, rows));
      }
    } else if (*run_cmd) {
      if (!out_dir.empty()) overrides.push_back("out_dir=\"" + out_dir + "\"");
      ExperimentSpec base = load_spec(spec_path, overrides);
      if (run_cmd->count("--jobs")) base.jobs = jobs;
      if (base.out_dir.empty()) base.out_dir = default_out_dir(base);
      const RunOptions opts{force, quiet ? nullptr : &std::cerr};
      std::vector<ExperimentSpec> specs = grid ? experiment_grid(base) : std::vector<ExperimentSpec>{base};
      std::vector<ResultRow> rows;
      for (const auto& s : specs) {
        const auto outcome = run(s, opts);
        std::cout << result_to_json(outcome.row) << '\n';
        rows.push_back(outcome.row);
      }
      if (grid) {
        open_out(base.out_dir / "report.txt") << report_text(rows);
        open_out(base.out_dir / "report.csv") << report_csv(rows);
        std::cerr << report_text(rows);
      }
    } else if (*report_cmd) {
      const auto rows = collect_rows(report_inputs);
      if (rows.empty()) throw DataError("no result rows found");
      if (csv_path == "-") {
        std::cout << report_csv(rows);
      } else {
        std::cout << report_text(rows);
        if (!csv_path.empty()) open_out(csv_path) << report_csv(rows);
      }
    }
  } catch (const StageError& e) {
    std::cerr << "acnet: " << e.what() << '\n';
    switch (e.kind()) {
      case StageError::Kind::Usage:
        return kUsage;
      case StageError::Kind::Divergence:
        return kDiverged;
      case StageError::Kind::Data:
        return kData;
      case StageError::Kind::Other:
        return kData;
    }
  } catch (const gnn::DivergenceError& e) {
    std::cerr << "acnet: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "acnet: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "acnet: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
