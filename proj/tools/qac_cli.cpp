// qac: command line front end for building indexes, embedding queries,
// fitting weights, one-shot suggestions, offline evaluation and serving.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "qac/completion_index.hpp"
#include "qac/dedup.hpp"
#include "qac/evaluation.hpp"
#include "qac/ingestion.hpp"
#include "qac/scoring.hpp"
#include "qac/server.hpp"
#include "qac/service.hpp"

namespace {

using namespace qac;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

ParseMode parse_mode_flag(bool strict) { return strict ? ParseMode::kStrict : ParseMode::kLenient; }

template <typename Result>
void report_errors(const std::string& path, const Result& result, bool strict) {
  for (const auto& e : result.errors) {
    std::cerr << path << ":" << e.line << ": " << e.message << '\n';
  }
  if (strict && !result.errors.empty()) {
    throw std::runtime_error("aborting on malformed input in '" + path + "'");
  }
}

Weights parse_weights(const std::string& text) {
  std::stringstream ss(text);
  Weights w;
  char c1 = 0, c2 = 0;
  if (!(ss >> w.atc >> c1 >> w.clicks >> c2 >> w.impressions) || c1 != ',' || c2 != ',' ||
      !(ss >> std::ws).eof()) {
    throw std::invalid_argument("weights must look like \"a,b,c\", got '" + text + "'");
  }
  return w;
}

std::vector<ScoredQuery> read_scored_queries(const std::string& path, const Weights& w,
                                             bool strict) {
  auto in = open_input(path);
  auto parsed = parse_query_stats(in, parse_mode_flag(strict));
  report_errors(path, parsed, strict);
  return score_all(parsed.stats, w);
}

EmbeddingTable read_embeddings(const std::string& path, bool strict) {
  auto in = open_input(path);
  auto loaded = load_embedding_file(in, parse_mode_flag(strict));
  report_errors(path, loaded, strict);
  if (loaded.duplicates > 0) {
    std::cerr << path << ": " << loaded.duplicates << " duplicate queries, last entry kept\n";
  }
  return make_embedding_table(loaded.entries);
}

struct DedupFlags {
  double tau = 0.92;
  std::size_t demote_rank = 20;
  std::size_t pool_size = kDefaultPoolSize;
  std::string policy = "first";
  double lambda = 0.5;

  void add_to(CLI::App* app) {
    app->add_option("--tau", tau, "Cosine similarity threshold")->capture_default_str();
    app->add_option("--demote-rank", demote_rank, "Rank the demoted block starts at")
        ->capture_default_str();
    app->add_option("--pool", pool_size, "Candidates matched per prefix")->capture_default_str();
    app->add_option("--policy", policy, "Anchor policy: all, first or window:<w>")
        ->capture_default_str();
    app->add_option("--lambda", lambda, "MMR relevance/diversity trade-off")
        ->capture_default_str();
  }

  DedupConfig config() const {
    DedupConfig cfg;
    cfg.similarity_threshold = tau;
    cfg.demote_rank = demote_rank;
    cfg.pool_size = pool_size;
    cfg.anchor = parse_anchor_spec(policy);
    cfg.mmr_lambda = lambda;
    cfg.validate();
    return cfg;
  }
};

SuggestServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query autocomplete with semantic de-boosting"};
  app.require_subcommand(1);
  bool strict = false;
  app.add_flag("--strict", strict, "Abort on the first malformed input line");

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Aggregate an event log into query stats");
  std::string events_path, out_path;
  std::int64_t day_lo = 0, day_hi = std::numeric_limits<std::int64_t>::max();
  aggregate->add_option("--events", events_path, "Event log (day TAB query TAB kind)")
      ->required();
  aggregate->add_option("--from", day_lo, "First day of the window (inclusive)");
  aggregate->add_option("--to", day_hi, "Last day of the window (inclusive)");
  aggregate->add_option("--out", out_path, "Output query stats file")->required();

  // fit-weights
  auto* fit = app.add_subcommand("fit-weights", "Fit behavioral score weights");
  FitOptions fit_options;
  bool clamp = false;
  fit->add_option("--events", events_path, "Event log")->required();
  fit->add_option("--history-days", fit_options.history_days)->capture_default_str();
  fit->add_option("--target-days", fit_options.target_days)->capture_default_str();
  fit->add_flag("--clamp-nonnegative", clamp, "Clamp negative weights to zero");

  // build-index
  auto* build = app.add_subcommand("build-index", "Build a completion index snapshot");
  std::string queries_path, weights_text = "1,0,0";
  std::size_t top_k = kDefaultTopK;
  build->add_option("--queries", queries_path, "Query stats (query TAB atc TAB clicks TAB imp)")
      ->required();
  build->add_option("--weights", weights_text, "Score weights \"a,b,c\"")->capture_default_str();
  build->add_option("--top-k", top_k, "Postings kept per trie node")->capture_default_str();
  build->add_option("--out", out_path, "Output index file")->required();

  // dedup-index
  auto* dedup_cmd = app.add_subcommand("dedup-index", "Keep only the best query per similar cluster");
  std::string embeddings_path;
  double tau = 0.92;
  dedup_cmd->add_option("--queries", queries_path, "Query stats file")->required();
  dedup_cmd->add_option("--embeddings", embeddings_path, "Embedding file")->required();
  dedup_cmd->add_option("--weights", weights_text, "Score weights \"a,b,c\"")
      ->capture_default_str();
  dedup_cmd->add_option("--tau", tau, "Cosine similarity threshold")->capture_default_str();
  dedup_cmd->add_option("--out", out_path, "Output query stats file")->required();

  // embed
  auto* embed = app.add_subcommand("embed", "Embed queries with the toy trigram encoder");
  std::size_t dim = kDefaultEmbeddingDim;
  embed->add_option("--queries", queries_path, "Query stats file")->required();
  embed->add_option("--dim", dim, "Embedding dimension")->capture_default_str();
  embed->add_option("--out", out_path, "Output embedding file")->required();

  // suggest
  auto* suggest_cmd = app.add_subcommand("suggest", "Print suggestions for one prefix as JSON");
  std::string index_path, prefix, mode_text = "dedup";
  std::size_t k = 10;
  DedupFlags dedup_flags;
  suggest_cmd->add_option("--index", index_path, "Index snapshot")->required();
  suggest_cmd->add_option("--embeddings", embeddings_path, "Embedding file")->required();
  suggest_cmd->add_option("--prefix", prefix, "Typed prefix")->required();
  suggest_cmd->add_option("--k", k, "Suggestions to return")->capture_default_str();
  suggest_cmd->add_option("--mode", mode_text, "control, dedup or mmr")->capture_default_str();
  dedup_flags.add_to(suggest_cmd);

  // eval
  auto* eval = app.add_subcommand("eval", "Replay an engagement log and report metrics");
  std::string engagements_path;
  eval->add_option("--engagements", engagements_path, "Engagement log (prefix TAB query)")
      ->required();
  eval->add_option("--index", index_path, "Index snapshot")->required();
  eval->add_option("--embeddings", embeddings_path, "Embedding file")->required();
  eval->add_option("--mode", mode_text, "control, dedup or mmr")->capture_default_str();
  eval->add_option("--k", k, "Visible suggestions")->capture_default_str();
  dedup_flags.add_to(eval);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve /suggest and /healthz over HTTP");
  std::string config_path;
  serve->add_option("--config", config_path, "Service config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*aggregate) {
      auto in = open_input(events_path);
      auto parsed = parse_event_log(in, parse_mode_flag(strict));
      report_errors(events_path, parsed, strict);
      auto out = open_output(out_path);
      write_query_stats(out, aggregate_events(parsed.events, {day_lo, day_hi}));
    } else if (*fit) {
      auto in = open_input(events_path);
      auto parsed = parse_event_log(in, parse_mode_flag(strict));
      report_errors(events_path, parsed, strict);
      fit_options.clamp_nonnegative = clamp;
      const Weights w = fit_weights(parsed.events, fit_options);
      std::cout << std::setprecision(17) << w.atc << ' ' << w.clicks << ' ' << w.impressions
                << '\n';
    } else if (*build) {
      const auto records = read_scored_queries(queries_path, parse_weights(weights_text), strict);
      const auto index = CompletionIndex::build(records, top_k);
      index.save_file(out_path);
      std::cerr << "indexed " << index.size() << " queries, " << index.node_count()
                << " trie nodes\n";
    } else if (*dedup_cmd) {
      const auto records = read_scored_queries(queries_path, parse_weights(weights_text), strict);
      const auto table = read_embeddings(embeddings_path, strict);
      const auto kept = dedup_index(records, table, tau);
      std::vector<QueryStats> stats;
      stats.reserve(kept.size());
      for (const auto& q : kept) stats.push_back(q.stats);
      auto out = open_output(out_path);
      write_query_stats(out, stats);
      std::cerr << "kept " << kept.size() << " of " << records.size() << " queries\n";
    } else if (*embed) {
      auto in = open_input(queries_path);
      auto parsed = parse_query_stats(in, parse_mode_flag(strict));
      report_errors(queries_path, parsed, strict);
      std::vector<EmbeddingFileEntry> entries;
      for (const auto& s : parsed.stats) {
        auto q = quantize(toy_embed(s.query, dim));
        std::string payload = encode_payload(q);
        entries.push_back({s.query, std::move(payload), std::move(q)});
      }
      auto out = open_output(out_path);
      write_embedding_file(out, entries);
    } else if (*suggest_cmd || *eval) {
      ServiceConfig cfg;
      cfg.index_path = index_path;
      cfg.embeddings_path = embeddings_path;
      cfg.dedup = dedup_flags.config();
      cfg.mode = parse_mode(mode_text);
      cfg.visible_k = std::min(k, cfg.dedup.pool_size);
      cfg.parsing = parse_mode_flag(strict);
      const auto service = SuggestService::load(cfg);
      if (*suggest_cmd) {
        std::cout << to_json(service.suggest(prefix, k, cfg.mode)) << '\n';
      } else {
        auto in = open_input(engagements_path);
        auto parsed = parse_engagement_log(in, parse_mode_flag(strict));
        report_errors(engagements_path, parsed, strict);
        const auto report = evaluate(parsed.events, service.as_suggest_fn(cfg.mode, k), k,
                                     service.embeddings(), cfg.dedup.similarity_threshold);
        std::cout << to_json(report) << '\n';
      }
    } else if (*serve) {
      const auto cfg = ServiceConfig::from_file(config_path);
      SuggestServer server(SuggestService::load(cfg));
      const int port = server.bind(parse_listen_address(cfg.listen));
      std::cerr << "serving on " << parse_listen_address(cfg.listen).host << ":" << port << '\n';
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      server.run();
      g_server = nullptr;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
