#include "qac/service.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qac/normalize.hpp"

namespace qac {

using nlohmann::json;

const char* to_string(SuggestMode mode) {
  switch (mode) {
    case SuggestMode::kControl: return "control";
    case SuggestMode::kDedup: return "dedup";
    case SuggestMode::kMmr: return "mmr";
  }
  return "?";
}

SuggestMode parse_mode(std::string_view text) {
  if (text == "control") return SuggestMode::kControl;
  if (text == "dedup") return SuggestMode::kDedup;
  if (text == "mmr") return SuggestMode::kMmr;
  throw std::invalid_argument("unknown mode '" + std::string(text) +
                              "' (expected control, dedup or mmr)");
}

void ServiceConfig::validate() const {
  dedup.validate();
  if (visible_k == 0) throw std::invalid_argument("visible_k must be positive");
  if (visible_k > dedup.pool_size) {
    throw std::invalid_argument("visible_k (" + std::to_string(visible_k) +
                                ") exceeds pool_size (" + std::to_string(dedup.pool_size) + ")");
  }
}

ServiceConfig ServiceConfig::from_json(std::string_view json_text) {
  const json j = json::parse(json_text);
  if (!j.is_object()) throw std::invalid_argument("service config must be a JSON object");
  ServiceConfig cfg;
  cfg.index_path = j.value("index", cfg.index_path);
  cfg.embeddings_path = j.value("embeddings", cfg.embeddings_path);
  if (j.contains("dedup")) {
    const json& d = j.at("dedup");
    cfg.dedup.similarity_threshold =
        d.value("similarity_threshold", cfg.dedup.similarity_threshold);
    cfg.dedup.demote_rank = d.value("demote_rank", cfg.dedup.demote_rank);
    cfg.dedup.pool_size = d.value("pool_size", cfg.dedup.pool_size);
    if (d.contains("anchor_policy")) {
      cfg.dedup.anchor = parse_anchor_spec(d.at("anchor_policy").get<std::string>());
    }
    cfg.dedup.mmr_lambda = d.value("mmr_lambda", cfg.dedup.mmr_lambda);
  }
  cfg.visible_k = j.value("visible_k", cfg.visible_k);
  if (j.contains("mode")) cfg.mode = parse_mode(j.at("mode").get<std::string>());
  cfg.listen = j.value("listen", cfg.listen);
  if (j.value("strict", false)) cfg.parsing = ParseMode::kStrict;

  if (const char* env = std::getenv("QAC_LISTEN"); env != nullptr && *env != '\0') {
    cfg.listen = env;
  }
  cfg.validate();
  return cfg;
}

ServiceConfig ServiceConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string ServiceConfig::to_json() const {
  nlohmann::ordered_json j;
  j["index"] = index_path;
  j["embeddings"] = embeddings_path;
  j["dedup"] = {
      {"similarity_threshold", dedup.similarity_threshold},
      {"demote_rank", dedup.demote_rank},
      {"pool_size", dedup.pool_size},
      {"anchor_policy", qac::to_string(dedup.anchor)},
      {"mmr_lambda", dedup.mmr_lambda},
  };
  j["visible_k"] = visible_k;
  j["mode"] = qac::to_string(mode);
  j["listen"] = listen;
  j["strict"] = parsing == ParseMode::kStrict;
  return j.dump();
}

std::string to_json(const SuggestResponse& response) {
  nlohmann::ordered_json j;
  j["prefix"] = response.prefix;
  j["mode"] = to_string(response.mode);
  j["suggestions"] = nlohmann::ordered_json::array();
  for (const auto& s : response.suggestions) {
    j["suggestions"].push_back(
        {{"rank", s.rank}, {"query", s.query}, {"score", s.score}, {"demoted", s.demoted}});
  }
  return j.dump();
}

SuggestService::SuggestService(CompletionIndex index, EmbeddingTable embeddings,
                               ServiceConfig config, RankHook hook) {
  config.validate();
  state_ = std::make_shared<const State>(
      State{std::move(index), std::move(embeddings), std::move(config), std::move(hook)});
}

SuggestService SuggestService::load(const ServiceConfig& config, RankHook hook) {
  config.validate();
  CompletionIndex index;
  try {
    index = CompletionIndex::load_file(config.index_path);
  } catch (const std::exception& e) {
    throw std::runtime_error("loading index '" + config.index_path + "': " + e.what());
  }

  std::ifstream in(config.embeddings_path);
  if (!in) throw std::runtime_error("cannot open embeddings '" + config.embeddings_path + "'");
  auto loaded = load_embedding_file(in, config.parsing);
  if (!loaded.errors.empty()) {
    const auto& first = loaded.errors.front();
    const std::string where = config.embeddings_path + ":" + std::to_string(first.line);
    if (config.parsing == ParseMode::kStrict) {
      throw std::runtime_error("embeddings " + where + ": " + first.message);
    }
    std::cerr << "warning: skipped " << loaded.errors.size()
              << " malformed embedding line(s), first at " << where << ": " << first.message
              << '\n';
  }
  return SuggestService(std::move(index), make_embedding_table(loaded.entries), config,
                        std::move(hook));
}

const SuggestService::State& SuggestService::state() const {
  if (!state_) throw NotInitialized();
  return *state_;
}

const CompletionIndex& SuggestService::index() const { return state().index; }
const EmbeddingTable& SuggestService::embeddings() const { return state().embeddings; }
const ServiceConfig& SuggestService::config() const { return state().config; }

RankedList SuggestService::rank(std::string_view prefix, SuggestMode mode) const {
  const State& s = state();
  const std::string normalized = normalize(prefix);
  RankedList pool = s.index.match_prefix(normalized, s.config.dedup.pool_size);
  if (s.hook) s.hook(normalized, pool);

  switch (mode) {
    case SuggestMode::kControl: return pool;
    case SuggestMode::kDedup: return demote(pool, s.embeddings, s.config.dedup);
    case SuggestMode::kMmr:
      return mmr_rerank(pool, s.embeddings, s.config.dedup.mmr_lambda,
                        std::min(s.config.visible_k, pool.size()));
  }
  return pool;
}

SuggestResponse SuggestService::suggest(std::string_view prefix, std::size_t k,
                                        SuggestMode mode) const {
  RankedList ranked = rank(prefix, mode);
  SuggestResponse response;
  response.prefix = std::string(prefix);
  response.mode = mode;
  const std::size_t limit = std::min(k, ranked.size());
  response.suggestions.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) {
    auto& e = ranked[i];
    response.suggestions.push_back({i + 1, std::move(e.text), e.score, e.demoted});
  }
  return response;
}

SuggestResponse SuggestService::suggest(std::string_view prefix) const {
  const auto& cfg = config();
  return suggest(prefix, cfg.visible_k, cfg.mode);
}

SuggestFn SuggestService::as_suggest_fn(SuggestMode mode, std::size_t k) const {
  return [self = *this, mode, k](std::string_view prefix) {
    RankedList ranked = self.rank(prefix, mode);
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
  };
}

}  // namespace qac
