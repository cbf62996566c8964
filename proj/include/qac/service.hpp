#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "qac/completion_index.hpp"
#include "qac/dedup.hpp"
#include "qac/embedding.hpp"
#include "qac/evaluation.hpp"
#include "qac/ingestion.hpp"

namespace qac {

enum class SuggestMode { kControl, kDedup, kMmr };

const char* to_string(SuggestMode mode);
/// Throws std::invalid_argument for anything but control, dedup or mmr.
SuggestMode parse_mode(std::string_view text);

struct ServiceConfig {
  std::string index_path;
  std::string embeddings_path;
  DedupConfig dedup;
  std::size_t visible_k = 10;
  SuggestMode mode = SuggestMode::kDedup;
  std::string listen = "127.0.0.1:8080";
  ParseMode parsing = ParseMode::kLenient;

  void validate() const;

  /// JSON object with keys index, embeddings, dedup{similarity_threshold,
  /// demote_rank, pool_size, anchor_policy, mmr_lambda}, visible_k, mode,
  /// listen, strict. Missing keys keep their defaults. QAC_LISTEN in the
  /// environment overrides `listen`.
  static ServiceConfig from_json(std::string_view json_text);
  static ServiceConfig from_file(const std::string& path);
  std::string to_json() const;
};

struct SuggestItem {
  std::size_t rank = 0;
  std::string query;
  double score = 0.0;
  bool demoted = false;
};

struct SuggestResponse {
  std::string prefix;
  SuggestMode mode = SuggestMode::kControl;
  std::vector<SuggestItem> suggestions;
};

std::string to_json(const SuggestResponse& response);

/// Second-phase reranking slot (session or seasonal context). Receives the
/// normalized prefix and the matched pool in score order and may reorder it
/// in place. The default leaves the pool untouched.
using RankHook = std::function<void(std::string_view prefix, RankedList& pool)>;

class NotInitialized : public std::logic_error {
 public:
  NotInitialized() : std::logic_error("suggest service is not initialized") {}
};

/// Matching, second-phase hook, then the mode's third phase. All state is
/// immutable after construction, so suggest() may be called concurrently.
class SuggestService {
 public:
  SuggestService() = default;
  SuggestService(CompletionIndex index, EmbeddingTable embeddings, ServiceConfig config,
                 RankHook hook = {});

  /// Loads index and embeddings from the paths in `config`. Throws
  /// std::runtime_error naming the file on failure.
  static SuggestService load(const ServiceConfig& config, RankHook hook = {});

  bool initialized() const { return state_ != nullptr; }

  /// Full reordered pool for `prefix` before truncation.
  RankedList rank(std::string_view prefix, SuggestMode mode) const;
  SuggestResponse suggest(std::string_view prefix, std::size_t k, SuggestMode mode) const;
  SuggestResponse suggest(std::string_view prefix) const;

  /// Convenience adapter for the evaluation harness.
  SuggestFn as_suggest_fn(SuggestMode mode, std::size_t k) const;

  const CompletionIndex& index() const;
  const EmbeddingTable& embeddings() const;
  const ServiceConfig& config() const;

 private:
  struct State {
    CompletionIndex index;
    EmbeddingTable embeddings;
    ServiceConfig config;
    RankHook hook;
  };
  const State& state() const;

  std::shared_ptr<const State> state_;
};

}  // namespace qac
