#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "qac/completion_index.hpp"
#include "qac/embedding.hpp"
#include "qac/ingestion.hpp"

namespace qac {

struct EngagementEvent {
  std::string prefix;
  std::string engaged_query;  // normalized
};

struct EngagementLogResult {
  std::vector<EngagementEvent> events;
  std::vector<LineError> errors;
};

/// Reads `prefix<TAB>engaged_query` records.
EngagementLogResult parse_engagement_log(std::istream& in,
                                         ParseMode mode = ParseMode::kLenient);

using SuggestFn = std::function<RankedList(std::string_view prefix)>;

struct MrrResult {
  double mrr = 0.0;
  std::size_t missing = 0;
};

/// Mean of 1/rank of the engaged query within the first k suggestions for
/// its prefix; an engaged query outside the top k contributes 0 and counts
/// as missing. Throws std::invalid_argument for an empty log or k == 0.
MrrResult mrr(const std::vector<EngagementEvent>& events, const SuggestFn& suggest,
              std::size_t k);

/// Reciprocal rank of `query` within the first k entries, 0 if absent.
double reciprocal_rank(const RankedList& list, std::string_view query, std::size_t k);

/// Unordered pairs among the first k entries with cosine >= threshold.
/// Entries without embeddings never pair.
std::size_t similar_pair_count(const RankedList& list, std::size_t k,
                               const EmbeddingTable& table, double threshold);

/// Mean (1 - cosine) over unordered pairs of embedded entries among the
/// first k. Throws std::invalid_argument with fewer than two such entries.
double mean_pairwise_distance(const RankedList& list, std::size_t k,
                              const EmbeddingTable& table);

/// Fraction of prefixes with an empty suggestion list. Throws
/// std::invalid_argument for an empty prefix list.
double null_rate(const std::vector<std::string>& prefixes, const SuggestFn& suggest);

struct EvalReport {
  double mrr = 0.0;
  std::size_t events_total = 0;
  std::size_t events_missing = 0;
  double similar_pairs_topk_mean = 0.0;
  double mean_pairwise_distance_topk = 0.0;
  double null_rate = 0.0;
};

/// Replays the log once: MRR over events, the two diversity metrics averaged
/// over the events' suggestion lists (distance only over lists with at
/// least two embedded entries), and the null rate over the event prefixes.
EvalReport evaluate(const std::vector<EngagementEvent>& events, const SuggestFn& suggest,
                    std::size_t k, const EmbeddingTable& table, double threshold);

std::string to_json(const EvalReport& report);

}  // namespace qac
