#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qac/completion_index.hpp"
#include "qac/embedding.hpp"
#include "qac/scoring.hpp"

namespace qac {

/// Which already-retained suggestions a candidate is checked against.
///   kAll    every retained entry (quadratic, exact pairwise dedup)
///   kFirst  only the rank-1 entry (linear)
///   kWindow the `window` most recently retained entries
enum class AnchorPolicy { kAll, kFirst, kWindow };

struct AnchorSpec {
  AnchorPolicy policy = AnchorPolicy::kFirst;
  std::size_t window = 1;  // used by kWindow; must be >= 1

  static AnchorSpec all() { return {AnchorPolicy::kAll, 1}; }
  static AnchorSpec first() { return {AnchorPolicy::kFirst, 1}; }
  static AnchorSpec last(std::size_t w) { return {AnchorPolicy::kWindow, w}; }
};

/// Parses "all", "first" or "window:<w>" (case-insensitive).
AnchorSpec parse_anchor_spec(std::string_view text);
std::string to_string(const AnchorSpec& spec);

struct DedupConfig {
  double similarity_threshold = 0.92;
  std::size_t demote_rank = 20;
  std::size_t pool_size = kDefaultPoolSize;
  AnchorSpec anchor;
  double mmr_lambda = 0.5;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

bool is_similar(const QuantizedEmbedding& a, const QuantizedEmbedding& b, double threshold);

struct SimilarCluster {
  std::size_t leader = 0;             // index into the input records
  std::vector<std::size_t> members;   // leader first, then join order
};

/// Greedy leader clustering. Records are visited by score (descending, ties
/// by text); each joins the first cluster whose leader it is similar to or
/// founds a new one. Records without an embedding stay singletons.
std::vector<SimilarCluster> cluster_greedy(const std::vector<ScoredQuery>& records,
                                           const EmbeddingTable& table, double threshold);

/// Keeps only the cluster leaders, in leader order.
std::vector<ScoredQuery> dedup_index(const std::vector<ScoredQuery>& records,
                                     const EmbeddingTable& table, double threshold);

struct DemoteStats {
  std::size_t comparisons = 0;
  std::size_t demoted = 0;
};

/// Pushes near-duplicates of higher-ranked suggestions down to rank
/// cfg.demote_rank. Entries are scanned in rank order; an entry similar to
/// any of its anchors is demoted, otherwise it is retained. The result is
/// the first demote_rank - 1 retained entries, then the demoted ones (flagged,
/// in their original order), then the remaining retained entries. Entries
/// without an embedding are never demoted.
///
/// Throws std::invalid_argument if the list exceeds cfg.pool_size.
RankedList demote(const RankedList& list, const EmbeddingTable& table, const DedupConfig& cfg,
                  DemoteStats* stats = nullptr);

/// Maximal marginal relevance. Relevance is the min-max normalized score
/// (all 1 when scores are equal); after seeding with the most relevant entry
/// each step picks argmax lambda * rel - (1 - lambda) * max cosine to the
/// picks so far, ties by original rank. Returns the k picks followed by the
/// rest in original order.
RankedList mmr_rerank(const RankedList& list, const EmbeddingTable& table, double lambda,
                      std::size_t k);

}  // namespace qac
