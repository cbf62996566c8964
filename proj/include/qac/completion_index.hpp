#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qac/scoring.hpp"

namespace qac {

using QueryId = std::uint32_t;

inline constexpr std::size_t kDefaultTopK = 50;
inline constexpr std::size_t kDefaultPoolSize = 50;

struct QueryRecord {
  QueryId id = 0;
  std::string text;
  double score = 0.0;
};

/// A suggestion in rank order. Rank is the 1-based position in the owning
/// vector.
struct RankedEntry {
  QueryId id = 0;
  std::string text;
  double score = 0.0;
  bool demoted = false;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

using RankedList = std::vector<RankedEntry>;

class DuplicateQueryError : public std::invalid_argument {
 public:
  explicit DuplicateQueryError(std::vector<std::string> duplicates);
  const std::vector<std::string>& duplicates() const { return duplicates_; }

 private:
  std::vector<std::string> duplicates_;
};

/// Every token rotation of `text` ("a b c" -> "a b c", "b c a", "c a b"),
/// without repeats.
std::vector<std::string> token_rotations(std::string_view text);

struct MatchStats {
  std::size_t nodes_visited = 0;
  std::size_t postings_read = 0;
};

/// Compressed trie over the token rotations of every query. Each node keeps
/// the top-K distinct queries of its subtree, so a lookup walks the prefix
/// and reads a precomputed list.
///
/// Query ids are assigned in rank order (score descending, then text
/// ascending), so id order is result order throughout.
class CompletionIndex {
 public:
  CompletionIndex() = default;

  /// Throws DuplicateQueryError if two records normalize to the same text,
  /// std::invalid_argument if top_k is 0 or a score is not finite.
  static CompletionIndex build(const std::vector<ScoredQuery>& records,
                               std::size_t top_k = kDefaultTopK);

  /// Up to n queries with an indexed key starting with normalize(prefix),
  /// in rank order. n larger than top_k scans every key below the node.
  RankedList match_prefix(std::string_view prefix, std::size_t n = kDefaultPoolSize,
                          MatchStats* stats = nullptr) const;

  std::size_t size() const { return records_.size(); }
  std::size_t top_k() const { return top_k_; }
  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<QueryRecord>& records() const { return records_; }
  const QueryRecord& record(QueryId id) const { return records_.at(id); }

  /// Calls fn(path, postings) for every node; path is the full key prefix
  /// the node represents.
  void for_each_node(
      const std::function<void(std::string_view, const std::vector<QueryId>&)>& fn) const;

  // Binary snapshot: version byte, magic, top_k, then the record table. The
  // trie is rebuilt on load.
  static constexpr std::uint8_t kSnapshotVersion = 1;
  void save(std::ostream& out) const;
  static CompletionIndex load(std::istream& in);
  void save_file(const std::string& path) const;
  static CompletionIndex load_file(const std::string& path);

 private:
  struct Node {
    std::uint32_t label_offset = 0;  // into labels_
    std::uint32_t label_length = 0;  // edge label leading into this node
    std::uint32_t first_child = 0;   // into child_ids_
    std::uint32_t child_count = 0;
    std::uint32_t postings_offset = 0;  // into postings_
    std::uint32_t postings_length = 0;
    std::uint32_t key_begin = 0;  // range into key_ids_
    std::uint32_t key_end = 0;
  };

  std::uint32_t build_range(const std::vector<std::pair<std::string, QueryId>>& keys,
                            const std::vector<std::uint32_t>& key_offsets, std::size_t lo,
                            std::size_t hi, std::size_t depth, std::uint32_t label_from,
                            std::uint32_t label_len);
  // Locates the node covering `prefix`; returns nodes_.size() when absent.
  std::uint32_t find_node(std::string_view prefix, MatchStats* stats) const;
  std::string_view label(const Node& n) const {
    return std::string_view(labels_).substr(n.label_offset, n.label_length);
  }

  std::size_t top_k_ = kDefaultTopK;
  std::vector<QueryRecord> records_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> child_ids_;
  std::vector<QueryId> postings_;
  std::vector<QueryId> key_ids_;  // query id of every key, in key order
  std::string labels_;
};

}  // namespace qac
