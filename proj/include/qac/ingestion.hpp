#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qac/embedding.hpp"

namespace qac {

enum class EventKind { kImpression, kClick, kAtc };

const char* to_string(EventKind kind);

struct RawEvent {
  std::int64_t day = 0;  // whole days since epoch
  std::string query;     // normalized
  EventKind kind = EventKind::kImpression;

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

struct QueryStats {
  std::string query;
  std::uint64_t atc = 0;
  std::uint64_t clicks = 0;
  std::uint64_t impressions = 0;

  friend bool operator==(const QueryStats&, const QueryStats&) = default;
};

struct DayWindow {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // inclusive
};

enum class ParseMode { kLenient, kStrict };

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct QueryStatsResult {
  std::vector<QueryStats> stats;
  std::vector<LineError> errors;
};

/// Reads `query<TAB>atc<TAB>clicks<TAB>impressions` records, the format
/// `write_query_stats` produces.
QueryStatsResult parse_query_stats(std::istream& in, ParseMode mode = ParseMode::kLenient);
void write_query_stats(std::ostream& out, const std::vector<QueryStats>& stats);

struct EventLogResult {
  std::vector<RawEvent> events;
  std::vector<LineError> errors;
};

/// Reads `day<TAB>query<TAB>kind` records. Blank lines are skipped. In strict
/// mode the first malformed line aborts the parse and no events are returned.
EventLogResult parse_event_log(std::istream& in, ParseMode mode = ParseMode::kLenient);

/// One QueryStats per query with at least one event in the window, sorted by
/// query text.
std::vector<QueryStats> aggregate_events(const std::vector<RawEvent>& events,
                                         DayWindow window);

struct EmbeddingFileEntry {
  std::string query;    // normalized
  std::string payload;  // base64 exactly as read
  QuantizedEmbedding embedding;
};

struct EmbeddingFileResult {
  std::vector<EmbeddingFileEntry> entries;  // first-seen order of queries
  std::vector<LineError> errors;
  std::size_t duplicates = 0;
};

/// Reads `query<TAB>base64payload` records. A repeated query replaces the
/// earlier entry and increments `duplicates`.
EmbeddingFileResult load_embedding_file(std::istream& in,
                                        ParseMode mode = ParseMode::kLenient);

void write_embedding_file(std::ostream& out, const std::vector<EmbeddingFileEntry>& entries);

EmbeddingTable make_embedding_table(const std::vector<EmbeddingFileEntry>& entries);

/// Deterministic stand-in encoder: signed hashing of byte trigrams into `dim`
/// buckets followed by L2 normalization. Text shorter than three bytes maps
/// to the zero vector. Throws std::invalid_argument when dim < 8.
std::vector<float> toy_embed(std::string_view text, std::size_t dim);

}  // namespace qac
