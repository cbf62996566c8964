#include "qac/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "qac/normalize.hpp"

namespace qac {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool parse_kind(std::string_view s, EventKind& kind) {
  if (s == "impression") {
    kind = EventKind::kImpression;
  } else if (s == "click") {
    kind = EventKind::kClick;
  } else if (s == "atc") {
    kind = EventKind::kAtc;
  } else {
    return false;
  }
  return true;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kImpression: return "impression";
    case EventKind::kClick: return "click";
    case EventKind::kAtc: return "atc";
  }
  return "?";
}

EventLogResult parse_event_log(std::istream& in, ParseMode mode) {
  EventLogResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) continue;

    auto fail = [&](std::string message) {
      result.errors.push_back({line_no, std::move(message)});
      return mode == ParseMode::kStrict;
    };

    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      if (fail("expected 3 tab-separated fields, got " + std::to_string(fields.size()))) break;
      continue;
    }
    std::int64_t day = 0;
    const auto [ptr, ec] =
        std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), day);
    if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size() || day < 0) {
      if (fail("timestamp is not a non-negative integer: '" + std::string(fields[0]) + "'")) break;
      continue;
    }
    std::string query = normalize(fields[1]);
    if (query.empty()) {
      if (fail("query is empty after normalization")) break;
      continue;
    }
    EventKind kind{};
    if (!parse_kind(fields[2], kind)) {
      if (fail("unknown event kind '" + std::string(fields[2]) + "'")) break;
      continue;
    }
    result.events.push_back({day, std::move(query), kind});
  }
  if (mode == ParseMode::kStrict && !result.errors.empty()) result.events.clear();
  return result;
}

QueryStatsResult parse_query_stats(std::istream& in, ParseMode mode) {
  QueryStatsResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) continue;

    const auto fields = split_tabs(line);
    std::string error;
    QueryStats stats;
    if (fields.size() != 4) {
      error = "expected 4 tab-separated fields, got " + std::to_string(fields.size());
    } else {
      stats.query = normalize(fields[0]);
      if (stats.query.empty()) error = "query is empty after normalization";
      std::uint64_t* counts[] = {&stats.atc, &stats.clicks, &stats.impressions};
      for (std::size_t f = 1; f < 4 && error.empty(); ++f) {
        const auto field = fields[f];
        const auto [ptr, ec] =
            std::from_chars(field.data(), field.data() + field.size(), *counts[f - 1]);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
          error = "count is not a non-negative integer: '" + std::string(field) + "'";
        }
      }
    }
    if (!error.empty()) {
      result.errors.push_back({line_no, std::move(error)});
      if (mode == ParseMode::kStrict) break;
      continue;
    }
    result.stats.push_back(std::move(stats));
  }
  if (mode == ParseMode::kStrict && !result.errors.empty()) result.stats.clear();
  return result;
}

void write_query_stats(std::ostream& out, const std::vector<QueryStats>& stats) {
  for (const auto& s : stats) {
    out << s.query << '\t' << s.atc << '\t' << s.clicks << '\t' << s.impressions << '\n';
  }
}

std::vector<QueryStats> aggregate_events(const std::vector<RawEvent>& events,
                                         DayWindow window) {
  if (window.lo > window.hi) throw std::invalid_argument("aggregate_events: day_lo > day_hi");
  std::map<std::string, QueryStats, std::less<>> by_query;
  for (const auto& e : events) {
    if (e.day < window.lo || e.day > window.hi) continue;
    // Events parsed from logs are already normalized; normalize again so
    // hand-built events merge the same way.
    std::string key = normalize(e.query);
    auto it = by_query.find(key);
    if (it == by_query.end()) {
      it = by_query.emplace(key, QueryStats{key}).first;
    }
    auto& stats = it->second;
    switch (e.kind) {
      case EventKind::kImpression: ++stats.impressions; break;
      case EventKind::kClick: ++stats.clicks; break;
      case EventKind::kAtc: ++stats.atc; break;
    }
  }
  std::vector<QueryStats> out;
  out.reserve(by_query.size());
  for (auto& [_, stats] : by_query) out.push_back(std::move(stats));
  return out;
}

EmbeddingFileResult load_embedding_file(std::istream& in, ParseMode mode) {
  EmbeddingFileResult result;
  std::unordered_map<std::string, std::size_t> position;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) continue;

    const std::size_t tab = line.rfind('\t');
    std::string error;
    std::string query;
    QuantizedEmbedding embedding;
    if (tab == std::string_view::npos) {
      error = "expected query<TAB>payload";
    } else {
      query = normalize(line.substr(0, tab));
      if (query.empty()) {
        error = "query is empty after normalization";
      } else {
        try {
          embedding = decode_payload(line.substr(tab + 1));
        } catch (const PayloadError& e) {
          error = std::string(to_string(e.code())) + ": " + e.what();
        }
      }
    }
    if (!error.empty()) {
      result.errors.push_back({line_no, std::move(error)});
      if (mode == ParseMode::kStrict) break;
      continue;
    }

    EmbeddingFileEntry entry{query, std::string(line.substr(tab + 1)), std::move(embedding)};
    auto [it, inserted] = position.emplace(query, result.entries.size());
    if (inserted) {
      result.entries.push_back(std::move(entry));
    } else {
      result.entries[it->second] = std::move(entry);
      ++result.duplicates;
    }
  }
  if (mode == ParseMode::kStrict && !result.errors.empty()) result.entries.clear();
  return result;
}

void write_embedding_file(std::ostream& out, const std::vector<EmbeddingFileEntry>& entries) {
  for (const auto& e : entries) out << e.query << '\t' << e.payload << '\n';
}

EmbeddingTable make_embedding_table(const std::vector<EmbeddingFileEntry>& entries) {
  EmbeddingMap map;
  map.reserve(entries.size());
  for (const auto& e : entries) map.insert_or_assign(e.query, e.embedding);
  return EmbeddingTable(std::move(map));
}

std::vector<float> toy_embed(std::string_view text, std::size_t dim) {
  if (dim < 8) throw std::invalid_argument("toy_embed: dim must be at least 8");
  std::vector<double> acc(dim, 0.0);
  for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
    const std::uint64_t h = fnv1a(text.substr(i, 3));
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    acc[h % dim] += sign;
  }
  double sq = 0.0;
  for (double x : acc) sq += x * x;
  std::vector<float> out(dim, 0.0F);
  if (sq == 0.0) return out;
  const double inv = 1.0 / std::sqrt(sq);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
  return out;
}

}  // namespace qac
