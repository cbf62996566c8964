#include "qac/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <stdexcept>

#include "qac/normalize.hpp"

namespace qac {

EngagementLogResult parse_engagement_log(std::istream& in, ParseMode mode) {
  EngagementLogResult result;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::string error;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      error = "expected prefix<TAB>engaged_query";
    }
    std::string prefix;
    std::string engaged;
    if (error.empty()) {
      prefix = std::string(line.substr(0, tab));
      engaged = normalize(line.substr(tab + 1));
      if (normalize(prefix).empty() || engaged.empty()) error = "empty prefix or engaged query";
    }
    if (!error.empty()) {
      result.errors.push_back({line_no, std::move(error)});
      if (mode == ParseMode::kStrict) break;
      continue;
    }
    result.events.push_back({std::move(prefix), std::move(engaged)});
  }
  if (mode == ParseMode::kStrict && !result.errors.empty()) result.events.clear();
  return result;
}

double reciprocal_rank(const RankedList& list, std::string_view query, std::size_t k) {
  const std::size_t limit = std::min(k, list.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (list[i].text == query) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

MrrResult mrr(const std::vector<EngagementEvent>& events, const SuggestFn& suggest,
              std::size_t k) {
  if (events.empty()) throw std::invalid_argument("mrr: empty event list");
  if (k == 0) throw std::invalid_argument("mrr: k must be positive");
  MrrResult result;
  double total = 0.0;
  for (const auto& e : events) {
    const double rr = reciprocal_rank(suggest(e.prefix), e.engaged_query, k);
    if (rr == 0.0) ++result.missing;
    total += rr;
  }
  result.mrr = total / static_cast<double>(events.size());
  return result;
}

std::size_t similar_pair_count(const RankedList& list, std::size_t k,
                               const EmbeddingTable& table, double threshold) {
  if (k < 2) throw std::invalid_argument("similar_pair_count: k must be at least 2");
  const std::size_t limit = std::min(k, list.size());
  std::vector<const QuantizedEmbedding*> embeddings;
  for (std::size_t i = 0; i < limit; ++i) embeddings.push_back(table.lookup(list[i].text));
  std::size_t count = 0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (embeddings[i] == nullptr) continue;
    for (std::size_t j = i + 1; j < limit; ++j) {
      if (embeddings[j] != nullptr && cosine(*embeddings[i], *embeddings[j]) >= threshold) {
        ++count;
      }
    }
  }
  return count;
}

double mean_pairwise_distance(const RankedList& list, std::size_t k,
                              const EmbeddingTable& table) {
  if (k < 2) throw std::invalid_argument("mean_pairwise_distance: k must be at least 2");
  const std::size_t limit = std::min(k, list.size());
  std::vector<const QuantizedEmbedding*> embeddings;
  for (std::size_t i = 0; i < limit; ++i) {
    if (const auto* e = table.lookup(list[i].text)) embeddings.push_back(e);
  }
  if (embeddings.size() < 2) {
    throw std::invalid_argument("mean_pairwise_distance: fewer than 2 embedded entries");
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      total += 1.0 - cosine(*embeddings[i], *embeddings[j]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double null_rate(const std::vector<std::string>& prefixes, const SuggestFn& suggest) {
  if (prefixes.empty()) throw std::invalid_argument("null_rate: empty prefix list");
  std::size_t empty = 0;
  for (const auto& p : prefixes) {
    if (suggest(p).empty()) ++empty;
  }
  return static_cast<double>(empty) / static_cast<double>(prefixes.size());
}

EvalReport evaluate(const std::vector<EngagementEvent>& events, const SuggestFn& suggest,
                    std::size_t k, const EmbeddingTable& table, double threshold) {
  if (events.empty()) throw std::invalid_argument("evaluate: empty event list");
  if (k < 2) throw std::invalid_argument("evaluate: k must be at least 2");

  EvalReport report;
  report.events_total = events.size();
  double rr_total = 0.0;
  double pairs_total = 0.0;
  double distance_total = 0.0;
  std::size_t distance_lists = 0;
  std::size_t empty_lists = 0;

  for (const auto& e : events) {
    const RankedList list = suggest(e.prefix);
    const double rr = reciprocal_rank(list, e.engaged_query, k);
    if (rr == 0.0) ++report.events_missing;
    rr_total += rr;
    if (list.empty()) ++empty_lists;
    pairs_total += static_cast<double>(similar_pair_count(list, k, table, threshold));

    std::size_t embedded = 0;
    for (std::size_t i = 0; i < std::min(k, list.size()); ++i) {
      if (table.lookup(list[i].text) != nullptr) ++embedded;
    }
    if (embedded >= 2) {
      distance_total += mean_pairwise_distance(list, k, table);
      ++distance_lists;
    }
  }

  const auto n = static_cast<double>(events.size());
  report.mrr = rr_total / n;
  report.similar_pairs_topk_mean = pairs_total / n;
  report.mean_pairwise_distance_topk =
      distance_lists == 0 ? 0.0 : distance_total / static_cast<double>(distance_lists);
  report.null_rate = static_cast<double>(empty_lists) / n;
  return report;
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["mrr"] = report.mrr;
  j["events_total"] = report.events_total;
  j["events_missing"] = report.events_missing;
  j["similar_pairs_topk_mean"] = report.similar_pairs_topk_mean;
  j["mean_pairwise_distance_topk"] = report.mean_pairwise_distance_topk;
  j["null_rate"] = report.null_rate;
  return j.dump();
}

}  // namespace qac
