#include "qac/dedup.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qac {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

AnchorSpec parse_anchor_spec(std::string_view text) {
  const std::string s = lower(text);
  if (s == "all") return AnchorSpec::all();
  if (s == "first") return AnchorSpec::first();
  constexpr std::string_view kWindowPrefix = "window:";
  if (s.starts_with(kWindowPrefix)) {
    std::size_t w = 0;
    const char* begin = s.data() + kWindowPrefix.size();
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, w);
    if (ec == std::errc{} && ptr == end && w >= 1) return AnchorSpec::last(w);
  }
  throw std::invalid_argument("unknown anchor policy '" + std::string(text) +
                              "' (expected all, first or window:<w>)");
}

std::string to_string(const AnchorSpec& spec) {
  switch (spec.policy) {
    case AnchorPolicy::kAll: return "all";
    case AnchorPolicy::kFirst: return "first";
    case AnchorPolicy::kWindow: return "window:" + std::to_string(spec.window);
  }
  return "?";
}

void DedupConfig::validate() const {
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
    throw std::invalid_argument("similarity_threshold must be in (0, 1]");
  }
  // Rank 1 must stay in place, so the demoted block starts at rank 2 or later.
  if (demote_rank < 2) throw std::invalid_argument("demote_rank must be at least 2");
  if (pool_size == 0) throw std::invalid_argument("pool_size must be positive");
  if (anchor.policy == AnchorPolicy::kWindow && anchor.window == 0) {
    throw std::invalid_argument("anchor window must be at least 1");
  }
  if (!(mmr_lambda >= 0.0 && mmr_lambda <= 1.0)) {
    throw std::invalid_argument("mmr_lambda must be in [0, 1]");
  }
}

bool is_similar(const QuantizedEmbedding& a, const QuantizedEmbedding& b, double threshold) {
  return cosine(a, b) >= threshold;
}

std::vector<SimilarCluster> cluster_greedy(const std::vector<ScoredQuery>& records,
                                           const EmbeddingTable& table, double threshold) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].score != records[b].score) return records[a].score > records[b].score;
    return records[a].query < records[b].query;
  });

  std::vector<SimilarCluster> clusters;
  std::vector<const QuantizedEmbedding*> leader_embeddings;
  for (std::size_t idx : order) {
    const QuantizedEmbedding* e = table.lookup(records[idx].query);
    bool joined = false;
    if (e != nullptr) {
      for (std::size_t c = 0; c < clusters.size(); ++c) {
        const QuantizedEmbedding* leader = leader_embeddings[c];
        if (leader != nullptr && is_similar(*leader, *e, threshold)) {
          clusters[c].members.push_back(idx);
          joined = true;
          break;
        }
      }
    }
    if (!joined) {
      clusters.push_back({idx, {idx}});
      leader_embeddings.push_back(e);
    }
  }
  return clusters;
}

std::vector<ScoredQuery> dedup_index(const std::vector<ScoredQuery>& records,
                                     const EmbeddingTable& table, double threshold) {
  std::vector<ScoredQuery> out;
  for (const auto& cluster : cluster_greedy(records, table, threshold)) {
    out.push_back(records[cluster.leader]);
  }
  return out;
}

RankedList demote(const RankedList& list, const EmbeddingTable& table, const DedupConfig& cfg,
                  DemoteStats* stats) {
  cfg.validate();
  if (list.size() > cfg.pool_size) {
    throw std::invalid_argument("demote: list of " + std::to_string(list.size()) +
                                " exceeds pool size " + std::to_string(cfg.pool_size));
  }
  DemoteStats local;
  if (list.empty()) {
    if (stats) *stats = local;
    return {};
  }

  std::vector<const QuantizedEmbedding*> embeddings;
  embeddings.reserve(list.size());
  for (const auto& entry : list) embeddings.push_back(table.lookup(entry.text));

  std::vector<std::size_t> retained{0};
  std::vector<std::size_t> demoted;

  for (std::size_t i = 1; i < list.size(); ++i) {
    const QuantizedEmbedding* candidate = embeddings[i];
    bool similar = false;
    if (candidate != nullptr) {
      std::size_t from = 0;
      std::size_t to = retained.size();
      switch (cfg.anchor.policy) {
        case AnchorPolicy::kAll: break;
        case AnchorPolicy::kFirst: to = 1; break;
        case AnchorPolicy::kWindow:
          from = retained.size() > cfg.anchor.window ? retained.size() - cfg.anchor.window : 0;
          break;
      }
      for (std::size_t a = from; a < to && !similar; ++a) {
        const QuantizedEmbedding* anchor = embeddings[retained[a]];
        if (anchor == nullptr) continue;
        ++local.comparisons;
        similar = is_similar(*anchor, *candidate, cfg.similarity_threshold);
      }
    }
    (similar ? demoted : retained).push_back(i);
  }

  RankedList out;
  out.reserve(list.size());
  const std::size_t head = std::min(cfg.demote_rank - 1, retained.size());
  for (std::size_t r = 0; r < head; ++r) {
    out.push_back(list[retained[r]]);
    out.back().demoted = false;
  }
  for (std::size_t d : demoted) {
    out.push_back(list[d]);
    out.back().demoted = true;
  }
  for (std::size_t r = head; r < retained.size(); ++r) {
    out.push_back(list[retained[r]]);
    out.back().demoted = false;
  }

  local.demoted = demoted.size();
  if (stats) *stats = local;
  return out;
}

RankedList mmr_rerank(const RankedList& list, const EmbeddingTable& table, double lambda,
                      std::size_t k) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("mmr_rerank: lambda must be in [0, 1]");
  }
  const std::size_t n = list.size();
  k = std::min(k, n);
  if (n == 0) return {};

  const auto [min_it, max_it] = std::minmax_element(
      list.begin(), list.end(),
      [](const RankedEntry& a, const RankedEntry& b) { return a.score < b.score; });
  const double lo = min_it->score;
  const double span = max_it->score - lo;
  std::vector<double> relevance(n, 1.0);
  if (span > 0.0) {
    for (std::size_t i = 0; i < n; ++i) relevance[i] = (list[i].score - lo) / span;
  }

  std::vector<const QuantizedEmbedding*> embeddings;
  embeddings.reserve(n);
  for (const auto& entry : list) embeddings.push_back(table.lookup(entry.text));

  std::vector<bool> selected(n, false);
  // Running max similarity of each candidate to the picks so far.
  std::vector<double> max_sim(n, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> picks;
  picks.reserve(k);

  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = n;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      const double value = step == 0 ? relevance[i]
                                     : lambda * relevance[i] - (1.0 - lambda) * max_sim[i];
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
    selected[best] = true;
    picks.push_back(best);
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      double sim = 0.0;
      if (embeddings[i] != nullptr && embeddings[best] != nullptr) {
        sim = cosine(*embeddings[i], *embeddings[best]);
      }
      max_sim[i] = std::max(max_sim[i], sim);
    }
  }

  RankedList out;
  out.reserve(n);
  for (std::size_t p : picks) out.push_back(list[p]);
  for (std::size_t i = 0; i < n; ++i) {
    if (!selected[i]) out.push_back(list[i]);
  }
  for (auto& entry : out) entry.demoted = false;
  return out;
}

}  // namespace qac
