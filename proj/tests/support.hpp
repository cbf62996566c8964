#pragma once

// Shared fixtures and brute-force reference implementations for the test
// suites. Nothing here calls into the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qac/completion_index.hpp"
#include "qac/dedup.hpp"
#include "qac/embedding.hpp"
#include "qac/evaluation.hpp"
#include "qac/scoring.hpp"

namespace qac::testing {

inline std::vector<float> basis(std::size_t dim, std::size_t axis, float value = 1.0F) {
  std::vector<float> v(dim, 0.0F);
  v.at(axis) = value;
  return v;
}

inline std::vector<float> axpy(std::vector<float> base, std::size_t axis, float amount) {
  base.at(axis) += amount;
  return base;
}

inline std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> normal(0.0F, 1.0F);
  std::vector<float> v(dim);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      sq += static_cast<double>(x) * x;
    }
  } while (sq == 0.0);
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& x : v) x = static_cast<float>(x * inv);
  return v;
}

inline double float_cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct TableBuilder {
  EmbeddingMap map;
  TableBuilder& add(const std::string& query, const std::vector<float>& v) {
    map.insert_or_assign(query, quantize(v));
    return *this;
  }
  EmbeddingTable build() const { return EmbeddingTable(map); }
};

inline RankedList ranked(const std::vector<std::string>& texts) {
  RankedList list;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    list.push_back({static_cast<QueryId>(i), texts[i],
                    static_cast<double>(texts.size() - i), false});
  }
  return list;
}

inline std::vector<std::string> texts(const RankedList& list) {
  std::vector<std::string> out;
  for (const auto& e : list) out.push_back(e.text);
  return out;
}

inline ScoredQuery scored(const std::string& text, double score) {
  return {text, QueryStats{text}, score};
}

/// Embeddings for the "kids med" fixture (dim 16). The three medicine
/// variants share axis 0 and differ by a 0.1 offset on private axes, so each
/// pair has cosine 1/1.01 ~ 0.990. Every other query sits on its own axis.
inline EmbeddingTable kids_med_table() {
  constexpr std::size_t d = 16;
  return TableBuilder{}
      .add("kids medicine", axpy(basis(d, 0), 5, 0.1F))
      .add("kids meds", axpy(basis(d, 0), 6, 0.1F))
      .add("medicine for kids", axpy(basis(d, 0), 7, 0.1F))
      .add("baby food", basis(d, 1))
      .add("toys", basis(d, 2))
      .add("kids toys", basis(d, 3))
      .add("kids medical kit", basis(d, 4))
      .add("kids medicated shampoo", basis(d, 8))
      .add("kids medium shirt", basis(d, 9))
      .build();
}

inline std::vector<ScoredQuery> kids_med_queries() {
  return {scored("kids medicine", 10), scored("kids meds", 9),
          scored("medicine for kids", 8), scored("kids medical kit", 7),
          scored("kids medicated shampoo", 6), scored("kids medium shirt", 5),
          scored("kids toys", 4), scored("baby food", 3), scored("toys", 2)};
}

/// Bicycle fixture: all three variants pairwise similar.
inline EmbeddingTable bicycle_table() {
  constexpr std::size_t d = 16;
  return TableBuilder{}
      .add("men's bicycle", axpy(basis(d, 0), 1, 0.1F))
      .add("bicycle for men", axpy(basis(d, 0), 2, 0.1F))
      .add("adult bicycles male", axpy(basis(d, 0), 3, 0.1F))
      .add("garden hose", basis(d, 4))
      .build();
}

inline std::vector<ScoredQuery> bicycle_queries() {
  return {scored("men's bicycle", 5), scored("bicycle for men", 3),
          scored("adult bicycles male", 2), scored("garden hose", 1)};
}

/// Engagement log recorded under control order where users often picked a
/// near-duplicate variant. Each topic has a head query, two variants of it
/// (ranks 2 and 3) and twelve unrelated fillers, so demoting the variants
/// pushes them past the visible top 10.
struct DuplicateLog {
  std::vector<ScoredQuery> queries;
  EmbeddingTable table;
  std::vector<EngagementEvent> events;
};

inline DuplicateLog duplicate_engagement_log(std::mt19937_64& rng, std::size_t topics = 5) {
  constexpr std::size_t dim = 64;
  std::normal_distribution<float> jitter(0.0F, 0.02F);
  DuplicateLog log;
  TableBuilder builder;
  for (std::size_t t = 0; t < topics; ++t) {
    const std::string topic = "topic" + std::to_string(t);
    const auto head = random_unit(rng, dim);
    const std::string names[3] = {topic + " head", topic + " head one", topic + " head two"};
    for (int v = 0; v < 3; ++v) {
      auto e = head;
      if (v > 0) {
        for (auto& x : e) x += jitter(rng);
      }
      builder.add(names[v], e);
      log.queries.push_back(scored(names[v], 100.0 - v));
    }
    for (int i = 0; i < 12; ++i) {
      const std::string name = topic + " item" + std::to_string(i);
      builder.add(name, random_unit(rng, dim));
      log.queries.push_back(scored(name, 90.0 - i));
    }
    log.events.push_back({topic, names[0]});
    log.events.push_back({topic, names[1]});
    log.events.push_back({topic, names[1]});
    log.events.push_back({topic, names[2]});
  }
  log.table = builder.build();
  return log;
}

// ---------------------------------------------------------------------------
// Brute-force references.

/// Pairwise similarity matrix by the full O(n^2) definition. Missing
/// embeddings are never similar to anything.
inline std::vector<std::vector<bool>> similarity_matrix(const RankedList& list,
                                                        const EmbeddingTable& table,
                                                        double tau) {
  const std::size_t n = list.size();
  std::vector<std::vector<bool>> sim(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto* a = table.lookup(list[i].text);
      const auto* b = table.lookup(list[j].text);
      if (i != j && a && b) sim[i][j] = cosine(*a, *b) >= tau;
    }
  }
  return sim;
}

/// Greedy-by-rank maximal pairwise-dissimilar subset; everything else is
/// demoted in order, placed at rank `demote_rank`.
inline RankedList reference_demote_all(const RankedList& list, const EmbeddingTable& table,
                                       double tau, std::size_t demote_rank) {
  const auto sim = similarity_matrix(list, table, tau);
  std::vector<std::size_t> keep, drop;
  for (std::size_t i = 0; i < list.size(); ++i) {
    bool clash = false;
    for (std::size_t k : keep) clash = clash || sim[k][i];
    (clash ? drop : keep).push_back(i);
  }
  RankedList out;
  const std::size_t head = std::min(demote_rank - 1, keep.size());
  for (std::size_t i = 0; i < head; ++i) out.push_back(list[keep[i]]);
  for (std::size_t i : drop) {
    out.push_back(list[i]);
    out.back().demoted = true;
  }
  for (std::size_t i = head; i < keep.size(); ++i) out.push_back(list[keep[i]]);
  return out;
}

/// Filter-and-sort over every token rotation, independent of the trie.
/// `collapse` applies the index's whitespace handling to the prefix; node
/// paths are compared raw.
inline std::vector<std::string> brute_force_match(const std::vector<ScoredQuery>& records,
                                                  const std::string& prefix, std::size_t n,
                                                  bool collapse = true) {
  auto rotations = [](const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
      if (c == ' ') {
        if (!cur.empty()) tokens.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) tokens.push_back(cur);
    std::vector<std::string> out;
    for (std::size_t r = 0; r < tokens.size(); ++r) {
      std::string key;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        key += (i ? " " : "") + tokens[(r + i) % tokens.size()];
      }
      out.push_back(key);
    }
    return out;
  };
  // Same whitespace collapse the index applies to prefixes (ASCII inputs only).
  std::string norm_prefix;
  for (const auto& t : [&] {
         std::vector<std::string> tokens;
         std::string cur;
         for (char c : prefix) {
           if (c == ' ') {
             if (!cur.empty()) tokens.push_back(cur);
             cur.clear();
           } else {
             cur.push_back(c);
           }
         }
         if (!cur.empty()) tokens.push_back(cur);
         return tokens;
       }()) {
    norm_prefix += (norm_prefix.empty() ? "" : " ") + t;
  }
  if (!collapse) norm_prefix = prefix;
  std::vector<std::pair<double, std::string>> hits;
  for (const auto& r : records) {
    for (const auto& key : rotations(r.query)) {
      if (key.compare(0, norm_prefix.size(), norm_prefix) == 0) {
        hits.emplace_back(r.score, r.query);
        break;
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, hits.size()); ++i) out.push_back(hits[i].second);
  return out;
}

/// Solves the 3x3 normal equations by Cramer's rule.
inline Weights cramer_least_squares(const std::vector<TrainingRow>& rows) {
  double m[3][3] = {};
  double r[3] = {};
  for (const auto& row : rows) {
    const double x[3] = {row.atc, row.clicks, row.impressions};
    for (int i = 0; i < 3; ++i) {
      r[i] += x[i] * row.target;
      for (int j = 0; j < 3; ++j) m[i][j] += x[i] * x[j];
    }
  }
  auto det = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det(m);
  double w[3];
  for (int c = 0; c < 3; ++c) {
    double mc[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) mc[i][j] = j == c ? r[i] : m[i][j];
    }
    w[c] = det(mc) / d;
  }
  return {w[0], w[1], w[2]};
}

// ---------------------------------------------------------------------------
// Random instance generators.

/// Random embeddings drawn around a few cluster centres so that similar
/// pairs at tau = 0.9 are common but not universal.
inline EmbeddingTable random_clustered_table(std::mt19937_64& rng,
                                             const std::vector<std::string>& queries,
                                             std::size_t dim, std::size_t centres,
                                             float noise) {
  std::vector<std::vector<float>> centre_vectors;
  for (std::size_t c = 0; c < centres; ++c) centre_vectors.push_back(random_unit(rng, dim));
  std::uniform_int_distribution<std::size_t> pick(0, centres - 1);
  std::normal_distribution<float> jitter(0.0F, noise);
  TableBuilder builder;
  for (const auto& q : queries) {
    auto v = centre_vectors[pick(rng)];
    for (auto& x : v) x += jitter(rng);
    builder.add(q, v);
  }
  return builder.build();
}

inline std::vector<std::string> numbered(const std::string& stem, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

}  // namespace qac::testing
