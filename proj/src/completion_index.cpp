#include "qac/completion_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "qac/normalize.hpp"

namespace qac {

namespace {

constexpr char kSnapshotMagic[4] = {'Q', 'A', 'C', 'I'};

std::string join_duplicates(const std::vector<std::string>& dups) {
  std::string msg = "duplicate queries after normalization:";
  for (const auto& d : dups) msg += " '" + d + "'";
  return msg;
}

std::vector<QueryId> merge_top_k(std::vector<QueryId> ids, std::size_t k) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() > k) ids.resize(k);
  return ids;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  const U u = static_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>(u >> (8 * i));
  out.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw std::runtime_error("index snapshot truncated");
  }
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(buf[i]) << (8 * i);
  return static_cast<T>(u);
}

}  // namespace

DuplicateQueryError::DuplicateQueryError(std::vector<std::string> duplicates)
    : std::invalid_argument(join_duplicates(duplicates)), duplicates_(std::move(duplicates)) {}

std::vector<std::string> token_rotations(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t space = text.find(' ', start);
    const std::size_t end = space == std::string_view::npos ? text.size() : space;
    if (end > start) tokens.push_back(text.substr(start, end - start));
    if (space == std::string_view::npos) break;
    start = space + 1;
  }
  std::vector<std::string> out;
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    std::string key;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0) key.push_back(' ');
      key.append(tokens[(r + i) % tokens.size()]);
    }
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(std::move(key));
  }
  return out;
}

CompletionIndex CompletionIndex::build(const std::vector<ScoredQuery>& records,
                                       std::size_t top_k) {
  if (top_k == 0) throw std::invalid_argument("completion index: top_k must be positive");

  CompletionIndex index;
  index.top_k_ = top_k;

  index.records_.reserve(records.size());
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) {
      throw std::invalid_argument("completion index: non-finite score for '" + r.query + "'");
    }
    index.records_.push_back({0, normalize(r.query), r.score});
  }
  std::sort(index.records_.begin(), index.records_.end(),
            [](const QueryRecord& a, const QueryRecord& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.text < b.text;
            });

  std::vector<std::string> duplicates;
  {
    std::unordered_set<std::string_view> seen;
    for (const auto& r : index.records_) {
      if (!seen.insert(r.text).second) duplicates.push_back(r.text);
    }
  }
  if (!duplicates.empty()) {
    std::sort(duplicates.begin(), duplicates.end());
    duplicates.erase(std::unique(duplicates.begin(), duplicates.end()), duplicates.end());
    throw DuplicateQueryError(std::move(duplicates));
  }
  if (index.records_.size() > std::numeric_limits<QueryId>::max()) {
    throw std::invalid_argument("completion index: too many records");
  }

  std::vector<std::pair<std::string, QueryId>> keys;
  for (QueryId id = 0; id < index.records_.size(); ++id) {
    index.records_[id].id = id;
    for (auto& key : token_rotations(index.records_[id].text)) {
      keys.emplace_back(std::move(key), id);
    }
  }
  std::sort(keys.begin(), keys.end());

  // Edge labels point into one pool holding every key.
  std::vector<std::uint32_t> key_offsets;
  key_offsets.reserve(keys.size());
  for (const auto& [key, _] : keys) {
    key_offsets.push_back(static_cast<std::uint32_t>(index.labels_.size()));
    index.labels_ += key;
  }
  index.key_ids_.reserve(keys.size());
  for (const auto& [_, id] : keys) index.key_ids_.push_back(id);
  index.build_range(keys, key_offsets, 0, keys.size(), 0, 0, 0);
  return index;
}

std::uint32_t CompletionIndex::build_range(
    const std::vector<std::pair<std::string, QueryId>>& keys,
    const std::vector<std::uint32_t>& key_offsets, std::size_t lo, std::size_t hi,
    std::size_t depth, std::uint32_t label_from, std::uint32_t label_len) {
  const auto node_id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{label_from, label_len, 0, 0, 0, 0, static_cast<std::uint32_t>(lo),
                        static_cast<std::uint32_t>(hi)});

  std::vector<QueryId> ids;
  std::vector<std::uint32_t> children;
  std::size_t i = lo;
  // Keys ending exactly at this depth sort first.
  while (i < hi && keys[i].first.size() == depth) ids.push_back(keys[i++].second);

  while (i < hi) {
    const char c = keys[i].first[depth];
    std::size_t j = i + 1;
    while (j < hi && keys[j].first[depth] == c) ++j;

    // Sorted range: the common prefix of the first and last key is shared
    // by all of them.
    const std::string& first = keys[i].first;
    const std::string& last = keys[j - 1].first;
    std::size_t lcp = depth + 1;
    const std::size_t limit = std::min(first.size(), last.size());
    while (lcp < limit && first[lcp] == last[lcp]) ++lcp;

    const std::uint32_t child = build_range(
        keys, key_offsets, i, j, lcp, key_offsets[i] + static_cast<std::uint32_t>(depth),
        static_cast<std::uint32_t>(lcp - depth));
    children.push_back(child);
    i = j;
  }

  for (std::uint32_t child : children) {
    const Node& cn = nodes_[child];
    ids.insert(ids.end(), postings_.begin() + cn.postings_offset,
               postings_.begin() + cn.postings_offset + cn.postings_length);
  }
  ids = merge_top_k(std::move(ids), top_k_);

  Node& node = nodes_[node_id];
  node.first_child = static_cast<std::uint32_t>(child_ids_.size());
  node.child_count = static_cast<std::uint32_t>(children.size());
  child_ids_.insert(child_ids_.end(), children.begin(), children.end());
  node.postings_offset = static_cast<std::uint32_t>(postings_.size());
  node.postings_length = static_cast<std::uint32_t>(ids.size());
  postings_.insert(postings_.end(), ids.begin(), ids.end());
  return node_id;
}

std::uint32_t CompletionIndex::find_node(std::string_view prefix, MatchStats* stats) const {
  const auto absent = static_cast<std::uint32_t>(nodes_.size());
  if (nodes_.empty()) return absent;
  std::uint32_t cur = 0;
  if (stats) ++stats->nodes_visited;
  std::size_t consumed = 0;
  while (consumed < prefix.size()) {
    const Node& node = nodes_[cur];
    const auto begin = child_ids_.begin() + node.first_child;
    const auto end = begin + node.child_count;
    const auto c = static_cast<unsigned char>(prefix[consumed]);
    const auto it = std::lower_bound(begin, end, c, [&](std::uint32_t child, unsigned char x) {
      return static_cast<unsigned char>(labels_[nodes_[child].label_offset]) < x;
    });
    if (it == end || static_cast<unsigned char>(labels_[nodes_[*it].label_offset]) != c) {
      return absent;
    }
    const std::string_view edge = label(nodes_[*it]);
    const std::size_t m = std::min(edge.size(), prefix.size() - consumed);
    if (edge.substr(0, m) != prefix.substr(consumed, m)) return absent;
    consumed += m;
    cur = *it;
    if (stats) ++stats->nodes_visited;
  }
  return cur;
}

RankedList CompletionIndex::match_prefix(std::string_view prefix, std::size_t n,
                                         MatchStats* stats) const {
  RankedList out;
  if (n == 0) return out;
  const std::string key = normalize(prefix);
  const std::uint32_t node_id = find_node(key, stats);
  if (node_id == nodes_.size()) return out;
  const Node& node = nodes_[node_id];

  std::vector<QueryId> ids;
  if (n <= top_k_ || node.postings_length < top_k_) {
    const std::size_t take = std::min<std::size_t>(n, node.postings_length);
    ids.assign(postings_.begin() + node.postings_offset,
               postings_.begin() + node.postings_offset + take);
  } else {
    // Beyond the precomputed top_k: every key below the node is a
    // contiguous run of key_ids_.
    ids.assign(key_ids_.begin() + node.key_begin, key_ids_.begin() + node.key_end);
    ids = merge_top_k(std::move(ids), n);
  }
  if (stats) stats->postings_read += ids.size();

  out.reserve(ids.size());
  for (QueryId id : ids) {
    const QueryRecord& r = records_[id];
    out.push_back({r.id, r.text, r.score, false});
  }
  return out;
}

void CompletionIndex::for_each_node(
    const std::function<void(std::string_view, const std::vector<QueryId>&)>& fn) const {
  if (nodes_.empty()) return;
  std::vector<std::pair<std::uint32_t, std::string>> stack{{0, std::string()}};
  while (!stack.empty()) {
    auto [id, path] = std::move(stack.back());
    stack.pop_back();
    const Node& n = nodes_[id];
    const std::vector<QueryId> postings(postings_.begin() + n.postings_offset,
                                        postings_.begin() + n.postings_offset +
                                            n.postings_length);
    fn(path, postings);
    for (std::uint32_t i = 0; i < n.child_count; ++i) {
      const std::uint32_t child = child_ids_[n.first_child + i];
      stack.emplace_back(child, path + std::string(label(nodes_[child])));
    }
  }
}

void CompletionIndex::save(std::ostream& out) const {
  out.put(static_cast<char>(kSnapshotVersion));
  out.write(kSnapshotMagic, sizeof(kSnapshotMagic));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(top_k_));
  write_le<std::uint64_t>(out, records_.size());
  for (const auto& r : records_) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.text.size()));
    out.write(r.text.data(), static_cast<std::streamsize>(r.text.size()));
    write_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(r.score));
  }
  if (!out) throw std::runtime_error("failed to write index snapshot");
}

CompletionIndex CompletionIndex::load(std::istream& in) {
  const int version = in.get();
  if (version == std::char_traits<char>::eof()) throw std::runtime_error("index snapshot empty");
  if (version != kSnapshotVersion) {
    throw std::runtime_error("unsupported index snapshot version " + std::to_string(version));
  }
  char magic[4];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kSnapshotMagic, 4) != 0) {
    throw std::runtime_error("index snapshot has bad magic");
  }
  const auto top_k = read_le<std::uint32_t>(in);
  const auto count = read_le<std::uint64_t>(in);
  std::vector<ScoredQuery> records;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_le<std::uint32_t>(in);
    std::string text(len, '\0');
    if (!in.read(text.data(), len)) throw std::runtime_error("index snapshot truncated");
    const double s = std::bit_cast<double>(read_le<std::uint64_t>(in));
    records.push_back({std::move(text), {}, s});
  }
  return build(records, top_k);
}

void CompletionIndex::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save(out);
}

CompletionIndex CompletionIndex::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index '" + path + "'");
  return load(in);
}

}  // namespace qac
