#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qac {

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

/// Signed 8-bit embedding with a per-vector scale: component i dequantizes
/// to scale * values[i]. The L2 norm is computed once at construction.
class QuantizedEmbedding {
 public:
  QuantizedEmbedding() = default;

  /// Throws std::invalid_argument if scale is not a positive finite number,
  /// values is empty, or any value lies outside [-127, 127].
  QuantizedEmbedding(float scale, std::vector<std::int8_t> values);

  std::size_t dim() const { return values_.size(); }
  float scale() const { return scale_; }
  const std::vector<std::int8_t>& values() const { return values_; }
  double norm() const { return norm_; }
  std::int64_t sum_squares() const { return sum_squares_; }
  bool is_zero() const { return sum_squares_ == 0; }

  friend bool operator==(const QuantizedEmbedding& a, const QuantizedEmbedding& b) {
    return a.scale_ == b.scale_ && a.values_ == b.values_;
  }

 private:
  float scale_ = 1.0F;
  std::vector<std::int8_t> values_;
  std::int64_t sum_squares_ = 0;
  double norm_ = 0.0;
};

/// Symmetric max-abs quantization. Throws std::invalid_argument on empty or
/// non-finite input.
QuantizedEmbedding quantize(std::span<const float> v);
std::vector<float> dequantize(const QuantizedEmbedding& q);

enum class PayloadErrc {
  kBadBase64,
  kLengthMismatch,
  kNonPositiveScale,
  kZeroDim,
  kValueOutOfRange,
};

const char* to_string(PayloadErrc code);

class PayloadError : public std::runtime_error {
 public:
  PayloadError(PayloadErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  PayloadErrc code() const { return code_; }

 private:
  PayloadErrc code_;
};

// Payload layout: u32 dim (LE) | f32 scale (LE) | dim x int8.
std::vector<std::uint8_t> to_payload_bytes(const QuantizedEmbedding& q);
QuantizedEmbedding from_payload_bytes(std::span<const std::uint8_t> bytes);

std::string encode_payload(const QuantizedEmbedding& q);
/// Throws PayloadError.
QuantizedEmbedding decode_payload(std::string_view base64);

// Standard alphabet with '=' padding. Decoding is strict: no whitespace,
// length a multiple of 4, zero pad bits.
std::string base64_encode(std::span<const std::uint8_t> bytes);
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

/// Cosine computed from the integer dot product; 0 when either side is the
/// zero vector. Throws std::invalid_argument on dimension mismatch.
double cosine(const QuantizedEmbedding& a, const QuantizedEmbedding& b);

/// Same quantity evaluated on dequantized float vectors.
double cosine_dequantized(const QuantizedEmbedding& a, const QuantizedEmbedding& b);

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

using EmbeddingMap =
    std::unordered_map<std::string, QuantizedEmbedding, StringHash, std::equal_to<>>;

/// Immutable query -> embedding map.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(EmbeddingMap entries)
      : entries_(std::move(entries)) {}

  /// `query` must already be normalized. When `probes` is non-null it
  /// receives the number of keys compared in the hash bucket.
  const QuantizedEmbedding* lookup(std::string_view query,
                                   std::size_t* probes = nullptr) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const EmbeddingMap& entries() const { return entries_; }

 private:
  EmbeddingMap entries_;
};

}  // namespace qac
