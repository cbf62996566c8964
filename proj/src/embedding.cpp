#include "qac/embedding.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace qac {

namespace {

std::int64_t integer_dot(const std::vector<std::int8_t>& a,
                         const std::vector<std::int8_t>& b) {
  // int32 partial sums stay exact for blocks of up to 2^17 components.
  constexpr std::size_t kBlock = 1 << 16;
  std::int64_t total = 0;
  for (std::size_t start = 0; start < a.size(); start += kBlock) {
    const std::size_t end = std::min(a.size(), start + kBlock);
    std::int32_t partial = 0;
    for (std::size_t i = start; i < end; ++i) {
      partial += static_cast<std::int32_t>(a[i]) * static_cast<std::int32_t>(b[i]);
    }
    total += partial;
  }
  return total;
}

void write_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t read_u32_le(std::span<const std::uint8_t> bytes) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

int base64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

QuantizedEmbedding::QuantizedEmbedding(float scale, std::vector<std::int8_t> values)
    : scale_(scale), values_(std::move(values)) {
  if (!(std::isfinite(scale_) && scale_ > 0.0F)) {
    throw std::invalid_argument("embedding scale must be positive and finite");
  }
  if (values_.empty()) {
    throw std::invalid_argument("embedding dimension must be positive");
  }
  for (std::int8_t v : values_) {
    if (v == -128) throw std::invalid_argument("embedding value -128 out of range");
    sum_squares_ += static_cast<std::int64_t>(v) * v;
  }
  norm_ = static_cast<double>(scale_) * std::sqrt(static_cast<double>(sum_squares_));
}

QuantizedEmbedding quantize(std::span<const float> v) {
  if (v.empty()) throw std::invalid_argument("cannot quantize an empty vector");
  double max_abs = 0.0;
  for (float x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("cannot quantize non-finite values");
    max_abs = std::max(max_abs, std::fabs(static_cast<double>(x)));
  }
  std::vector<std::int8_t> values(v.size(), 0);
  if (max_abs == 0.0) return QuantizedEmbedding(1.0F, std::move(values));

  // Round against the stored binary32 scale, not max_abs / 127, so that
  // |v - q * scale| <= scale / 2 holds for the scale that is serialized.
  const float scale = static_cast<float>(max_abs / 127.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double q = std::round(static_cast<double>(v[i]) / static_cast<double>(scale));
    values[i] = static_cast<std::int8_t>(std::clamp(q, -127.0, 127.0));
  }
  return QuantizedEmbedding(scale, std::move(values));
}

std::vector<float> dequantize(const QuantizedEmbedding& q) {
  std::vector<float> out;
  out.reserve(q.dim());
  for (std::int8_t v : q.values()) out.push_back(q.scale() * static_cast<float>(v));
  return out;
}

const char* to_string(PayloadErrc code) {
  switch (code) {
    case PayloadErrc::kBadBase64: return "bad base64";
    case PayloadErrc::kLengthMismatch: return "payload length mismatch";
    case PayloadErrc::kNonPositiveScale: return "non-positive scale";
    case PayloadErrc::kZeroDim: return "zero dimension";
    case PayloadErrc::kValueOutOfRange: return "value out of range";
  }
  return "unknown payload error";
}

std::vector<std::uint8_t> to_payload_bytes(const QuantizedEmbedding& q) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + q.dim());
  write_u32_le(out, static_cast<std::uint32_t>(q.dim()));
  write_u32_le(out, std::bit_cast<std::uint32_t>(q.scale()));
  for (std::int8_t v : q.values()) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

QuantizedEmbedding from_payload_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) {
    throw PayloadError(PayloadErrc::kLengthMismatch,
                       "payload shorter than its 8-byte header");
  }
  const std::uint32_t dim = read_u32_le(bytes.first(4));
  if (dim == 0) throw PayloadError(PayloadErrc::kZeroDim, "payload declares dim 0");
  if (bytes.size() != 8 + static_cast<std::size_t>(dim)) {
    throw PayloadError(PayloadErrc::kLengthMismatch,
                       "payload has " + std::to_string(bytes.size()) +
                           " bytes, expected " + std::to_string(8 + std::size_t{dim}));
  }
  const float scale = std::bit_cast<float>(read_u32_le(bytes.subspan(4, 4)));
  if (!(std::isfinite(scale) && scale > 0.0F)) {
    throw PayloadError(PayloadErrc::kNonPositiveScale, "payload scale is not positive");
  }
  std::vector<std::int8_t> values(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    values[i] = static_cast<std::int8_t>(bytes[8 + i]);
    if (values[i] == -128) {
      throw PayloadError(PayloadErrc::kValueOutOfRange, "payload value -128");
    }
  }
  return QuantizedEmbedding(scale, std::move(values));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                      bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) return std::nullopt;
  if (text.empty()) return std::vector<std::uint8_t>{};

  // EVP_DecodeBlock is lenient about whitespace and padding placement, so the
  // canonical form is checked here first.
  std::size_t padding = 0;
  if (text.back() == '=') ++padding;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++padding;
  for (std::size_t i = 0; i < text.size() - padding; ++i) {
    if (base64_value(text[i]) < 0) return std::nullopt;
  }
  if (padding > 0) {
    const int last = base64_value(text[text.size() - padding - 1]);
    const int pad_mask = padding == 1 ? 0x3 : 0xF;
    if ((last & pad_mask) != 0) return std::nullopt;
  }

  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) return std::nullopt;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string encode_payload(const QuantizedEmbedding& q) {
  return base64_encode(to_payload_bytes(q));
}

QuantizedEmbedding decode_payload(std::string_view base64) {
  auto bytes = base64_decode(base64);
  if (!bytes) throw PayloadError(PayloadErrc::kBadBase64, "payload is not valid base64");
  return from_payload_bytes(*bytes);
}

double cosine(const QuantizedEmbedding& a, const QuantizedEmbedding& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()) + ")");
  }
  if (a.is_zero() || b.is_zero()) return 0.0;
  // Scales cancel between numerator and denominator; dropping them keeps the
  // result exactly invariant to rescaling the source vector.
  const double dot = static_cast<double>(integer_dot(a.values(), b.values()));
  const double denom = std::sqrt(static_cast<double>(a.sum_squares())) *
                       std::sqrt(static_cast<double>(b.sum_squares()));
  return std::clamp(dot / denom, -1.0, 1.0);
}

double cosine_dequantized(const QuantizedEmbedding& a, const QuantizedEmbedding& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("cosine: dimension mismatch");
  if (a.is_zero() || b.is_zero()) return 0.0;
  const auto fa = dequantize(a);
  const auto fb = dequantize(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    dot += static_cast<double>(fa[i]) * fb[i];
    na += static_cast<double>(fa[i]) * fa[i];
    nb += static_cast<double>(fb[i]) * fb[i];
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

const QuantizedEmbedding* EmbeddingTable::lookup(std::string_view query,
                                                 std::size_t* probes) const {
  if (probes != nullptr) {
    *probes = 0;
    if (entries_.bucket_count() == 0) return nullptr;
    const std::string key(query);
    const std::size_t b = entries_.bucket(key);
    for (auto it = entries_.begin(b); it != entries_.end(b); ++it) {
      ++*probes;
      if (it->first == query) return &it->second;
    }
    return nullptr;
  }
  auto it = entries_.find(query);
  return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace qac
