#include "hofilt/multiindex.hpp"

#include <algorithm>

#include "hofilt/error.hpp"

namespace hofilt {

namespace {

void check_dims(int m, int noise_dim) {
  if (m < 0) throw DomainError("order must be non-negative");
  if (noise_dim < 1) throw DomainError("noise dimension must be positive");
  if (noise_dim > kMaxNoiseDim) {
    throw ConfigError("noise dimension " + std::to_string(noise_dim) + " exceeds limit " +
                      std::to_string(kMaxNoiseDim));
  }
  if (m > kMaxOrder + 1) {
    throw ConfigError("index length " + std::to_string(m) + " exceeds limit");
  }
}

// All words of exactly `len` labels over [lo, hi], lexicographic.
void append_words(std::vector<MultiIndex>& out, std::size_t len, int lo, int hi) {
  std::vector<std::uint8_t> w(len, static_cast<std::uint8_t>(lo));
  for (;;) {
    out.emplace_back(w);
    std::size_t i = len;
    while (i > 0) {
      --i;
      if (w[i] < hi) {
        ++w[i];
        std::fill(w.begin() + static_cast<std::ptrdiff_t>(i) + 1, w.end(),
                  static_cast<std::uint8_t>(lo));
        break;
      }
      if (i == 0) return;
    }
    if (len == 0) return;
  }
}

}  // namespace

MultiIndex::MultiIndex(std::initializer_list<int> labels) {
  for (int l : labels) {
    if (l < 0 || l > kMaxNoiseDim) throw DomainError("label out of range");
    labels_.push_back(static_cast<std::uint8_t>(l));
  }
}

std::size_t MultiIndex::zero_count() const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 0));
}

MultiIndex MultiIndex::drop_last() const {
  if (labels_.empty()) return {};
  return MultiIndex(std::vector<std::uint8_t>(labels_.begin(), labels_.end() - 1));
}

MultiIndex MultiIndex::drop_first() const {
  if (labels_.empty()) return {};
  return MultiIndex(std::vector<std::uint8_t>(labels_.begin() + 1, labels_.end()));
}

MultiIndex MultiIndex::concat(const MultiIndex& other) const {
  std::vector<std::uint8_t> w = labels_;
  w.insert(w.end(), other.labels_.begin(), other.labels_.end());
  return MultiIndex(std::move(w));
}

std::string MultiIndex::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(labels_[i]);
  }
  return s + ")";
}

bool operator<(const MultiIndex& a, const MultiIndex& b) {
  if (a.length() != b.length()) return a.length() < b.length();
  return a.labels_ < b.labels_;
}

std::vector<MultiIndex> enumerate_m(int m, int noise_dim, bool include_zero) {
  check_dims(m, noise_dim);
  std::vector<MultiIndex> out;
  out.emplace_back();
  for (int len = 1; len <= m; ++len) {
    append_words(out, static_cast<std::size_t>(len), include_zero ? 0 : 1, noise_dim);
  }
  return out;
}

std::vector<MultiIndex> remainder_set(int m, int noise_dim) {
  check_dims(m + 1, noise_dim);
  std::vector<MultiIndex> out;
  append_words(out, static_cast<std::size_t>(m + 1), 0, noise_dim);
  return out;
}

std::vector<MultiIndex> m1_band(int m, int noise_dim) {
  if (m < 3) throw DomainError("band of lengths 2..m-1 is empty for m < 3");
  check_dims(m, noise_dim);
  std::vector<MultiIndex> out;
  for (int len = 2; len <= m - 1; ++len) {
    append_words(out, static_cast<std::size_t>(len), 0, noise_dim);
  }
  return out;
}

std::vector<std::vector<MultiIndex>> partition_by_zero_count(const std::vector<MultiIndex>& set,
                                                             std::size_t max_zeros) {
  std::vector<std::vector<MultiIndex>> parts(max_zeros + 1);
  for (const auto& a : set) {
    if (a.zero_count() > max_zeros) throw DomainError("index has more zeros than allowed");
    parts[a.zero_count()].push_back(a);
  }
  return parts;
}

}  // namespace hofilt
