#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace hofilt {

/// Largest noise dimension and expansion order supported; tables grow as
/// (d_V + 1)^m.
inline constexpr int kMaxNoiseDim = 8;
inline constexpr int kMaxOrder = 6;

/// Finite word over the labels {0, 1, ..., d_V}. Label 0 stands for time,
/// labels r >= 1 for the r-th Brownian component. The empty word is `v`.
class MultiIndex {
 public:
  MultiIndex() = default;
  MultiIndex(std::initializer_list<int> labels);
  explicit MultiIndex(std::vector<std::uint8_t> labels) : labels_(std::move(labels)) {}

  std::size_t length() const noexcept { return labels_.size(); }
  std::size_t zero_count() const noexcept;
  bool empty() const noexcept { return labels_.empty(); }
  int operator[](std::size_t i) const noexcept { return labels_[i]; }
  int last() const noexcept { return labels_.back(); }
  const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }

  /// alpha-: all but the last label (v stays v).
  MultiIndex drop_last() const;
  /// -alpha: all but the first label (v stays v).
  MultiIndex drop_first() const;
  MultiIndex concat(const MultiIndex& other) const;

  /// "(1,0,2)"; the empty index prints as "()".
  std::string to_string() const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  /// Length first, then lexicographic.
  friend bool operator<(const MultiIndex& a, const MultiIndex& b);

 private:
  std::vector<std::uint8_t> labels_;
};

/// All indices of length <= m over {0..d_V} (or {1..d_V} without zero), in
/// length-then-lexicographic order, starting with v.
std::vector<MultiIndex> enumerate_m(int m, int noise_dim, bool include_zero = true);

/// Indices of length exactly m + 1 over {0..d_V}.
std::vector<MultiIndex> remainder_set(int m, int noise_dim);

/// Indices with 2 <= length <= m - 1; requires m >= 3.
std::vector<MultiIndex> m1_band(int m, int noise_dim);

/// Splits a set by zero count: result[k] holds the members with k zeros.
std::vector<std::vector<MultiIndex>> partition_by_zero_count(const std::vector<MultiIndex>& set,
                                                             std::size_t max_zeros);

}  // namespace hofilt
