#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace feedbias {

/// Feature vector describing a session. Index 0 is the constant 1-feature,
/// index 1 the user's past average scroll depth and index 2 the time-of-day
/// average scroll depth. Stored inline; at most kMaxFeatures entries.
class ContextVector {
 public:
  static constexpr std::size_t kMaxFeatures = 8;

  /// Throws UsageError unless values[0] == 1, all entries are finite and the
  /// size is in [1, kMaxFeatures].
  explicit ContextVector(std::span<const double> values);
  ContextVector(std::initializer_list<double> values)
      : ContextVector(std::span<const double>(values.begin(), values.size())) {}

  /// The constant-only context (1).
  static ContextVector constant() { return ContextVector({1.0}); }

  std::size_t size() const noexcept { return size_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return {values_.data(), size_}; }

  /// theta^T x. theta must have the same length.
  double dot(std::span<const double> theta) const;

  friend bool operator==(const ContextVector& a, const ContextVector& b) noexcept;

 private:
  std::array<double, kMaxFeatures> values_{};
  std::size_t size_ = 0;
};

}  // namespace feedbias
