#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "feedbias/context.hpp"
#include "feedbias/quality.hpp"

namespace feedbias {

/// Deterministic ranking policy: (context, candidate set) -> ranked list.
///
/// Scores are descending-sorted with ties broken by ascending item_id, so the
/// rank pi(a | x) of every candidate is well defined. identity_logged keeps the
/// candidates in the order they are given (the logged order offline, the
/// production order online).
class Policy {
 public:
  enum class Kind { by_true_quality, by_noisy_quality, random, identity_logged };

  static Policy by_true_quality(std::shared_ptr<const QualityModel> quality);
  /// True quality plus item-level Gaussian noise with standard deviation noise_sd.
  static Policy by_noisy_quality(std::shared_ptr<const QualityModel> quality, double noise_sd,
                                 std::uint64_t seed);
  static Policy random(std::uint64_t seed);
  static Policy identity_logged();

  Kind kind() const noexcept { return kind_; }
  double noise_sd() const noexcept { return noise_sd_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::string name() const;

  /// Items in ranked order; element 0 is placed at rank 1.
  std::vector<std::uint64_t> rank(const ContextVector& context,
                                  std::span<const std::uint64_t> candidates) const;

 private:
  Policy(Kind kind, std::shared_ptr<const QualityModel> quality, double noise_sd,
         std::uint64_t seed)
      : kind_(kind), quality_(std::move(quality)), noise_sd_(noise_sd), seed_(seed) {}

  double score(std::uint64_t item, const ContextVector& context) const;

  Kind kind_;
  std::shared_ptr<const QualityModel> quality_;
  double noise_sd_ = 0.0;
  std::uint64_t seed_ = 0;
};

}  // namespace feedbias
