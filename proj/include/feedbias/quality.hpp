#pragma once

#include <cstdint>
#include <vector>

#include "feedbias/context.hpp"

namespace feedbias {

/// Ground-truth item quality: the probability that a viewed item is clicked.
///
///   q(i, x) = clamp(base_i + weight_i * (x[1] - 1) / 49, 0, 1)
///
/// base_i ~ Uniform(quality_min, quality_max) and
/// weight_i ~ Uniform(-interaction_scale, interaction_scale) drawn from the quality seed.
class QualityModel {
 public:
  QualityModel(std::uint64_t n_items, std::uint64_t quality_seed, double quality_min,
               double quality_max, double interaction_scale);
  /// Explicit qualities; weights may be empty (no context interaction).
  QualityModel(std::vector<double> base, std::vector<double> weights);

  std::uint64_t n_items() const noexcept { return base_.size(); }
  double base(std::uint64_t item) const { return base_.at(item); }
  double operator()(std::uint64_t item, const ContextVector& context) const;

 private:
  std::vector<double> base_;
  std::vector<double> weights_;
};

}  // namespace feedbias
