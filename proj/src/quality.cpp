#include "feedbias/quality.hpp"

#include <algorithm>
#include <cmath>

#include "feedbias/errors.hpp"
#include "feedbias/rng.hpp"

namespace feedbias {

QualityModel::QualityModel(std::uint64_t n_items, std::uint64_t quality_seed, double quality_min,
                           double quality_max, double interaction_scale) {
  if (!(quality_min >= 0.0 && quality_max <= 1.0 && quality_min <= quality_max)) {
    throw UsageError("quality range must satisfy 0 <= min <= max <= 1");
  }
  if (!(interaction_scale >= 0.0)) throw UsageError("interaction scale must be >= 0");
  Rng rng(quality_seed);
  base_.resize(n_items);
  weights_.resize(n_items);
  for (std::uint64_t i = 0; i < n_items; ++i) {
    base_[i] = rng.uniform(quality_min, quality_max);
    weights_[i] = rng.uniform(-interaction_scale, interaction_scale);
  }
}

QualityModel::QualityModel(std::vector<double> base, std::vector<double> weights)
    : base_(std::move(base)), weights_(std::move(weights)) {
  if (!weights_.empty() && weights_.size() != base_.size()) {
    throw UsageError("quality weights must match the number of items");
  }
  for (double q : base_) {
    if (!(q >= 0.0 && q <= 1.0)) throw UsageError("item quality must lie in [0, 1]");
  }
}

double QualityModel::operator()(std::uint64_t item, const ContextVector& context) const {
  double q = base_.at(item);
  if (!weights_.empty() && context.size() > 1) q += weights_[item] * (context[1] - 1.0) / 49.0;
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace feedbias
