#include "feedbias/context.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "feedbias/errors.hpp"

namespace feedbias {

ContextVector::ContextVector(std::span<const double> values) : size_(values.size()) {
  if (values.empty() || values.size() > kMaxFeatures) {
    throw UsageError("context must have between 1 and " + std::to_string(kMaxFeatures) +
                     " features, got " + std::to_string(values.size()));
  }
  if (values[0] != 1.0) throw UsageError("context feature 0 must be the constant 1");
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    throw UsageError("context features must be finite");
  }
  std::copy(values.begin(), values.end(), values_.begin());
}

double ContextVector::dot(std::span<const double> theta) const {
  if (theta.size() != size_) {
    throw UsageError("parameter length " + std::to_string(theta.size()) +
                     " does not match context dimension " + std::to_string(size_));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < size_; ++i) acc += theta[i] * values_[i];
  return acc;
}

bool operator==(const ContextVector& a, const ContextVector& b) noexcept {
  return a.size_ == b.size_ && std::equal(a.values_.begin(), a.values_.begin() + a.size_,
                                          b.values_.begin());
}

}  // namespace feedbias
