#include "feedbias/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <numeric>

#include "feedbias/errors.hpp"
#include "feedbias/rng.hpp"

namespace feedbias {
namespace {

// Counter-based uniform in (0, 1) keyed on (seed, item, lane). Seeding a full
// Mersenne Twister per item costs more than the rest of the ranking.
double keyed_uniform(std::uint64_t seed, std::uint64_t item, std::uint64_t lane) {
  const std::uint64_t bits = mix64(hash_combine(hash_combine(seed, item), lane));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Policy Policy::by_true_quality(std::shared_ptr<const QualityModel> quality) {
  if (!quality) throw UsageError("by-true-quality policy needs a quality model");
  return Policy(Kind::by_true_quality, std::move(quality), 0.0, 0);
}

Policy Policy::by_noisy_quality(std::shared_ptr<const QualityModel> quality, double noise_sd,
                                std::uint64_t seed) {
  if (!quality) throw UsageError("by-noisy-quality policy needs a quality model");
  if (!(noise_sd >= 0.0)) throw UsageError("noise_sd must be >= 0");
  return Policy(Kind::by_noisy_quality, std::move(quality), noise_sd, seed);
}

Policy Policy::random(std::uint64_t seed) { return Policy(Kind::random, nullptr, 0.0, seed); }

Policy Policy::identity_logged() { return Policy(Kind::identity_logged, nullptr, 0.0, 0); }

std::string Policy::name() const {
  char buf[64];
  switch (kind_) {
    case Kind::by_true_quality:
      return "by-true-quality";
    case Kind::by_noisy_quality:
      std::snprintf(buf, sizeof buf, "by-noisy-quality(%g;%llu)", noise_sd_,
                    static_cast<unsigned long long>(seed_));
      return buf;
    case Kind::random:
      std::snprintf(buf, sizeof buf, "random(%llu)", static_cast<unsigned long long>(seed_));
      return buf;
    case Kind::identity_logged:
      return "identity-logged";
  }
  return "unknown";
}

double Policy::score(std::uint64_t item, const ContextVector& context) const {
  switch (kind_) {
    case Kind::by_true_quality:
      return (*quality_)(item, context);
    case Kind::by_noisy_quality: {
      const double u1 = keyed_uniform(seed_, item, 1);
      const double u2 = keyed_uniform(seed_, item, 2);
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      return (*quality_)(item, context) + noise_sd_ * z;
    }
    case Kind::random:
      return keyed_uniform(seed_, item, 0);
    case Kind::identity_logged:
      break;
  }
  return 0.0;
}

std::vector<std::uint64_t> Policy::rank(const ContextVector& context,
                                        std::span<const std::uint64_t> candidates) const {
  std::vector<std::uint64_t> ranked(candidates.begin(), candidates.end());
  if (kind_ == Kind::identity_logged) return ranked;
  std::vector<std::pair<double, std::uint64_t>> scored;
  scored.reserve(ranked.size());
  for (std::uint64_t item : ranked) scored.emplace_back(score(item, context), item);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; i < scored.size(); ++i) ranked[i] = scored[i].second;
  return ranked;
}

}  // namespace feedbias
