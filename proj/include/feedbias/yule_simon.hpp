#pragma once

// Yule-Simon scroll-depth distribution.
//
//   P(D = d)  = rho * B(d, rho + 1),                         d = 1, 2, ...
//   P(D >= r) = 1 for r = 1, (r - 1) * B(r - 1, rho + 1) otherwise
//
// The survival function is the probability that an item at rank r is viewed.
// With rho = 1 it reduces to the reciprocal rank 1 / r.
// Everything is evaluated in log-space and exponentiated at the boundary.

#include <cstdint>

#include "feedbias/rng.hpp"

namespace feedbias {

class YuleSimonParams {
 public:
  static constexpr double kMinRho = 1e-6;

  /// Throws DomainError unless rho is finite and >= kMinRho.
  explicit YuleSimonParams(double rho);

  double rho() const noexcept { return rho_; }

 private:
  double rho_;
};

double yule_simon_log_pmf(YuleSimonParams params, std::int64_t depth);

/// ln P(D >= rank).
double log_survival(YuleSimonParams params, std::int64_t rank);

/// P(D >= rank), in (0, 1].
double survival(YuleSimonParams params, std::int64_t rank);

/// d/drho ln P(D >= rank) = psi(rho + 1) - psi(rank + rho) for rank >= 2, zero at rank 1.
double d_log_survival_d_rho(YuleSimonParams params, std::int64_t rank);

/// Exact draw via the Beta-geometric mixture: p = U^(1/rho) ~ Beta(rho, 1),
/// then D ~ Geometric(p) on {1, 2, ...}. Saturates at kMaxDepth.
std::int64_t sample_depth(YuleSimonParams params, Rng& rng);

inline constexpr std::int64_t kMaxDepth = std::int64_t{1} << 62;

}  // namespace feedbias
