#include "feedbias/yule_simon.hpp"

#include <cmath>
#include <string>

#include "feedbias/errors.hpp"
#include "feedbias/special.hpp"

namespace feedbias {
namespace {

void require_rank(std::int64_t r, const char* what) {
  if (r < 1) throw DomainError(std::string(what) + " must be >= 1, got " + std::to_string(r));
}

}  // namespace

YuleSimonParams::YuleSimonParams(double rho) : rho_(rho) {
  if (!std::isfinite(rho) || rho < kMinRho) {
    throw DomainError("Yule-Simon rho must be finite and >= 1e-6, got " + std::to_string(rho));
  }
}

double yule_simon_log_pmf(YuleSimonParams params, std::int64_t depth) {
  require_rank(depth, "depth");
  const double rho = params.rho();
  return std::log(rho) + log_beta(static_cast<double>(depth), rho + 1.0);
}

double log_survival(YuleSimonParams params, std::int64_t rank) {
  require_rank(rank, "rank");
  if (rank == 1) return 0.0;
  // ln[(r - 1) B(r - 1, rho + 1)] = ln Gamma(r) + ln Gamma(rho + 1) - ln Gamma(r + rho)
  const double rho = params.rho();
  return log_gamma(rho + 1.0) + log_gamma_ratio(static_cast<double>(rank), rho);
}

double survival(YuleSimonParams params, std::int64_t rank) {
  return std::exp(log_survival(params, rank));
}

double d_log_survival_d_rho(YuleSimonParams params, std::int64_t rank) {
  require_rank(rank, "rank");
  if (rank == 1) return 0.0;
  const double rho = params.rho();
  return digamma(rho + 1.0) - digamma(static_cast<double>(rank) + rho);
}

std::int64_t sample_depth(YuleSimonParams params, Rng& rng) {
  const double u_mix = rng.uniform();
  const double u_geom = rng.uniform();
  const double p = std::exp(std::log(u_mix) / params.rho());
  const double log_fail = std::log1p(-p);
  if (log_fail == 0.0) return kMaxDepth;
  const double extra = std::floor(std::log(u_geom) / log_fail);
  if (!(extra < static_cast<double>(kMaxDepth - 1))) return kMaxDepth;
  return 1 + static_cast<std::int64_t>(extra);
}

}  // namespace feedbias
