#include "feedbias/special.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "feedbias/errors.hpp"

namespace feedbias {
namespace {

constexpr double kAsymptoticThreshold = 15.0;

void require_positive(double x, const char* fn) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

// Stirling correction ln Gamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2] for z >= 15.
double stirling_tail(double z) {
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  // Bernoulli-number coefficients B_{2k} / (2k (2k - 1)), highest order first.
  double s = 1.0 / 156.0;
  s = s * inv2 - 691.0 / 360360.0;
  s = s * inv2 + 1.0 / 1188.0;
  s = s * inv2 - 1.0 / 1680.0;
  s = s * inv2 + 1.0 / 1260.0;
  s = s * inv2 - 1.0 / 360.0;
  s = s * inv2 + 1.0 / 12.0;
  return s * inv;
}

double log_gamma_large(double z) {
  constexpr double half_log_two_pi = 0.91893853320467274178;
  return (z - 0.5) * std::log(z) - z + half_log_two_pi + stirling_tail(z);
}

// Shift z up to the asymptotic range; returns ln of the product z (z+1) ... (z+n-1).
double shift_up(double& z) {
  double product = 1.0;
  while (z < kAsymptoticThreshold) {
    product *= z;
    z += 1.0;
  }
  return std::log(product);
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  double z = x;
  const double log_product = shift_up(z);
  return log_gamma_large(z) - log_product;
}

double digamma(double x) {
  require_positive(x, "digamma");
  double z = x;
  double shift = 0.0;
  while (z < kAsymptoticThreshold) {
    shift += 1.0 / z;
    z += 1.0;
  }
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  double s = -1.0 / 12.0;
  s = s * inv2 + 691.0 / 32760.0;
  s = s * inv2 - 1.0 / 132.0;
  s = s * inv2 + 1.0 / 240.0;
  s = s * inv2 - 1.0 / 252.0;
  s = s * inv2 + 1.0 / 120.0;
  s = s * inv2 - 1.0 / 12.0;
  return std::log(z) - 0.5 * inv + s * inv2 - shift;
}

double log_beta(double a, double b) {
  require_positive(a, "log_beta");
  require_positive(b, "log_beta");
  return log_gamma(b) + log_gamma_ratio(a, b);
}

double log_gamma_ratio(double a, double b) {
  require_positive(a, "log_gamma_ratio");
  require_positive(b, "log_gamma_ratio");
  if (a < kAsymptoticThreshold) return log_gamma(a) - log_gamma(a + b);
  // (a - 1/2) ln a - (a + b - 1/2) ln(a + b) rewritten around log1p(b / a).
  const double c = a + b;
  return -(a - 0.5) * std::log1p(b / a) - b * std::log(c) + b + stirling_tail(a) -
         stirling_tail(c);
}

}  // namespace feedbias
