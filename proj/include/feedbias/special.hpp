#pragma once

namespace feedbias {

/// ln Gamma(x) for x > 0. Upward recurrence below 15, Stirling series above.
/// Throws DomainError for non-positive or non-finite x.
double log_gamma(double x);

/// Digamma psi(x) = d/dx ln Gamma(x) for x > 0.
double digamma(double x);

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
double log_beta(double a, double b);

/// ln Gamma(a) - ln Gamma(a + b), evaluated without the cancellation that the
/// direct difference suffers for large a.
double log_gamma_ratio(double a, double b);

}  // namespace feedbias
