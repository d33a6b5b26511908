#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace feedbias {

// Argument outside a function's mathematical domain (x <= 0 for log_gamma, rank < 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller misuse: empty datasets, missing contexts, malformed files, bad flags.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Pearson correlation requested on a sequence with zero variance.
class UndefinedCorrelationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The optimizer produced a non-finite objective. Carries the last finite iterate.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<double> last_theta, double last_nll)
      : std::runtime_error(what), last_theta_(std::move(last_theta)), last_nll_(last_nll) {}

  const std::vector<double>& last_theta() const noexcept { return last_theta_; }
  double last_nll() const noexcept { return last_nll_; }

 private:
  std::vector<double> last_theta_;
  double last_nll_;
};

}  // namespace feedbias
