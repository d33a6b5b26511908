#pragma once

// Maximum-likelihood fitting of position-bias models on interventional logs.
//
// The objective is NLL@K: the mean negative log-likelihood of the observed
// view labels over impressions at rank <= K,
//
//   NLL@K = -1/|D_K| * sum_{(v, r, x) in D_K} ln P(V = v | R = r, X = x),
//
// with P clamped to [eps, 1 - eps] before the log. Clamped impressions
// contribute a constant and no gradient.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "feedbias/models.hpp"
#include "feedbias/records.hpp"

namespace feedbias {

struct FitConfig {
  std::int64_t k_cutoff = 100;
  int max_iters = 2000;
  double tol = 1e-10;        // stop when the accepted decrease is below tol
  double step_size = 1.0;    // first trial step; later trials use Barzilai-Borwein steps
  std::uint64_t seed = 0;    // recorded with the fit; initialization is deterministic
  std::optional<std::vector<double>> init;  // raw (pre-link) parameters
  std::optional<LinkKind> link;             // defaults to default_link(family)

  /// Throws UsageError on k_cutoff < 1, max_iters < 1, tol <= 0 or step_size <= 0.
  void validate() const;
};

enum class StopReason { tolerance, zero_gradient, line_search_exhausted, max_iters };

struct FitResult {
  PositionBiasModel model = PositionBiasModel::dcg();
  std::vector<double> theta;        // raw parameters, same coordinates as FitConfig::init
  LinkKind link = LinkKind::softplus;
  double initial_nll = 0.0;
  double final_nll = 0.0;
  int iterations = 0;
  bool converged = false;
  StopReason stop_reason = StopReason::max_iters;
  std::int64_t clamp_events = 0;    // impressions whose observed-outcome probability hit the floor
  std::vector<double> nll_history;  // NLL after each accepted iteration, starting at the init
};

/// Reference NLL@K for any model (including dcg and empirical), record by record.
/// Throws UsageError when no record has rank <= k.
double nll_at_k(const PositionBiasModel& model, std::span<const ImpressionRecord> dataset,
                std::int64_t k);

/// NLL@K of one parametric family as a function of its raw parameters.
///
/// The dataset is compiled once into groups of identical context with per-rank
/// view/non-view counts, so repeated evaluation during fitting costs
/// O(distinct (context, rank) pairs) instead of O(records).
class NllObjective {
 public:
  /// family: log, exp, prob or a contextual variant. Throws UsageError when no
  /// record has rank <= k, or when contexts have inconsistent dimensions.
  NllObjective(Family family, LinkKind link, std::span<const ImpressionRecord> dataset,
               std::int64_t k);

  Family family() const noexcept { return family_; }
  LinkKind link() const noexcept { return link_; }
  /// Length of the raw parameter vector: 1 for scalar families, context size otherwise.
  std::size_t dimension() const noexcept { return dimension_; }
  std::int64_t impressions() const noexcept { return impressions_; }

  /// +infinity when theta maps outside the family's parameter domain.
  double value(std::span<const double> theta) const;
  double value_and_gradient(std::span<const double> theta, std::vector<double>& gradient) const;
  std::int64_t clamp_events(std::span<const double> theta) const;

  PositionBiasModel model_at(std::span<const double> theta) const;

  /// Count-weighted mean and standard deviation of each context feature.
  void feature_moments(std::vector<double>& mean, std::vector<double>& stddev) const;

 private:
  struct RankCount {
    std::int64_t rank;
    double views;
    double non_views;
  };
  struct Group {
    ContextVector context;
    std::size_t begin;
    std::size_t end;
  };
  struct Totals {
    double log_likelihood = 0.0;
    double d_param = 0.0;
    std::int64_t clamp_events = 0;
  };

  Totals evaluate_group(const Group& group, double parameter, bool want_gradient) const;
  double evaluate(std::span<const double> theta, std::vector<double>* gradient,
                  std::int64_t* clamp_events) const;

  Family family_;
  Family base_;
  LinkKind link_;
  std::size_t dimension_ = 1;
  std::int64_t impressions_ = 0;
  std::vector<Group> groups_;
  std::vector<RankCount> counts_;
};

/// dNLL@K / dtheta, analytic.
std::vector<double> nll_gradient(Family family, LinkKind link, std::span<const double> theta,
                                 std::span<const ImpressionRecord> dataset, std::int64_t k);
std::vector<double> nll_gradient(Family family, std::span<const double> theta,
                                 std::span<const ImpressionRecord> dataset, std::int64_t k);

/// Default raw starting point: rho = alpha = 1, gamma = 1/2, other coefficients 0.
std::vector<double> default_init(Family family, LinkKind link, std::size_t dimension);

/// Deterministic full-batch gradient descent on NllObjective. Each iteration
/// tries a Barzilai-Borwein step and halves it (at most 30 times) until the NLL
/// strictly decreases. Contextual families are optimized in standardized
/// feature coordinates and mapped back to raw theta.
/// Throws FitError if the objective or gradient becomes non-finite at an iterate.
FitResult fit(Family family, std::span<const ImpressionRecord> dataset, const FitConfig& config);

}  // namespace feedbias
