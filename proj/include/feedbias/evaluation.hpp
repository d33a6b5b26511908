#pragma once

// Counterfactual evaluation of ranking policies from interventional logs.
//
// unbiased_dcg reweights every logged click by the ratio of its exposure
// probability under the evaluated policy to its exposure probability at the
// logged rank:
//
//   1/N * sum_i c_i * P(V=1 | R=pi(a_i|x_i), x_i) / P(V=1 | R=r_i, x_i)

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feedbias/models.hpp"
#include "feedbias/policy.hpp"
#include "feedbias/records.hpp"
#include "feedbias/simulator.hpp"

namespace feedbias {

/// Variance-reduction switches. Both off by default; off in every acceptance run.
struct IpsOptions {
  std::optional<double> weight_cap;
  bool self_normalize = false;
};

/// Sessions are reconstructed by grouping on session_id; each session's ranks
/// must be exactly 1..n. Throws UsageError otherwise or on an empty dataset.
double unbiased_dcg(std::span<const ImpressionRecord> dataset, const Policy& policy,
                    const PositionBiasModel& model, const IpsOptions& options = {});

/// Restricts quality estimation to contexts whose feature lies in [lo, hi).
/// The default bucket accepts every context.
struct ContextBucket {
  std::size_t feature = 0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(const ContextVector& context) const;
};

struct QualityEstimate {
  double value = 0.0;
  double std_error = 0.0;  // delta-method standard error of the ratio
  std::int64_t impressions = 0;
};

/// sum of clicks / sum of P(V=1 | r_i, x_i) over the item's impressions in the bucket.
/// Throws UsageError when the item has no impression in the bucket.
QualityEstimate estimate_quality(std::span<const ImpressionRecord> dataset,
                                 const PositionBiasModel& model, std::uint64_t item_id,
                                 const ContextBucket& bucket = {});

/// Pearson's r. Throws UsageError on length mismatch or fewer than two points,
/// UndefinedCorrelationError on zero variance.
double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

struct NamedModel {
  std::string name;
  PositionBiasModel model;
};

struct StudyOptions {
  int n_trials = 20;
  std::int64_t n_mc = 20000;  // online sessions per policy per trial
  std::uint64_t seed = 0;
  IpsOptions ips;
};

struct CorrelationRow {
  std::string model;
  int trial = 0;
  double correlation = 0.0;
};

struct StudySummaryRow {
  std::string model;
  double mean_correlation = 0.0;
  double relative_improvement_vs_dcg_pct = 0.0;
};

struct StudyResult {
  std::vector<std::string> models;
  std::vector<std::string> policies;
  std::vector<CorrelationRow> correlations;  // trial-major, then model
  std::vector<StudySummaryRow> summary;
  // offline[trial][model][policy] (per impression), online[trial][policy] (per session)
  std::vector<std::vector<std::vector<double>>> offline;
  std::vector<std::vector<OnlineReward>> online;
};

/// For each trial: simulate a logged dataset from config (seed derived from
/// options.seed and the trial), estimate every policy offline under every
/// model, estimate every policy online by Monte Carlo, and correlate the two
/// across policies. A dcg model is added when none is supplied.
/// Throws UndefinedCorrelationError with fewer than two policies.
StudyResult offline_online_study(const std::vector<NamedModel>& models,
                                 const std::vector<Policy>& policies, const SimConfig& config,
                                 const StudyOptions& options);

}  // namespace feedbias
