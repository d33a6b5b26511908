#include "feedbias/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "feedbias/errors.hpp"
#include "feedbias/rng.hpp"

namespace feedbias {
namespace {

// Index ranges of records grouped by session, each sorted by rank.
struct SessionIndex {
  std::vector<std::size_t> order;
  std::vector<std::size_t> starts;  // starts.back() == order.size()
};

SessionIndex index_sessions(std::span<const ImpressionRecord> dataset) {
  SessionIndex index;
  index.order.resize(dataset.size());
  std::iota(index.order.begin(), index.order.end(), std::size_t{0});
  const auto before = [&](std::size_t a, std::size_t b) {
    if (dataset[a].session_id != dataset[b].session_id) {
      return dataset[a].session_id < dataset[b].session_id;
    }
    return dataset[a].rank < dataset[b].rank;
  };
  // Simulated and serialized datasets are already in (session, rank) order.
  if (!std::is_sorted(index.order.begin(), index.order.end(), before)) {
    std::stable_sort(index.order.begin(), index.order.end(), before);
  }
  for (std::size_t i = 0; i < index.order.size(); ++i) {
    if (i == 0 || dataset[index.order[i]].session_id != dataset[index.order[i - 1]].session_id) {
      index.starts.push_back(i);
    }
  }
  index.starts.push_back(index.order.size());
  return index;
}

}  // namespace

double unbiased_dcg(std::span<const ImpressionRecord> dataset, const Policy& policy,
                    const PositionBiasModel& model, const IpsOptions& options) {
  if (dataset.empty()) throw UsageError("unbiased_dcg: dataset is empty");
  const SessionIndex index = index_sessions(dataset);

  double weighted_clicks = 0.0;
  double weight_total = 0.0;
  std::vector<std::uint64_t> slate;
  std::vector<std::pair<std::uint64_t, std::int64_t>> target_rank;  // (item, rank) by item
  for (std::size_t s = 0; s + 1 < index.starts.size(); ++s) {
    const std::size_t begin = index.starts[s];
    const std::size_t end = index.starts[s + 1];
    const ImpressionRecord& head = dataset[index.order[begin]];
    bool any_click = false;
    slate.clear();
    for (std::size_t i = begin; i < end; ++i) {
      const ImpressionRecord& r = dataset[index.order[i]];
      if (r.rank != static_cast<std::int64_t>(i - begin + 1)) {
        throw UsageError("unbiased_dcg: session " + std::to_string(head.session_id) +
                         " is missing part of its slate (ranks are not 1..n)");
      }
      slate.push_back(r.item_id);
      any_click = any_click || r.clicked;
    }
    if (!any_click && !options.self_normalize) continue;

    const auto ranked = policy.rank(head.context, slate);
    if (ranked.size() != slate.size()) throw UsageError("policy must rank the whole slate");
    target_rank.clear();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      target_rank.emplace_back(ranked[i], static_cast<std::int64_t>(i + 1));
    }
    std::sort(target_rank.begin(), target_rank.end());
    for (std::size_t i = begin; i < end; ++i) {
      const ImpressionRecord& r = dataset[index.order[i]];
      if (!r.clicked && !options.self_normalize) continue;
      const auto it = std::lower_bound(target_rank.begin(), target_rank.end(),
                                       std::make_pair(r.item_id, std::int64_t{0}));
      if (it == target_rank.end() || it->first != r.item_id) {
        throw UsageError("policy dropped a candidate");
      }
      double weight = model.prob_view(it->second, r.context) / model.prob_view(r.rank, r.context);
      if (options.weight_cap) weight = std::min(weight, *options.weight_cap);
      weight_total += weight;
      if (r.clicked) weighted_clicks += weight;
    }
  }
  const double n = static_cast<double>(dataset.size());
  if (options.self_normalize) return weight_total > 0.0 ? weighted_clicks / weight_total : 0.0;
  return weighted_clicks / n;
}

bool ContextBucket::contains(const ContextVector& context) const {
  if (feature >= context.size()) return false;
  const double v = context[feature];
  return v >= lo && v < hi;
}

QualityEstimate estimate_quality(std::span<const ImpressionRecord> dataset,
                                 const PositionBiasModel& model, std::uint64_t item_id,
                                 const ContextBucket& bucket) {
  std::vector<std::pair<double, double>> pairs;  // (click, exposure)
  double clicks = 0.0;
  double exposure = 0.0;
  for (const auto& r : dataset) {
    if (r.item_id != item_id || !bucket.contains(r.context)) continue;
    const double p = model.prob_view(r.rank, r.context);
    const double c = r.clicked ? 1.0 : 0.0;
    pairs.emplace_back(c, p);
    clicks += c;
    exposure += p;
  }
  if (pairs.empty()) {
    throw UsageError("estimate_quality: item " + std::to_string(item_id) +
                     " has no impressions in the bucket");
  }
  QualityEstimate estimate;
  estimate.impressions = static_cast<std::int64_t>(pairs.size());
  estimate.value = clicks / exposure;
  double residual_sq = 0.0;
  for (const auto& [c, p] : pairs) {
    const double e = c - estimate.value * p;
    residual_sq += e * e;
  }
  estimate.std_error = std::sqrt(residual_sq) / exposure;
  return estimate;
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw UsageError("pearson_correlation: length mismatch");
  if (xs.size() < 2) throw UsageError("pearson_correlation: need at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("pearson_correlation: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

StudyResult offline_online_study(const std::vector<NamedModel>& models,
                                 const std::vector<Policy>& policies, const SimConfig& config,
                                 const StudyOptions& options) {
  if (policies.size() < 2) {
    throw UndefinedCorrelationError(
        "offline_online_study: correlation across policies needs at least two policies");
  }
  if (options.n_trials < 1) throw UsageError("offline_online_study: n_trials must be >= 1");
  config.validate();

  std::vector<NamedModel> all = models;
  const auto has_dcg = std::any_of(all.begin(), all.end(), [](const NamedModel& m) {
    return m.model.family() == Family::dcg;
  });
  if (!has_dcg) all.push_back(NamedModel{"dcg", PositionBiasModel::dcg()});
  std::size_t dcg_index = 0;
  while (all[dcg_index].model.family() != Family::dcg) ++dcg_index;

  const QualityModel quality = config.quality_model();
  StudyResult result;
  for (const auto& m : all) result.models.push_back(m.name);
  for (const auto& p : policies) result.policies.push_back(p.name());

  std::vector<double> correlation_sums(all.size(), 0.0);
  for (int trial = 0; trial < options.n_trials; ++trial) {
    const auto t = static_cast<std::uint64_t>(trial);
    SimConfig logged = config;
    logged.seed = hash_combine(options.seed, 2 * t);
    const Dataset dataset = simulate_dataset(logged, quality);

    std::vector<OnlineReward> online;
    std::vector<double> online_means;
    for (std::size_t p = 0; p < policies.size(); ++p) {
      Rng rng = Rng::substream(hash_combine(options.seed, 2 * t + 1), p);
      online.push_back(online_reward(policies[p], config, quality, options.n_mc, rng));
      online_means.push_back(online.back().mean);
    }

    std::vector<std::vector<double>> offline(all.size());
    for (std::size_t m = 0; m < all.size(); ++m) {
      for (const auto& policy : policies) {
        offline[m].push_back(unbiased_dcg(dataset, policy, all[m].model, options.ips));
      }
      const double r = pearson_correlation(offline[m], online_means);
      correlation_sums[m] += r;
      result.correlations.push_back(CorrelationRow{all[m].name, trial, r});
    }
    result.offline.push_back(std::move(offline));
    result.online.push_back(std::move(online));
  }

  const double trials = static_cast<double>(options.n_trials);
  const double dcg_mean = correlation_sums[dcg_index] / trials;
  for (std::size_t m = 0; m < all.size(); ++m) {
    const double mean = correlation_sums[m] / trials;
    const double improvement =
        dcg_mean != 0.0 ? 100.0 * (mean - dcg_mean) / std::abs(dcg_mean) : 0.0;
    result.summary.push_back(StudySummaryRow{all[m].name, mean, improvement});
  }
  return result;
}

}  // namespace feedbias
