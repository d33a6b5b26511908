#include "feedbias/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "feedbias/errors.hpp"
#include "feedbias/models.hpp"
#include "feedbias/yule_simon.hpp"

namespace feedbias {

std::string_view to_string(Intervention mode) {
  return mode == Intervention::full_shuffle ? "full-shuffle" : "none";
}

Intervention parse_intervention(std::string_view name) {
  if (name == "full-shuffle") return Intervention::full_shuffle;
  if (name == "none") return Intervention::none;
  throw UsageError("unknown intervention '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (n_sessions < 1) throw UsageError("n_sessions must be >= 1");
  if (list_length < 2) throw UsageError("list_length must be >= 2");
  if (n_items < list_length) throw UsageError("n_items must be >= list_length");
  if (true_theta.empty() || true_theta.size() > 3) {
    throw UsageError("true_theta must have 1 to 3 entries (constant, user depth, time of day)");
  }
  for (double v : true_theta) {
    if (!std::isfinite(v)) throw UsageError("true_theta must be finite");
  }
}

QualityModel SimConfig::quality_model() const {
  return QualityModel(static_cast<std::uint64_t>(n_items), quality_seed, quality_min, quality_max,
                      interaction_scale);
}

ContextVector simulate_context(Rng& rng) {
  double u = 0.0;
  do {
    u = std::exp(std::log(3.0) + 0.5 * rng.normal());
  } while (u < 1.0 || u > 50.0);
  const double t = rng.uniform(1.0, 10.0);
  return ContextVector({1.0, u, t});
}

std::vector<std::uint64_t> apply_rank_intervention(std::span<const std::uint64_t> ranking,
                                                   Intervention mode, Rng& rng) {
  std::vector<std::uint64_t> out(ranking.begin(), ranking.end());
  std::vector<std::uint64_t> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw UsageError("ranking contains duplicate items");
  }
  if (mode == Intervention::full_shuffle) {
    for (std::size_t i = out.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(out[i - 1], out[j]);
    }
  }
  return out;
}

std::vector<std::uint64_t> sample_slate(std::int64_t list_length, std::int64_t n_items,
                                        Rng& rng) {
  // Floyd's sampling without replacement.
  const auto n = static_cast<std::uint64_t>(n_items);
  const auto m = static_cast<std::uint64_t>(list_length);
  std::vector<std::uint64_t> slate;
  slate.reserve(m);
  if (m <= 64) {
    for (std::uint64_t j = n - m; j < n; ++j) {
      const std::uint64_t t = rng.below(j + 1);
      const bool seen = std::find(slate.begin(), slate.end(), t) != slate.end();
      slate.push_back(seen ? j : t);
    }
  } else {
    std::unordered_set<std::uint64_t> chosen;
    for (std::uint64_t j = n - m; j < n; ++j) {
      const std::uint64_t t = rng.below(j + 1);
      const std::uint64_t pick = chosen.count(t) ? j : t;
      chosen.insert(pick);
      slate.push_back(pick);
    }
  }
  std::sort(slate.begin(), slate.end());
  return slate;
}

double true_rho(const SimConfig& config, const ContextVector& context) {
  const std::span<const double> theta(config.true_theta);
  const std::span<const double> x = context.values().first(theta.size());
  double raw = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) raw += theta[i] * x[i];
  return std::max(link(raw, LinkKind::softplus), YuleSimonParams::kMinRho);
}

std::vector<ImpressionRecord> simulate_session(const SimConfig& config,
                                               const QualityModel& quality,
                                               std::uint64_t session_id, Rng& rng) {
  const ContextVector context = simulate_context(rng);
  const std::int64_t depth = sample_depth(YuleSimonParams{true_rho(config, context)}, rng);
  const auto slate = sample_slate(config.list_length, config.n_items, rng);
  const auto shown = apply_rank_intervention(slate, config.intervention, rng);

  std::vector<ImpressionRecord> records;
  records.reserve(shown.size());
  for (std::size_t i = 0; i < shown.size(); ++i) {
    const auto rank = static_cast<std::int64_t>(i + 1);
    const bool viewed = rank <= depth;
    const bool clicked = viewed && rng.bernoulli(quality(shown[i], context));
    records.push_back(ImpressionRecord{session_id, context, shown[i], rank, viewed, clicked});
  }
  return records;
}

Dataset simulate_dataset(const SimConfig& config) {
  config.validate();
  return simulate_dataset(config, config.quality_model());
}

Dataset simulate_dataset(const SimConfig& config, const QualityModel& quality) {
  config.validate();
  if (quality.n_items() < static_cast<std::uint64_t>(config.n_items)) {
    throw UsageError("quality model covers fewer items than the catalog");
  }
  Dataset dataset;
  dataset.reserve(static_cast<std::size_t>(config.n_sessions * config.list_length));
  for (std::int64_t s = 0; s < config.n_sessions; ++s) {
    Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(s));
    auto session = simulate_session(config, quality, static_cast<std::uint64_t>(s), rng);
    dataset.insert(dataset.end(), session.begin(), session.end());
  }
  return dataset;
}

OnlineReward online_reward(const Policy& policy, const SimConfig& config,
                           const QualityModel& quality, std::int64_t n_mc, Rng& rng) {
  config.validate();
  if (n_mc < 2) throw UsageError("online_reward needs n_mc >= 2");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::int64_t s = 0; s < n_mc; ++s) {
    const ContextVector context = simulate_context(rng);
    const std::int64_t depth = sample_depth(YuleSimonParams{true_rho(config, context)}, rng);
    const auto slate = sample_slate(config.list_length, config.n_items, rng);
    const auto ranked = policy.rank(context, slate);
    const auto viewed = static_cast<std::size_t>(std::min<std::int64_t>(depth, config.list_length));
    double clicks = 0.0;
    for (std::size_t i = 0; i < viewed; ++i) {
      if (rng.bernoulli(quality(ranked[i], context))) clicks += 1.0;
    }
    sum += clicks;
    sum_sq += clicks * clicks;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double variance = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return OnlineReward{mean, std::sqrt(variance / n), n_mc, config.list_length};
}

}  // namespace feedbias
