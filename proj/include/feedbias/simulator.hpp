#pragma once

// Synthetic interventional feed logs.
//
// Each session draws a context x = (1, u, t), a scroll budget
// D ~ Yule-Simon(softplus(theta^T x)) and a candidate slate of list_length
// distinct catalog items. The production ranking (ascending item id) is
// optionally replaced by a uniform shuffle, which makes rank independent of
// the ranking policy. Ranks 1..D are viewed; a viewed item is clicked with
// probability q(item, x).

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "feedbias/context.hpp"
#include "feedbias/policy.hpp"
#include "feedbias/quality.hpp"
#include "feedbias/records.hpp"
#include "feedbias/rng.hpp"

namespace feedbias {

enum class Intervention { full_shuffle, none };

std::string_view to_string(Intervention mode);
Intervention parse_intervention(std::string_view name);

struct SimConfig {
  std::int64_t n_sessions = 10000;
  std::int64_t list_length = 50;
  std::int64_t n_items = 1000;
  std::vector<double> true_theta = {3.5, -0.5, -0.1};  // softplus link onto rho
  std::uint64_t quality_seed = 1;
  Intervention intervention = Intervention::full_shuffle;
  std::uint64_t seed = 0;
  double quality_min = 0.01;
  double quality_max = 0.3;
  double interaction_scale = 0.05;

  /// Throws UsageError on n_sessions < 1, list_length < 2, n_items < list_length,
  /// or a theta that is empty, too long or non-finite.
  void validate() const;
  QualityModel quality_model() const;
};

/// (1, u, t): u ~ LogNormal(ln 3, 0.5) truncated to [1, 50] by rejection, t ~ Uniform(1, 10).
ContextVector simulate_context(Rng& rng);

/// full_shuffle: uniform permutation (Fisher-Yates); none: identity.
/// Throws UsageError on duplicate items.
std::vector<std::uint64_t> apply_rank_intervention(std::span<const std::uint64_t> ranking,
                                                   Intervention mode, Rng& rng);

/// list_length distinct items in ascending id order (the production ranking).
std::vector<std::uint64_t> sample_slate(std::int64_t list_length, std::int64_t n_items, Rng& rng);

/// Scroll-depth parameter rho(x) = softplus(theta^T x).
double true_rho(const SimConfig& config, const ContextVector& context);

/// One session, records ordered by rank. Uses rng for every draw.
std::vector<ImpressionRecord> simulate_session(const SimConfig& config,
                                               const QualityModel& quality,
                                               std::uint64_t session_id, Rng& rng);

/// n_sessions sessions; session s draws from Rng::substream(config.seed, s).
Dataset simulate_dataset(const SimConfig& config);
Dataset simulate_dataset(const SimConfig& config, const QualityModel& quality);

struct OnlineReward {
  double mean = 0.0;       // clicks per session
  double std_error = 0.0;
  std::int64_t sessions = 0;
  std::int64_t list_length = 0;

  double per_impression() const { return mean / static_cast<double>(list_length); }
  double per_impression_std_error() const { return std_error / static_cast<double>(list_length); }
};

/// Monte-Carlo online reward of a policy shown without intervention over n_mc fresh sessions.
OnlineReward online_reward(const Policy& policy, const SimConfig& config,
                           const QualityModel& quality, std::int64_t n_mc, Rng& rng);

}  // namespace feedbias
