#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "feedbias/errors.hpp"
#include "feedbias/evaluation.hpp"
#include "feedbias/rng.hpp"
#include "feedbias/simulator.hpp"
#include "feedbias/yule_simon.hpp"

using namespace feedbias;

namespace {

ImpressionRecord rec(std::uint64_t session, std::uint64_t item, std::int64_t rank, bool viewed, bool clicked,
                     ContextVector x = ContextVector{1.0, 3.0, 5.0}) {
  return ImpressionRecord{session, x, item, rank, viewed, clicked};
}

SimConfig eval_config() {
  SimConfig c;
  c.n_sessions = 4000;
  c.list_length = 20;
  c.n_items = 200;
  c.seed = 31;
  return c;
}

PositionBiasModel ground_truth(const SimConfig& c) {
  std::vector<double> theta = c.true_theta;
  theta.resize(3, 0.0);
  return PositionBiasModel::contextual(Family::prob, theta, LinkKind::softplus);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("identity-logged policy returns the mean click rate exactly") {
    const SimConfig config = eval_config();
    const Dataset data = simulate_dataset(config);
    double clicks = 0.0;
    for (const auto& r : data) clicks += r.clicked ? 1.0 : 0.0;
    const double mean_click_rate = clicks / static_cast<double>(data.size());
    std::vector<PositionBiasModel> models = {
        PositionBiasModel::dcg(), PositionBiasModel::log(3.0), PositionBiasModel::exp(0.8),
        PositionBiasModel::prob(0.6), fit_empirical(data, 20), ground_truth(config),
        PositionBiasModel::contextual(Family::log, {0.1, 0.2, -0.1}),
        PositionBiasModel::contextual(Family::exp, {0.1, 0.2, -0.1})};
    for (const auto& m : models) {
      CHECK(unbiased_dcg(data, Policy::identity_logged(), m) == mean_click_rate);
    }
  }

  TEST_CASE("scaling every propensity leaves the estimate unchanged") {
    const SimConfig config = eval_config();
    const Dataset data = simulate_dataset(config);
    const auto base = fit_empirical(data, 20);
    std::vector<double> scaled = std::get<EmpiricalModel>(base.params()).table;
    for (double& p : scaled) p *= 0.37;
    const auto quality = std::make_shared<const QualityModel>(config.quality_model());
    for (const auto& policy : {Policy::by_true_quality(quality), Policy::random(4)}) {
      const double a = unbiased_dcg(data, policy, base);
      const double b = unbiased_dcg(data, policy, PositionBiasModel::empirical(scaled));
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }

  TEST_CASE("single-click reference contributions") {
    const auto quality = std::make_shared<const QualityModel>(std::vector<double>{0.1, 0.9, 0.2}, std::vector<double>{});
    const auto best = Policy::by_true_quality(quality);

    // Item 1 clicked at logged rank 2, the policy moves it to rank 1.
    const Dataset two = {rec(0, 0, 1, true, false), rec(0, 1, 2, true, true)};
    CHECK(unbiased_dcg(two, best, PositionBiasModel::prob(1.0)) * 2.0 == doctest::Approx(2.0).epsilon(1e-14));

    // Item 1 clicked at logged rank 3, moved to rank 1 under dcg.
    const Dataset three = {rec(0, 0, 1, true, false), rec(0, 2, 2, true, false), rec(0, 1, 3, true, true)};
    CHECK(unbiased_dcg(three, best, PositionBiasModel::dcg()) * 3.0 == doctest::Approx(2.0).epsilon(1e-14));
  }

  TEST_CASE("sessions are regrouped regardless of record order") {
    const auto quality = std::make_shared<const QualityModel>(std::vector<double>{0.1, 0.9, 0.2}, std::vector<double>{});
    const Dataset ordered = {rec(0, 0, 1, true, false), rec(0, 1, 2, true, true),
                             rec(1, 2, 1, true, true), rec(1, 0, 2, false, false)};
    const Dataset shuffled = {ordered[3], ordered[1], ordered[2], ordered[0]};
    const auto policy = Policy::by_true_quality(quality);
    CHECK(unbiased_dcg(ordered, policy, PositionBiasModel::prob(0.8)) ==
          doctest::Approx(unbiased_dcg(shuffled, policy, PositionBiasModel::prob(0.8))).epsilon(1e-15));
  }

  TEST_CASE("incomplete sessions and empty datasets are rejected") {
    const Dataset gap = {rec(0, 0, 1, true, false), rec(0, 1, 3, true, true)};
    CHECK_THROWS_AS(unbiased_dcg(gap, Policy::random(1), PositionBiasModel::dcg()), UsageError);
    const Dataset duplicate_rank = {rec(0, 0, 1, true, false), rec(0, 1, 1, true, true)};
    CHECK_THROWS_AS(unbiased_dcg(duplicate_rank, Policy::random(1), PositionBiasModel::dcg()), UsageError);
    CHECK_THROWS_AS(unbiased_dcg(Dataset{}, Policy::random(1), PositionBiasModel::dcg()), UsageError);
  }

  TEST_CASE("weight cap and self-normalization") {
    const auto quality = std::make_shared<const QualityModel>(std::vector<double>{0.1, 0.9, 0.2}, std::vector<double>{});
    const Dataset three = {rec(0, 0, 1, true, false), rec(0, 2, 2, true, false), rec(0, 1, 3, true, true)};
    IpsOptions capped;
    capped.weight_cap = 1.5;
    CHECK(unbiased_dcg(three, Policy::by_true_quality(quality), PositionBiasModel::dcg(), capped) * 3.0 ==
          doctest::Approx(1.5));
    IpsOptions normalized;
    normalized.self_normalize = true;
    const double sn = unbiased_dcg(three, Policy::by_true_quality(quality), PositionBiasModel::dcg(), normalized);
    CHECK(sn > 0.0);
    CHECK(sn <= 1.0);
    CHECK(unbiased_dcg(three, Policy::identity_logged(), PositionBiasModel::dcg(), normalized) ==
          doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("quality estimation") {
    // Item 0 always clicked when viewed, item 1 never.
    Rng rng(2);
    const auto truth = PositionBiasModel::prob(1.2);
    Dataset data;
    for (std::uint64_t s = 0; s < 40000; ++s) {
      const auto depth = sample_depth(YuleSimonParams{1.2}, rng);
      const bool first = rng.bernoulli(0.5);
      const std::int64_t r0 = first ? 1 : 2;
      data.push_back(rec(s, 0, r0, r0 <= depth, r0 <= depth, ContextVector::constant()));
      data.push_back(rec(s, 1, 3 - r0, 3 - r0 <= depth, false, ContextVector::constant()));
    }
    const auto always = estimate_quality(data, truth, 0);
    CHECK(std::abs(always.value - 1.0) < 3.0 * always.std_error + 1e-3);
    CHECK(always.impressions == 40000);
    CHECK(estimate_quality(data, truth, 1).value == 0.0);
    CHECK_THROWS_AS(estimate_quality(data, truth, 7), UsageError);

    ContextBucket none;
    none.feature = 0;
    none.lo = 2.0;
    CHECK_THROWS_AS(estimate_quality(data, truth, 0, none), UsageError);
  }

  TEST_CASE("equal-quality items at different logged ranks estimate alike") {
    Rng rng(12);
    const double rho = 0.8;
    const double q = 0.3;
    Dataset data;
    std::uint64_t session = 0;
    for (int i = 0; i < 100000; ++i) {
      // Item 0 is shown at ranks 1..5, item 1 at ranks 1..20, both uniformly.
      for (std::uint64_t item : {0u, 1u}) {
        const std::int64_t max_rank = item == 0 ? 5 : 20;
        const auto rank = static_cast<std::int64_t>(1 + rng.below(static_cast<std::uint64_t>(max_rank)));
        const bool viewed = rng.uniform() < survival(YuleSimonParams{rho}, rank);
        data.push_back(rec(session++, item, rank, viewed, viewed && rng.bernoulli(q), ContextVector::constant()));
      }
    }
    const auto model = PositionBiasModel::prob(rho);
    const auto a = estimate_quality(data, model, 0);
    const auto b = estimate_quality(data, model, 1);
    CHECK(std::abs(a.value - b.value) < 3.0 * std::hypot(a.std_error, b.std_error));
    CHECK(std::abs(a.value - q) < 3.0 * a.std_error);
    CHECK(std::abs(b.value - q) < 3.0 * b.std_error);
  }

  TEST_CASE("pearson correlation") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(2.0 * x + 1.0);
    CHECK(pearson_correlation(xs, ys) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> neg;
    for (double x : xs) neg.push_back(-x);
    CHECK(pearson_correlation(xs, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) ==
          doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(pearson_correlation(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson_correlation(std::vector<double>{1}, std::vector<double>{1}), UsageError);
    CHECK_THROWS_AS(pearson_correlation(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), UsageError);
  }

  TEST_CASE("study rejects a single policy and adds a dcg reference") {
    SimConfig config = eval_config();
    config.n_sessions = 300;
    StudyOptions options;
    options.n_trials = 2;
    options.n_mc = 200;
    const std::vector<NamedModel> models = {{"truth", ground_truth(config)}};
    CHECK_THROWS_AS(offline_online_study(models, {Policy::random(1)}, config, options), UndefinedCorrelationError);

    const auto result = offline_online_study(models, {Policy::random(1), Policy::random(2), Policy::identity_logged()}, config, options);
    REQUIRE(result.models == std::vector<std::string>{"truth", "dcg"});
    CHECK(result.correlations.size() == 4);
    REQUIRE(result.summary.size() == 2);
    CHECK(result.summary[1].relative_improvement_vs_dcg_pct == 0.0);
    CHECK(result.offline.size() == 2);
    CHECK(result.offline[0].size() == 2);
    CHECK(result.offline[0][0].size() == 3);
    const double expected = 100.0 * (result.summary[0].mean_correlation - result.summary[1].mean_correlation) /
                            std::abs(result.summary[1].mean_correlation);
    CHECK(result.summary[0].relative_improvement_vs_dcg_pct == doctest::Approx(expected));
    const auto again = offline_online_study(models, {Policy::random(1), Policy::random(2), Policy::identity_logged()}, config, options);
    CHECK(again.summary[0].mean_correlation == result.summary[0].mean_correlation);
  }

  TEST_CASE("ground-truth model tracks online reward across eight policies") {
    SimConfig config = eval_config();
    config.n_sessions = 100000;
    const auto quality = std::make_shared<const QualityModel>(config.quality_model());
    const std::vector<Policy> policies = {
        Policy::random(1),
        Policy::random(2),
        Policy::identity_logged(),
        Policy::by_noisy_quality(quality, 0.2, 3),
        Policy::by_noisy_quality(quality, 0.1, 4),
        Policy::by_noisy_quality(quality, 0.05, 5),
        Policy::by_noisy_quality(quality, 0.02, 6),
        Policy::by_true_quality(quality)};
    StudyOptions options;
    options.n_trials = 2;
    options.n_mc = 20000;
    options.seed = 8;
    const auto result = offline_online_study({{"truth", ground_truth(config)}}, policies, config, options);
    CHECK(result.summary[0].mean_correlation >= 0.9);
  }

  TEST_CASE("offline estimates are monotone in quality-signal fidelity") {
    SimConfig config = eval_config();
    config.n_sessions = 10000;
    const auto quality = std::make_shared<const QualityModel>(config.quality_model());
    const std::vector<Policy> by_fidelity = {
        Policy::random(5), Policy::by_noisy_quality(quality, 0.3, 1), Policy::by_noisy_quality(quality, 0.1, 1),
        Policy::by_noisy_quality(quality, 0.03, 1), Policy::by_true_quality(quality)};
    const auto truth = ground_truth(config);
    std::vector<std::vector<double>> estimates(by_fidelity.size());
    for (std::uint64_t trial = 0; trial < 9; ++trial) {
      SimConfig c = config;
      c.seed = 1000 + trial;
      const Dataset data = simulate_dataset(c, *quality);
      for (std::size_t p = 0; p < by_fidelity.size(); ++p) {
        estimates[p].push_back(unbiased_dcg(data, by_fidelity[p], truth));
      }
    }
    for (std::size_t p = 1; p < by_fidelity.size(); ++p) {
      INFO(by_fidelity[p - 1].name() << " -> " << by_fidelity[p].name());
      CHECK(median(estimates[p]) >= median(estimates[p - 1]));
    }
  }
}
