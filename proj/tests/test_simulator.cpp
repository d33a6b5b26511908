#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <vector>

#include "feedbias/errors.hpp"
#include "feedbias/models.hpp"
#include "feedbias/policy.hpp"
#include "feedbias/quality.hpp"
#include "feedbias/rng.hpp"
#include "feedbias/simulator.hpp"
#include "feedbias/yule_simon.hpp"

using namespace feedbias;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.n_sessions = 500;
  c.list_length = 10;
  c.n_items = 60;
  c.seed = 77;
  return c;
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("contexts") {
    Rng rng(1);
    double t_sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const auto x = simulate_context(rng);
      REQUIRE(x.size() == 3);
      REQUIRE(x[0] == 1.0);
      REQUIRE(x[1] >= 1.0);
      REQUIRE(x[1] <= 50.0);
      REQUIRE(x[2] >= 1.0);
      REQUIRE(x[2] <= 10.0);
      t_sum += x[2];
    }
    CHECK(std::abs(t_sum / 100000.0 - 5.5) < 0.05);
  }

  TEST_CASE("rank intervention") {
    Rng rng(3);
    const std::vector<std::uint64_t> abc = {4, 9, 2};
    CHECK(apply_rank_intervention(abc, Intervention::none, rng) == abc);
    const std::vector<std::uint64_t> single = {42};
    CHECK(apply_rank_intervention(single, Intervention::full_shuffle, rng) == single);
    const std::vector<std::uint64_t> dup = {1, 2, 1};
    CHECK_THROWS_AS(apply_rank_intervention(dup, Intervention::full_shuffle, rng), UsageError);

    const std::vector<std::uint64_t> five = {0, 1, 2, 3, 4};
    std::vector<int> first(5, 0);
    for (int i = 0; i < 100000; ++i) {
      const auto shuffled = apply_rank_intervention(five, Intervention::full_shuffle, rng);
      REQUIRE(std::multiset<std::uint64_t>(shuffled.begin(), shuffled.end()) ==
              std::multiset<std::uint64_t>(five.begin(), five.end()));
      ++first[shuffled[0]];
    }
    for (int c : first) CHECK(std::abs(c / 100000.0 - 0.2) < 0.005);
  }

  TEST_CASE("slates are distinct and sorted") {
    Rng rng(8);
    for (std::int64_t length : {2, 10, 64, 65, 200}) {
      const auto slate = sample_slate(length, 300, rng);
      REQUIRE(static_cast<std::int64_t>(slate.size()) == length);
      for (std::size_t i = 1; i < slate.size(); ++i) REQUIRE(slate[i - 1] < slate[i]);
      REQUIRE(slate.back() < 300);
    }
    const auto all = sample_slate(20, 20, rng);
    for (std::uint64_t i = 0; i < 20; ++i) CHECK(all[i] == i);
  }

  TEST_CASE("views follow the sampled depth as a prefix") {
    SimConfig config = small_config();
    const auto quality = config.quality_model();
    int sessions_with_depth_three = 0;
    for (std::uint64_t s = 0; s < 2000; ++s) {
      Rng rng = Rng::substream(99, s);
      Rng replay = rng;
      const auto x = simulate_context(replay);
      const auto depth = sample_depth(YuleSimonParams{true_rho(config, x)}, replay);
      const auto records = simulate_session(config, quality, s, rng);
      REQUIRE(records.size() == 10);
      std::int64_t views = 0;
      for (const auto& r : records) {
        REQUIRE(r.rank == static_cast<std::int64_t>(&r - records.data()) + 1);
        REQUIRE((!r.clicked || r.viewed));
        REQUIRE(r.context == x);
        REQUIRE(r.session_id == s);
        views += r.viewed ? 1 : 0;
        if (r.viewed) REQUIRE(r.rank <= depth);
      }
      REQUIRE(views == std::min<std::int64_t>(depth, 10));
      if (depth == 3) {
        ++sessions_with_depth_three;
        CHECK(records[2].viewed);
        CHECK_FALSE(records[3].viewed);
      }
    }
    CHECK(sessions_with_depth_three > 0);
  }

  TEST_CASE("marginal view rate at rank 4 with rho = 1") {
    SimConfig config;
    config.list_length = 5;
    config.n_items = 5;
    config.true_theta = {link_inverse(1.0, LinkKind::softplus), 0.0, 0.0};
    const auto quality = config.quality_model();
    std::int64_t viewed = 0;
    constexpr std::int64_t n = 1000000;
    for (std::int64_t s = 0; s < n; ++s) {
      Rng rng = Rng::substream(5, static_cast<std::uint64_t>(s));
      viewed += simulate_session(config, quality, static_cast<std::uint64_t>(s), rng)[3].viewed ? 1 : 0;
    }
    CHECK(std::abs(static_cast<double>(viewed) / n - 0.25) < 0.002);
  }

  TEST_CASE("marginal view rate converges to survival for a fixed parameter") {
    SimConfig config;
    config.list_length = 30;
    config.n_items = 30;
    config.true_theta = {0.4};
    const double rho = link(0.4, LinkKind::softplus);
    const auto quality = config.quality_model();
    constexpr int n = 100000;
    std::vector<int> views(30, 0);
    for (int s = 0; s < n; ++s) {
      Rng rng = Rng::substream(6, static_cast<std::uint64_t>(s));
      for (const auto& r : simulate_session(config, quality, s, rng)) views[r.rank - 1] += r.viewed;
    }
    for (std::int64_t r = 1; r <= 30; ++r) {
      const double p = survival(YuleSimonParams{rho}, r);
      const double se = std::sqrt(p * (1 - p) / n);
      INFO("rank " << r);
      CHECK(std::abs(views[r - 1] / static_cast<double>(n) - p) <= 3.0 * se + 1e-12);
    }
  }

  TEST_CASE("full shuffle decorrelates quality and rank") {
    SimConfig config;
    config.n_sessions = 20000;
    config.seed = 4;
    const auto quality = config.quality_model();
    const Dataset data = simulate_dataset(config, quality);
    REQUIRE(data.size() == 1000000);
    std::vector<double> q, r;
    q.reserve(data.size());
    r.reserve(data.size());
    for (const auto& rec : data) {
      q.push_back(quality.base(rec.item_id));
      r.push_back(static_cast<double>(rec.rank));
    }
    CHECK(std::abs(correlation(q, r)) < 0.01);

    SimConfig logged = config;
    logged.n_sessions = 2000;
    logged.intervention = Intervention::none;
    const Dataset unshuffled = simulate_dataset(logged, quality);
    for (std::size_t i = 1; i < unshuffled.size(); ++i) {
      if (unshuffled[i].session_id == unshuffled[i - 1].session_id) {
        REQUIRE(unshuffled[i].item_id > unshuffled[i - 1].item_id);
      }
    }
  }

  TEST_CASE("datasets are deterministic given the config") {
    const SimConfig config = small_config();
    CHECK(simulate_dataset(config) == simulate_dataset(config));
    SimConfig other = config;
    other.seed = config.seed + 1;
    CHECK_FALSE(simulate_dataset(config) == simulate_dataset(other));
  }

  TEST_CASE("online reward orders policies and scales") {
    SimConfig config;
    config.list_length = 20;
    config.n_items = 200;
    const auto quality = std::make_shared<const QualityModel>(config.quality_model());
    Rng rng_a(1), rng_b(2);
    const auto best = online_reward(Policy::by_true_quality(quality), config, *quality, 100000, rng_a);
    const auto rand = online_reward(Policy::random(3), config, *quality, 100000, rng_b);
    CHECK(best.mean - rand.mean > 3.0 * std::hypot(best.std_error, rand.std_error));
    CHECK(best.per_impression() == doctest::Approx(best.mean / 20.0));

    Rng rng_c(3), rng_d(4);
    const auto small = online_reward(Policy::random(3), config, *quality, 20000, rng_c);
    const auto large = online_reward(Policy::random(3), config, *quality, 40000, rng_d);
    const double ratio = large.std_error / small.std_error;
    CHECK(std::abs(ratio - 1.0 / std::sqrt(2.0)) < 0.2 / std::sqrt(2.0));
  }

  TEST_CASE("zero quality yields zero reward") {
    SimConfig config = small_config();
    const QualityModel zero(std::vector<double>(60, 0.0), {});
    Rng rng(9);
    const auto reward = online_reward(Policy::identity_logged(), config, zero, 5000, rng);
    CHECK(reward.mean == 0.0);
    CHECK(reward.std_error == 0.0);
    for (const auto& r : simulate_dataset(config, zero)) REQUIRE_FALSE(r.clicked);
  }

  TEST_CASE("policies rank deterministically with item-id tie breaks") {
    const auto quality = std::make_shared<const QualityModel>(std::vector<double>{0.2, 0.5, 0.2, 0.9, 0.5}, std::vector<double>{});
    const ContextVector x{1.0, 3.0, 4.0};
    const std::vector<std::uint64_t> items = {0, 1, 2, 3, 4};
    CHECK(Policy::by_true_quality(quality).rank(x, items) == std::vector<std::uint64_t>{3, 1, 4, 0, 2});
    CHECK(Policy::identity_logged().rank(x, std::vector<std::uint64_t>{4, 2, 0}) == std::vector<std::uint64_t>{4, 2, 0});
    const auto noisy = Policy::by_noisy_quality(quality, 0.0, 1);
    CHECK(noisy.rank(x, items) == Policy::by_true_quality(quality).rank(x, items));
    const auto r1 = Policy::random(10).rank(x, items);
    CHECK(r1 == Policy::random(10).rank(x, items));
    CHECK(std::multiset<std::uint64_t>(r1.begin(), r1.end()) == std::multiset<std::uint64_t>(items.begin(), items.end()));
    CHECK_THROWS_AS(Policy::by_true_quality(nullptr), UsageError);
    CHECK_THROWS_AS(Policy::by_noisy_quality(quality, -1.0, 0), UsageError);
  }

  TEST_CASE("quality model") {
    const QualityModel q(100, 3, 0.01, 0.3, 0.05);
    for (std::uint64_t i = 0; i < 100; ++i) {
      CHECK(q.base(i) >= 0.01);
      CHECK(q.base(i) <= 0.3);
      const double lo = q(i, ContextVector{1.0, 1.0, 5.0});
      const double hi = q(i, ContextVector{1.0, 50.0, 5.0});
      CHECK(lo == q.base(i));
      CHECK(std::abs(hi - lo) <= 0.05 + 1e-15);
    }
    CHECK_THROWS_AS(QualityModel(10, 1, 0.5, 0.2, 0.0), UsageError);
    CHECK_THROWS_AS(QualityModel(std::vector<double>{1.5}, {}), UsageError);
  }

  TEST_CASE("config validation") {
    SimConfig c = small_config();
    c.n_sessions = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = small_config();
    c.list_length = 1;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = small_config();
    c.n_items = 5;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = small_config();
    c.true_theta = {};
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = small_config();
    c.true_theta = {1.0, std::nan("")};
    CHECK_THROWS_AS(c.validate(), UsageError);
    CHECK_THROWS_AS(parse_intervention("swap"), UsageError);
    Rng rng(1);
    CHECK_THROWS_AS(online_reward(Policy::random(1), small_config(), small_config().quality_model(), 1, rng), UsageError);
  }
}
