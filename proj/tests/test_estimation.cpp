#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "feedbias/errors.hpp"
#include "feedbias/estimation.hpp"
#include "feedbias/rng.hpp"
#include "feedbias/simulator.hpp"
#include "feedbias/yule_simon.hpp"

using namespace feedbias;

namespace {

ImpressionRecord obs(std::int64_t rank, bool viewed, ContextVector x = ContextVector::constant()) {
  return ImpressionRecord{0, x, 0, rank, viewed, false};
}

// Sessions with depth ~ YuleSimon(rho), ranks 1..length, constant context.
Dataset yule_simon_sessions(double rho, std::int64_t sessions, std::int64_t length, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  data.reserve(static_cast<std::size_t>(sessions * length));
  const YuleSimonParams params{rho};
  for (std::int64_t s = 0; s < sessions; ++s) {
    const auto depth = sample_depth(params, rng);
    for (std::int64_t r = 1; r <= length; ++r) {
      data.push_back(ImpressionRecord{static_cast<std::uint64_t>(s), ContextVector::constant(), 0, r,
                                      r <= depth, false});
    }
  }
  return data;
}

// Random records with three-feature contexts and mixed outcomes.
Dataset random_records(std::uint64_t seed, int n) {
  Rng rng(seed);
  Dataset data;
  for (int i = 0; i < n; ++i) {
    const ContextVector x{1.0, rng.uniform(1.0, 6.0), rng.uniform(1.0, 10.0)};
    const auto rank = static_cast<std::int64_t>(1 + rng.below(40));
    data.push_back(ImpressionRecord{static_cast<std::uint64_t>(i / 5), x, 0, rank, rng.bernoulli(0.6 / std::sqrt(static_cast<double>(rank))), false});
  }
  return data;
}

std::vector<double> central_difference(const NllObjective& objective, std::vector<double> theta, double h) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    const double up = objective.value(theta);
    theta[i] = saved - h;
    const double down = objective.value(theta);
    theta[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("estimation") {
  TEST_CASE("nll_at_k reference values") {
    const Dataset two = {obs(2, true), obs(2, false)};
    CHECK(nll_at_k(PositionBiasModel::prob(1.0), two, 10) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    const Dataset all_views = {obs(1, true), obs(1, true), obs(1, true)};
    for (const auto& m : {PositionBiasModel::log(2.0), PositionBiasModel::exp(0.3), PositionBiasModel::prob(3.0)}) {
      CHECK(nll_at_k(m, all_views, 5) < 2e-6);
    }

    const Dataset miss = {obs(1, false)};
    CHECK(nll_at_k(PositionBiasModel::prob(0.7), miss, 5) == doctest::Approx(std::log(1e6)).epsilon(1e-9));
  }

  TEST_CASE("nll_at_k filters by rank and rejects empty selections") {
    const Dataset data = {obs(1, true), obs(7, true)};
    const auto m = PositionBiasModel::prob(1.0);
    CHECK(nll_at_k(m, data, 5) == doctest::Approx(-std::log(1.0 - 1e-6)));
    CHECK(nll_at_k(m, data, 10) == doctest::Approx((-std::log(1.0 - 1e-6) + std::log(7.0)) / 2.0));
    CHECK_THROWS_AS(nll_at_k(m, Dataset{obs(6, true)}, 5), UsageError);
  }

  TEST_CASE("objective value matches the reference nll for every family") {
    const Dataset data = random_records(3, 400);
    for (Family f : {Family::log, Family::exp, Family::prob, Family::contextual_log,
                     Family::contextual_exp, Family::contextual_prob}) {
      const NllObjective objective(f, default_link(f), data, 25);
      std::vector<double> theta = default_init(f, default_link(f), objective.dimension());
      if (is_contextual(f)) {
        theta[1] = -0.2;
        theta[2] = 0.05;
      }
      INFO(to_string(f));
      CHECK(objective.value(theta) == doctest::Approx(nll_at_k(objective.model_at(theta), data, 25)).epsilon(1e-12));
    }
  }

  TEST_CASE("gradient reference values") {
    const Dataset rank_one = {obs(1, true)};
    for (Family f : {Family::log, Family::exp, Family::prob}) {
      const auto g = nll_gradient(f, std::vector<double>{0.4}, rank_one, 10);
      REQUIRE(g.size() == 1);
      CHECK(g[0] == 0.0);
    }
    const Dataset rank_two = {obs(2, true)};
    const auto g = nll_gradient(Family::prob, LinkKind::identity, std::vector<double>{1.0}, rank_two, 10);
    CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("analytic gradients match central differences") {
    const Dataset data = random_records(11, 600);
    Rng rng(5);
    for (Family f : {Family::log, Family::exp, Family::prob, Family::contextual_log,
                     Family::contextual_exp, Family::contextual_prob}) {
      const NllObjective objective(f, default_link(f), data, 40);
      int checked = 0;
      for (int point = 0; point < 100; ++point) {
        std::vector<double> theta(objective.dimension());
        theta[0] = rng.uniform(-2.0, 2.0);
        for (std::size_t i = 1; i < theta.size(); ++i) theta[i] = rng.uniform(-0.3, 0.3);
        std::vector<double> grad;
        objective.value_and_gradient(theta, grad);
        const auto fd = central_difference(objective, theta, 1e-5);
        for (std::size_t i = 0; i < theta.size(); ++i) {
          if (std::abs(fd[i]) < 1e-7 && std::abs(grad[i]) < 1e-7) continue;
          INFO(to_string(f) << " point " << point << " coord " << i);
          CHECK(std::abs(grad[i] - fd[i]) <= 1e-4 * std::abs(fd[i]));
          ++checked;
        }
      }
      CHECK(checked > 50);
    }
  }

  TEST_CASE("fit recovers rho = 1 and reaches the true-parameter nll") {
    const Dataset data = yule_simon_sessions(1.0, 20000, 30, 8);
    FitConfig config;
    const auto result = fit(Family::prob, data, config);
    CHECK(result.converged);
    const double at_truth = nll_at_k(PositionBiasModel::prob(1.0), data, config.k_cutoff);
    CHECK(result.final_nll <= at_truth + 1e-12);
    CHECK(std::abs(result.final_nll - at_truth) < 1e-3);
    const double rho = std::get<ProbModel>(result.model.params()).rho;
    CHECK(std::abs(rho - 1.0) < 0.05);
    CHECK(result.final_nll == doctest::Approx(nll_at_k(result.model, data, config.k_cutoff)).epsilon(1e-12));
  }

  TEST_CASE("fit on all-viewed rank-one records") {
    const Dataset data(50, obs(1, true));
    for (Family f : {Family::log, Family::exp, Family::prob}) {
      const auto result = fit(f, data, FitConfig{});
      CHECK(result.converged);
      CHECK(result.final_nll < 2e-6);
      CHECK(result.clamp_events == 0);
    }
  }

  TEST_CASE("accepted iterates never increase the nll") {
    const Dataset data = random_records(21, 2000);
    for (Family f : {Family::log, Family::exp, Family::prob, Family::contextual_prob}) {
      FitConfig config;
      config.max_iters = 200;
      const auto result = fit(f, data, config);
      REQUIRE(result.nll_history.size() >= 1);
      CHECK(result.nll_history.front() == result.initial_nll);
      CHECK(result.nll_history.back() == result.final_nll);
      for (std::size_t i = 1; i < result.nll_history.size(); ++i) {
        CHECK(result.nll_history[i] <= result.nll_history[i - 1]);
      }
    }
  }

  TEST_CASE("fit is deterministic") {
    const Dataset data = random_records(4, 3000);
    FitConfig config;
    const auto a = fit(Family::contextual_prob, data, config);
    const auto b = fit(Family::contextual_prob, data, config);
    CHECK(a.theta == b.theta);
    CHECK(a.final_nll == b.final_nll);
    CHECK(a.model == b.model);
  }

  TEST_CASE("contextual fit recovers simulator parameters") {
    SimConfig sim;
    sim.n_sessions = 20000;
    sim.list_length = 20;
    sim.n_items = 100;
    sim.seed = 12;
    const Dataset data = simulate_dataset(sim);
    const auto result = fit(Family::contextual_prob, data, FitConfig{});
    REQUIRE(result.theta.size() == 3);
    CHECK(result.converged);
    CHECK(std::abs(result.theta[0] - sim.true_theta[0]) < 0.3);
    CHECK(std::abs(result.theta[1] - sim.true_theta[1]) < 0.1);
    CHECK(std::abs(result.theta[2] - sim.true_theta[2]) < 0.05);
    std::vector<double> truth = sim.true_theta;
    const NllObjective objective(Family::contextual_prob, LinkKind::softplus, data, 100);
    CHECK(result.final_nll <= objective.value(truth));
  }

  TEST_CASE("explicit init and link are honoured") {
    const Dataset data = yule_simon_sessions(2.0, 5000, 10, 3);
    FitConfig config;
    config.link = LinkKind::identity;
    config.init = std::vector<double>{0.5};
    const auto result = fit(Family::prob, data, config);
    CHECK(result.link == LinkKind::identity);
    CHECK(result.theta.size() == 1);
    CHECK(std::abs(result.theta[0] - 2.0) < 0.15);
    CHECK(result.initial_nll == doctest::Approx(nll_at_k(PositionBiasModel::prob(0.5), data, 100)));
  }

  TEST_CASE("clamp events are counted") {
    const Dataset data = {obs(1, false), obs(1, true), obs(2, true), obs(3, false)};
    const auto result = fit(Family::prob, data, FitConfig{});
    CHECK(result.clamp_events == 1);
    CHECK(std::isfinite(result.final_nll));
  }

  TEST_CASE("configuration and input errors") {
    const Dataset data = {obs(1, true), obs(2, false)};
    FitConfig bad;
    bad.k_cutoff = 0;
    CHECK_THROWS_AS(fit(Family::prob, data, bad), UsageError);
    bad = FitConfig{};
    bad.tol = 0.0;
    CHECK_THROWS_AS(fit(Family::prob, data, bad), UsageError);
    bad = FitConfig{};
    bad.step_size = -1.0;
    CHECK_THROWS_AS(fit(Family::prob, data, bad), UsageError);
    bad = FitConfig{};
    bad.init = std::vector<double>{1.0, 2.0};
    CHECK_THROWS_AS(fit(Family::prob, data, bad), UsageError);
    CHECK_THROWS_AS(fit(Family::dcg, data, FitConfig{}), UsageError);
    CHECK_THROWS_AS(fit(Family::empirical, data, FitConfig{}), UsageError);
    FitConfig k1;
    k1.k_cutoff = 1;
    CHECK_THROWS_AS(fit(Family::prob, Dataset{obs(3, true)}, k1), UsageError);
    const Dataset mixed = {obs(1, true, ContextVector{1.0, 2.0}), obs(2, true, ContextVector{1.0, 2.0, 3.0})};
    CHECK_THROWS_AS(fit(Family::contextual_prob, mixed, FitConfig{}), UsageError);
  }
}
