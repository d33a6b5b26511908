#include "feedbias/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "feedbias/errors.hpp"
#include "feedbias/yule_simon.hpp"

namespace feedbias {
namespace {

constexpr double kEps = kProbabilityFloor;
constexpr int kMaxHalvings = 30;
// Trial steps stay within step_size * 2^[-40, 40].
constexpr double kStepRange = 1099511627776.0;  // 2^40
// Beyond this gap between consecutive ranks the survival recurrence is replaced
// by the closed form.
constexpr std::int64_t kRecurrenceGap = 64;

bool parameter_in_domain(Family base, double value) {
  if (!std::isfinite(value)) return false;
  switch (base) {
    case Family::log:
      return value > 0.0;
    case Family::exp:
      return value > 0.0 && value <= 1.0;
    case Family::prob:
      return value >= YuleSimonParams::kMinRho;
    default:
      return false;
  }
}

double clamped_log_likelihood(double p, bool viewed) {
  const double pc = std::clamp(p, kEps, 1.0 - kEps);
  return viewed ? std::log(pc) : std::log(1.0 - pc);
}

}  // namespace

void FitConfig::validate() const {
  if (k_cutoff < 1) throw UsageError("k_cutoff must be >= 1");
  if (max_iters < 1) throw UsageError("max_iters must be >= 1");
  if (!(tol > 0.0)) throw UsageError("tol must be > 0");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw UsageError("step_size must be > 0");
}

double nll_at_k(const PositionBiasModel& model, std::span<const ImpressionRecord> dataset,
                std::int64_t k) {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const auto& record : dataset) {
    if (record.rank > k) continue;
    sum += clamped_log_likelihood(model.prob_view(record.rank, record.context), record.viewed);
    ++n;
  }
  if (n == 0) {
    throw UsageError("NLL@" + std::to_string(k) + ": no impressions at rank <= " +
                     std::to_string(k));
  }
  return -sum / static_cast<double>(n);
}

NllObjective::NllObjective(Family family, LinkKind link,
                           std::span<const ImpressionRecord> dataset, std::int64_t k)
    : family_(family), base_(base_family(family)), link_(link) {
  if (!is_fittable(family)) {
    throw UsageError("family '" + std::string(to_string(family)) + "' has no free parameters");
  }
  if (k < 1) throw UsageError("k must be >= 1");
  const bool contextual = is_contextual(family);

  std::vector<RankCount> scratch;
  auto flush = [&](const ContextVector& context) {
    if (scratch.empty()) return;
    std::sort(scratch.begin(), scratch.end(),
              [](const RankCount& a, const RankCount& b) { return a.rank < b.rank; });
    const std::size_t begin = counts_.size();
    for (const auto& rc : scratch) {
      if (!counts_.empty() && counts_.size() > begin && counts_.back().rank == rc.rank) {
        counts_.back().views += rc.views;
        counts_.back().non_views += rc.non_views;
      } else {
        counts_.push_back(rc);
      }
    }
    groups_.push_back(Group{context, begin, counts_.size()});
    scratch.clear();
  };

  std::optional<ContextVector> current;
  for (const auto& record : dataset) {
    if (record.rank < 1) throw DomainError("record rank must be >= 1");
    if (record.rank > k) continue;
    ++impressions_;
    const ContextVector& context = contextual ? record.context : ContextVector::constant();
    if (contextual && impressions_ == 1) dimension_ = context.size();
    if (contextual && context.size() != dimension_) {
      throw UsageError("records have inconsistent context dimensions");
    }
    if (!current || !(*current == context)) {
      if (current) flush(*current);
      current = context;
    }
    scratch.push_back(RankCount{record.rank, record.viewed ? 1.0 : 0.0, record.viewed ? 0.0 : 1.0});
  }
  if (current) flush(*current);
  if (impressions_ == 0) {
    throw UsageError("NLL@" + std::to_string(k) + ": no impressions at rank <= " +
                     std::to_string(k));
  }
}

NllObjective::Totals NllObjective::evaluate_group(const Group& group, double parameter,
                                                  bool want_gradient) const {
  Totals totals;
  // p = P(V = 1), q = 1 - p, both supplied with their logs so that each family
  // can evaluate them in its most accurate and cheapest form.
  auto accumulate = [&](const RankCount& rc, double p, double log_p, double q, double log_q,
                        double d_log_p) {
    if (rc.views > 0.0) {
      if (p >= 1.0 - kEps) {
        totals.log_likelihood += rc.views * std::log1p(-kEps);
      } else if (p <= kEps) {
        totals.log_likelihood += rc.views * std::log(kEps);
        totals.clamp_events += static_cast<std::int64_t>(rc.views);
      } else {
        totals.log_likelihood += rc.views * log_p;
        if (want_gradient) totals.d_param += rc.views * d_log_p;
      }
    }
    if (rc.non_views > 0.0) {
      if (q <= kEps) {
        totals.log_likelihood += rc.non_views * std::log(kEps);
        totals.clamp_events += static_cast<std::int64_t>(rc.non_views);
      } else if (q >= 1.0 - kEps) {
        totals.log_likelihood += rc.non_views * std::log1p(-kEps);
      } else {
        totals.log_likelihood += rc.non_views * log_q;
        if (want_gradient) totals.d_param += rc.non_views * (-p * d_log_p / q);
      }
    }
  };
  auto accumulate_log_p = [&](const RankCount& rc, double log_p, double d_log_p) {
    const double p = std::exp(log_p);
    const double q = -std::expm1(log_p);
    const double log_q = rc.non_views > 0.0 && q > kEps && q < 1.0 - kEps ? std::log(q) : 0.0;
    accumulate(rc, p, log_p, q, log_q, d_log_p);
  };

  switch (base_) {
    case Family::prob: {
      // ln S(r + 1) = ln S(r) - ln(1 + rho / r);  d/drho: -1 / (r + rho)
      const double rho = parameter;
      std::int64_t at = 1;
      double log_s = 0.0;
      double d_log_s = 0.0;
      for (std::size_t i = group.begin; i < group.end; ++i) {
        const RankCount& rc = counts_[i];
        if (rc.rank - at > kRecurrenceGap) {
          const YuleSimonParams params{rho};
          log_s = log_survival(params, rc.rank);
          d_log_s = want_gradient ? d_log_survival_d_rho(params, rc.rank) : 0.0;
          at = rc.rank;
        }
        for (; at < rc.rank; ++at) {
          const double j = static_cast<double>(at);
          log_s -= std::log1p(rho / j);
          if (want_gradient) d_log_s -= 1.0 / (j + rho);
        }
        accumulate_log_p(rc, log_s, d_log_s);
      }
      break;
    }
    case Family::log: {
      const double alpha = parameter;
      for (std::size_t i = group.begin; i < group.end; ++i) {
        const RankCount& rc = counts_[i];
        const double shift = static_cast<double>(rc.rank - 1);
        // ln(e + a s) = 1 + t with t = log1p(a s / e); p = 1 / (1 + t), q = t / (1 + t).
        const double t = std::log1p(alpha * shift / std::numbers::e);
        const double log_inner = 1.0 + t;
        const double inner = std::numbers::e + alpha * shift;
        const double log_p = -std::log(log_inner);
        const double q = t / log_inner;
        const double log_q = rc.non_views > 0.0 && t > 0.0 ? std::log(t) + log_p : 0.0;
        accumulate(rc, 1.0 / log_inner, log_p, q, log_q, -shift / (inner * log_inner));
      }
      break;
    }
    case Family::exp: {
      const double gamma = parameter;
      const double log_gamma_value = std::log(gamma);
      for (std::size_t i = group.begin; i < group.end; ++i) {
        const RankCount& rc = counts_[i];
        const double shift = static_cast<double>(rc.rank - 1);
        accumulate_log_p(rc, shift * log_gamma_value, shift / gamma);
      }
      break;
    }
    default:
      break;
  }
  return totals;
}

double NllObjective::evaluate(std::span<const double> theta, std::vector<double>* gradient,
                              std::int64_t* clamp_events) const {
  if (theta.size() != dimension_) {
    throw UsageError("expected " + std::to_string(dimension_) + " parameters, got " +
                     std::to_string(theta.size()));
  }
  const bool contextual = is_contextual(family_);
  if (gradient != nullptr) gradient->assign(dimension_, 0.0);
  double log_likelihood = 0.0;
  std::int64_t clamps = 0;
  for (const Group& group : groups_) {
    const double raw = contextual ? group.context.dot(theta) : theta[0];
    const double parameter = feedbias::link(raw, link_);
    if (!parameter_in_domain(base_, parameter)) {
      if (gradient != nullptr) gradient->assign(dimension_, std::nan(""));
      return std::numeric_limits<double>::infinity();
    }
    const Totals totals = evaluate_group(group, parameter, gradient != nullptr);
    log_likelihood += totals.log_likelihood;
    clamps += totals.clamp_events;
    if (gradient != nullptr) {
      const double scale = totals.d_param * link_derivative(raw, link_);
      for (std::size_t j = 0; j < dimension_; ++j) (*gradient)[j] += scale * group.context[j];
    }
  }
  const double n = static_cast<double>(impressions_);
  if (gradient != nullptr) {
    for (double& g : *gradient) g = -g / n;
  }
  if (clamp_events != nullptr) *clamp_events = clamps;
  return -log_likelihood / n;
}

double NllObjective::value(std::span<const double> theta) const {
  return evaluate(theta, nullptr, nullptr);
}

double NllObjective::value_and_gradient(std::span<const double> theta,
                                        std::vector<double>& gradient) const {
  return evaluate(theta, &gradient, nullptr);
}

std::int64_t NllObjective::clamp_events(std::span<const double> theta) const {
  std::int64_t clamps = 0;
  evaluate(theta, nullptr, &clamps);
  return clamps;
}

PositionBiasModel NllObjective::model_at(std::span<const double> theta) const {
  if (theta.size() != dimension_) throw UsageError("parameter length mismatch");
  if (is_contextual(family_)) {
    return PositionBiasModel::contextual(base_, std::vector<double>(theta.begin(), theta.end()),
                                         link_);
  }
  const double value = feedbias::link(theta[0], link_);
  switch (base_) {
    case Family::log:
      return PositionBiasModel::log(value);
    case Family::exp:
      return PositionBiasModel::exp(std::max(value, std::numeric_limits<double>::min()));
    default:
      return PositionBiasModel::prob(value);
  }
}

void NllObjective::feature_moments(std::vector<double>& mean, std::vector<double>& stddev) const {
  mean.assign(dimension_, 0.0);
  stddev.assign(dimension_, 0.0);
  std::vector<double> second(dimension_, 0.0);
  double total = 0.0;
  for (const Group& group : groups_) {
    double weight = 0.0;
    for (std::size_t i = group.begin; i < group.end; ++i) {
      weight += counts_[i].views + counts_[i].non_views;
    }
    total += weight;
    for (std::size_t j = 0; j < dimension_; ++j) {
      const double x = group.context[j];
      mean[j] += weight * x;
      second[j] += weight * x * x;
    }
  }
  for (std::size_t j = 0; j < dimension_; ++j) {
    mean[j] /= total;
    stddev[j] = std::sqrt(std::max(0.0, second[j] / total - mean[j] * mean[j]));
  }
}

std::vector<double> nll_gradient(Family family, LinkKind link, std::span<const double> theta,
                                 std::span<const ImpressionRecord> dataset, std::int64_t k) {
  const NllObjective objective(family, link, dataset, k);
  std::vector<double> gradient;
  objective.value_and_gradient(theta, gradient);
  return gradient;
}

std::vector<double> nll_gradient(Family family, std::span<const double> theta,
                                 std::span<const ImpressionRecord> dataset, std::int64_t k) {
  return nll_gradient(family, default_link(family), theta, dataset, k);
}

std::vector<double> default_init(Family family, LinkKind link, std::size_t dimension) {
  const double target = base_family(family) == Family::exp ? 0.5 : 1.0;
  std::vector<double> theta(dimension, 0.0);
  theta.at(0) = link_inverse(target, link);
  return theta;
}

namespace {

// Affine map between raw theta and theta over standardized features
// z_j = (x_j - mean_j) / scale_j, j >= 1. Feature 0 is the constant.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  std::vector<double> to_raw(const std::vector<double>& s) const {
    std::vector<double> raw(s.size());
    raw[0] = s[0];
    for (std::size_t j = 1; j < s.size(); ++j) {
      raw[j] = s[j] / scale[j];
      raw[0] -= s[j] * mean[j] / scale[j];
    }
    return raw;
  }
  std::vector<double> to_standardized(const std::vector<double>& raw) const {
    std::vector<double> s(raw.size());
    s[0] = raw[0];
    for (std::size_t j = 1; j < raw.size(); ++j) {
      s[j] = raw[j] * scale[j];
      s[0] += raw[j] * mean[j];
    }
    return s;
  }
  std::vector<double> gradient_to_standardized(const std::vector<double>& g) const {
    std::vector<double> s(g.size());
    s[0] = g[0];
    for (std::size_t j = 1; j < g.size(); ++j) s[j] = (g[j] - g[0] * mean[j]) / scale[j];
    return s;
  }
};

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

FitResult fit(Family family, std::span<const ImpressionRecord> dataset, const FitConfig& config) {
  config.validate();
  if (!is_fittable(family)) {
    throw UsageError("fit: family '" + std::string(to_string(family)) +
                     "' has no parameters to fit");
  }
  const LinkKind link_kind = config.link.value_or(default_link(family));
  const NllObjective objective(family, link_kind, dataset, config.k_cutoff);
  const std::size_t dim = objective.dimension();

  std::vector<double> init = config.init.value_or(default_init(family, link_kind, dim));
  if (init.size() != dim) {
    throw UsageError("fit: init has " + std::to_string(init.size()) + " entries, expected " +
                     std::to_string(dim));
  }

  Standardizer standardizer{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  if (is_contextual(family)) {
    std::vector<double> mean, stddev;
    objective.feature_moments(mean, stddev);
    for (std::size_t j = 1; j < dim; ++j) {
      if (stddev[j] > 0.0) {
        standardizer.mean[j] = mean[j];
        standardizer.scale[j] = stddev[j];
      }
    }
  }

  std::vector<double> point = standardizer.to_standardized(init);
  std::vector<double> raw_gradient;
  double nll = objective.value_and_gradient(standardizer.to_raw(point), raw_gradient);
  if (!std::isfinite(nll)) {
    throw FitError("fit: non-finite NLL at the initial parameters", init, nll);
  }

  FitResult result;
  result.link = link_kind;
  result.initial_nll = nll;
  result.nll_history.push_back(nll);

  double step = config.step_size;
  const double max_step = config.step_size * kStepRange;
  const double min_step = config.step_size / kStepRange;
  std::vector<double> gradient;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    if (!all_finite(raw_gradient)) {
      throw FitError("fit: non-finite gradient", standardizer.to_raw(point), nll);
    }
    gradient = standardizer.gradient_to_standardized(raw_gradient);
    if (std::all_of(gradient.begin(), gradient.end(), [](double g) { return g == 0.0; })) {
      result.stop_reason = StopReason::zero_gradient;
      break;
    }

    bool accepted = false;
    std::vector<double> candidate(dim);
    double candidate_nll = nll;
    double trial = step;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, trial *= 0.5) {
      for (std::size_t j = 0; j < dim; ++j) candidate[j] = point[j] - trial * gradient[j];
      candidate_nll = objective.value(standardizer.to_raw(candidate));
      if (std::isfinite(candidate_nll) && candidate_nll < nll) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.stop_reason = StopReason::line_search_exhausted;
      break;
    }

    const double decrease = nll - candidate_nll;
    nll = objective.value_and_gradient(standardizer.to_raw(candidate), raw_gradient);
    result.iterations = iter + 1;
    result.nll_history.push_back(nll);

    // Barzilai-Borwein step s's / s'y for the next trial; doubling when the
    // curvature estimate is unusable.
    const std::vector<double> next_gradient = standardizer.gradient_to_standardized(raw_gradient);
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double s_j = candidate[j] - point[j];
      ss += s_j * s_j;
      sy += s_j * (next_gradient[j] - gradient[j]);
    }
    step = sy > 0.0 && std::isfinite(ss / sy) ? ss / sy : 2.0 * trial;
    step = std::clamp(step, min_step, max_step);
    point = candidate;
    if (decrease < config.tol) {
      result.stop_reason = StopReason::tolerance;
      break;
    }
  }

  result.converged = result.stop_reason != StopReason::max_iters;
  result.theta = standardizer.to_raw(point);
  result.final_nll = nll;
  result.clamp_events = objective.clamp_events(result.theta);
  result.model = objective.model_at(result.theta);
  return result;
}

}  // namespace feedbias
