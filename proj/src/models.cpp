#include "feedbias/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "feedbias/errors.hpp"
#include "feedbias/yule_simon.hpp"

namespace feedbias {
namespace {

constexpr double kSoftplusOffset = 1e-6;

constexpr std::array<std::pair<Family, std::string_view>, 8> kFamilyNames{{
    {Family::dcg, "dcg"},
    {Family::log, "log"},
    {Family::exp, "exp"},
    {Family::prob, "prob"},
    {Family::empirical, "empirical"},
    {Family::contextual_log, "contextual-log"},
    {Family::contextual_exp, "contextual-exp"},
    {Family::contextual_prob, "contextual-prob"},
}};

void require_rank(std::int64_t rank) {
  if (rank < 1) throw DomainError("rank must be >= 1, got " + std::to_string(rank));
}

double clamp_probability(double p) {
  if (std::isnan(p)) throw DomainError("position-bias probability is NaN");
  return std::clamp(p, kProbabilityFloor, 1.0);
}

void check_scalar_parameter(Family base, double value) {
  switch (base) {
    case Family::log:
      if (!std::isfinite(value) || value <= 0.0) {
        throw DomainError("log model requires alpha > 0, got " + std::to_string(value));
      }
      return;
    case Family::exp:
      if (!(value > 0.0 && value <= 1.0)) {
        throw DomainError("exp model requires gamma in (0, 1], got " + std::to_string(value));
      }
      return;
    case Family::prob:
      YuleSimonParams{value};
      return;
    default:
      throw UsageError("not a scalar family: " + std::string(to_string(base)));
  }
}

}  // namespace

std::string_view to_string(Family family) {
  for (const auto& [f, name] : kFamilyNames) {
    if (f == family) return name;
  }
  return "unknown";
}

std::string_view to_string(LinkKind link) {
  switch (link) {
    case LinkKind::identity:
      return "identity";
    case LinkKind::softplus:
      return "softplus";
    case LinkKind::sigmoid:
      return "sigmoid";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames) {
    if (n == name) return f;
  }
  throw UsageError("unknown model family '" + std::string(name) + "'");
}

LinkKind parse_link(std::string_view name) {
  if (name == "identity") return LinkKind::identity;
  if (name == "softplus") return LinkKind::softplus;
  if (name == "sigmoid") return LinkKind::sigmoid;
  throw UsageError("unknown link '" + std::string(name) + "'");
}

bool is_contextual(Family family) {
  return family == Family::contextual_log || family == Family::contextual_exp ||
         family == Family::contextual_prob;
}

bool is_fittable(Family family) {
  return family != Family::dcg && family != Family::empirical;
}

Family base_family(Family family) {
  switch (family) {
    case Family::contextual_log:
      return Family::log;
    case Family::contextual_exp:
      return Family::exp;
    case Family::contextual_prob:
      return Family::prob;
    default:
      return family;
  }
}

Family contextual_variant(Family base) {
  switch (base) {
    case Family::log:
      return Family::contextual_log;
    case Family::exp:
      return Family::contextual_exp;
    case Family::prob:
      return Family::contextual_prob;
    default:
      throw UsageError("family '" + std::string(to_string(base)) + "' has no contextual variant");
  }
}

LinkKind default_link(Family family) {
  return base_family(family) == Family::exp ? LinkKind::sigmoid : LinkKind::softplus;
}

double link(double raw, LinkKind kind) {
  switch (kind) {
    case LinkKind::identity:
      return raw;
    case LinkKind::softplus:
      // ln(1 + e^x) = max(x, 0) + ln(1 + e^-|x|)
      return std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw))) + kSoftplusOffset;
    case LinkKind::sigmoid:
      if (raw >= 0.0) return 1.0 / (1.0 + std::exp(-raw));
      {
        const double e = std::exp(raw);
        return e / (1.0 + e);
      }
  }
  return raw;
}

double link_derivative(double raw, LinkKind kind) {
  switch (kind) {
    case LinkKind::identity:
      return 1.0;
    case LinkKind::softplus:
      return link(raw, LinkKind::sigmoid);
    case LinkKind::sigmoid: {
      const double s = link(raw, LinkKind::sigmoid);
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

double link_inverse(double value, LinkKind kind) {
  switch (kind) {
    case LinkKind::identity:
      return value;
    case LinkKind::softplus: {
      const double y = value - kSoftplusOffset;
      if (!(y > 0.0)) throw DomainError("softplus inverse requires value > 1e-6");
      // ln(e^y - 1) = y + ln(1 - e^-y)
      return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
    }
    case LinkKind::sigmoid:
      if (!(value > 0.0 && value < 1.0)) throw DomainError("sigmoid inverse requires (0, 1)");
      return std::log(value) - std::log1p(-value);
  }
  return value;
}

double dcg_discount(std::int64_t rank) {
  require_rank(rank);
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double log_discount(double alpha, std::int64_t rank) {
  require_rank(rank);
  return 1.0 / std::log(std::numbers::e + alpha * static_cast<double>(rank - 1));
}

double exp_discount(double gamma, std::int64_t rank) {
  require_rank(rank);
  return std::pow(gamma, static_cast<double>(rank - 1));
}

double scalar_family_prob(Family family, double parameter, std::int64_t rank) {
  check_scalar_parameter(family, parameter);
  switch (family) {
    case Family::log:
      return log_discount(parameter, rank);
    case Family::exp:
      return exp_discount(parameter, rank);
    default:
      return survival(YuleSimonParams{parameter}, rank);
  }
}

PositionBiasModel PositionBiasModel::dcg() { return PositionBiasModel(DcgModel{}); }

PositionBiasModel PositionBiasModel::log(double alpha) {
  check_scalar_parameter(Family::log, alpha);
  return PositionBiasModel(LogModel{alpha});
}

PositionBiasModel PositionBiasModel::exp(double gamma) {
  check_scalar_parameter(Family::exp, gamma);
  return PositionBiasModel(ExpModel{gamma});
}

PositionBiasModel PositionBiasModel::prob(double rho) {
  check_scalar_parameter(Family::prob, rho);
  return PositionBiasModel(ProbModel{rho});
}

PositionBiasModel PositionBiasModel::empirical(std::vector<double> table) {
  if (table.empty()) throw UsageError("empirical table must not be empty");
  for (double p : table) {
    if (!(p >= kProbabilityFloor && p <= 1.0)) {
      throw DomainError("empirical table entries must lie in [1e-6, 1], got " +
                        std::to_string(p));
    }
  }
  return PositionBiasModel(EmpiricalModel{std::move(table)});
}

PositionBiasModel PositionBiasModel::contextual(Family base, std::vector<double> theta,
                                                LinkKind link) {
  base = base_family(base);
  if (base != Family::log && base != Family::exp && base != Family::prob) {
    throw UsageError("contextual models wrap log, exp or prob");
  }
  if (theta.empty() || theta.size() > ContextVector::kMaxFeatures) {
    throw UsageError("contextual theta length must be in [1, " +
                     std::to_string(ContextVector::kMaxFeatures) + "]");
  }
  if (!std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); })) {
    throw DomainError("contextual theta must be finite");
  }
  return PositionBiasModel(ContextualModel{base, std::move(theta), link});
}

Family PositionBiasModel::family() const {
  struct Visitor {
    Family operator()(const DcgModel&) const { return Family::dcg; }
    Family operator()(const LogModel&) const { return Family::log; }
    Family operator()(const ExpModel&) const { return Family::exp; }
    Family operator()(const ProbModel&) const { return Family::prob; }
    Family operator()(const EmpiricalModel&) const { return Family::empirical; }
    Family operator()(const ContextualModel& m) const { return contextual_variant(m.base); }
  };
  return std::visit(Visitor{}, params_);
}

double PositionBiasModel::resolved_parameter(const ContextVector& context) const {
  const auto* m = std::get_if<ContextualModel>(&params_);
  if (m == nullptr) throw UsageError("resolved_parameter requires a contextual model");
  return link(context.dot(m->theta), m->link);
}

double PositionBiasModel::prob_view(std::int64_t rank) const { return prob_view(rank, nullptr); }

double PositionBiasModel::prob_view(std::int64_t rank, const ContextVector& context) const {
  return prob_view(rank, &context);
}

double PositionBiasModel::prob_view(std::int64_t rank, const ContextVector* context) const {
  require_rank(rank);
  struct Visitor {
    std::int64_t rank;
    const ContextVector* context;
    const PositionBiasModel* self;
    double operator()(const DcgModel&) const { return dcg_discount(rank); }
    double operator()(const LogModel& m) const { return log_discount(m.alpha, rank); }
    double operator()(const ExpModel& m) const { return exp_discount(m.gamma, rank); }
    double operator()(const ProbModel& m) const {
      return survival(YuleSimonParams{m.rho}, rank);
    }
    double operator()(const EmpiricalModel& m) const {
      const auto index = static_cast<std::size_t>(rank - 1);
      return index < m.table.size() ? m.table[index] : m.table.back();
    }
    double operator()(const ContextualModel& m) const {
      if (context == nullptr) {
        throw UsageError("contextual model '" + std::string(to_string(self->family())) +
                         "' requires a context");
      }
      return scalar_family_prob(m.base, self->resolved_parameter(*context), rank);
    }
  };
  return clamp_probability(std::visit(Visitor{rank, context, this}, params_));
}

PositionBiasModel fit_empirical(std::span<const ImpressionRecord> dataset, std::int64_t max_rank) {
  if (dataset.empty()) throw UsageError("fit_empirical: dataset is empty");
  if (max_rank < 1) throw UsageError("fit_empirical: max_rank must be >= 1");
  const auto n = static_cast<std::size_t>(max_rank);
  std::vector<double> views(n, 0.0);
  std::vector<double> counts(n, 0.0);
  for (const auto& record : dataset) {
    if (record.rank < 1) throw DomainError("record rank must be >= 1");
    if (record.rank > max_rank) continue;
    const auto i = static_cast<std::size_t>(record.rank - 1);
    counts[i] += 1.0;
    views[i] += record.viewed ? 1.0 : 0.0;
  }
  std::vector<double> table(n);
  for (std::size_t i = 0; i < n; ++i) table[i] = (views[i] + 1.0) / (counts[i] + 2.0);
  return PositionBiasModel::empirical(std::move(table));
}

}  // namespace feedbias
