#pragma once

// Position-bias models: P(V = 1 | R = r, X = x).
//
//   dcg       1 / log2(r + 1)
//   log       1 / ln(e + alpha (r - 1))
//   exp       gamma^(r - 1)
//   prob      Yule-Simon survival P(D >= r)
//   empirical per-rank table with constant fallback beyond its last rank
//   contextual-{log,exp,prob}: the scalar parameter becomes link(theta^T x)
//
// Every evaluation is clamped to [kProbabilityFloor, 1].

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "feedbias/context.hpp"
#include "feedbias/records.hpp"

namespace feedbias {

inline constexpr double kProbabilityFloor = 1e-6;

enum class Family { dcg, log, exp, prob, empirical, contextual_log, contextual_exp, contextual_prob };

enum class LinkKind { identity, softplus, sigmoid };

std::string_view to_string(Family family);
std::string_view to_string(LinkKind link);
/// Throws UsageError on unknown names.
Family parse_family(std::string_view name);
LinkKind parse_link(std::string_view name);

bool is_contextual(Family family);
bool is_fittable(Family family);
/// contextual-log -> log etc.; identity on the scalar families.
Family base_family(Family family);
Family contextual_variant(Family base);
/// softplus for rho and alpha, sigmoid for gamma.
LinkKind default_link(Family family);

/// softplus: ln(1 + e^raw) + 1e-6; sigmoid: 1 / (1 + e^-raw). Stable for |raw| <= 500 and beyond.
double link(double raw, LinkKind kind);
double link_derivative(double raw, LinkKind kind);
double link_inverse(double value, LinkKind kind);

// Unclamped closed forms.
double dcg_discount(std::int64_t rank);
double log_discount(double alpha, std::int64_t rank);
double exp_discount(double gamma, std::int64_t rank);

struct DcgModel {
  friend bool operator==(const DcgModel&, const DcgModel&) = default;
};
struct LogModel {
  double alpha = 1.0;
  friend bool operator==(const LogModel&, const LogModel&) = default;
};
struct ExpModel {
  double gamma = 0.5;
  friend bool operator==(const ExpModel&, const ExpModel&) = default;
};
struct ProbModel {
  double rho = 1.0;
  friend bool operator==(const ProbModel&, const ProbModel&) = default;
};
struct EmpiricalModel {
  std::vector<double> table;  // table[r - 1] for r = 1..max_rank; table.back() beyond
  friend bool operator==(const EmpiricalModel&, const EmpiricalModel&) = default;
};
struct ContextualModel {
  Family base = Family::prob;  // log, exp or prob
  std::vector<double> theta;
  LinkKind link = LinkKind::softplus;
  friend bool operator==(const ContextualModel&, const ContextualModel&) = default;
};

using ModelParams =
    std::variant<DcgModel, LogModel, ExpModel, ProbModel, EmpiricalModel, ContextualModel>;

/// Immutable position-bias model. Factories validate parameter domains.
class PositionBiasModel {
 public:
  static PositionBiasModel dcg();
  static PositionBiasModel log(double alpha);
  static PositionBiasModel exp(double gamma);
  static PositionBiasModel prob(double rho);
  static PositionBiasModel empirical(std::vector<double> table);
  static PositionBiasModel contextual(Family base, std::vector<double> theta, LinkKind link);
  static PositionBiasModel contextual(Family base, std::vector<double> theta) {
    return contextual(base, std::move(theta), default_link(base));
  }

  Family family() const;
  const ModelParams& params() const noexcept { return params_; }

  /// Throws DomainError for rank < 1, UsageError for a contextual model without context.
  double prob_view(std::int64_t rank) const;
  double prob_view(std::int64_t rank, const ContextVector& context) const;
  double prob_view(std::int64_t rank, const ContextVector* context) const;

  /// The scalar parameter a contextual model resolves to for this context.
  double resolved_parameter(const ContextVector& context) const;

  friend bool operator==(const PositionBiasModel&, const PositionBiasModel&) = default;

 private:
  explicit PositionBiasModel(ModelParams params) : params_(std::move(params)) {}
  ModelParams params_;
};

/// Scalar-family probability, unclamped. family is log, exp or prob.
double scalar_family_prob(Family family, double parameter, std::int64_t rank);

/// Per-rank empirical view rate with add-one smoothing on both outcomes.
/// Throws UsageError on an empty dataset or max_rank < 1.
PositionBiasModel fit_empirical(std::span<const ImpressionRecord> dataset, std::int64_t max_rank);

}  // namespace feedbias
