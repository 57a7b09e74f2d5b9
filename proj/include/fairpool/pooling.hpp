#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairpool/monte_carlo.hpp"

namespace fairpool {

enum class PoolingKind { ArithmeticMixture, GeometricPool, MeanOfExpectations };

std::string_view to_string(PoolingKind kind) noexcept;
/// "mixture", "geometric" or "mean"; InvalidArgument otherwise.
PoolingKind parse_pooling_kind(std::string_view text);

struct PoolingOperator {
  PoolingKind kind = PoolingKind::MeanOfExpectations;
  std::vector<double> weights;  // empty means uniform

  /// The weight vector for `experts` distributions. InvalidArgument if the
  /// length differs, a weight is negative, or they do not sum to 1 (1e-9).
  std::vector<double> resolved_weights(std::size_t experts) const;
};

/// ArithmeticMixture: expert i contributes its first round(w_i * n)
/// samples, where n is the smallest sample count among experts with
/// positive weight; rounding leftovers go to the largest weight.
/// GeometricPool: prod_i p_i(x)^w_i over the experts' KDE curves on their
/// shared range, renormalized, then represented by n quantile samples.
/// EmptyInput without distributions; GridMismatch when the curves share no
/// range; InvalidArgument for MeanOfExpectations, which has no distribution.
PredictorDistribution pool_samples(const PoolingOperator& op,
                                   std::span<const PredictorDistribution> dists);

/// sum_i w_i * mean_i. EmptyInput without distributions.
double mean_of_expectations(std::span<const PredictorDistribution> dists,
                            std::span<const double> weights = {});

/// The operator's pooled value: the pooled mean for the sample operators.
double pooled_value(const PoolingOperator& op, std::span<const PredictorDistribution> dists);

/// JSON audit trail for one scored candidate: per-expert mean, variance,
/// standard error, KDE mode count and seed, the operator and weights, the
/// pooled value, and whether any expert distribution is multimodal.
std::string decision_report(std::span<const PredictorDistribution> dists,
                            std::span<const std::string> expert_labels, const PoolingOperator& op,
                            const std::string& evidence_label);

}  // namespace fairpool
