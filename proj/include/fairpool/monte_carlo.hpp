#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fairpool/density.hpp"
#include "fairpool/diagram.hpp"
#include "fairpool/model.hpp"

namespace fairpool {

/// Fair features Z are the vertices retained in the fair diagram; unfair
/// features are every other variable except the predictor.
struct FairFeatureSet {
  std::set<std::string> fair;
  std::set<std::string> unfair;

  /// UnknownVariable if the diagram names a vertex the model lacks.
  static FairFeatureSet from_diagram(const CausalDiagram& fair_diagram,
                                     const ProbabilisticCausalModel& model);
  /// `fair` as given (minus the predictor), everything else unfair.
  static FairFeatureSet from_names(const std::set<std::string>& fair,
                                   const ProbabilisticCausalModel& model);
};

struct PredictorDistribution {
  std::vector<double> samples;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; 0 when n == 1
  double standard_error = 0.0;
  std::optional<DensityCurve> curve;  // set by geometric pooling

  /// Fills n, mean, variance and standard_error from `samples`.
  static PredictorDistribution from_samples(std::vector<double> samples, std::uint64_t seed);
};

/// Predictor evaluated with each of its parents clamped to the evidence.
/// MissingEvidence if a parent is unassigned.
double predict_full_evidence(const ProbabilisticCausalModel& model, const Assignment& evidence);

/// Sample k draws the exogenous context for (seed, k), clamps every fair
/// endogenous feature to its evidence value and computes the rest from the
/// equations. Evidence for other variables is never read. `threads` = 0
/// uses the hardware concurrency; the result does not depend on it.
PredictorDistribution fair_predict(const ProbabilisticCausalModel& model,
                                   const FairFeatureSet& fair_set, const Assignment& evidence,
                                   std::size_t n, std::uint64_t seed, std::size_t threads = 0);

/// Unfair baseline. Sample k sets `protected_variable` to `value`, clamps
/// every endogenous non-descendant of it that has evidence, and recomputes
/// its descendants from the equations under the context for (seed, k).
/// Runs for two values under one seed are paired sample by sample.
PredictorDistribution counterfactual_predict(const ProbabilisticCausalModel& model,
                                             const Assignment& evidence,
                                             const std::string& protected_variable, double value,
                                             std::size_t n, std::uint64_t seed,
                                             std::size_t threads = 0);

/// Exact P(predictor = y | Z = z) by enumerating the finite supports of the
/// exogenous variables the predictor still depends on once Z is clamped.
/// InfiniteSupport if one of them is Poisson or Beta; InvalidArgument if
/// more than `max_contexts` contexts would be enumerated.
std::map<double, double> exact_fair_distribution(const ProbabilisticCausalModel& model,
                                                 const FairFeatureSet& fair_set,
                                                 const Assignment& evidence,
                                                 std::size_t max_contexts = 10'000'000);

/// Empirical pmf of the samples, keyed by exact value.
std::map<double, double> empirical_pmf(const std::vector<double>& samples);
/// Half the L1 distance between two pmfs.
double total_variation(const std::map<double, double>& p, const std::map<double, double>& q);

enum class Verdict { FairWithinTolerance, Violation };
std::string_view to_string(Verdict verdict) noexcept;

struct ScorePair {
  double value_a = 0.0;
  double value_a_prime = 0.0;
  double gap = 0.0;
  double standard_error = 0.0;  // sqrt(se_a^2 + se_a'^2)
  Verdict verdict = Verdict::FairWithinTolerance;
};

struct FairnessReport {
  std::string model;
  std::string protected_variable;
  double a = 0.0;
  double a_prime = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double abs_tol = 0.0;
  ScorePair fair;
  ScorePair unfair;  // counterfactual_predict baseline
  /// predict_full_evidence under each value, when the evidence covers the
  /// predictor's parents.
  std::optional<std::pair<double, double>> full_evidence;
};

inline constexpr double kDefaultAbsTol = 0.02;
inline constexpr double kCriticalZ = 3.0;
inline constexpr std::size_t kDefaultSamples = 100'000;

/// Fair within tolerance iff gap <= max(abs_tol, kCriticalZ * combined SE).
Verdict judge(double gap, double standard_error, double abs_tol);

FairnessReport check_counterfactual_fairness(const ProbabilisticCausalModel& model,
                                             const FairFeatureSet& fair_set,
                                             const Assignment& evidence,
                                             const std::string& protected_variable, double a,
                                             double a_prime, std::size_t n, std::uint64_t seed,
                                             double abs_tol = kDefaultAbsTol,
                                             std::size_t threads = 0);

/// JSON object with model, protected, a, a_prime, fair_gap, unfair_gap,
/// std_err, verdict and the detailed per-path values.
std::string to_json(const FairnessReport& report);

/// `index,y` CSV preceded by `# key=value` metadata lines.
std::string samples_csv(const PredictorDistribution& dist,
                        const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace fairpool
