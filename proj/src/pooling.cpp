#include "fairpool/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "fairpool/error.hpp"

namespace fairpool {

std::string_view to_string(PoolingKind kind) noexcept {
  switch (kind) {
    case PoolingKind::ArithmeticMixture: return "mixture";
    case PoolingKind::GeometricPool: return "geometric";
    case PoolingKind::MeanOfExpectations: return "mean";
  }
  return "?";
}

PoolingKind parse_pooling_kind(std::string_view text) {
  for (auto k : {PoolingKind::ArithmeticMixture, PoolingKind::GeometricPool,
                 PoolingKind::MeanOfExpectations}) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown pooling operator '" + std::string(text) + "' (mixture | geometric | mean)");
}

std::vector<double> PoolingOperator::resolved_weights(std::size_t experts) const {
  if (weights.empty()) {
    return std::vector<double>(experts, experts ? 1.0 / static_cast<double>(experts) : 0.0);
  }
  if (weights.size() != experts) {
    throw Error(ErrorCode::InvalidArgument, std::to_string(weights.size()) + " weights for " +
                                                std::to_string(experts) + " experts");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "weights must sum to 1");
  }
  return weights;
}

namespace {

void require_input(std::span<const PredictorDistribution> dists) {
  if (dists.empty()) throw Error(ErrorCode::EmptyInput, "no expert distributions given");
}

PredictorDistribution mixture(std::span<const PredictorDistribution> dists,
                              const std::vector<double>& w) {
  std::size_t n = std::numeric_limits<std::size_t>::max();
  std::size_t largest = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (w[i] > 0.0) n = std::min(n, dists[i].n);
    if (w[i] > w[largest]) largest = i;
  }
  std::vector<std::size_t> take(dists.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    take[i] = static_cast<std::size_t>(std::llround(w[i] * static_cast<double>(n)));
    assigned += take[i];
  }
  // Rounding may over- or under-shoot by a few samples.
  if (assigned < n) {
    take[largest] += n - assigned;
  } else if (assigned > n) {
    take[largest] -= std::min(take[largest], assigned - n);
  }
  std::vector<double> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const std::size_t k = std::min(take[i], dists[i].samples.size());
    samples.insert(samples.end(), dists[i].samples.begin(),
                   dists[i].samples.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return PredictorDistribution::from_samples(std::move(samples), dists[largest].seed);
}

PredictorDistribution geometric(std::span<const PredictorDistribution> dists,
                                const std::vector<double>& w) {
  std::vector<DensityCurve> curves;
  std::vector<std::size_t> members;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (w[i] == 0.0) continue;
    curves.push_back(kde(dists[i].samples));
    members.push_back(i);
    lo = std::max(lo, curves.back().x.front());
    hi = std::min(hi, curves.back().x.back());
    n = std::min(n, dists[i].n);
  }
  if (!(lo < hi)) {
    throw Error(ErrorCode::GridMismatch, "expert densities have disjoint supports");
  }

  const std::size_t points = 2 * kDefaultGridPoints;
  DensityCurve pooled;
  pooled.x.resize(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t g = 0; g < points; ++g) pooled.x[g] = lo + step * static_cast<double>(g);

  std::vector<double> log_density(points, 0.0);
  std::vector<char> alive(points, 1);
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& samples = dists[members[c]].samples;
    const auto raw = kde_at(samples, curves[c].bandwidth, pooled.x);
    for (std::size_t g = 0; g < points; ++g) {
      if (raw[g] > 0.0) {
        log_density[g] += w[members[c]] * std::log(raw[g]);
      } else {
        alive[g] = 0;
      }
    }
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < points; ++g) {
    if (alive[g]) peak = std::max(peak, log_density[g]);
  }
  if (!std::isfinite(peak)) {
    throw Error(ErrorCode::GridMismatch, "expert densities never overlap on the shared grid");
  }
  pooled.density.resize(points);
  for (std::size_t g = 0; g < points; ++g) {
    pooled.density[g] = alive[g] ? std::exp(log_density[g] - peak) : 0.0;
  }
  const double mass = trapezoid(pooled);
  for (double& d : pooled.density) d /= mass;

  // Deterministic quantile samples at (k + 0.5) / n of the piecewise-linear
  // density's cdf.
  std::vector<double> cdf(points, 0.0);
  for (std::size_t g = 1; g < points; ++g) {
    cdf[g] = cdf[g - 1] + 0.5 * (pooled.density[g] + pooled.density[g - 1]) * step;
  }
  std::vector<double> samples(n);
  std::size_t g = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double target = (static_cast<double>(k) + 0.5) / static_cast<double>(n) * cdf.back();
    while (g + 1 < points && cdf[g] < target) ++g;
    const double span = cdf[g] - cdf[g - 1];
    const double t = span > 0.0 ? (target - cdf[g - 1]) / span : 0.0;
    samples[k] = pooled.x[g - 1] + std::clamp(t, 0.0, 1.0) * step;
  }
  auto out = PredictorDistribution::from_samples(std::move(samples), dists[members[0]].seed);
  out.curve = std::move(pooled);
  return out;
}

}  // namespace

PredictorDistribution pool_samples(const PoolingOperator& op,
                                   std::span<const PredictorDistribution> dists) {
  require_input(dists);
  const auto w = op.resolved_weights(dists.size());
  if (op.kind == PoolingKind::MeanOfExpectations) {
    throw Error(ErrorCode::InvalidArgument, "mean of expectations pools values, not samples");
  }
  // A dictator, or identical opinions, pool to that opinion exactly.
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (w[i] == 1.0) return dists[i];
  }
  bool unanimous = true;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (w[i] > 0.0 && dists[i].samples != dists[0].samples) unanimous = false;
  }
  if (unanimous && w[0] > 0.0) return dists[0];

  return op.kind == PoolingKind::ArithmeticMixture ? mixture(dists, w) : geometric(dists, w);
}

double mean_of_expectations(std::span<const PredictorDistribution> dists,
                            std::span<const double> weights) {
  require_input(dists);
  PoolingOperator op;
  op.weights.assign(weights.begin(), weights.end());
  const auto w = op.resolved_weights(dists.size());
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (w[i] != 0.0) total += w[i] * dists[i].mean;
  }
  return total;
}

double pooled_value(const PoolingOperator& op, std::span<const PredictorDistribution> dists) {
  if (op.kind == PoolingKind::MeanOfExpectations) return mean_of_expectations(dists, op.weights);
  return pool_samples(op, dists).mean;
}

std::string decision_report(std::span<const PredictorDistribution> dists,
                            std::span<const std::string> expert_labels, const PoolingOperator& op,
                            const std::string& evidence_label) {
  require_input(dists);
  const auto w = op.resolved_weights(dists.size());
  nlohmann::ordered_json j;
  j["candidate"] = evidence_label;
  j["operator"] = to_string(op.kind);
  j["weights"] = w;
  bool multimodal = false;
  auto experts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto& d = dists[i];
    std::size_t modes = 1;
    if (d.n >= 2 && d.variance > 0.0) modes = count_modes(kde(d.samples));
    multimodal = multimodal || modes > 1;
    nlohmann::ordered_json e;
    e["model"] = i < expert_labels.size() ? expert_labels[i] : std::to_string(i);
    e["mean"] = d.mean;
    e["variance"] = d.variance;
    e["std_err"] = d.standard_error;
    e["modes"] = modes;
    e["n"] = d.n;
    e["seed"] = d.seed;
    experts.push_back(std::move(e));
  }
  j["experts"] = std::move(experts);
  j["pooled_value"] = pooled_value(op, dists);
  j["multimodal"] = multimodal;
  return j.dump(2) + "\n";
}

}  // namespace fairpool
