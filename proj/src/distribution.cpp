#include "fairpool/distribution.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numeric>

#include "fairpool/error.hpp"

namespace fairpool {

namespace {

// Poisson inversion runs on chunks of at most this rate so exp(-lambda)
// never underflows; the sum of independent Poisson chunks is Poisson.
constexpr double kPoissonChunk = 500.0;

bool finite(double x) { return std::isfinite(x); }

std::string num(double x) { return std::to_string(x); }

double poisson_inversion(double lambda, CounterStream& stream) {
  const double u = stream.next_open_uniform();
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  double k = 0.0;
  // Sequential search; stops once the remaining mass is below double
  // resolution so rounding in the running cdf cannot loop forever.
  while (u > cdf) {
    k += 1.0;
    pmf *= lambda / k;
    const double next = cdf + pmf;
    if (next == cdf && k > lambda) break;
    cdf = next;
  }
  return k;
}

}  // namespace

Distribution Distribution::poisson(double lambda) {
  if (!finite(lambda) || lambda <= 0.0) {
    throw Error(ErrorCode::InvalidParameter, "Poisson rate must be positive, got " + num(lambda));
  }
  return Distribution(Poisson{lambda});
}

Distribution Distribution::bernoulli(double p) {
  if (!finite(p) || p < 0.0 || p > 1.0) {
    throw Error(ErrorCode::InvalidParameter, "Bernoulli p must lie in [0, 1], got " + num(p));
  }
  return Distribution(Bernoulli{p});
}

Distribution Distribution::categorical(std::vector<double> weights) {
  if (weights.empty()) {
    throw Error(ErrorCode::InvalidParameter, "Categorical needs at least one weight");
  }
  for (double w : weights) {
    if (!finite(w) || w < 0.0) {
      throw Error(ErrorCode::InvalidParameter,
                  "Categorical weights must be finite and nonnegative, got " + num(w));
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidParameter,
                "Categorical weights must sum to 1, got " + num(total));
  }
  return Distribution(Categorical{std::move(weights)});
}

Distribution Distribution::beta(double alpha, double beta) {
  if (!finite(alpha) || alpha <= 0.0 || !finite(beta) || beta <= 0.0) {
    throw Error(ErrorCode::InvalidParameter, "Beta shape parameters must be positive");
  }
  return Distribution(Beta{alpha, beta});
}

Distribution Distribution::point_mass(double value) {
  if (!finite(value)) {
    throw Error(ErrorCode::InvalidParameter, "PointMass value must be finite");
  }
  return Distribution(PointMass{value});
}

std::string_view Distribution::family_name() const noexcept {
  struct Visitor {
    std::string_view operator()(const Poisson&) const { return "Poisson"; }
    std::string_view operator()(const Bernoulli&) const { return "Bernoulli"; }
    std::string_view operator()(const Categorical&) const { return "Categorical"; }
    std::string_view operator()(const Beta&) const { return "Beta"; }
    std::string_view operator()(const PointMass&) const { return "PointMass"; }
  };
  return std::visit(Visitor{}, family_);
}

std::optional<std::vector<std::pair<double, double>>> Distribution::finite_support() const {
  using Support = std::vector<std::pair<double, double>>;
  if (const auto* b = std::get_if<Bernoulli>(&family_)) {
    Support s;
    if (b->p < 1.0) s.emplace_back(0.0, 1.0 - b->p);
    if (b->p > 0.0) s.emplace_back(1.0, b->p);
    return s;
  }
  if (const auto* c = std::get_if<Categorical>(&family_)) {
    Support s;
    for (std::size_t i = 0; i < c->weights.size(); ++i) {
      if (c->weights[i] > 0.0) s.emplace_back(static_cast<double>(i), c->weights[i]);
    }
    return s;
  }
  if (const auto* m = std::get_if<PointMass>(&family_)) {
    return Support{{m->value, 1.0}};
  }
  return std::nullopt;
}

bool Distribution::admits(double value) const noexcept {
  if (!finite(value)) return false;
  const bool integral = std::floor(value) == value;
  if (std::holds_alternative<Poisson>(family_)) return integral && value >= 0.0;
  if (std::holds_alternative<Bernoulli>(family_)) return value == 0.0 || value == 1.0;
  if (const auto* c = std::get_if<Categorical>(&family_)) {
    return integral && value >= 0.0 && value < static_cast<double>(c->weights.size());
  }
  if (std::holds_alternative<Beta>(family_)) return value >= 0.0 && value <= 1.0;
  return value == std::get<PointMass>(family_).value;
}

double Distribution::sample(CounterStream& stream) const {
  if (const auto* p = std::get_if<Poisson>(&family_)) {
    const double chunks = std::ceil(p->lambda / kPoissonChunk);
    const double rate = p->lambda / chunks;
    double total = 0.0;
    for (double c = 0.0; c < chunks; c += 1.0) total += poisson_inversion(rate, stream);
    return total;
  }
  if (const auto* b = std::get_if<Bernoulli>(&family_)) {
    return stream.next_open_uniform() < b->p ? 1.0 : 0.0;
  }
  if (const auto* c = std::get_if<Categorical>(&family_)) {
    const double u = stream.next_open_uniform();
    double cdf = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < c->weights.size(); ++i) {
      if (c->weights[i] <= 0.0) continue;
      last_positive = i;
      cdf += c->weights[i];
      if (u < cdf) return static_cast<double>(i);
    }
    // Weights may sum to slightly less than one.
    return static_cast<double>(last_positive);
  }
  if (const auto* beta = std::get_if<Beta>(&family_)) {
    // Inverse-cdf transform of a single uniform.
    return boost::math::ibeta_inv(beta->alpha, beta->beta, stream.next_open_uniform());
  }
  return std::get<PointMass>(family_).value;
}

}  // namespace fairpool
