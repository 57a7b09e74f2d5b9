#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fairpool/rng.hpp"

namespace fairpool {

struct Poisson {
  double lambda;
  friend bool operator==(const Poisson&, const Poisson&) = default;
};
struct Bernoulli {
  double p;
  friend bool operator==(const Bernoulli&, const Bernoulli&) = default;
};
/// Values are the zero-based category index.
struct Categorical {
  std::vector<double> weights;
  friend bool operator==(const Categorical&, const Categorical&) = default;
};
struct Beta {
  double alpha;
  double beta;
  friend bool operator==(const Beta&, const Beta&) = default;
};
struct PointMass {
  double value;
  friend bool operator==(const PointMass&, const PointMass&) = default;
};

/// Distribution of one exogenous variable. Parameters are validated on
/// construction (InvalidParameter); a Distribution object is always valid.
class Distribution {
 public:
  using Family = std::variant<Poisson, Bernoulli, Categorical, Beta, PointMass>;

  static Distribution poisson(double lambda);
  static Distribution bernoulli(double p);
  static Distribution categorical(std::vector<double> weights);
  static Distribution beta(double alpha, double beta);
  static Distribution point_mass(double value);

  const Family& family() const noexcept { return family_; }
  std::string_view family_name() const noexcept;

  /// Exact (value, probability) list for finite-support families, ordered by
  /// value; zero-probability points are omitted. Empty for Poisson and Beta.
  std::optional<std::vector<std::pair<double, double>>> finite_support() const;

  /// True when `value` is a possible draw (integrality, range, support).
  bool admits(double value) const noexcept;

  /// One draw. Consumes a deterministic number of uniforms for every family
  /// except Poisson with lambda above the split threshold, which consumes one
  /// per chunk.
  double sample(CounterStream& stream) const;

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  explicit Distribution(Family family) : family_(std::move(family)) {}
  Family family_;
};

}  // namespace fairpool
