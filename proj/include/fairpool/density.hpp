#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fairpool {

struct DensityCurve {
  std::vector<double> x;  // equispaced, ascending
  std::vector<double> density;
  double bandwidth = 0.0;

  friend bool operator==(const DensityCurve&, const DensityCurve&) = default;
};

inline constexpr std::size_t kDefaultGridPoints = 512;

/// 1.06 * sd * n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian-kernel density on `grid_points` equispaced points spanning
/// [min - 3h, max + 3h], rescaled to unit trapezoidal mass. `bandwidth`
/// nullopt selects Silverman's rule. TooFewSamples below two samples,
/// NonpositiveBandwidth when h <= 0 (including Auto on constant samples),
/// InvalidArgument when grid_points < 2.
DensityCurve kde(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt,
                 std::size_t grid_points = kDefaultGridPoints);

/// Unnormalized kernel sum at each grid point.
std::vector<double> kde_at(std::span<const double> samples, double bandwidth,
                           std::span<const double> grid);

double trapezoid(const DensityCurve& curve);

/// Local maxima of the curve above `relative_floor` times its peak.
std::size_t count_modes(const DensityCurve& curve, double relative_floor = 0.01);

/// Grid point with the highest density (the first one on ties).
double curve_mode(const DensityCurve& curve);

/// `x,density` CSV preceded by `# key=value` metadata lines.
std::string curve_csv(const DensityCurve& curve,
                      const std::vector<std::pair<std::string, std::string>>& metadata = {});

}  // namespace fairpool
