#include "fairpool/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fairpool/dsl.hpp"
#include "fairpool/error.hpp"

namespace fairpool {

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::TooFewSamples, "need at least two samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return 1.06 * sd * std::pow(n, -0.2);
}

std::vector<double> kde_at(std::span<const double> samples, double bandwidth,
                           std::span<const double> grid) {
  // Kernels beyond 8h contribute below exp(-32) and are skipped.
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double norm =
      1.0 / (static_cast<double>(sorted.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double x = grid[g];
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * bandwidth);
    auto hi = std::upper_bound(lo, sorted.end(), x + 8.0 * bandwidth);
    double sum = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double z = (x - *it) / bandwidth;
      sum += std::exp(-0.5 * z * z);
    }
    out[g] = sum * norm;
  }
  return out;
}

double trapezoid(const DensityCurve& curve) {
  double total = 0.0;
  for (std::size_t i = 1; i < curve.x.size(); ++i) {
    total += 0.5 * (curve.density[i] + curve.density[i - 1]) * (curve.x[i] - curve.x[i - 1]);
  }
  return total;
}

DensityCurve kde(std::span<const double> samples, std::optional<double> bandwidth,
                 std::size_t grid_points) {
  if (samples.size() < 2) throw Error(ErrorCode::TooFewSamples, "need at least two samples");
  if (grid_points < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two points");
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::NonpositiveBandwidth,
                bandwidth ? "bandwidth must be positive"
                          : "samples have zero spread; give an explicit bandwidth");
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  const double start = *lo - 3.0 * h;
  const double step = (*hi - *lo + 6.0 * h) / static_cast<double>(grid_points - 1);

  DensityCurve curve;
  curve.bandwidth = h;
  curve.x.resize(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) curve.x[i] = start + step * static_cast<double>(i);
  curve.density = kde_at(samples, h, curve.x);
  const double mass = trapezoid(curve);
  if (mass > 0.0) {
    for (double& d : curve.density) d /= mass;
  }
  return curve;
}

std::size_t count_modes(const DensityCurve& curve, double relative_floor) {
  const auto& d = curve.density;
  if (d.empty()) return 0;
  const double floor = relative_floor * *std::max_element(d.begin(), d.end());
  std::size_t modes = 0;
  std::size_t i = 0;
  while (i < d.size()) {
    // Treat a run of equal values as one point.
    std::size_t j = i;
    while (j + 1 < d.size() && d[j + 1] == d[i]) ++j;
    const bool rises = i == 0 || d[i - 1] < d[i];
    const bool falls = j + 1 == d.size() || d[j + 1] < d[j];
    if (rises && falls && d[i] > floor) ++modes;
    i = j + 1;
  }
  return modes;
}

double curve_mode(const DensityCurve& curve) {
  const auto at = std::max_element(curve.density.begin(), curve.density.end());
  return curve.x[static_cast<std::size_t>(at - curve.density.begin())];
}

std::string curve_csv(const DensityCurve& curve,
                      const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::string out;
  for (const auto& [key, value] : metadata) out += "# " + key + "=" + value + "\n";
  out += "x,density\n";
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    out += format_number(curve.x[i]) + "," + format_number(curve.density[i]) + "\n";
  }
  return out;
}

}  // namespace fairpool
