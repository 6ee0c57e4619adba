#include <algorithm>
#include <cmath>
#include <numeric>

#include "tesspec/errors.hpp"
#include "tesspec/fit.hpp"

namespace tesspec::fit {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::size_t choose_bins(const std::vector<double>& sorted, const BinningRule& rule, double range) {
  if (rule.kind == BinningRule::Kind::fixed_count) {
    if (rule.count == 0) throw ConfigError("fixed_count binning needs count >= 1");
    return rule.count;
  }
  if (rule.min_bins == 0 || rule.min_bins > rule.max_bins)
    throw ConfigError("binning requires 1 <= min_bins <= max_bins");
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
  if (!(width > 0.0) || !(range > 0.0)) return rule.max_bins;
  const double bins = std::ceil(range / width);
  return static_cast<std::size_t>(
      std::clamp(bins, static_cast<double>(rule.min_bins), static_cast<double>(rule.max_bins)));
}

}  // namespace

std::vector<double> EnergyHistogram::centers() const {
  std::vector<double> c(bins());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = center(i);
  return c;
}

std::uint64_t EnergyHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

EnergyHistogram build_histogram(std::span<const double> values, const BinningRule& rule,
                                HistogramUnit unit) {
  if (values.empty()) throw DataError("cannot histogram an empty set of areas");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted)
    if (!std::isfinite(v)) throw DataError("non-finite value passed to build_histogram");
  std::sort(sorted.begin(), sorted.end());

  double lo = sorted.front();
  double hi = sorted.back();
  std::size_t bins = 0;
  if (hi == lo) {
    const double half = 0.5 * std::max(std::abs(lo), 1.0);
    lo -= half;
    hi += half;
    bins = rule.kind == BinningRule::Kind::fixed_count ? choose_bins(sorted, rule, 0.0)
                                                       : rule.min_bins;
  } else {
    bins = choose_bins(sorted, rule, hi - lo);
  }

  EnergyHistogram h;
  h.unit = unit;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) h.edges[i] = lo + static_cast<double>(i) * width;
  h.edges[bins] = hi;
  h.counts.assign(bins, 0);

  for (double v : sorted) {
    auto idx = static_cast<std::size_t>(std::clamp(std::floor((v - lo) / width), 0.0,
                                                   static_cast<double>(bins - 1)));
    while (idx > 0 && v < h.edges[idx]) --idx;
    while (idx + 1 < bins && v >= h.edges[idx + 1]) ++idx;
    ++h.counts[idx];
  }
  return h;
}

std::vector<double> detect_peaks(const EnergyHistogram& hist, std::optional<double> spacing_hint) {
  const std::size_t n = hist.bins();
  if (n == 0) throw DataError("empty histogram");
  const auto max_count = *std::max_element(hist.counts.begin(), hist.counts.end());
  if (max_count == 0) throw DataError("histogram has no counts, no peak to detect");

  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i >= 2 ? i - 2 : 0;
    const std::size_t b = std::min(n - 1, i + 2);
    double s = 0.0;
    for (std::size_t j = a; j <= b; ++j) s += static_cast<double>(hist.counts[j]);
    smooth[i] = s / static_cast<double>(b - a + 1);
  }

  const double threshold = static_cast<double>(max_count) / 50.0;
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || smooth[i] > smooth[i - 1];
    const bool right = i + 1 == n || smooth[i] >= smooth[i + 1];
    if (left && right && smooth[i] > threshold) maxima.push_back(i);
  }

  // Drop maxima that are only counting-noise ripples on a neighbour: the
  // valley between two maxima must sit clearly below the lower one.
  bool changed = true;
  while (changed && maxima.size() > 1) {
    changed = false;
    for (std::size_t k = 0; k + 1 < maxima.size(); ++k) {
      const std::size_t a = maxima[k];
      const std::size_t b = maxima[k + 1];
      const double valley = *std::min_element(smooth.begin() + static_cast<std::ptrdiff_t>(a),
                                              smooth.begin() + static_cast<std::ptrdiff_t>(b) + 1);
      const double lower = std::min(smooth[a], smooth[b]);
      const double ripple = 2.0 * std::sqrt(lower / 5.0);
      if (lower - valley <= ripple) {
        maxima.erase(maxima.begin() + static_cast<std::ptrdiff_t>(smooth[a] < smooth[b] ? k : k + 1));
        changed = true;
        break;
      }
    }
  }
  if (maxima.empty()) throw DataError("no histogram peak above max(counts)/50");

  // Seed at the count-weighted centroid of the raw bins around each maximum;
  // the boxcar alone can pull a narrow peak by a bin near the histogram edge.
  std::vector<double> seeds;
  for (auto i : maxima) {
    const std::size_t a = i >= 2 ? i - 2 : 0;
    const std::size_t b = std::min(n - 1, i + 2);
    double w = 0.0;
    double wx = 0.0;
    for (std::size_t j = a; j <= b; ++j) {
      w += static_cast<double>(hist.counts[j]);
      wx += static_cast<double>(hist.counts[j]) * hist.center(j);
    }
    seeds.push_back(w > 0.0 ? wx / w : hist.center(i));
  }

  if (spacing_hint && *spacing_hint > 0.0 && seeds.size() > 1) {
    const double d = *spacing_hint;
    std::vector<double> filled{seeds.front()};
    for (std::size_t k = 1; k < seeds.size(); ++k) {
      double pos = filled.back() + d;
      while (pos < seeds[k] - 0.5 * d) {
        filled.push_back(pos);
        pos += d;
      }
      filled.push_back(seeds[k]);
    }
    seeds = std::move(filled);
  }
  return seeds;
}

}  // namespace tesspec::fit
