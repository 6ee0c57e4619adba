#include <Eigen/Dense>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>

#include "tesspec/errors.hpp"
#include "tesspec/fit.hpp"

namespace tesspec::fit {

namespace {

constexpr std::size_t kParamsPerPeak = 3;  // amplitude, mean, sigma

double initial_sigma(const EnergyHistogram& hist, std::size_t idx, double height) {
  const double half = 0.5 * height;
  std::size_t l = idx;
  while (l > 0 && static_cast<double>(hist.counts[l]) > half) --l;
  std::size_t r = idx;
  while (r + 1 < hist.bins() && static_cast<double>(hist.counts[r]) > half) ++r;
  const double hwhm = 0.5 * (hist.center(r) - hist.center(l));
  return hwhm / std::sqrt(2.0 * std::log(2.0));
}

}  // namespace

double mixture_value(std::span<const GaussianPeak> peaks, double x) {
  double v = 0.0;
  for (const auto& p : peaks) {
    const double z = (x - p.mean) / p.sigma;
    v += p.amplitude * std::exp(-0.5 * z * z);
  }
  return v;
}

namespace {

// Gaussian mass between z_lo and z_hi standard deviations, computed on the
// tail that keeps the difference well conditioned.
double normal_mass(double z_lo, double z_hi) {
  constexpr double k = 0.7071067811865476;
  if (z_lo >= 0.0) return 0.5 * (std::erfc(z_lo * k) - std::erfc(z_hi * k));
  if (z_hi <= 0.0) return 0.5 * (std::erfc(-z_hi * k) - std::erfc(-z_lo * k));
  return 0.5 * (std::erf(z_hi * k) - std::erf(z_lo * k));
}

constexpr double kSqrt2Pi = 2.5066282746310002;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

struct Scaling {
  double x0 = 0.0;
  double xs = 1.0;
  double ys = 1.0;
};

Scaling scaling_for(std::span<const double> x, std::span<const double> y) {
  Scaling sc;
  const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
  sc.x0 = *xmin_it;
  sc.xs = *xmax_it - *xmin_it;
  if (!(sc.xs > 0.0)) sc.xs = std::max(1.0, std::abs(sc.x0));
  sc.ys = 0.0;
  for (double v : y) sc.ys = std::max(sc.ys, std::abs(v));
  if (!(sc.ys > 0.0)) sc.ys = 1.0;
  return sc;
}

// Point model: y_i = sum a exp(-(x_i - mu)^2 / 2 s^2). Bin model: y_i is the
// same density integrated over bin i and divided by the bin width, so a peak
// narrower than a bin still has a well-defined mean and width.
MixtureFit fit_scaled(std::span<const double> lo, std::span<const double> hi, std::span<const double> y,
                      std::span<const GaussianPeak> initial, const LmOptions& options, bool integrate) {
  const std::size_t np = kParamsPerPeak * initial.size();
  if (y.size() < 3 * np)
    throw FitError("mixture fit needs at least 3 points per parameter",
                   {0, 0.0, 0.0, std::to_string(y.size()) + " points for " + std::to_string(np) + " parameters"});

  // Work on x' = (x - x0) / xs and y' = y / ys so the normal equations are
  // well conditioned whatever the area units are.
  std::vector<double> span_x(lo.begin(), lo.end());
  span_x.insert(span_x.end(), hi.begin(), hi.end());
  const Scaling sc = scaling_for(span_x, y);
  std::vector<double> ln(lo.size()), hn(hi.size()), yn(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    ln[i] = (lo[i] - sc.x0) / sc.xs;
    hn[i] = (hi[i] - sc.x0) / sc.xs;
    yn[i] = y[i] / sc.ys;
  }

  std::vector<double> p0;
  p0.reserve(np);
  for (const auto& g : initial) {
    p0.push_back(g.amplitude / sc.ys);
    p0.push_back((g.mean - sc.x0) / sc.xs);
    p0.push_back(g.sigma / sc.xs);
  }

  const std::size_t k = initial.size();
  auto residuals = [&](std::span<const double> p, std::span<double> r, std::span<double> jac) {
    for (std::size_t j = 0; j < k; ++j)
      if (!(p[3 * j] > 0.0) || !(p[3 * j + 2] > 0.0)) return false;
    for (std::size_t i = 0; i < yn.size(); ++i) {
      double model = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double a = p[3 * j];
        const double mu = p[3 * j + 1];
        const double s = p[3 * j + 2];
        double* row = jac.empty() ? nullptr : jac.data() + i * np + 3 * j;
        if (!integrate) {
          const double dx = ln[i] - mu;
          const double e = std::exp(-0.5 * dx * dx / (s * s));
          model += a * e;
          if (row) {
            row[0] = e;
            row[1] = a * e * dx / (s * s);
            row[2] = a * e * dx * dx / (s * s * s);
          }
        } else {
          const double w = hn[i] - ln[i];
          const double zl = (ln[i] - mu) / s;
          const double zh = (hn[i] - mu) / s;
          const double pl = kInvSqrt2Pi * std::exp(-0.5 * zl * zl);
          const double ph = kInvSqrt2Pi * std::exp(-0.5 * zh * zh);
          const double c = kSqrt2Pi * s / w;
          const double mass = normal_mass(zl, zh);
          model += a * c * mass;
          if (row) {
            row[0] = c * mass;
            row[1] = -a * c * (ph - pl) / s;
            row[2] = a * c * (mass - (zh * ph - zl * pl)) / s;
          }
        }
      }
      r[i] = model - yn[i];
    }
    return true;
  };

  const LmResult lm = levenberg_marquardt(residuals, std::move(p0), y.size(), options);

  // Bin counts are Poisson, so their variance is the fitted count rather
  // than one pooled residual variance: A^-1 J^T diag(mu) J A^-1.
  std::vector<double> stderr_n(np);
  for (std::size_t j = 0; j < np; ++j) stderr_n[j] = lm.stderr_of(j);
  if (integrate) {
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto m = static_cast<Eigen::Index>(yn.size());
    Matrix jac(m, static_cast<Eigen::Index>(np));
    std::vector<double> r(yn.size());
    residuals(lm.params, r, std::span<double>(jac.data(), static_cast<std::size_t>(jac.size())));
    Eigen::VectorXd var(m);
    for (Eigen::Index i = 0; i < m; ++i)
      var[i] = std::max(r[static_cast<std::size_t>(i)] + yn[static_cast<std::size_t>(i)], 0.0) / sc.ys;
    const Eigen::FullPivLU<Matrix> lu(jac.transpose() * jac);
    if (lu.isInvertible()) {
      const Matrix inv = lu.inverse();
      const Matrix cov = inv * (jac.transpose() * var.asDiagonal() * jac) * inv;
      for (std::size_t j = 0; j < np; ++j)
        stderr_n[j] = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j))));
    }
  }

  MixtureFit fit;
  fit.iterations = lm.iterations;
  fit.cost = lm.cost * sc.ys * sc.ys;
  fit.converged = lm.converged;
  fit.lambda = lm.lambda;
  for (std::size_t j = 0; j < k; ++j) {
    GaussianPeak g;
    g.amplitude = lm.params[3 * j] * sc.ys;
    g.mean = sc.x0 + lm.params[3 * j + 1] * sc.xs;
    g.sigma = lm.params[3 * j + 2] * sc.xs;
    g.amplitude_stderr = stderr_n[3 * j] * sc.ys;
    // Exact data leaves a zero covariance; keep the stderr strictly positive.
    g.mean_stderr = std::max(stderr_n[3 * j + 1] * sc.xs, DBL_EPSILON * std::max(std::abs(g.mean), sc.xs));
    g.sigma_stderr = stderr_n[3 * j + 2] * sc.xs;
    fit.peaks.push_back(g);
  }
  std::sort(fit.peaks.begin(), fit.peaks.end(),
            [](const GaussianPeak& a, const GaussianPeak& b) { return a.mean < b.mean; });
  return fit;
}

}  // namespace

double mixture_bin_value(std::span<const GaussianPeak> peaks, double lo, double hi) {
  if (!(hi > lo)) throw DomainError("bin must have hi > lo");
  double v = 0.0;
  for (const auto& p : peaks)
    v += p.amplitude * kSqrt2Pi * p.sigma / (hi - lo) * normal_mass((lo - p.mean) / p.sigma, (hi - p.mean) / p.sigma);
  return v;
}

MixtureFit fit_gaussian_mixture(std::span<const double> x, std::span<const double> y,
                                std::span<const GaussianPeak> initial, const LmOptions& options) {
  if (initial.empty()) throw FitError("mixture fit needs at least one seed", {0, 0.0, 0.0, "no seeds"});
  if (x.size() != y.size()) throw DataError("x and y sizes differ");
  return fit_scaled(x, x, y, initial, options, false);
}

MixtureFit fit_gaussian_mixture(const EnergyHistogram& hist, std::span<const double> seeds,
                                const LmOptions& options) {
  if (seeds.empty()) throw FitError("mixture fit needs at least one seed", {0, 0.0, 0.0, "no seeds"});
  std::vector<double> sorted_seeds(seeds.begin(), seeds.end());
  std::sort(sorted_seeds.begin(), sorted_seeds.end());

  const double bin_width = (hist.edges.back() - hist.edges.front()) / static_cast<double>(hist.bins());
  std::vector<GaussianPeak> initial;
  for (std::size_t s = 0; s < sorted_seeds.size(); ++s) {
    const double pos = sorted_seeds[s];
    auto it = std::upper_bound(hist.edges.begin(), hist.edges.end(), pos);
    std::size_t idx = it == hist.edges.begin() ? 0 : static_cast<std::size_t>(it - hist.edges.begin()) - 1;
    idx = std::min(idx, hist.bins() - 1);
    // Start from the tallest raw bin next to the seed.
    for (std::size_t j = idx > 0 ? idx - 1 : 0; j <= std::min(idx + 1, hist.bins() - 1); ++j)
      if (hist.counts[j] > hist.counts[idx]) idx = j;

    GaussianPeak g;
    g.mean = pos;
    g.amplitude = std::max(1.0, static_cast<double>(hist.counts[idx]));
    double sigma = initial_sigma(hist, idx, g.amplitude);
    double gap = std::numeric_limits<double>::infinity();
    if (s > 0) gap = std::min(gap, pos - sorted_seeds[s - 1]);
    if (s + 1 < sorted_seeds.size()) gap = std::min(gap, sorted_seeds[s + 1] - pos);
    if (std::isfinite(gap)) sigma = std::min(sigma, gap / 3.0);
    g.sigma = std::max(sigma, 0.5 * bin_width);
    initial.push_back(g);
  }

  std::vector<double> y(hist.bins());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(hist.counts[i]);
  const std::span<const double> edges(hist.edges);
  return fit_scaled(edges.first(hist.bins()), edges.subspan(1), y, initial, options, true);
}

}  // namespace tesspec::fit
