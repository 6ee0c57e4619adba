#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tesspec/errors.hpp"
#include "tesspec/levenberg_marquardt.hpp"

using namespace tesspec;
using tesspec::fit::levenberg_marquardt;

TEST_CASE("straight line matches the closed-form least squares") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(0.25 * i);
    y.push_back(1.5 - 0.7 * x.back() + noise(rng));
  }
  auto fn = [&](std::span<const double> p, std::span<double> r, std::span<double> j) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      r[i] = p[0] + p[1] * x[i] - y[i];
      if (!j.empty()) {
        j[2 * i] = 1.0;
        j[2 * i + 1] = x[i];
      }
    }
    return true;
  };
  const auto res = levenberg_marquardt(fn, {0.0, 0.0}, x.size());

  // Oracle: normal equations in long double.
  long double n = x.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const long double det = n * sxx - sx * sx;
  const long double b = (n * sxy - sx * sy) / det;
  const long double a = (sy - b * sx) / n;
  long double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) rss += (a + b * x[i] - y[i]) * (a + b * x[i] - y[i]);
  const long double s2 = rss / (n - 2);

  CHECK(res.converged);
  CHECK(res.params[0] == doctest::Approx(static_cast<double>(a)).epsilon(1e-8));
  CHECK(res.params[1] == doctest::Approx(static_cast<double>(b)).epsilon(1e-8));
  CHECK(res.cost == doctest::Approx(static_cast<double>(0.5L * rss)).epsilon(1e-10));
  CHECK(res.stderr_of(0) == doctest::Approx(static_cast<double>(std::sqrt(s2 * sxx / det))).epsilon(1e-6));
  CHECK(res.stderr_of(1) == doctest::Approx(static_cast<double>(std::sqrt(s2 * n / det))).epsilon(1e-6));
  CHECK(res.covariance[1] == doctest::Approx(static_cast<double>(-s2 * sx / det)).epsilon(1e-6));
  CHECK(res.covariance[1] == res.covariance[2]);
}

TEST_CASE("Rosenbrock valley") {
  auto fn = [](std::span<const double> p, std::span<double> r, std::span<double> j) {
    r[0] = 10.0 * (p[1] - p[0] * p[0]);
    r[1] = 1.0 - p[0];
    if (!j.empty()) {
      j[0] = -20.0 * p[0];
      j[1] = 10.0;
      j[2] = -1.0;
      j[3] = 0.0;
    }
    return true;
  };
  const auto res = levenberg_marquardt(fn, {-1.2, 1.0}, 2);
  CHECK(res.params[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.params[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.cost < 1e-12);

  fit::LmOptions tight;
  tight.max_iterations = 1;
  try {
    levenberg_marquardt(fn, {-1.2, 1.0}, 2, tight);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(e.diagnostics().iterations == 1);
    CHECK(e.diagnostics().cost > 0.0);
    CHECK(e.diagnostics().reason == "iteration limit reached");
  }
}

TEST_CASE("exponential decay recovers exact parameters") {
  std::vector<double> t, y;
  for (int i = 0; i < 30; ++i) {
    t.push_back(0.1 * i);
    y.push_back(4.0 * std::exp(-1.3 * t.back()));
  }
  auto fn = [&](std::span<const double> p, std::span<double> r, std::span<double> j) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = std::exp(-p[1] * t[i]);
      r[i] = p[0] * e - y[i];
      if (!j.empty()) {
        j[2 * i] = e;
        j[2 * i + 1] = -p[0] * t[i] * e;
      }
    }
    return true;
  };
  const auto res = levenberg_marquardt(fn, {1.0, 0.5}, t.size());
  CHECK(res.params[0] == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(res.params[1] == doctest::Approx(1.3).epsilon(1e-8));
}

TEST_CASE("failure modes carry diagnostics") {
  auto outside = [](std::span<const double>, std::span<double>, std::span<double>) { return false; };
  CHECK_THROWS_AS(levenberg_marquardt(outside, {1.0}, 3), FitError);

  // Two parameters entering only as their sum: singular at the optimum.
  std::vector<double> x{1, 2, 3, 4, 5};
  auto degenerate = [&](std::span<const double> p, std::span<double> r, std::span<double> j) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      r[i] = (p[0] + p[1]) * x[i] - 2.0 * x[i] - 0.01 * (i % 2 ? 1.0 : -1.0);
      if (!j.empty()) j[2 * i] = j[2 * i + 1] = x[i];
    }
    return true;
  };
  try {
    levenberg_marquardt(degenerate, {0.3, 0.4}, x.size());
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(e.diagnostics().reason.find("singular") != std::string::npos);
    CHECK(e.diagnostics().iterations >= 1);
  }
}

TEST_CASE("damping schedule options are honoured") {
  auto fn = [](std::span<const double> p, std::span<double> r, std::span<double> j) {
    r[0] = p[0] - 3.0;
    r[1] = 2.0 * (p[0] - 3.0);
    if (!j.empty()) {
      j[0] = 1.0;
      j[1] = 2.0;
    }
    return true;
  };
  fit::LmOptions opt;
  opt.initial_lambda = 1e3;
  const auto res = levenberg_marquardt(fn, {0.0}, 2, opt);
  CHECK(res.params[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(res.lambda < opt.initial_lambda);
  // Zero residual at the optimum: covariance scale is zero.
  CHECK(res.stderr_of(0) == doctest::Approx(0.0).scale(1e-6));
}
