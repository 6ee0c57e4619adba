#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tesspec::fit {

struct LmOptions {
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
};

struct LmResult {
  std::vector<double> params;
  /// Row-major p x p covariance, scaled by the residual variance.
  std::vector<double> covariance;
  double cost = 0.0;  // 0.5 * sum r^2
  int iterations = 0;
  bool converged = false;
  double lambda = 0.0;

  double stderr_of(std::size_t i) const;
};

/// Fills residuals (size m) and, when jacobian is non-empty, the row-major
/// m x p Jacobian. Returns false when params are outside the model domain.
using ResidualFunction = std::function<bool(std::span<const double> params,
                                            std::span<double> residuals,
                                            std::span<double> jacobian)>;

/// Marquardt-damped Gauss-Newton on 0.5 * |r(p)|^2 with diagonal scaling.
/// Converges on a relative cost decrease below the tolerance; throws FitError
/// on singular normal equations or when max_iterations is exhausted.
LmResult levenberg_marquardt(const ResidualFunction& fn, std::vector<double> initial,
                             std::size_t n_residuals, const LmOptions& options = {});

}  // namespace tesspec::fit
