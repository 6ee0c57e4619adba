#include "tesspec/levenberg_marquardt.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "tesspec/errors.hpp"

namespace tesspec::fit {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

constexpr double kLambdaCeiling = 1e16;

struct Evaluation {
  Vector residuals;
  Matrix jacobian;
  double cost = 0.0;
  bool valid = false;
};

Evaluation evaluate(const ResidualFunction& fn, const Vector& p, std::size_t m, bool with_jacobian) {
  Evaluation e;
  e.residuals.resize(static_cast<Eigen::Index>(m));
  std::span<double> jac;
  if (with_jacobian) {
    e.jacobian.resize(static_cast<Eigen::Index>(m), p.size());
    jac = std::span<double>(e.jacobian.data(), static_cast<std::size_t>(e.jacobian.size()));
  }
  e.valid = fn(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
               std::span<double>(e.residuals.data(), m), jac);
  if (e.valid) {
    e.cost = 0.5 * e.residuals.squaredNorm();
    e.valid = std::isfinite(e.cost) && (!with_jacobian || e.jacobian.allFinite());
  }
  return e;
}

}  // namespace

double LmResult::stderr_of(std::size_t i) const {
  const std::size_t p = params.size();
  return std::sqrt(std::max(0.0, covariance[i * p + i]));
}

LmResult levenberg_marquardt(const ResidualFunction& fn, std::vector<double> initial,
                             std::size_t n_residuals, const LmOptions& options) {
  const auto np = static_cast<Eigen::Index>(initial.size());
  Vector p = Eigen::Map<const Vector>(initial.data(), np);

  FitDiagnostics diag;
  Evaluation current = evaluate(fn, p, n_residuals, true);
  if (!current.valid) {
    diag.reason = "initial parameters outside the model domain";
    throw FitError("least-squares fit failed", diag);
  }

  double lambda = options.initial_lambda;
  int iterations = 0;
  bool converged = false;
  Matrix a = current.jacobian.transpose() * current.jacobian;
  Vector g = current.jacobian.transpose() * current.residuals;

  while (iterations < options.max_iterations) {
    ++iterations;
    const Vector d = a.diagonal();
    if ((d.array() <= 0.0).any()) {
      diag = {iterations, current.cost, lambda, "singular normal equations"};
      throw FitError("least-squares fit failed", diag);
    }
    Matrix damped = a;
    damped.diagonal() += lambda * d;
    Eigen::LDLT<Matrix> solver(damped);
    Vector step = solver.solve(-g);
    if (solver.info() != Eigen::Success || !step.allFinite()) {
      lambda *= options.lambda_up;
      if (lambda > kLambdaCeiling) {
        diag = {iterations, current.cost, lambda, "singular normal equations"};
        throw FitError("least-squares fit failed", diag);
      }
      continue;
    }

    const Vector trial = p + step;
    Evaluation next = evaluate(fn, trial, n_residuals, false);
    if (next.valid && next.cost < current.cost) {
      const double rel = (current.cost - next.cost) / current.cost;
      p = trial;
      current = evaluate(fn, p, n_residuals, true);
      a = current.jacobian.transpose() * current.jacobian;
      g = current.jacobian.transpose() * current.residuals;
      lambda /= options.lambda_down;
      if (rel < options.relative_tolerance || current.cost == 0.0) {
        converged = true;
        break;
      }
    } else {
      lambda *= options.lambda_up;
      // Steps have shrunk to rounding noise without lowering the cost.
      if (lambda > kLambdaCeiling) {
        converged = true;
        break;
      }
    }
  }

  if (!converged) {
    diag = {iterations, current.cost, lambda, "iteration limit reached"};
    throw FitError("least-squares fit did not converge", diag);
  }

  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) {
    diag = {iterations, current.cost, lambda, "singular normal equations at optimum"};
    throw FitError("least-squares fit failed", diag);
  }
  const auto dof = static_cast<double>(n_residuals) - static_cast<double>(np);
  const double s2 = dof > 0.0 ? 2.0 * current.cost / dof : 0.0;
  const Matrix cov = s2 * lu.inverse();

  LmResult result;
  result.params.assign(p.data(), p.data() + np);
  result.covariance.assign(cov.data(), cov.data() + cov.size());
  result.cost = current.cost;
  result.iterations = iterations;
  result.converged = true;
  result.lambda = lambda;
  return result;
}

}  // namespace tesspec::fit
