#pragma once

// Nearest-point maps: Euclidean projection onto the l1 ball, onto the
// symmetric hull A l1(C) (l1-constrained least squares) and onto an
// axis-aligned ellipsoid.

#include "pnn/core.hpp"

#include <limits>

namespace pnn {

/// Euclidean projection of v onto {u : ||u||_1 <= radius}.
inline Vector project_l1_ball(const Vector& v, double radius) {
  require(std::isfinite(radius) && radius >= 0.0,
          "project_l1_ball: radius must be nonnegative");
  require(v.allFinite(), "project_l1_ball: non-finite input");
  if (v.lpNorm<1>() <= radius) return v;
  if (radius == 0.0) return Vector::Zero(v.size());

  // Soft threshold at tau where sum(max(|v| - tau, 0)) = radius.
  std::vector<double> mags(v.data(), v.data() + v.size());
  for (double& m : mags) m = std::abs(m);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumsum += mags[j];
    const double t = (cumsum - radius) / static_cast<double>(j + 1);
    if (mags[j] > t) tau = t;
    else break;
  }
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double m = std::max(std::abs(v(i)) - tau, 0.0);
    out(i) = v(i) < 0.0 ? -m : m;
  }
  return out;
}

struct L1Options {
  double tol = -1.0;  // absolute; negative: rel_tol * (1 + ||b||^2)
  double rel_tol = 1e-6;
  int max_iter = 20000;
  int power_iterations = 30;
  double lipschitz = 0.0;  // squared spectral norm of A if known; 0: estimate
};

/// Result of the nearest-point computation on A l1(C).
struct NNSolution {
  Vector theta_hat;
  Vector y_hat;  // A * theta_hat
  double vi_residual = 0.0;
  double tolerance = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// max over vertices z in {+-C a_j} of (b - y)·(z - y). Nonpositive (up to
/// rounding) exactly when y is the projection of b onto the hull.
inline double vi_residual(const Matrix& a, const Vector& b, const Vector& y,
                          double radius) {
  const Vector r = b - y;
  if (a.cols() == 0) return std::max(0.0, -r.dot(y));
  const double best_vertex = radius * (a.transpose() * r).cwiseAbs().maxCoeff();
  return std::max(0.0, best_vertex - r.dot(y));
}

/// Largest squared singular value of a, by power iteration on a^T a.
inline double spectral_norm_sq(const Matrix& a, int iterations = 30) {
  if (a.cols() == 0 || a.rows() == 0) return 0.0;
  Vector v = Vector::Constant(a.cols(), 1.0 / std::sqrt(static_cast<double>(a.cols())));
  // Fixed deterministic perturbation so v is not orthogonal to the top
  // singular vector in symmetric designs.
  for (Index j = 0; j < v.size(); ++j) v(j) += 1e-3 * static_cast<double>(j % 7);
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Vector w = a.transpose() * (a * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    est = v.dot(w);
    v = w / nw;
  }
  // Frobenius norm caps the spectral norm from above.
  return std::min(std::max(est, 0.0), a.squaredNorm());
}

/// Projection of b onto the convex hull of {+-C a_j}, computed as the fit of
/// min ||A theta - b||^2 over ||theta||_1 <= C by accelerated projected
/// gradient with monotone restarts. Stops when the vertex variational
/// inequality residual falls below the tolerance.
inline NNSolution l1_ls(const Matrix& a, const Vector& b, double radius,
                        const L1Options& opts = {}) {
  require(a.allFinite() && b.allFinite(), "l1_ls: non-finite input");
  require(a.rows() == b.size(), "l1_ls: dimension mismatch");
  require(std::isfinite(radius) && radius >= 0.0, "l1_ls: radius must be nonnegative");
  require(opts.max_iter >= 0, "l1_ls: max_iter must be nonnegative");

  NNSolution sol;
  sol.tolerance = opts.tol >= 0.0 ? opts.tol : opts.rel_tol * (1.0 + b.squaredNorm());
  sol.theta_hat = Vector::Zero(a.cols());
  sol.y_hat = Vector::Zero(a.rows());

  const double lip =
      1.01 * (opts.lipschitz > 0.0 ? opts.lipschitz
                                   : spectral_norm_sq(a, opts.power_iterations));
  if (radius == 0.0 || lip == 0.0) {
    sol.vi_residual = vi_residual(a, b, sol.y_hat, radius);
    sol.converged = sol.vi_residual <= sol.tolerance;
    return sol;
  }
  const double step = 1.0 / lip;

  auto objective = [&](const Vector& fit) { return 0.5 * (fit - b).squaredNorm(); };

  Vector theta = sol.theta_hat;
  Vector fit = sol.y_hat;
  double obj = objective(fit);
  Vector z = theta;
  Vector z_fit = fit;
  double t = 1.0;

  double best_res = vi_residual(a, b, fit, radius);
  Vector best_theta = theta;
  Vector best_fit = fit;

  int iter = 0;
  while (best_res > sol.tolerance && iter < opts.max_iter) {
    ++iter;
    const Vector grad = a.transpose() * (z_fit - b);
    Vector next = project_l1_ball(z - step * grad, radius);
    Vector next_fit = a * next;
    const double next_obj = objective(next_fit);

    if (next_obj > obj) {
      // Restart from the last iterate with a plain gradient step.
      t = 1.0;
      const Vector g0 = a.transpose() * (fit - b);
      next = project_l1_ball(theta - step * g0, radius);
      next_fit = a * next;
      z = next;
      z_fit = next_fit;
      theta = std::move(next);
      fit = std::move(next_fit);
      obj = objective(fit);
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      z = next + beta * (next - theta);
      z_fit = next_fit + beta * (next_fit - fit);
      theta = std::move(next);
      fit = std::move(next_fit);
      obj = next_obj;
      t = t_next;
    }

    const double res = vi_residual(a, b, fit, radius);
    if (res < best_res) {
      best_res = res;
      best_theta = theta;
      best_fit = fit;
    }
  }

  sol.theta_hat = std::move(best_theta);
  sol.y_hat = std::move(best_fit);
  sol.vi_residual = best_res;
  sol.iterations = iter;
  sol.converged = best_res <= sol.tolerance;
  return sol;
}

/// Ellipsoid {y : sum_i w_i y_i^2 <= 1}.
class AxisEllipsoid {
 public:
  explicit AxisEllipsoid(Vector weights) : weights_(std::move(weights)) {
    require(weights_.size() >= 1, "AxisEllipsoid: empty weight vector");
    require(weights_.allFinite() && (weights_.array() > 0.0).all(),
            "AxisEllipsoid: weights must be positive and finite");
  }

  const Vector& weights() const { return weights_; }
  Index dim() const { return weights_.size(); }

  /// sum_i w_i y_i^2.
  double gauge_sq(const Vector& y) const {
    return (weights_.array() * y.array().square()).sum();
  }
  bool contains(const Vector& y, double slack = 0.0) const {
    return gauge_sq(y) <= 1.0 + slack;
  }

 private:
  Vector weights_;
};

/// Nearest point of the ellipsoid to v. Outside points are mapped to
/// v_i / (1 + lambda w_i) with lambda >= 0 found by bracketed bisection on
/// the boundary equation.
inline Vector ellipsoid_nearest(const AxisEllipsoid& e, const Vector& v,
                                double tol = 1e-12) {
  require(v.size() == e.dim(), "ellipsoid_nearest: dimension mismatch");
  require(v.allFinite(), "ellipsoid_nearest: non-finite input");
  if (e.gauge_sq(v) <= 1.0) return v;

  const auto& w = e.weights().array();
  auto point = [&](double lambda) {
    return Vector((v.array() / (1.0 + lambda * w)).matrix());
  };
  auto excess = [&](double lambda) { return e.gauge_sq(point(lambda)) - 1.0; };

  double lo = 0.0;
  double hi = 1.0;
  while (excess(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double ex = excess(hi);
    if (-ex <= tol) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (excess(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return point(hi);
}

}  // namespace pnn
