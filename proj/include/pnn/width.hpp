#pragma once

// Kolmogorov width profile of the symmetric hull of the design columns.
//
// d_k = min over (n-k)-dimensional subspaces P of max_i ||P x_i||.
//
// Finding the optimal subspace is NP-hard; the routines here sandwich it.
// From below: the spectral relaxation
//
//   minimize t  s.t.  0 <= Z <= I,  trace Z = n - k,  x_i^T Z x_i <= t,
//
// solved by projected subgradient, with a Lagrangian dual certificate
// (sum of the n-k smallest eigenvalues of X diag(w) X^T, w in the simplex)
// improved alongside by entropic mirror ascent on w.
// From above: genuine projections rounded from the relaxed solution.

#include "pnn/core.hpp"

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace pnn {

struct RelaxationOptions {
  int max_iter = 2000;
  double tol = 1e-4;      // relative primal-dual gap
  int check_every = 20;   // dual evaluations
};

struct RelaxationResult {
  double t_star = 0.0;   // certified lower value of the relaxation optimum
  double t_upper = 0.0;  // max_i x_i^T Z x_i at Z_star
  Matrix z_star;
  Vector dual_weights;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Sum of the `count` smallest eigenvalues of X diag(w) X^T.
inline double dual_value(const Matrix& x, const Vector& w, Index count) {
  if (count <= 0) return 0.0;
  const Matrix s = x * w.asDiagonal() * x.transpose();
  const SymmetricEigen e = eig_sym(s);
  return std::max(0.0, e.values.tail(count).sum());
}

// Dual value at w and a supergradient: h_i = ||V^T x_i||^2 with V the
// bottom-`count` eigenvectors of X diag(w) X^T.
inline double dual_value(const Matrix& x, const Vector& w, Index count, Vector& h) {
  const Matrix s = x * w.asDiagonal() * x.transpose();
  const SymmetricEigen e = eig_sym(s);
  h = (e.vectors.rightCols(count).transpose() * x).colwise().squaredNorm().transpose();
  return std::max(0.0, e.values.tail(count).sum());
}

// Eigenvalues clipped into [0, 1] after a common shift chosen so that they
// sum to `trace`. This is the Frobenius projection of diag(lambda) onto
// {0 <= Z <= I, trace Z = trace}.
inline Vector water_fill(const Vector& lambda, double trace) {
  const Index n = lambda.size();
  auto filled = [&](double tau) {
    return (lambda.array() - tau).min(1.0).max(0.0).sum();
  };
  double lo = lambda.minCoeff() - 1.0;  // everything clipped to 1
  double hi = lambda.maxCoeff();        // everything clipped to 0
  if (trace >= static_cast<double>(n)) return Vector::Ones(n);
  if (trace <= 0.0) return Vector::Zero(n);
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (filled(mid) > trace) lo = mid;
    else hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  return (lambda.array() - tau).min(1.0).max(0.0).matrix();
}

}  // namespace detail

/// Solves the spectral relaxation for a given k by projected subgradient on
/// f(Z) = max_i x_i^T Z x_i. Z is kept in eigen-form so each step is a
/// rank-one update of a diagonal matrix followed by water-filling.
inline RelaxationResult width_relaxation_solve(const Matrix& x, Index k,
                                               const RelaxationOptions& opts = {}) {
  const Index n = x.rows();
  const Index p = x.cols();
  require(k >= 0 && k <= n, "width_relaxation_solve: k must lie in [0, n]");
  require(x.allFinite(), "width_relaxation_solve: non-finite design");
  require(opts.max_iter >= 0 && opts.tol >= 0.0,
          "width_relaxation_solve: invalid options");
  const Index m = n - k;
  RelaxationResult out;
  out.dual_weights = Vector::Zero(p);

  const Vector sq_norms = x.colwise().squaredNorm().transpose();
  if (m == 0 || p == 0) {
    out.z_star = Matrix::Zero(n, n);
    out.converged = true;
    return out;
  }
  if (m == n) {
    Index best = 0;
    const double t = sq_norms.maxCoeff(&best);
    out.z_star = Matrix::Identity(n, n);
    out.t_star = t;
    out.t_upper = t;
    out.dual_weights(best) = 1.0;
    out.converged = true;
    return out;
  }

  const double fraction = static_cast<double>(m) / static_cast<double>(n);
  Matrix basis = Matrix::Identity(n, n);
  Vector mu = Vector::Constant(n, fraction);

  auto constraint_values = [&](const Matrix& v, const Vector& eig) {
    const Matrix u = v.transpose() * x;
    return Vector((eig.asDiagonal() * u.cwiseAbs2()).colwise().sum().transpose());
  };

  Vector values = constraint_values(basis, mu);
  Index active = 0;
  double f = values.maxCoeff(&active);
  double best_f = f;
  Matrix best_basis = basis;
  Vector best_mu = mu;

  double best_dual = 0.0;
  Vector best_w = Vector::Constant(p, 1.0 / static_cast<double>(p));
  best_dual = detail::dual_value(x, best_w, m);

  auto gap_closed = [&]() {
    return best_f <= 0.0 || best_f - best_dual <= opts.tol * best_f;
  };

  Vector avg_w = Vector::Zero(p);
  Vector ascent_w = best_w;
  Vector h;
  const double max_sq = sq_norms.maxCoeff();
  const double grad_norm0 = sq_norms(active);
  const double a = grad_norm0 > 0.0 ? f / grad_norm0 : 0.0;

  int iter = 0;
  while (!gap_closed() && iter < opts.max_iter) {
    ++iter;
    const double g_norm = sq_norms(active);
    if (g_norm <= 0.0) break;
    // Normalized subgradient step, so iterates do not depend on the scale of X.
    const double step = a / std::sqrt(static_cast<double>(iter)) / g_norm;
    avg_w(active) += step;

    // Z - step * x x^T expressed in the current eigenbasis.
    const Vector u = basis.transpose() * x.col(active);
    Matrix y = mu.asDiagonal();
    y.noalias() -= step * u * u.transpose();
    const SymmetricEigen e = eig_sym(y);
    basis = basis * e.vectors;
    mu = detail::water_fill(e.values, static_cast<double>(m));

    values = constraint_values(basis, mu);
    f = values.maxCoeff(&active);
    if (f < best_f) {
      best_f = f;
      best_basis = basis;
      best_mu = mu;
    }

    // Mirror ascent step on the dual weights.
    const double d_ascent = detail::dual_value(x, ascent_w, m, h);
    if (d_ascent > best_dual) {
      best_dual = d_ascent;
      best_w = ascent_w;
    }
    const double eta = 2.0 / (std::sqrt(static_cast<double>(iter)) * max_sq);
    Vector logw = ascent_w.array().max(1e-300).log().matrix() + eta * h;
    logw.array() -= logw.maxCoeff();
    ascent_w = logw.array().exp().matrix();
    ascent_w /= ascent_w.sum();
    if (iter % opts.check_every == 0 || iter == opts.max_iter) {
      const Vector w = avg_w / avg_w.sum();
      const double d = detail::dual_value(x, w, m);
      if (d > best_dual) {
        best_dual = d;
        best_w = w;
      }
      // Re-orthonormalize the accumulated rotations.
      basis = Eigen::HouseholderQR<Matrix>(basis).householderQ() *
              Matrix::Identity(n, n);
      values = constraint_values(basis, mu);
      f = values.maxCoeff(&active);
    }
  }

  out.z_star = best_basis * best_mu.asDiagonal() * best_basis.transpose();
  out.t_upper = best_f;
  out.t_star = std::min(best_dual, best_f);
  out.dual_weights = best_w;
  out.iterations = iter;
  out.converged = gap_closed();
  return out;
}

/// Rounded projection and its value z_k = max_i ||P x_i||.
struct RoundedProjection {
  ProjectionOperator projection;
  double value = 0.0;
  std::string source;  // identity, empty, eigen, gaussian, dual, pca or restricted
};

/// Extracts a genuine (n-k)-dimensional projection from a relaxed solution:
/// the top n-k eigenvectors of Z, then `repeats` Gaussian draws Z^{1/2} G
/// orthonormalized. The first strictly best candidate wins.
inline RoundedProjection round_projection(const Matrix& z_star, const Matrix& x,
                                          Index k, int repeats, Rng& rng) {
  const Index n = x.rows();
  require(z_star.rows() == n && z_star.cols() == n,
          "round_projection: Z has wrong shape");
  require(k >= 0 && k <= n, "round_projection: k must lie in [0, n]");
  require(repeats >= 0, "round_projection: repeats must be nonnegative");
  const Index m = n - k;
  if (m == 0) return {ProjectionOperator::zero(n), 0.0, "empty"};
  if (m == n) {
    auto id = ProjectionOperator::identity(n);
    return {id, max_projected_norm(id, x), "identity"};
  }

  const SymmetricEigen e = eig_sym(z_star);
  RoundedProjection best;
  best.projection = ProjectionOperator::from_orthonormal(e.vectors.leftCols(m));
  best.value = max_projected_norm(best.projection, x);
  best.source = "eigen";

  const Vector root = e.values.cwiseMax(0.0).cwiseSqrt();
  const Matrix z_half = e.vectors * root.asDiagonal() * e.vectors.transpose();
  for (int r = 0; r < repeats; ++r) {
    const Matrix g = sample_gaussian_matrix(n, m, rng);
    ProjectionOperator cand = orthonormalize(Matrix(z_half * g));
    if (cand.dim() != m) continue;
    const double v = max_projected_norm(cand, x);
    if (v < best.value) {
      best.projection = std::move(cand);
      best.value = v;
      best.source = "gaussian";
    }
  }
  return best;
}

/// Bottom n-k eigenvectors of X diag(w) X^T for dual weights w. At an
/// optimal w these span directions the relaxation charges least.
inline RoundedProjection dual_projection(const Matrix& x, const Vector& w, Index k) {
  const Index n = x.rows();
  require(k >= 0 && k <= n, "dual_projection: k must lie in [0, n]");
  require(w.size() == x.cols(), "dual_projection: weight vector has wrong size");
  const Index m = n - k;
  if (m == 0) return {ProjectionOperator::zero(n), 0.0, "empty"};
  if (m == n) {
    auto id = ProjectionOperator::identity(n);
    return {id, max_projected_norm(id, x), "identity"};
  }
  const SymmetricEigen e = eig_sym(x * w.asDiagonal() * x.transpose());
  auto proj = ProjectionOperator::from_orthonormal(e.vectors.rightCols(m));
  const double v = max_projected_norm(proj, x);
  return {std::move(proj), v, "dual"};
}

/// Spectral heuristic: the trailing n-k eigenvectors of X X^T.
inline RoundedProjection pca_projection(const Matrix& x, Index k) {
  const Index n = x.rows();
  require(k >= 0 && k <= n, "pca_projection: k must lie in [0, n]");
  const Index m = n - k;
  if (m == 0) return {ProjectionOperator::zero(n), 0.0, "empty"};
  if (m == n) {
    auto id = ProjectionOperator::identity(n);
    return {id, max_projected_norm(id, x), "identity"};
  }
  const SymmetricEigen e = eig_sym(x * x.transpose());
  auto proj = ProjectionOperator::from_orthonormal(e.vectors.rightCols(m));
  const double v = max_projected_norm(proj, x);
  return {std::move(proj), v, "pca"};
}

// ---------------------------------------------------------------------------
// Brute-force oracle for n <= 3

namespace detail {

// Value of the subspace parameterized by a unit vector u: for `span` the
// subspace is span{u}, otherwise it is u-perp.
inline double subspace_value(const Matrix& x, const Vector& u, bool span) {
  double worst = 0.0;
  for (Index i = 0; i < x.cols(); ++i) {
    const double dot = u.dot(x.col(i));
    const double sq = span ? dot * dot : x.col(i).squaredNorm() - dot * dot;
    worst = std::max(worst, sq);
  }
  return std::sqrt(std::max(0.0, worst));
}

inline Vector sphere_point(Index n, double a, double b) {
  Vector u(n);
  if (n == 2) {
    u << std::cos(a), std::sin(a);
  } else {
    u << std::sin(a) * std::cos(b), std::sin(a) * std::sin(b), std::cos(a);
  }
  return u;
}

}  // namespace detail

/// Width d_k by exhaustive search over a grid of subspaces followed by a
/// pattern-search refinement around the best grid cells. The result is the
/// value of an actual subspace, hence never below the true width.
inline double width_bruteforce(const Matrix& x, Index k, int grid = 360) {
  const Index n = x.rows();
  require(n <= 3, "width_bruteforce: only n <= 3 is supported");
  require(k >= 0 && k <= n, "width_bruteforce: k must lie in [0, n]");
  require(grid >= 4, "width_bruteforce: grid too coarse");
  if (k == n || x.cols() == 0) return 0.0;
  if (k == 0) return x.colwise().norm().maxCoeff();
  // Remaining cases: n = 2, k = 1 (a line) or n = 3, k in {1, 2}.
  const bool span = (n - k == 1);
  const bool two_params = (n == 3);

  auto eval = [&](double a, double b) {
    return detail::subspace_value(x, detail::sphere_point(n, a, b), span);
  };

  const double pi = std::acos(-1.0);
  const int na = two_params ? grid / 2 + 1 : grid;
  const int nb = two_params ? 2 * grid : 1;
  const double da = two_params ? (pi / 2) / (na - 1) : pi / na;
  const double db = two_params ? 2 * pi / nb : 0.0;

  struct Cell {
    double value, a, b;
  };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(na) * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      const double a = i * da;
      const double b = j * db;
      cells.push_back({eval(a, b), a, b});
    }
  const std::size_t keep = std::min<std::size_t>(8, cells.size());
  std::partial_sort(cells.begin(), cells.begin() + static_cast<long>(keep), cells.end(),
                    [](const Cell& l, const Cell& r) { return l.value < r.value; });

  // Pattern search in the tangent plane at the current unit vector, with
  // many directions: the objective is a max of smooth pieces, so axis-only
  // moves stall on ridges.
  constexpr int kDirs = 24;
  double best = cells.front().value;
  for (std::size_t c = 0; c < keep; ++c) {
    Vector u = detail::sphere_point(n, cells[c].a, cells[c].b);
    double v = cells[c].value;
    double step = da;
    while (step > 1e-12) {
      // Orthonormal tangent basis at u.
      const Matrix tangent = Eigen::FullPivHouseholderQR<Matrix>(u).matrixQ().rightCols(n - 1);
      bool moved = false;
      const int ndirs = two_params ? kDirs : 2;
      for (int d = 0; d < ndirs && !moved; ++d) {
        const double th = 2 * pi * d / ndirs;
        Vector dir = tangent.col(0) * std::cos(th);
        if (two_params) dir += tangent.col(1) * std::sin(th);
        const Vector cand = (u + step * dir).normalized();
        const double nv = detail::subspace_value(x, cand, span);
        if (nv < v) {
          u = cand;
          v = nv;
          moved = true;
        }
      }
      if (!moved) step *= 0.5;
    }
    best = std::min(best, v);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Profile

struct WidthOptions {
  RelaxationOptions relaxation;
  int repeats = 64;
  std::uint64_t seed = 42;
  bool use_pca = true;
};

/// Sandwich for one k: relax_lower <= d_k <= achieved.
struct WidthEntry {
  Index k = 0;
  double relax_lower = 0.0;
  double relax_upper = 0.0;
  double achieved = 0.0;
  ProjectionOperator projection;
  std::string source;
  int iterations = 0;
  bool converged = true;
};

struct WidthProfile {
  std::vector<Index> ks;
  std::vector<double> relax_lower;
  std::vector<double> relax_upper;
  std::vector<double> achieved;
  std::vector<ProjectionOperator> projections;  // dimension n - k
  std::vector<std::string> sources;
  std::vector<int> iterations;
  std::vector<bool> converged;

  Index n() const { return static_cast<Index>(ks.size()) - 1; }
  bool all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
  }
};

/// Relaxation, rounding and the spectral heuristic for a single k. The rng
/// stream is derived from seed ^ k so entries are independent of each other.
inline WidthEntry width_entry(const Matrix& x, Index k, const WidthOptions& opts = {}) {
  // The solver sees X / max_i |x_i| snapped to a 2^-32 grid, so rescaling
  // the design leaves its input bit-identical and the chosen subspace does
  // not move. The subspace is then scored on X itself.
  const double scale = x.cols() > 0 ? x.colwise().norm().maxCoeff() : 0.0;
  constexpr double kGrid = 4294967296.0;
  const Matrix xs = scale > 0.0 ? Matrix((x / scale * kGrid).array().round() / kGrid) : x;
  const double unit = scale > 0.0 ? scale : 1.0;
  const RelaxationResult relax = width_relaxation_solve(xs, k, opts.relaxation);
  Rng rng(opts.seed ^ static_cast<std::uint64_t>(k));
  RoundedProjection best = round_projection(relax.z_star, xs, k, opts.repeats, rng);
  RoundedProjection dual = dual_projection(xs, relax.dual_weights, k);
  if (dual.value < best.value) best = std::move(dual);
  if (opts.use_pca) {
    RoundedProjection pca = pca_projection(xs, k);
    if (pca.value < best.value) best = std::move(pca);
  }
  WidthEntry e;
  e.k = k;
  // Snapping moves each column by at most sqrt(n) / 2^33 relative to the
  // scale, and widths are 1-Lipschitz in the columns.
  const double snap = unit * std::sqrt(static_cast<double>(x.rows())) / (2.0 * kGrid);
  e.relax_lower = std::max(0.0, std::sqrt(relax.t_star) * unit - snap);
  e.relax_upper = std::sqrt(relax.t_upper) * unit + snap;
  e.achieved = x.cols() > 0 ? max_projected_norm(best.projection, x) : 0.0;
  e.projection = std::move(best.projection);
  e.source = std::move(best.source);
  e.iterations = relax.iterations;
  e.converged = relax.converged;
  return e;
}

/// Removes from `proj` the unit direction along its worst projected column.
/// Norms of projected columns cannot increase.
inline ProjectionOperator drop_worst_direction(const ProjectionOperator& proj,
                                               const Matrix& x) {
  const Index d = proj.dim();
  require(d >= 1, "drop_worst_direction: projection is empty");
  const Matrix coords = proj.basis().transpose() * x;  // d x p
  Index worst = 0;
  Vector dir;
  if (x.cols() > 0 && coords.colwise().norm().maxCoeff(&worst) > 0.0) {
    dir = coords.col(worst).normalized();
  } else {
    dir = Vector::Unit(d, d - 1);
  }
  // Orthonormal basis of dir-perp inside the d-dimensional coordinates.
  const Matrix keep = Matrix::Identity(d, d) - dir * dir.transpose();
  const ProjectionOperator inner = orthonormalize(keep);
  Matrix inner_basis = inner.basis();
  if (inner_basis.cols() > d - 1) inner_basis.conservativeResize(d, d - 1);
  return ProjectionOperator::from_orthonormal(proj.basis() * inner_basis);
}

/// Forces achieved[k] to be nonincreasing by restricting a larger subspace
/// whenever the rounded one for k+1 is worse.
inline void enforce_monotone(WidthProfile& profile, const Matrix& x) {
  for (std::size_t k = 0; k + 1 < profile.achieved.size(); ++k) {
    if (profile.achieved[k + 1] > profile.achieved[k]) {
      ProjectionOperator restricted = drop_worst_direction(profile.projections[k], x);
      const double v = max_projected_norm(restricted, x);
      profile.projections[k + 1] = std::move(restricted);
      profile.achieved[k + 1] = std::min(v, profile.achieved[k]);
      profile.sources[k + 1] = "restricted";
    }
  }
}

inline WidthProfile assemble_profile(std::vector<WidthEntry> entries, const Matrix& x) {
  WidthProfile prof;
  for (auto& e : entries) {
    prof.ks.push_back(e.k);
    prof.relax_lower.push_back(e.relax_lower);
    prof.relax_upper.push_back(e.relax_upper);
    prof.achieved.push_back(e.achieved);
    prof.projections.push_back(std::move(e.projection));
    prof.sources.push_back(std::move(e.source));
    prof.iterations.push_back(e.iterations);
    prof.converged.push_back(e.converged);
  }
  enforce_monotone(prof, x);
  return prof;
}

/// Width sandwich for every k in 0..n.
inline WidthProfile width_profile(const Matrix& x, const WidthOptions& opts = {}) {
  require(x.rows() >= 1 && x.allFinite(), "width_profile: invalid design");
  std::vector<WidthEntry> entries;
  entries.reserve(static_cast<std::size_t>(x.rows() + 1));
  for (Index k = 0; k <= x.rows(); ++k) entries.push_back(width_entry(x, k, opts));
  return assemble_profile(std::move(entries), x);
}

}  // namespace pnn
