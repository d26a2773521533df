#pragma once

// Domain types and dense linear algebra shared by every other module:
// problem instances, orthogonal projections, a cyclic Jacobi eigensolver and
// seeded Gaussian sampling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for precondition violations (bad dimensions, out-of-range
/// parameters, non-finite data).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Linear regression instance y = X theta + g with theta in the l_q ball of
/// radius C and g ~ N(0, sigma^2 I).
class ProblemInstance {
 public:
  ProblemInstance(Matrix design, double q, double radius, double sigma)
      : design_(std::move(design)), q_(q), radius_(radius), sigma_(sigma) {
    require(design_.rows() >= 1 && design_.cols() >= 1,
            "design matrix must have at least one row and one column");
    require(design_.allFinite(), "design matrix has non-finite entries");
    require(q_ > 0.0 && q_ <= 1.0, "q must lie in (0, 1]");
    require(std::isfinite(radius_) && radius_ >= 0.0,
            "radius must be finite and nonnegative");
    require(std::isfinite(sigma_) && sigma_ >= 0.0,
            "sigma must be finite and nonnegative");
  }

  const Matrix& design() const { return design_; }
  Index n() const { return design_.rows(); }
  Index p() const { return design_.cols(); }
  double q() const { return q_; }
  double radius() const { return radius_; }
  double sigma() const { return sigma_; }

  /// Design with the radius folded in, so the parameter set is the unit ball.
  Matrix scaled_design() const { return radius_ * design_; }

 private:
  Matrix design_;
  double q_;
  double radius_;
  double sigma_;
};

/// Orthogonal projection onto span(basis), basis stored as the columns of an
/// n x d matrix with orthonormal columns.
class ProjectionOperator {
 public:
  ProjectionOperator() = default;

  /// Takes ownership of an already orthonormal basis; no check is made.
  static ProjectionOperator from_orthonormal(Matrix basis) {
    ProjectionOperator p;
    p.basis_ = std::move(basis);
    return p;
  }

  static ProjectionOperator identity(Index n) {
    return from_orthonormal(Matrix::Identity(n, n));
  }

  static ProjectionOperator zero(Index n) {
    return from_orthonormal(Matrix(n, 0));
  }

  Index ambient_dim() const { return basis_.rows(); }
  Index dim() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  bool is_full() const { return dim() == ambient_dim(); }

  /// Dense n x n projection matrix B B^T.
  Matrix matrix() const { return basis_ * basis_.transpose(); }

 private:
  Matrix basis_{0, 0};
};

/// Projects v onto the subspace. A full-dimensional projection returns v
/// unchanged and an empty one returns zeros.
inline Vector apply(const ProjectionOperator& proj, const Vector& v) {
  require(v.size() == proj.ambient_dim(),
          "apply: vector dimension does not match projection");
  if (proj.is_full()) return v;
  if (proj.dim() == 0) return Vector::Zero(v.size());
  return proj.basis() * (proj.basis().transpose() * v);
}

/// Projects every column of m.
inline Matrix apply_columns(const ProjectionOperator& proj, const Matrix& m) {
  require(m.rows() == proj.ambient_dim(),
          "apply_columns: matrix rows do not match projection");
  if (proj.is_full()) return m;
  if (proj.dim() == 0) return Matrix::Zero(m.rows(), m.cols());
  return proj.basis() * (proj.basis().transpose() * m);
}

/// Largest Euclidean norm of the projected columns of m.
inline double max_projected_norm(const ProjectionOperator& proj,
                                 const Matrix& m) {
  if (m.cols() == 0 || proj.dim() == 0) return 0.0;
  if (proj.is_full()) return m.colwise().norm().maxCoeff();
  return (proj.basis().transpose() * m).colwise().norm().maxCoeff();
}

/// Relative singular value cutoff for rank decisions.
inline constexpr double kRankTolerance = 1e-10;

/// Orthonormal basis of the column span of `vectors` (n x m). Rank is decided
/// by singular values relative to the largest.
inline ProjectionOperator orthonormalize(const Matrix& vectors) {
  require(vectors.allFinite(), "orthonormalize: non-finite entries");
  const Index n = vectors.rows();
  if (vectors.cols() == 0 || n == 0) return ProjectionOperator::zero(n);
  Eigen::BDCSVD<Matrix> svd(vectors, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return ProjectionOperator::zero(n);
  Index rank = 0;
  while (rank < s.size() && s(rank) > kRankTolerance * s(0)) ++rank;
  return ProjectionOperator::from_orthonormal(svd.matrixU().leftCols(rank));
}

/// Overload for a list of vectors of common dimension.
inline ProjectionOperator orthonormalize(const std::vector<Vector>& vectors) {
  require(!vectors.empty(), "orthonormalize: empty vector list");
  const Index n = vectors.front().size();
  Matrix m(n, static_cast<Index>(vectors.size()));
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    require(vectors[j].size() == n, "orthonormalize: dimension mismatch");
    m.col(static_cast<Index>(j)) = vectors[j];
  }
  return orthonormalize(m);
}

/// Orthogonal complement in the same ambient space.
inline ProjectionOperator complement(const ProjectionOperator& proj) {
  const Index n = proj.ambient_dim();
  if (proj.dim() == 0) return ProjectionOperator::identity(n);
  if (proj.is_full()) return ProjectionOperator::zero(n);
  // Left singular vectors of B past its rank span the complement.
  Eigen::JacobiSVD<Matrix> svd(proj.basis(), Eigen::ComputeFullU);
  return ProjectionOperator::from_orthonormal(
      svd.matrixU().rightCols(n - proj.dim()));
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // columns, orthonormal, matching `values`
  int sweeps = 0;
  bool converged = true;
};

inline constexpr double kSymmetryTolerance = 1e-9;

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  const Index n = a.rows();
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Rotates rows/columns p and q of the symmetric matrix a so that a(p,q) = 0
// and accumulates the rotation into v.
inline void jacobi_rotate(Matrix& a, Matrix& v, Index p, Index q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const Index n = a.rows();
  for (Index k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (Index k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (Index k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace detail

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps stop once
/// the off-diagonal Frobenius norm drops below 1e-12 times the norm of the
/// diagonal, or after `max_sweeps`.
inline SymmetricEigen eig_sym(const Matrix& m, int max_sweeps = 100) {
  require(m.rows() == m.cols(), "eig_sym: matrix must be square");
  require(m.allFinite(), "eig_sym: non-finite entries");
  const Index n = m.rows();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance * scale,
          "eig_sym: matrix is not symmetric");

  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);
  SymmetricEigen out;
  out.converged = false;
  for (int sweep = 0; sweep <= max_sweeps; ++sweep) {
    const double off = detail::off_diagonal_norm(a);
    const double diag = a.diagonal().norm();
    if (off <= 1e-12 * diag || off == 0.0) {
      out.converged = true;
      out.sweeps = sweep;
      break;
    }
    if (sweep == max_sweeps) {
      out.sweeps = sweep;
      break;
    }
    for (Index p = 0; p + 1 < n; ++p)
      for (Index q = p + 1; q < n; ++q) detail::jacobi_rotate(a, v, p, q);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) > a(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)],
                      order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random numbers

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for a sub-stream identified by a sequence of integers.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed);
  for (std::uint64_t part : path) s = mix64(s ^ mix64(part + 0x632be59bd9b4e019ULL));
  return s;
}

/// 64-bit Mersenne Twister seeded through derive_seed. Every stochastic
/// routine takes one of these by reference.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// n draws from N(0, sigma^2).
inline Vector sample_gaussian(Index n, double sigma, Rng& rng) {
  require(n >= 1, "sample_gaussian: n must be positive");
  require(std::isfinite(sigma) && sigma >= 0.0,
          "sample_gaussian: sigma must be nonnegative");
  Vector g(n);
  for (Index i = 0; i < n; ++i) g(i) = sigma * rng.normal();
  return g;
}

inline Matrix sample_gaussian_matrix(Index rows, Index cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
  return g;
}

/// Natural log of p with p clamped to at least 3, so the factor is >= 1.
inline double log_factor(Index p) {
  return std::log(static_cast<double>(std::max<Index>(p, 3)));
}

}  // namespace pnn
