#pragma once

// Orthogonal projection, nearest neighbor, projected nearest neighbor (PNN)
// and the adaptive PNN estimator for unknown radius.

#include "pnn/core.hpp"
#include "pnn/nearest.hpp"
#include "pnn/width.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>

namespace pnn {

/// Observation -> estimate map.
using Estimator = std::function<Vector(const Vector&)>;

/// Orthogonal projection estimator T_P(y~) = P y~.
inline Vector orth_proj_estimate(const ProjectionOperator& proj, const Vector& y_tilde) {
  return apply(proj, y_tilde);
}

/// Nearest point of X l1(C) to the observation.
inline NNSolution nn_solve(const ProblemInstance& inst, const Vector& y_tilde,
                           const L1Options& opts = {}) {
  require(inst.q() == 1.0,
          "nearest neighbor estimation needs q = 1: no efficient nearest-point "
          "algorithm is known for the nonconvex body when q < 1");
  require(y_tilde.size() == inst.n(), "observation has wrong dimension");
  return l1_ls(inst.design(), y_tilde, inst.radius(), opts);
}

inline Vector nn_estimate(const ProblemInstance& inst, const Vector& y_tilde,
                          const L1Options& opts = {}) {
  return nn_solve(inst, y_tilde, opts).y_hat;
}

/// k* and the split used by the PNN estimator: the raw pass-through part is
/// `complement` (dimension k*), the nearest-neighbor part is `projection`
/// (dimension n - k*, small width).
struct PNNSelection {
  Index k_star = 0;
  std::vector<double> r;
  std::vector<double> z;
  ProjectionOperator projection;
  ProjectionOperator complement;
};

/// Index of the smallest value; the lowest index wins ties.
inline Index argmin_first(const std::vector<double>& v) {
  Index best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[static_cast<std::size_t>(best)]) best = static_cast<Index>(i);
  return best;
}

/// r_k = k sigma^2 + z_k sigma sqrt(log p). The profile must be computed on
/// the radius-scaled design C X.
inline std::vector<double> pnn_scores(const ProblemInstance& inst,
                                      const std::vector<double>& z) {
  const double s = inst.sigma();
  const double root_log = std::sqrt(log_factor(inst.p()));
  std::vector<double> r(z.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    r[k] = static_cast<double>(k) * s * s + z[k] * s * root_log;
  return r;
}

inline PNNSelection make_selection(Index k, std::vector<double> r, std::vector<double> z,
                                   ProjectionOperator proj) {
  PNNSelection sel;
  sel.k_star = k;
  sel.r = std::move(r);
  sel.z = std::move(z);
  sel.complement = complement(proj);
  sel.projection = std::move(proj);
  return sel;
}

inline PNNSelection pnn_select(const ProblemInstance& inst, const WidthProfile& profile) {
  require(profile.n() == inst.n(), "pnn_select: profile does not match instance");
  std::vector<double> r = pnn_scores(inst, profile.achieved);
  const Index k = argmin_first(r);
  return make_selection(k, std::move(r), profile.achieved,
                        profile.projections[static_cast<std::size_t>(k)]);
}

/// Selection by ternary search over k, computing width entries on demand.
/// Assumes r_k is unimodal in k; costs O(log n) width computations instead
/// of n + 1. Unevaluated entries of r and z are NaN.
inline PNNSelection pnn_select_search(const ProblemInstance& inst,
                                      const WidthOptions& opts = {}) {
  const Matrix scaled = inst.scaled_design();
  const Index n = inst.n();
  std::map<Index, WidthEntry> cache;
  auto entry = [&](Index k) -> const WidthEntry& {
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, width_entry(scaled, k, opts)).first;
    return it->second;
  };
  const double s = inst.sigma();
  const double root_log = std::sqrt(log_factor(inst.p()));
  auto score = [&](Index k) {
    return static_cast<double>(k) * s * s + entry(k).achieved * s * root_log;
  };
  Index lo = 0, hi = n;
  while (hi - lo > 2) {
    const Index m1 = lo + (hi - lo) / 3;
    const Index m2 = hi - (hi - lo) / 3;
    if (score(m1) <= score(m2)) hi = m2;
    else lo = m1;
  }
  Index best = lo;
  for (Index k = lo + 1; k <= hi; ++k)
    if (score(k) < score(best)) best = k;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> r(static_cast<std::size_t>(n + 1), nan);
  std::vector<double> z(static_cast<std::size_t>(n + 1), nan);
  for (const auto& [k, e] : cache) {
    z[static_cast<std::size_t>(k)] = e.achieved;
    r[static_cast<std::size_t>(k)] = score(k);
  }
  return make_selection(best, std::move(r), std::move(z), entry(best).projection);
}

/// Output of the PNN estimator, split into its two orthogonal parts.
struct PNNEstimate {
  Vector y_hat;
  Vector raw_part;  // complement(y~)
  Vector nn_part;   // nearest point of projection(y~) on projection(C X l1)
  NNSolution nn;
};

/// H(y~) = Q y~ + N_{P K}(P y~) with P the small-width projection and Q its
/// complement.
inline PNNEstimate pnn_estimate(const ProblemInstance& inst, const Vector& y_tilde,
                                const PNNSelection& sel, const L1Options& opts = {}) {
  require(inst.q() == 1.0, "PNN estimation needs q = 1");
  require(y_tilde.size() == inst.n(), "observation has wrong dimension");
  require(sel.projection.ambient_dim() == inst.n() &&
              sel.projection.dim() + sel.complement.dim() == inst.n(),
          "selection does not match instance");
  PNNEstimate out;
  if (sel.projection.is_full()) {
    out.nn = nn_solve(inst, y_tilde, opts);
    out.nn_part = out.nn.y_hat;
    out.raw_part = Vector::Zero(inst.n());
    out.y_hat = out.nn_part;
    return out;
  }
  out.raw_part = apply(sel.complement, y_tilde);
  if (sel.projection.dim() == 0) {
    out.nn.y_hat = Vector::Zero(inst.n());
    out.nn.theta_hat = Vector::Zero(inst.p());
    out.nn.converged = true;
    out.nn_part = out.nn.y_hat;
    out.y_hat = out.raw_part;
    return out;
  }
  const Matrix design = apply_columns(sel.projection, inst.scaled_design());
  out.nn = l1_ls(design, apply(sel.projection, y_tilde), 1.0, opts);
  out.nn_part = out.nn.y_hat;
  out.y_hat = out.raw_part + out.nn_part;
  return out;
}

// ---------------------------------------------------------------------------
// Adaptive estimator

struct AdaptiveRecord {
  Index k = 0;
  double delta = 0.0;   // max_i ||P_k x_i||
  double radius = 0.0;  // C_k = k sigma / delta (infinite when delta = 0, k > 0)
  double stat = 0.0;    // ||y^_k - y~_k||^2
  double threshold = 0.0;
  bool accepted = false;
};

struct AdaptiveTrace {
  std::vector<AdaptiveRecord> records;
  std::optional<Index> final_k;  // empty: fell back to y~
};

struct AdaptiveResult {
  Vector y_hat;
  AdaptiveTrace trace;
};

/// (n - k) sigma^2 + 2 sqrt(n ln n) sigma^2.
inline double adaptive_threshold(Index n, Index k, double sigma) {
  const double nd = static_cast<double>(n);
  const double s2 = sigma * sigma;
  return static_cast<double>(n - k) * s2 + 2.0 * std::sqrt(nd * std::log(nd)) * s2;
}

/// Tries k = 0, 1, ..., floor(n/2) in order: fits the projected observation
/// against P_k X l1(k sigma / Delta_k) and returns at the first k whose
/// residual passes the chi-square style test. Falls back to y~.
/// `profile` must be computed on the unscaled design X.
inline AdaptiveResult adaptive_estimate(const ProblemInstance& inst, const Vector& y_tilde,
                                        const WidthProfile& profile,
                                        const L1Options& opts = {}) {
  require(inst.q() == 1.0, "adaptive estimation needs q = 1");
  require(inst.sigma() > 0.0,
          "adaptive estimation needs sigma > 0: with zero noise every radius "
          "C_k vanishes and the acceptance test is vacuous");
  require(y_tilde.size() == inst.n(), "observation has wrong dimension");
  require(profile.n() == inst.n(), "adaptive_estimate: profile does not match instance");

  const Index n = inst.n();
  const double sigma = inst.sigma();
  AdaptiveResult out;
  for (Index k = 0; k <= n / 2; ++k) {
    const ProjectionOperator& proj = profile.projections[static_cast<std::size_t>(k)];
    AdaptiveRecord rec;
    rec.k = k;
    rec.delta = max_projected_norm(proj, inst.design());
    rec.threshold = adaptive_threshold(n, k, sigma);

    const Vector y_k = apply(proj, y_tilde);
    Vector fit_k = Vector::Zero(n);
    if (k == 0) {
      rec.radius = 0.0;
    } else if (rec.delta == 0.0) {
      rec.radius = std::numeric_limits<double>::infinity();
    } else {
      rec.radius = static_cast<double>(k) * sigma / rec.delta;
      fit_k = l1_ls(apply_columns(proj, inst.design()), y_k, rec.radius, opts).y_hat;
    }
    rec.stat = (fit_k - y_k).squaredNorm();
    rec.accepted = rec.stat <= rec.threshold;
    out.trace.records.push_back(rec);
    if (rec.accepted) {
      out.trace.final_k = k;
      out.y_hat = fit_k + apply(complement(proj), y_tilde);
      return out;
    }
  }
  out.y_hat = y_tilde;
  return out;
}

}  // namespace pnn
