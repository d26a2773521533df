#pragma once

// Scenario runners that exhibit risk gaps between the orthogonal projection,
// nearest neighbor and projected nearest neighbor estimators.

#include "pnn/core.hpp"
#include "pnn/estimators.hpp"
#include "pnn/nearest.hpp"
#include "pnn/risk.hpp"
#include "pnn/width.hpp"

#include <string>

namespace pnn::bench {

// ---------------------------------------------------------------------------
// Ellipsoid with one long axis: sum_{i<n} y_i^2 + y_n^2 / sqrt(n) <= 1.

struct EllipsoidGapRow {
  Index n = 0;
  double nn_risk = 0.0;
  double nn_se = 0.0;
  double proj_risk = 0.0;
  double proj_se = 0.0;
  double ratio = 0.0;
};

struct EllipsoidGapReport {
  std::vector<EllipsoidGapRow> rows;
  double growth_exponent = 0.0;  // slope of log nn_risk against log n
};

inline AxisEllipsoid long_axis_ellipsoid(Index n) {
  Vector w = Vector::Ones(n);
  w(n - 1) = 1.0 / std::sqrt(static_cast<double>(n));
  return AxisEllipsoid(std::move(w));
}

/// Risks of the nearest-neighbor map and of M(y~) = (0, ..., 0, y~_n) at the
/// truth (0, ..., 0, n^{1/4}), sigma = 1.
inline EllipsoidGapReport ellipsoid_gap(const std::vector<Index>& ns, int trials,
                                        std::uint64_t seed) {
  EllipsoidGapReport rep;
  std::vector<double> xs, ys;
  for (Index n : ns) {
    require(n >= 2, "ellipsoid_gap: n must be at least 2");
    const AxisEllipsoid e = long_axis_ellipsoid(n);
    Vector y = Vector::Zero(n);
    y(n - 1) = std::pow(static_cast<double>(n), 0.25);
    const auto last_axis = ProjectionOperator::from_orthonormal(Matrix(Vector::Unit(n, n - 1)));
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(n)});
    const MonteCarloReport nn = mc_risk(
        [&](const Vector& v) { return ellipsoid_nearest(e, v); }, {y}, 1.0, trials, s);
    const MonteCarloReport pr = mc_risk(
        [&](const Vector& v) { return orth_proj_estimate(last_axis, v); }, {y}, 1.0, trials, s);
    EllipsoidGapRow row;
    row.n = n;
    row.nn_risk = nn.max_mean;
    row.nn_se = nn.max_std_error();
    row.proj_risk = pr.max_mean;
    row.proj_se = pr.max_std_error();
    row.ratio = row.nn_risk / row.proj_risk;
    rep.rows.push_back(row);
    xs.push_back(static_cast<double>(n));
    ys.push_back(row.nn_risk);
  }
  if (ns.size() >= 2) rep.growth_exponent = loglog_slope(xs, ys);
  return rep;
}

// ---------------------------------------------------------------------------
// Product body K = E_{m,k} x l1^n(sqrt n) with m = n^2, where
// E_{m,k} = { (1/sqrt m) sum_{i<k} x_i^2 + sum_{i>=k} x_i^2 <= 1 }.

struct ProductGapReport {
  Index n = 0;
  Index k = 0;
  int trials = 0;
  MonteCarloReport pnn;
  MonteCarloReport nn;
  std::vector<std::string> projection_names;
  std::vector<MonteCarloReport> projections;
  std::size_t best_projection = 0;
  std::vector<Vector> candidates;

  const MonteCarloReport& best() const { return projections[best_projection]; }
};

inline ProductGapReport product_gap(Index n, Index k, int trials, std::uint64_t seed) {
  require(n >= 2 && k >= 1 && k <= n, "product_gap: need n >= 2 and 1 <= k <= n");
  const Index m = n * n;
  const Index dim = m + n;
  const double nd = static_cast<double>(n);
  const double l1_radius = std::sqrt(nd);

  Vector w = Vector::Ones(m);
  w.head(k).setConstant(1.0 / std::sqrt(static_cast<double>(m)));
  const AxisEllipsoid ell(w);
  const AxisEllipsoid short_ball(Vector::Ones(m - k));  // projection of E off the long axes

  auto split = [&](const Vector& v) {
    return std::pair<Vector, Vector>{v.head(m), v.tail(n)};
  };
  auto join = [&](const Vector& a, const Vector& b) {
    Vector out(dim);
    out << a, b;
    return out;
  };

  const Estimator nn = [&](const Vector& v) {
    auto [a, b] = split(v);
    return join(ellipsoid_nearest(ell, a), project_l1_ball(b, l1_radius));
  };
  // Raw pass-through on the k long axes, nearest neighbor on the rest.
  const Estimator pnn_est = [&](const Vector& v) {
    auto [a, b] = split(v);
    Vector ea(m);
    ea << a.head(k), ellipsoid_nearest(short_ball, a.tail(m - k));
    return join(ea, project_l1_ball(b, l1_radius));
  };
  auto coordinate_projection = [&](bool long_axes, bool short_axes, bool l1_part) {
    return Estimator([=](const Vector& v) {
      Vector out = Vector::Zero(dim);
      if (long_axes) out.head(k) = v.head(k);
      if (short_axes) out.segment(k, m - k) = v.segment(k, m - k);
      if (l1_part) out.tail(n) = v.tail(n);
      return out;
    });
  };

  // Extreme points of each factor; the product candidates pair them up.
  std::vector<Vector> ell_pts;
  ell_pts.push_back(Vector::Zero(m));
  ell_pts.push_back(std::sqrt(std::sqrt(static_cast<double>(m))) * Vector::Unit(m, 0));
  ell_pts.push_back(Vector::Unit(m, k));
  {
    Vector mix = Vector::Zero(m);
    mix(0) = std::sqrt(std::sqrt(static_cast<double>(m))) / std::sqrt(2.0);
    mix(k) = 1.0 / std::sqrt(2.0);
    ell_pts.push_back(mix);
    Vector spread = Vector::Zero(m);
    spread.head(k).setConstant(std::sqrt(std::sqrt(static_cast<double>(m)) / static_cast<double>(k)));
    ell_pts.push_back(spread);
  }
  std::vector<Vector> l1_pts;
  l1_pts.push_back(Vector::Zero(n));
  l1_pts.push_back(l1_radius * Vector::Unit(n, 0));
  {
    Vector two = Vector::Zero(n);
    two(0) = two(1) = l1_radius / 2.0;
    l1_pts.push_back(two);
  }

  ProductGapReport rep;
  rep.n = n;
  rep.k = k;
  rep.trials = trials;
  for (const auto& a : ell_pts)
    for (const auto& b : l1_pts) rep.candidates.push_back(join(a, b));

  rep.pnn = mc_risk(pnn_est, rep.candidates, 1.0, trials, seed);
  rep.nn = mc_risk(nn, rep.candidates, 1.0, trials, seed);
  const std::vector<std::tuple<std::string, bool, bool, bool>> family = {
      {"none", false, false, false},
      {"long_axes", true, false, false},
      {"long_axes+l1", true, false, true},
      {"all", true, true, true}};
  for (const auto& [name, la, sa, lp] : family) {
    rep.projection_names.push_back(name);
    rep.projections.push_back(
        mc_risk(coordinate_projection(la, sa, lp), rep.candidates, 1.0, trials, seed));
  }
  for (std::size_t i = 1; i < rep.projections.size(); ++i)
    if (rep.projections[i].max_mean < rep.projections[rep.best_projection].max_mean)
      rep.best_projection = i;
  return rep;
}

// ---------------------------------------------------------------------------
// Identity design: K = l1^n, sigma = 1/sqrt(n).

struct IdentityGapReport {
  Index n = 0;
  Index k_star = 0;
  MonteCarloReport pnn;
  RiskCertificate certificate;
  double ratio = 0.0;  // pnn risk / projection-estimator risk
};

inline IdentityGapReport identity_gap(Index n, int trials, std::uint64_t seed,
                                      const WidthOptions& wopts) {
  require(n >= 1, "identity_gap: n must be positive");
  const ProblemInstance inst(Matrix::Identity(n, n), 1.0, 1.0,
                             1.0 / std::sqrt(static_cast<double>(n)));
  const WidthProfile profile = width_profile(inst.scaled_design(), wopts);
  const PNNSelection sel = pnn_select(inst, profile);
  L1Options l1;
  l1.lipschitz = spectral_norm_sq(apply_columns(sel.projection, inst.scaled_design()));
  const Estimator est = [&](const Vector& v) { return pnn_estimate(inst, v, sel, l1).y_hat; };

  IdentityGapReport rep;
  rep.n = n;
  rep.k_star = sel.k_star;
  rep.pnn = mc_risk(est, candidate_truths(inst, seed), inst.sigma(), trials, seed);
  rep.certificate = minimax_certificate(inst, profile);
  rep.ratio = rep.pnn.max_mean / rep.certificate.proj_risk;
  return rep;
}

}  // namespace pnn::bench
