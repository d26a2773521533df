#pragma once

// Risk certificates built from a width profile, and a Monte Carlo harness
// for empirical risk of arbitrary estimators.
//
// Every bound below is "up to absolute constants"; all such constants are
// fixed to 1.

#include "pnn/core.hpp"
#include "pnn/estimators.hpp"
#include "pnn/width.hpp"

#include <functional>
#include <limits>

namespace pnn {

/// 2^{1/q} (1/q) ln(2/q).
inline double c_q(double q) {
  require(q > 0.0 && q <= 1.0, "c_q: q must lie in (0, 1]");
  return std::pow(2.0, 1.0 / q) * (1.0 / q) * std::log(2.0 / q);
}

struct UpperBound {
  double value = 0.0;
  std::vector<double> terms;  // u_k
  Index k = 0;
};

/// min_k k sigma^2 + c_q z_k^q sigma^{2-q} (log p)^{1-q/2}, evaluated on the
/// achieved (upper) widths. Smallest k wins ties.
inline UpperBound upper_bound(const std::vector<double>& z, double q, double sigma, Index p) {
  require(!z.empty(), "upper_bound: empty width profile");
  require(sigma >= 0.0, "upper_bound: sigma must be nonnegative");
  const double cq = c_q(q);
  const double log_term = std::pow(log_factor(p), 1.0 - q / 2.0);
  const double noise = std::pow(sigma, 2.0 - q);
  UpperBound ub;
  ub.terms.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    ub.terms[k] = static_cast<double>(k) * sigma * sigma +
                  cq * std::pow(z[k], q) * noise * log_term;
  ub.k = argmin_first(ub.terms);
  ub.value = ub.terms[static_cast<std::size_t>(ub.k)];
  return ub;
}

inline UpperBound upper_bound(const WidthProfile& profile, double q, double sigma, Index p) {
  return upper_bound(profile.achieved, q, sigma, p);
}

struct LowerBound {
  double value = 0.0;
  Index k = 0;
};

/// max over k >= 1 of min(k sigma^2, k^{1-2/q} d_k^2), with d_k taken from
/// the relaxation lower values. Largest k wins ties.
inline LowerBound lower_bound(const std::vector<double>& d, double q, double sigma) {
  require(!d.empty(), "lower_bound: empty width profile");
  require(q > 0.0 && q <= 1.0, "lower_bound: q must lie in (0, 1]");
  LowerBound lb;
  for (std::size_t k = 1; k < d.size(); ++k) {
    const double kd = static_cast<double>(k);
    const double v = std::min(kd * sigma * sigma, std::pow(kd, 1.0 - 2.0 / q) * d[k] * d[k]);
    if (v >= lb.value) {
      lb.value = v;
      lb.k = static_cast<Index>(k);
    }
  }
  return lb;
}

inline LowerBound lower_bound(const WidthProfile& profile, double q, double sigma) {
  return lower_bound(profile.relax_lower, q, sigma);
}

/// min_k (k sigma^2 + z_k^2): risk of the best orthogonal projection
/// estimator built from the achieved widths.
inline double projection_risk(const std::vector<double>& z, double sigma) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k)
    best = std::min(best, static_cast<double>(k) * sigma * sigma + z[k] * z[k]);
  return best;
}

/// min(n sigma^2, r^2): minimax lower bound for a Euclidean ball.
inline double euclidean_ball_lower(Index n, double r, double sigma) {
  require(n >= 1 && r >= 0.0 && sigma >= 0.0, "euclidean_ball_lower: invalid arguments");
  return std::min(static_cast<double>(n) * sigma * sigma, r * r);
}

struct RiskCertificate {
  double q = 1.0;
  double sigma = 0.0;
  std::vector<double> terms;
  double upper = 0.0;
  double lower = 0.0;
  Index k_upper = 0;
  Index k_lower = 0;
  double ratio = 0.0;  // upper / lower, +inf when lower = 0
  double c_q = 0.0;
  double proj_risk = 0.0;
  bool widths_converged = true;
};

inline RiskCertificate minimax_certificate(const ProblemInstance& inst,
                                           const WidthProfile& profile) {
  require(profile.n() == inst.n(), "minimax_certificate: profile does not match instance");
  RiskCertificate cert;
  cert.q = inst.q();
  cert.sigma = inst.sigma();
  cert.c_q = c_q(inst.q());
  const UpperBound ub = upper_bound(profile, inst.q(), inst.sigma(), inst.p());
  const LowerBound lb = lower_bound(profile, inst.q(), inst.sigma());
  cert.terms = ub.terms;
  cert.upper = ub.value;
  cert.k_upper = ub.k;
  cert.lower = lb.value;
  cert.k_lower = lb.k;
  cert.ratio = lb.value > 0.0 ? ub.value / lb.value : std::numeric_limits<double>::infinity();
  cert.proj_risk = projection_risk(profile.achieved, inst.sigma());
  cert.widths_converged = profile.all_converged();
  return cert;
}

/// Computes the width profile of C X, then the certificate.
inline RiskCertificate minimax_certificate(const ProblemInstance& inst,
                                           const WidthOptions& opts = {}) {
  return minimax_certificate(inst, width_profile(inst.scaled_design(), opts));
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloReport {
  int trials = 0;
  std::uint64_t seed = 0;
  std::vector<double> means;
  std::vector<double> std_errors;
  double max_mean = 0.0;
  Index argmax = 0;

  double max_std_error() const {
    return std_errors.empty() ? 0.0 : std_errors[static_cast<std::size_t>(argmax)];
  }
};

/// Noise for trial `t` of candidate `c`. Shared across estimators so that
/// comparisons are paired.
inline Vector trial_noise(std::uint64_t seed, std::size_t c, int t, Index n, double sigma) {
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(t)}));
  return sample_gaussian(n, sigma, rng);
}

/// Mean squared error ||M(y + g) - y||^2 over `trials` noise draws for each
/// candidate truth, and the worst candidate mean as a proxy for the risk.
inline MonteCarloReport mc_risk(const Estimator& estimator, const std::vector<Vector>& candidates,
                                double sigma, int trials, std::uint64_t seed) {
  require(trials >= 1, "mc_risk: trials must be positive");
  require(!candidates.empty(), "mc_risk: no candidates");
  require(sigma >= 0.0, "mc_risk: sigma must be nonnegative");
  MonteCarloReport rep;
  rep.trials = trials;
  rep.seed = seed;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Vector& y = candidates[c];
    std::vector<double> errs(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
      const Vector g = trial_noise(seed, c, t, y.size(), sigma);
      errs[static_cast<std::size_t>(t)] = (estimator(y + g) - y).squaredNorm();
    }
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= trials;
    double ss = 0.0;
    for (double e : errs) ss += (e - mean) * (e - mean);
    const double sd = trials > 1 ? std::sqrt(ss / (trials - 1)) : 0.0;
    rep.means.push_back(mean);
    rep.std_errors.push_back(sd / std::sqrt(static_cast<double>(trials)));
  }
  rep.argmax = 0;
  for (std::size_t c = 1; c < rep.means.size(); ++c)
    if (rep.means[c] > rep.means[static_cast<std::size_t>(rep.argmax)])
      rep.argmax = static_cast<Index>(c);
  rep.max_mean = rep.means[static_cast<std::size_t>(rep.argmax)];
  return rep;
}

/// Truths used as a proxy for the supremum over K = X l_q(C): the 2p
/// vertices +-C x_j, the origin, and `random_draws` sparse parameters with
/// support size at most 3 and ||theta||_q = C.
inline std::vector<Vector> candidate_truths(const ProblemInstance& inst, std::uint64_t seed,
                                            int random_draws = 32) {
  const Matrix& x = inst.design();
  const double c = inst.radius();
  std::vector<Vector> out;
  for (Index j = 0; j < x.cols(); ++j) {
    out.push_back(c * x.col(j));
    out.push_back(-c * x.col(j));
  }
  out.push_back(Vector::Zero(inst.n()));
  Rng rng(derive_seed(seed, {0xca2d1da7eULL}));
  const Index max_support = std::min<Index>(3, inst.p());
  for (int d = 0; d < random_draws; ++d) {
    const Index s = 1 + static_cast<Index>(rng.bits() % static_cast<std::uint64_t>(max_support));
    std::vector<Index> idx;
    while (static_cast<Index>(idx.size()) < s) {
      const Index j = static_cast<Index>(rng.bits() % static_cast<std::uint64_t>(inst.p()));
      if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
    }
    Vector theta = Vector::Zero(inst.p());
    for (Index j : idx) {
      const double mag = 0.05 + rng.uniform();
      theta(j) = (rng.bits() & 1U) ? mag : -mag;
    }
    const double norm_q = std::pow(theta.cwiseAbs().array().pow(inst.q()).sum(), 1.0 / inst.q());
    theta *= c / norm_q;
    out.push_back(x * theta);
  }
  return out;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "loglog_slope: need two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxy += dx * (std::log(ys[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace pnn
