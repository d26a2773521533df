#include "pnn/risk.hpp"

#include <gtest/gtest.h>

using namespace pnn;

namespace {

const double kLn3 = std::log(3.0);

WidthProfile identity2_profile() { return width_profile(Matrix::Identity(2, 2)); }

}  // namespace

TEST(Cq, Values) {
  EXPECT_NEAR(c_q(1.0), 1.3863, 1e-4);
  EXPECT_NEAR(c_q(1.0), 2.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(c_q(0.5), 11.0904, 1e-4);
  double prev = c_q(1.0);
  for (double q = 0.95; q > 0.04; q -= 0.05) {
    EXPECT_GT(c_q(q), prev);
    prev = c_q(q);
  }
  EXPECT_GT(c_q(0.05), 1e6);
  EXPECT_THROW(c_q(0.0), InvalidArgument);
  EXPECT_THROW(c_q(1.2), InvalidArgument);
}

TEST(UpperBound, ZeroSigma) {
  const auto ub = upper_bound(std::vector<double>{1.0, 0.5, 0.0}, 1.0, 0.0, 2);
  EXPECT_EQ(ub.value, 0.0);
  EXPECT_EQ(ub.k, 0);
}

TEST(UpperBound, IdentityTable) {
  const auto prof = identity2_profile();
  const auto ub = upper_bound(prof, 1.0, 1.0, 2);
  ASSERT_EQ(ub.terms.size(), 3U);
  double best = std::numeric_limits<double>::infinity();
  Index arg = -1;
  for (std::size_t k = 0; k < 3; ++k) {
    const double u = double(k) + 1.3862943611198906 * prof.achieved[k] * std::sqrt(kLn3);
    EXPECT_NEAR(ub.terms[k], u, 1e-12);
    if (u < best) best = u, arg = static_cast<Index>(k);
  }
  EXPECT_EQ(ub.k, arg);
  EXPECT_DOUBLE_EQ(ub.value, ub.terms[static_cast<std::size_t>(ub.k)]);
  EXPECT_EQ(ub.k, 0);
  EXPECT_NEAR(ub.value, 1.3863 * std::sqrt(kLn3), 1e-4);
}

TEST(UpperBound, ScalingIdentity) {
  const std::vector<double> z = {2.0, 1.3, 0.7, 0.2, 0.0};
  for (double q : {1.0, 0.5, 0.3})
    for (double s : {0.25, 0.7, 3.0}) {
      std::vector<double> zs;
      for (double v : z) zs.push_back(v / s);
      const double lhs = upper_bound(z, q, s, 24).value;
      const double rhs = s * s * upper_bound(zs, q, 1.0, 24).value;
      EXPECT_NEAR(lhs, rhs, 1e-12 * lhs);
    }
}

TEST(UpperBound, RadiusFoldsIntoWidths) {
  // upper(cX) equals the formula with z_k replaced by c z_k.
  Rng rng(3);
  const Matrix x = sample_gaussian_matrix(4, 10, rng);
  const auto base = width_profile(x);
  for (double c : {0.5, 2.0, 10.0}) {
    const auto scaled = width_profile(c * x);
    std::vector<double> zc;
    for (double z : base.achieved) zc.push_back(c * z);
    EXPECT_NEAR(upper_bound(scaled, 1.0, 1.0, 10).value, upper_bound(zc, 1.0, 1.0, 10).value,
                1e-9 * upper_bound(zc, 1.0, 1.0, 10).value);
  }
}

TEST(LowerBound, Examples) {
  EXPECT_EQ(lower_bound(width_profile(Matrix::Zero(3, 4)), 1.0, 1.0).value, 0.0);
  const auto lb = lower_bound(identity2_profile(), 1.0, 1.0);
  EXPECT_NEAR(lb.value, 0.5, 1e-3);
  EXPECT_EQ(lb.k, 1);
  // Saturates as sigma grows.
  const std::vector<double> d = {1.0, 0.8, 0.3};
  const double sat = std::max(0.64, std::pow(2.0, -1.0) * 0.09);
  EXPECT_NEAR(lower_bound(d, 1.0, 1e6).value, sat, 1e-15);
  EXPECT_NEAR(lower_bound(d, 1.0, 1e9).value, sat, 1e-15);
}

TEST(LowerBound, TieBreakLargestK) {
  const auto lb = lower_bound(std::vector<double>{0, 1, 0, 1}, 1.0, 1.0);
  // Terms: k=1 -> min(1, 1) = 1; k=3 -> min(3, 1/3) ... ; only k=1 reaches 1.
  EXPECT_EQ(lb.k, 1);
  const auto tie = lower_bound(std::vector<double>{0, 0.5, std::sqrt(2.0) * 0.5}, 1.0, 1.0);
  // k=1: 0.25, k=2: min(2, 0.5 * 0.5) = 0.25.
  EXPECT_EQ(tie.k, 2);
}

TEST(LowerBound, ConservativeAgainstOracle) {
  for (int s = 0; s < 10; ++s) {
    Rng rng(derive_seed(90, {std::uint64_t(s)}));
    const Matrix x = sample_gaussian_matrix(3, 5, rng);
    const auto prof = width_profile(x);
    std::vector<double> exact = {x.colwise().norm().maxCoeff(), width_bruteforce(x, 1),
                                 width_bruteforce(x, 2), 0.0};
    for (double sigma : {0.3, 1.0})
      for (double q : {1.0, 0.5})
        EXPECT_LE(lower_bound(prof, q, sigma).value, lower_bound(exact, q, sigma).value * (1 + 1e-9));
  }
}

TEST(Certificate, IdentityFieldsCrossChecked) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 1.0, 1.0, 1.0);
  const auto prof = identity2_profile();
  const auto cert = minimax_certificate(inst, prof);
  const auto ub = upper_bound(prof, 1.0, 1.0, 2);
  const auto lb = lower_bound(prof, 1.0, 1.0);
  EXPECT_EQ(cert.upper, ub.value);
  EXPECT_EQ(cert.lower, lb.value);
  EXPECT_EQ(cert.k_upper, ub.k);
  EXPECT_EQ(cert.k_lower, lb.k);
  EXPECT_EQ(cert.terms, ub.terms);
  EXPECT_DOUBLE_EQ(cert.ratio, ub.value / lb.value);
  EXPECT_DOUBLE_EQ(cert.c_q, c_q(1.0));
  // min(0 + 1, 1 + 0.5, 2 + 0) = 1.
  EXPECT_NEAR(cert.proj_risk, 1.0, 1e-12);
}

TEST(Certificate, HalfQRecomputed) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 0.5, 1.0, 1.0);
  const auto prof = identity2_profile();
  const auto cert = minimax_certificate(inst, prof);
  const double cq = c_q(0.5);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_NEAR(cert.terms[k], double(k) + cq * std::sqrt(prof.achieved[k]) * std::pow(kLn3, 0.75),
                1e-12);
  // k^{1-2/q} = k^{-3}: only k = 1 contributes.
  EXPECT_NEAR(cert.lower, std::min(1.0, prof.relax_lower[1] * prof.relax_lower[1]), 1e-15);
}

TEST(Certificate, ZeroSigma) {
  const ProblemInstance inst(Matrix::Identity(3, 3), 1.0, 1.0, 0.0);
  const auto cert = minimax_certificate(inst);
  EXPECT_EQ(cert.upper, 0.0);
  EXPECT_EQ(cert.lower, 0.0);
  EXPECT_TRUE(std::isinf(cert.ratio));
}

TEST(EuclideanBall, Examples) {
  EXPECT_EQ(euclidean_ball_lower(4, 0.0, 1.0), 0.0);
  EXPECT_EQ(euclidean_ball_lower(4, 1.0, 0.0), 0.0);
  EXPECT_EQ(euclidean_ball_lower(4, 1.0, 1.0), 1.0);
  EXPECT_EQ(euclidean_ball_lower(4, 5.0, 0.5), 1.0);
}

TEST(MonteCarlo, IdentityEstimatorChiSquareMean) {
  const Index n = 10;
  const double sigma = 0.7;
  const auto rep = mc_risk([](const Vector& v) { return v; }, {Vector::Zero(n), Vector::Ones(n)},
                           sigma, 400, 5);
  for (std::size_t c = 0; c < 2; ++c)
    EXPECT_NEAR(rep.means[c], n * sigma * sigma, 3.0 * rep.std_errors[c]);
}

TEST(MonteCarlo, ZeroEstimatorAtZero) {
  const auto rep = mc_risk([](const Vector& v) { return Vector(Vector::Zero(v.size())); },
                           {Vector::Zero(4)}, 1.0, 50, 1);
  EXPECT_EQ(rep.max_mean, 0.0);
  EXPECT_EQ(rep.max_std_error(), 0.0);
}

TEST(MonteCarlo, DeterministicAndPaired) {
  auto shrink = [](const Vector& v) { return Vector(0.5 * v); };
  const std::vector<Vector> cands = {Vector::Zero(3), Vector::Ones(3)};
  const auto a = mc_risk(shrink, cands, 1.0, 30, 8);
  const auto b = mc_risk(shrink, cands, 1.0, 30, 8);
  EXPECT_EQ(a.means, b.means);
  EXPECT_EQ(a.std_errors, b.std_errors);
  const auto c = mc_risk(shrink, cands, 1.0, 30, 9);
  EXPECT_NE(a.means, c.means);
  // Standard error = sample std / sqrt(trials), by hand for candidate 0.
  std::vector<double> errs;
  for (int t = 0; t < 30; ++t) errs.push_back((0.5 * trial_noise(8, 0, t, 3, 1.0)).squaredNorm());
  double m = 0;
  for (double e : errs) m += e;
  m /= 30;
  double ss = 0;
  for (double e : errs) ss += (e - m) * (e - m);
  EXPECT_NEAR(a.means[0], m, 1e-14);
  EXPECT_NEAR(a.std_errors[0], std::sqrt(ss / 29) / std::sqrt(30.0), 1e-14);
  EXPECT_EQ(a.max_mean, *std::max_element(a.means.begin(), a.means.end()));
}

TEST(MonteCarlo, EllipsoidNearestNeighborGrows) {
  std::vector<double> risks;
  for (Index n : {64, 256}) {
    Vector w = Vector::Ones(n);
    w(n - 1) = 1.0 / std::sqrt(double(n));
    const AxisEllipsoid e(w);
    Vector y = Vector::Zero(n);
    y(n - 1) = std::pow(double(n), 0.25);
    const auto rep = mc_risk([&](const Vector& v) { return ellipsoid_nearest(e, v); }, {y}, 1.0, 100, 3);
    risks.push_back(rep.max_mean);
  }
  EXPECT_GE(risks[1], 4.0);
  EXPECT_GT(risks[1], 1.4 * risks[0]);
}

TEST(CandidateTruths, ShapeAndRadius) {
  Rng rng(4);
  const ProblemInstance inst(sample_gaussian_matrix(5, 7, rng), 1.0, 2.0, 1.0);
  const auto c = candidate_truths(inst, 1, 32);
  ASSERT_EQ(c.size(), 2U * 7 + 1 + 32);
  EXPECT_TRUE(c[0].isApprox(2.0 * inst.design().col(0)));
  EXPECT_TRUE(c[1].isApprox(-2.0 * inst.design().col(0)));
  EXPECT_EQ(c[14], Vector::Zero(5));
  // Every candidate lies in X l1(C): least squares in the hull is exact.
  for (const auto& y : c) {
    L1Options o;
    o.tol = 1e-12;
    const auto sol = l1_ls(inst.design(), y, 2.0, o);
    EXPECT_LE((sol.y_hat - y).norm(), 1e-5);
  }
}

TEST(LogLogSlope, RecoversPowerLaw) {
  EXPECT_NEAR(loglog_slope({1, 10, 100}, {2, 2 * std::sqrt(10.0), 20}), 0.5, 1e-12);
}
