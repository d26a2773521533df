#include "pnn/estimators.hpp"
#include "pnn/risk.hpp"

#include <gtest/gtest.h>

using namespace pnn;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

ProjectionOperator line(const Vector& u) { return orthonormalize(Matrix(u)); }

}  // namespace

TEST(OrthProj, Examples) {
  const Vector y = vec({1, -2, 3});
  EXPECT_EQ(orth_proj_estimate(ProjectionOperator::identity(3), y), y);
  EXPECT_EQ(orth_proj_estimate(ProjectionOperator::zero(3), y), Vector::Zero(3));
  // M(y) = (0, ..., 0, y_n).
  const auto last = line(Vector::Unit(3, 2));
  EXPECT_TRUE(orth_proj_estimate(last, y).isApprox(vec({0, 0, 3})));
}

TEST(NNEstimate, Examples) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 1.0, 1.0, 1.0);
  EXPECT_TRUE(nn_estimate(inst, vec({2, 0})).isApprox(vec({1, 0}), 1e-6));
  const Vector inside = vec({0.3, -0.2});
  EXPECT_LE((nn_estimate(inst, inside) - inside).norm(), 1e-6);
  const ProblemInstance zero(Matrix::Identity(2, 2), 1.0, 0.0, 1.0);
  EXPECT_EQ(nn_estimate(zero, vec({5, 5})), Vector::Zero(2));
}

TEST(NNEstimate, RejectsNonconvexQ) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 0.5, 1.0, 1.0);
  try {
    nn_estimate(inst, vec({1, 1}));
    FAIL() << "expected an error";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("q < 1"), std::string::npos);
  }
}

TEST(PnnSelect, ZeroSigmaPicksZero) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 1.0, 1.0, 0.0);
  const auto sel = pnn_select(inst, width_profile(inst.scaled_design()));
  EXPECT_EQ(sel.k_star, 0);
  for (double r : sel.r) EXPECT_EQ(r, 0.0);
  EXPECT_TRUE(sel.projection.is_full());
  EXPECT_EQ(sel.complement.dim(), 0);
}

TEST(PnnSelect, LargeSigmaPicksZero) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 1.0, 1.0, 100.0);
  const auto sel = pnn_select(inst, width_profile(inst.scaled_design()));
  EXPECT_EQ(sel.k_star, 0);
  EXPECT_NEAR(sel.r[0], 100.0 * std::sqrt(std::log(3.0)), 1e-9);
  EXPECT_GT(sel.r[1], 1e4);
}

TEST(PnnSelect, SmallSigmaFullTable) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 1.0, 1.0, 0.01);
  const auto prof = width_profile(inst.scaled_design());
  const auto sel = pnn_select(inst, prof);
  const double s = 0.01, root_log = std::sqrt(std::log(3.0));
  ASSERT_EQ(sel.r.size(), 3U);
  std::size_t best = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double expect = k * s * s + prof.achieved[k] * s * root_log;
    EXPECT_NEAR(sel.r[k], expect, 1e-15);
    if (expect < sel.r[best]) best = k;
  }
  EXPECT_EQ(sel.k_star, static_cast<Index>(best));
  EXPECT_EQ(sel.k_star, 2);  // r = (0.0105, 0.0075, 0.0002)
  EXPECT_EQ(sel.projection.dim() + sel.complement.dim(), 2);
}

TEST(PnnSelect, TieBreakTowardSmallK) {
  EXPECT_EQ(argmin_first({1.0, 1.0, 1.0}), 0);
  EXPECT_EQ(argmin_first({2.0, 1.0, 1.0}), 1);
}

TEST(PnnSelect, SearchAgreesWithScanOnUnimodalScores) {
  Rng rng(31);
  const ProblemInstance inst(sample_gaussian_matrix(6, 18, rng), 1.0, 1.0, 0.3);
  const auto full = pnn_select(inst, width_profile(inst.scaled_design()));
  const auto fast = pnn_select_search(inst);
  EXPECT_NEAR(fast.r[static_cast<std::size_t>(fast.k_star)], full.r[static_cast<std::size_t>(full.k_star)],
              0.05 * full.r[static_cast<std::size_t>(full.k_star)] + 1e-12);
}

TEST(PnnEstimate, IdentityProjectionEqualsNN) {
  Rng rng(13);
  const ProblemInstance inst(sample_gaussian_matrix(5, 9, rng), 1.0, 1.3, 0.0);
  const auto sel = pnn_select(inst, width_profile(inst.scaled_design()));
  ASSERT_EQ(sel.k_star, 0);
  for (int t = 0; t < 5; ++t) {
    const Vector y = sample_gaussian(5, 2.0, rng);
    EXPECT_EQ(pnn_estimate(inst, y, sel).y_hat, nn_estimate(inst, y));
  }
}

TEST(PnnEstimate, FullComplementReturnsObservation) {
  const ProblemInstance inst(Matrix::Identity(3, 3), 1.0, 1.0, 1.0);
  const auto sel = make_selection(3, {}, {}, ProjectionOperator::zero(3));
  const Vector y = vec({4, -1, 0.5});
  EXPECT_EQ(pnn_estimate(inst, y, sel).y_hat, y);
}

TEST(PnnEstimate, TwoByTwoMatchesSegmentOracle) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 1.0, 1.0, 1.0);
  const double r = 1.0 / std::sqrt(2.0);
  const Vector anti = vec({r, -r});
  const auto sel = make_selection(1, {}, {}, line(anti));
  for (const Vector& y : {vec({2, 2}), vec({2, -1}), vec({0.1, 0.3}), vec({-3, 5})}) {
    const auto est = pnn_estimate(inst, y, sel);
    // Raw part: diagonal component.
    const Vector diag = vec({r, r});
    EXPECT_LE((est.raw_part - diag.dot(y) * diag).norm(), 1e-12);
    // NN part: nearest point of the projected cross-polytope, which is the
    // segment t * anti with |t| <= 1/sqrt2; grid search over t.
    const Vector py = anti.dot(y) * anti;
    double bd = std::numeric_limits<double>::infinity();
    Vector best;
    for (int s = -100000; s <= 100000; ++s) {
      const Vector cand = (r * s / 100000.0) * anti;
      const double d = (cand - py).squaredNorm();
      if (d < bd) bd = d, best = cand;
    }
    EXPECT_LE((est.nn_part - best).norm(), 1e-3) << y.transpose();
  }
}

TEST(PnnEstimate, PythagoreanSplit) {
  Rng rng(14);
  const ProblemInstance inst(sample_gaussian_matrix(8, 20, rng), 1.0, 1.0, 0.5);
  const auto prof = width_profile(inst.scaled_design());
  for (Index k = 0; k <= 8; ++k) {
    const auto sel = make_selection(k, {}, {}, prof.projections[static_cast<std::size_t>(k)]);
    Vector theta = Vector::Zero(20);
    theta(3) = 0.7;
    theta(11) = -0.3;
    const Vector y = inst.scaled_design() * theta;
    const Vector obs = y + sample_gaussian(8, 0.5, rng);
    const auto est = pnn_estimate(inst, obs, sel);
    const double total = (est.y_hat - y).squaredNorm();
    const double raw = (est.raw_part - apply(sel.complement, y)).squaredNorm();
    const double nn = (est.nn_part - apply(sel.projection, y)).squaredNorm();
    EXPECT_NEAR(total, raw + nn, 1e-8) << "k = " << k;
  }
}

TEST(PnnEstimate, NotWorseThanSameProjectionEstimator) {
  Rng rng(15);
  // Anisotropic rows keep k* away from 0 and n, where the comparison is vacuous.
  Matrix x = sample_gaussian_matrix(16, 40, rng);
  x.bottomRows(12) *= 0.1;
  const ProblemInstance inst(x, 1.0, 1.0, 0.3);
  const auto sel = pnn_select(inst, width_profile(inst.scaled_design()));
  ASSERT_GT(sel.k_star, 0);
  ASSERT_LT(sel.k_star, 16);
  const auto cands = candidate_truths(inst, 3, 8);
  const auto pnn = mc_risk([&](const Vector& v) { return pnn_estimate(inst, v, sel).y_hat; },
                           cands, inst.sigma(), 100, 9);
  const auto proj = mc_risk([&](const Vector& v) { return orth_proj_estimate(sel.complement, v); },
                            cands, inst.sigma(), 100, 9);
  EXPECT_LE(pnn.max_mean, proj.max_mean + 3.0 * std::max(pnn.max_std_error(), proj.max_std_error()));
}

TEST(Adaptive, ThresholdFormula) {
  for (Index n : {2, 10, 64})
    for (double s : {0.5, 1.0, 3.0})
      for (Index k = 0; k <= n / 2; ++k) {
        const double nd = double(n);
        EXPECT_DOUBLE_EQ(adaptive_threshold(n, k, s),
                         double(n - k) * s * s + 2.0 * std::sqrt(nd * std::log(nd)) * s * s);
        if (k > 0) { EXPECT_LT(adaptive_threshold(n, k, s), adaptive_threshold(n, k - 1, s)); }
      }
}

TEST(Adaptive, ZeroTruthAcceptsAtZero) {
  const Index n = 64;
  const ProblemInstance inst(Matrix::Identity(n, n), 1.0, 1.0, 1.0);
  WidthOptions w;
  w.repeats = 4;
  const auto prof = width_profile(inst.design(), w);
  int accepted = 0;
  for (int t = 0; t < 200; ++t) {
    const Vector obs = trial_noise(77, 0, t, n, 1.0);
    const auto res = adaptive_estimate(inst, obs, prof);
    if (res.trace.final_k && *res.trace.final_k == 0) {
      ++accepted;
      EXPECT_EQ(res.y_hat, Vector::Zero(n));
    }
    // Zero or one accepted record, always the last one.
    int n_acc = 0;
    for (const auto& rec : res.trace.records) n_acc += rec.accepted;
    EXPECT_EQ(n_acc, res.trace.final_k ? 1 : 0);
  }
  EXPECT_GE(accepted, 180);
}

TEST(Adaptive, FarTruthFallsBack) {
  const Index n = 4;
  const ProblemInstance inst(Matrix::Identity(n, n), 1.0, 1.0, 1.0);
  const auto prof = width_profile(inst.design());
  const Vector obs = Vector::Constant(n, 100.0);
  const auto res = adaptive_estimate(inst, obs, prof);
  EXPECT_FALSE(res.trace.final_k.has_value());
  EXPECT_EQ(res.y_hat, obs);
  EXPECT_EQ(res.trace.records.size(), 3U);
  for (const auto& rec : res.trace.records) {
    EXPECT_FALSE(rec.accepted);
    EXPECT_DOUBLE_EQ(rec.threshold, adaptive_threshold(n, rec.k, 1.0));
    if (rec.k > 0) { EXPECT_DOUBLE_EQ(rec.radius, double(rec.k) / rec.delta); }
  }
}

TEST(Adaptive, RejectsZeroSigma) {
  const ProblemInstance inst(Matrix::Identity(2, 2), 1.0, 1.0, 0.0);
  const auto prof = width_profile(inst.design());
  EXPECT_THROW(adaptive_estimate(inst, vec({1, 1}), prof), InvalidArgument);
}

TEST(Adaptive, CollapsedWidthShortCircuits) {
  // Rank-one design: the k = 1 projection kills every column.
  Matrix x = Matrix::Zero(2, 3);
  x.row(0) << 1, 2, -1;
  const ProblemInstance inst(x, 1.0, 1.0, 1.0);
  const auto prof = width_profile(x);
  ASSERT_NEAR(prof.achieved[1], 0.0, 1e-12);
  const auto res = adaptive_estimate(inst, vec({30, 30}), prof);
  ASSERT_GE(res.trace.records.size(), 2U);
  const auto& rec = res.trace.records[1];
  EXPECT_NEAR(rec.delta, 0.0, 1e-12);
  if (rec.delta == 0.0) { EXPECT_TRUE(std::isinf(rec.radius)); }
}

TEST(Adaptive, MemberScenarioPassesAtLaterK) {
  const Index n = 64;
  Rng rng(41);
  const ProblemInstance inst(sample_gaussian_matrix(n, 96, rng) / std::sqrt(double(n)), 1.0, 1.0, 1.0);
  WidthOptions w;
  w.repeats = 2;
  const Index k = 4;
  const auto e = width_entry(inst.design(), k, w);
  const double delta = max_projected_norm(e.projection, inst.design());
  const double ck = double(k) * inst.sigma() / delta;
  Vector theta = Vector::Zero(96);
  theta(5) = 0.6 * ck;
  theta(40) = -0.4 * ck;
  const Vector y = inst.design() * theta;  // P_k y lies in P_k X l1(C_k)
  int pass = 0;
  for (int t = 0; t < 50; ++t) {
    const Vector obs = y + trial_noise(5, 0, t, n, 1.0);
    const Vector yk = apply(e.projection, obs);
    const auto fit = l1_ls(apply_columns(e.projection, inst.design()), yk, ck);
    pass += (fit.y_hat - yk).squaredNorm() <= adaptive_threshold(n, k, 1.0);
  }
  EXPECT_GE(pass, 45);
}
