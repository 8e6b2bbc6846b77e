#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "ordr2/estimation.hpp"
#include "ordr2/simulation.hpp"

using namespace ordr2;

namespace {

Dataset random_ordinal(std::mt19937_64& rng, int n, int p, int r, double effect = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd latent(n);
  for (int i = 0; i < n; ++i) {
    latent(i) = normal(rng);
    for (int j = 0; j < p; ++j) {
      x(i, j) = normal(rng);
      latent(i) += effect * x(i, j) / (j + 1);
    }
  }
  std::vector<std::string> names;
  for (int j = 0; j < p; ++j) names.push_back("v" + std::to_string(j + 1));
  auto codes = discretize(std::span<const double>(latent.data(), static_cast<std::size_t>(n)), r);
  return Dataset::ordinal_response(names, x, codes, r);
}

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& x) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(x(i, j));
  }
  return rows;
}

}  // namespace

// --- least squares ---------------------------------------------------------

TEST(FitOls, ResponseEqualToCovariateGivesOne) {
  Eigen::MatrixXd x(5, 2);
  x << 1, 4, 2, 1, 3, 0, 4, 2, 5, 7;
  const Dataset d = Dataset::continuous_response({"a", "b"}, x, x.col(0));
  const LinearFit fit = fit_ols(d);
  EXPECT_NEAR(fit.r2_ols, 1.0, 1e-12);
  EXPECT_NEAR(fit.beta_tilde(1), 1.0, 1e-12);
}

TEST(FitOls, InterceptOnlyGivesZero) {
  Eigen::VectorXd y(6);
  y << 3.1, 2.7, 3.3, 2.9, 3.0, 3.2;
  const Dataset d = Dataset::continuous_response({}, Eigen::MatrixXd(6, 0), y);
  const LinearFit fit = fit_ols(d);
  EXPECT_EQ(fit.r2_ols, 0.0);
  EXPECT_EQ(fit.r2_ols, 1.0 - fit.residual_ss / fit.total_ss);
}

TEST(FitOls, ResidualsOrthogonalToDesign) {
  std::mt19937_64 rng(11);
  const Dataset d = gen_latent(Setting::MixedDistribution, 300, 2.0, rng);
  const LinearFit fit = fit_ols(d);
  const Eigen::VectorXd resid = d.continuous - fit.fitted;
  EXPECT_NEAR(resid.sum(), 0.0, 1e-8 * 300);
  for (Eigen::Index j = 0; j < d.p(); ++j) EXPECT_NEAR(resid.dot(d.x.col(j)), 0.0, 1e-8 * 300);
  EXPECT_GE(fit.r2_ols, 0.0);
  EXPECT_LE(fit.r2_ols, 1.0);
  EXPECT_DOUBLE_EQ(fit.r2_ols, 1.0 - fit.residual_ss / fit.total_ss);
}

TEST(FitOls, LargeSampleMatchesPopulationR2) {
  std::mt19937_64 rng(2024);
  const Dataset d = gen_latent(Setting::SingleDistribution, 100000, 1.0, rng);
  const double expected = (5.0 / 12.0) / (5.0 / 12.0 + 1.0);
  EXPECT_NEAR(fit_ols(d).r2_ols, expected, 0.01);
}

TEST(FitOls, Errors) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;
  Eigen::VectorXd y(4);
  y << 1, 3, 2, 5;
  EXPECT_THROW(fit_ols(Dataset::continuous_response({"a", "b"}, x, y)), SingularDesignError);
  EXPECT_THROW(fit_ols(Dataset::continuous_response({"a"}, x.leftCols(1), Eigen::VectorXd::Constant(4, 2.0))),
               DegenerateResponseError);
}

// --- null model -------------------------------------------------------------

TEST(FitNull, ClosedFormLoglik) {
  std::vector<int> y(100, 1);
  std::fill(y.begin() + 30, y.end(), 2);
  const double expected = 30 * std::log(0.3) + 70 * std::log(0.7);
  EXPECT_NEAR(expected, -61.0864, 1e-4);
  for (auto link : {LinkKind::Probit, LinkKind::Logit}) {
    EXPECT_NEAR(fit_null(y, 2, link).loglik, expected, 1e-12);
  }
}

TEST(FitNull, Thresholds) {
  std::vector<int> half(100, 1);
  std::fill(half.begin() + 50, half.end(), 2);
  EXPECT_NEAR(fit_null(half, 2, LinkKind::Probit).tau(0), 0.0, 1e-15);

  std::vector<int> quarters;
  for (int c = 1; c <= 4; ++c) quarters.insert(quarters.end(), 25, c);
  const FittedModel m = fit_null(quarters, 4, LinkKind::Logit);
  EXPECT_NEAR(m.tau(0), std::log(1.0 / 3.0), 1e-14);
  EXPECT_NEAR(m.tau(1), 0.0, 1e-15);
  EXPECT_NEAR(m.tau(2), std::log(3.0), 1e-14);
}

TEST(FitNull, EmptyCategoryIsDegenerate) {
  const std::vector<int> y{1, 1, 3, 3};
  EXPECT_THROW(fit_null(y, 3, LinkKind::Probit), DegenerateNullError);
}

TEST(FitNull, MergedCategoriesMatchClosedForm) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset d = random_ordinal(rng, 80, 1, 5);
    std::vector<int> merged = d.ordinal;
    const int k = 1 + trial % 4;  // merge k and k+1
    for (int& c : merged) c = c > k ? c - 1 : c;
    const auto counts = Dataset::ordinal_response({}, Eigen::MatrixXd(80, 0), merged, 4).category_counts();
    double closed = 0.0;
    for (long c : counts) closed += c * std::log(c / 80.0);
    EXPECT_NEAR(fit_null(merged, 4, LinkKind::Probit).loglik, closed, 1e-10);
  }
}

// --- cumulative-link fits ---------------------------------------------------

TEST(FitClm, ThresholdOnlyBinarySymmetric) {
  std::vector<int> y(100, 1);
  std::fill(y.begin() + 50, y.end(), 2);
  const Dataset d = Dataset::ordinal_response({}, Eigen::MatrixXd(100, 0), y, 2);
  const FittedModel m = fit_clm(d, LinkKind::Probit);
  EXPECT_NEAR(m.tau(0), 0.0, 1e-12);
  EXPECT_EQ(m.beta.size(), 0);
  EXPECT_NEAR(m.loglik, 100 * std::log(0.5), 1e-10);
  EXPECT_TRUE(m.converged);
}

TEST(FitClm, EightObservationsMatchGridSearch) {
  Eigen::MatrixXd x(8, 1);
  x << -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0;
  const std::vector<int> y{1, 2, 1, 1, 3, 2, 3, 2};
  const Dataset d = Dataset::ordinal_response({"x"}, x, y, 3);
  const FittedModel m = fit_clm(d, LinkKind::Probit);
  ASSERT_TRUE(m.converged);

  const auto rows = rows_of(x);
  auto objective = [&](const std::array<double, 3>& p) {
    if (!(p[2] > p[1])) return -std::numeric_limits<double>::infinity();
    return oracle::ordinal_loglik(oracle::normal_cdf_series, rows, y, {p[0]}, {p[1], p[2]});
  };
  const auto best = oracle::grid_argmax3(objective, {-3, -3, -2}, {3, 2, 4}, 1e-3);
  EXPECT_NEAR(m.beta(0), best[0], 2e-3);
  EXPECT_NEAR(m.tau(0), best[1], 2e-3);
  EXPECT_NEAR(m.tau(1), best[2], 2e-3);
}

TEST(FitClm, LargeSampleRecoversLatentCoefficients) {
  std::mt19937_64 rng(77);
  const Dataset latent = gen_latent(Setting::SingleDistribution, 100000, 1.0, rng);
  const auto codes = discretize(std::span<const double>(latent.continuous.data(), 100000), 4);
  const Dataset d = Dataset::ordinal_response(latent.names, latent.x, codes, 4);
  const FittedModel m = fit_clm(d, LinkKind::Probit);
  ASSERT_TRUE(m.converged);
  EXPECT_NEAR(m.beta(0), 1.0, 0.05);
  EXPECT_NEAR(m.beta(1), 2.0, 0.05);
}

TEST(FitClm, OptimumIsStationaryLocalMaximum) {
  std::mt19937_64 rng(3);
  for (auto link : {LinkKind::Probit, LinkKind::Logit}) {
    const Dataset d = random_ordinal(rng, 150, 3, 4);
    const FittedModel m = fit_clm(d, link);
    ASSERT_TRUE(m.converged);
    const auto deriv = loglik_grad_hess(d, link, m.beta, m.tau);
    EXPECT_LT(deriv.gradient.lpNorm<Eigen::Infinity>(), 1e-6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(deriv.hessian);
    EXPECT_LT(eig.eigenvalues().maxCoeff(), 0.0);
    for (Eigen::Index j = 1; j < m.tau.size(); ++j) EXPECT_GT(m.tau(j), m.tau(j - 1));
    for (Eigen::Index i = 0; i < m.n(); ++i) {
      EXPECT_NEAR(m.fitted_probs.row(i).sum(), 1.0, 1e-10);
      EXPECT_GE(m.fitted_probs.row(i).minCoeff(), 0.0);
    }
  }
}

TEST(FitClm, NestsNullModelOnFuzzSuite) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> n_dist(25, 80), p_dist(1, 3), r_dist(2, 5);
  std::uniform_real_distribution<double> effect(0.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset d = random_ordinal(rng, n_dist(rng), p_dist(rng), r_dist(rng), effect(rng));
    const LinkKind link = trial % 2 ? LinkKind::Logit : LinkKind::Probit;
    const FittedModel m = fit_clm(d, link);
    EXPECT_TRUE(m.converged) << "trial " << trial;
    EXPECT_GE(m.loglik, m.null_loglik) << "trial " << trial;
  }
}

TEST(FitClm, BinaryMatchesDedicatedGlm) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const Dataset d = random_ordinal(rng, 120, 2, 2);
    for (auto link : {LinkKind::Probit, LinkKind::Logit}) {
      const FittedModel clm = fit_clm(d, link);
      const FittedModel glm = fit_binary_glm(d, link);
      EXPECT_NEAR(clm.loglik, glm.loglik, 1e-8);
      EXPECT_NEAR(clm.tau(0), glm.tau(0), 1e-5);
      EXPECT_NEAR(clm.intercept(), -glm.tau(0), 1e-5);
      for (Eigen::Index j = 0; j < 2; ++j) EXPECT_NEAR(clm.beta(j), glm.beta(j), 1e-5);
    }
  }
}

TEST(FitClm, ColumnRescalingInvariance) {
  std::mt19937_64 rng(21);
  const Dataset d = random_ordinal(rng, 200, 2, 4);
  Dataset scaled = d;
  const double c = -3.5;
  scaled.x.col(1) *= c;
  const FittedModel a = fit_clm(d, LinkKind::Logit);
  const FittedModel b = fit_clm(scaled, LinkKind::Logit);
  EXPECT_NEAR(b.beta(1), a.beta(1) / c, 1e-8);
  EXPECT_NEAR(b.loglik, a.loglik, 1e-8);
  EXPECT_LT((a.fitted_probs - b.fitted_probs).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitClm, OptimizerFindsClosedFormNull) {
  std::mt19937_64 rng(4);
  const Dataset full = random_ordinal(rng, 90, 1, 4);
  const Dataset d = Dataset::ordinal_response({}, Eigen::MatrixXd(90, 0), full.ordinal, 4);
  FitOptions opts;
  opts.start = Eigen::Vector3d(-2.0, 0.1, 0.4);
  const FittedModel m = fit_clm(d, LinkKind::Probit, opts);
  EXPECT_GT(m.iterations, 0);
  EXPECT_NEAR(m.loglik, fit_null(d, LinkKind::Probit).loglik, 1e-8);
}

TEST(FitClm, ConvergenceErrorCarriesLastIterate) {
  std::mt19937_64 rng(6);
  const Dataset d = random_ordinal(rng, 100, 2, 3);
  FitOptions opts;
  opts.max_iterations = 1;
  try {
    fit_clm(d, LinkKind::Probit, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_FALSE(e.last_iterate().converged);
    EXPECT_EQ(e.last_iterate().iterations, 1);
    EXPECT_GT(e.last_iterate().loglik, e.last_iterate().null_loglik);
  }
}

TEST(FitClm, SeparationIsReportedNotThrown) {
  Eigen::MatrixXd x(6, 1);
  x << -3, -2, -1, 1, 2, 3;
  const Dataset d = Dataset::ordinal_response({"x"}, x, {1, 1, 1, 2, 2, 2}, 2);
  for (auto link : {LinkKind::Probit, LinkKind::Logit}) {
    const FittedModel m = fit_clm(d, link);
    EXPECT_TRUE(m.separation_warning);
    EXPECT_GE(m.loglik, m.null_loglik);
  }
}

TEST(FitClm, InputErrors) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;
  EXPECT_THROW(fit_clm(Dataset::ordinal_response({"a", "b"}, x, {1, 2, 1, 2}), LinkKind::Probit),
               SingularDesignError);
  EXPECT_THROW(fit_clm(Dataset::ordinal_response({"a"}, x.leftCols(1), {1, 3, 1, 3}), LinkKind::Probit),
               DegenerateNullError);
  Eigen::MatrixXd with_const(4, 1);
  with_const << 1, 1, 1, 1;
  EXPECT_THROW(fit_clm(Dataset::ordinal_response({"one"}, with_const, {1, 2, 1, 2}), LinkKind::Probit),
               SingularDesignError);
}

// --- log-likelihood derivatives ---------------------------------------------

TEST(LoglikDerivatives, MatchFiniteDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), gap(0.2, 1.2);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 2 + trial % 4;
    const Dataset d = random_ordinal(rng, 30, 2, r);
    const LinkKind link = trial % 2 ? LinkKind::Logit : LinkKind::Probit;
    Eigen::VectorXd beta(2), tau(r - 1);
    beta << coef(rng), coef(rng);
    tau(0) = coef(rng) - 1.0;
    for (int j = 1; j < r - 1; ++j) tau(j) = tau(j - 1) + gap(rng);
    const auto deriv = loglik_grad_hess(d, link, beta, tau);

    auto value_at = [&](const std::vector<double>& v) {
      Eigen::VectorXd b(2), t(r - 1);
      for (int k = 0; k < 2; ++k) b(k) = v[static_cast<std::size_t>(k)];
      for (int k = 0; k < r - 1; ++k) t(k) = v[static_cast<std::size_t>(2 + k)];
      return loglik_grad_hess(d, link, b, t).value;
    };
    std::vector<double> at;
    for (int k = 0; k < 2; ++k) at.push_back(beta(k));
    for (int k = 0; k < r - 1; ++k) at.push_back(tau(k));
    const auto fd = oracle::fd_gradient(value_at, at, 1e-6);
    for (std::size_t k = 0; k < fd.size(); ++k) {
      const double g = deriv.gradient(static_cast<Eigen::Index>(k));
      EXPECT_NEAR(g, fd[k], 1e-5 * std::max(1.0, std::abs(fd[k])));
    }
    EXPECT_LT((deriv.hessian - deriv.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-12);

    // Hessian columns against differences of the analytic gradient.
    const double h = 1e-6;
    for (std::size_t k = 0; k < at.size(); ++k) {
      auto up = at, down = at;
      up[k] += h;
      down[k] -= h;
      auto grad_at = [&](const std::vector<double>& v) {
        Eigen::VectorXd b(2), t(r - 1);
        for (int q = 0; q < 2; ++q) b(q) = v[static_cast<std::size_t>(q)];
        for (int q = 0; q < r - 1; ++q) t(q) = v[static_cast<std::size_t>(2 + q)];
        return loglik_grad_hess(d, link, b, t).gradient;
      };
      const Eigen::VectorXd col = (grad_at(up) - grad_at(down)) / (2 * h);
      const auto kk = static_cast<Eigen::Index>(k);
      for (Eigen::Index q = 0; q < col.size(); ++q) {
        EXPECT_NEAR(deriv.hessian(q, kk), col(q), 1e-5 * std::max(1.0, std::abs(col(q))));
      }
    }
  }
}

TEST(LoglikDerivatives, ValueMatchesDirectOracle) {
  std::mt19937_64 rng(31);
  const Dataset d = random_ordinal(rng, 40, 2, 4);
  const Eigen::Vector2d beta(0.3, -0.7);
  const Eigen::Vector3d tau(-0.8, 0.1, 0.9);
  const double expected =
      oracle::ordinal_loglik(oracle::normal_cdf_series, rows_of(d.x), d.ordinal, {0.3, -0.7}, {-0.8, 0.1, 0.9});
  EXPECT_NEAR(loglik_grad_hess(d, LinkKind::Probit, beta, tau).value, expected, 1e-10);
  const double expected_logit =
      oracle::ordinal_loglik(oracle::logistic_cdf, rows_of(d.x), d.ordinal, {0.3, -0.7}, {-0.8, 0.1, 0.9});
  EXPECT_NEAR(loglik_grad_hess(d, LinkKind::Logit, beta, tau).value, expected_logit, 1e-10);
}

TEST(LoglikDerivatives, NullParametersReproduceClosedForm) {
  std::mt19937_64 rng(13);
  const Dataset full = random_ordinal(rng, 75, 1, 5);
  const Dataset d = Dataset::ordinal_response({}, Eigen::MatrixXd(75, 0), full.ordinal, 5);
  for (auto link : {LinkKind::Probit, LinkKind::Logit}) {
    const FittedModel null = fit_null(d, link);
    EXPECT_NEAR(loglik_grad_hess(d, link, Eigen::VectorXd(0), null.tau).value, null.loglik, 1e-10);
  }
}

TEST(LoglikDerivatives, RejectsUnorderedThresholds) {
  std::mt19937_64 rng(1);
  const Dataset d = random_ordinal(rng, 20, 1, 3);
  EXPECT_THROW(loglik_grad_hess(d, LinkKind::Probit, Eigen::VectorXd::Zero(1), Eigen::Vector2d(0.5, 0.5)),
               OrderingError);
  EXPECT_THROW(loglik_grad_hess(d, LinkKind::Probit, Eigen::VectorXd::Zero(1), Eigen::Vector2d(0.5, -0.5)),
               OrderingError);
}

// --- prediction ---------------------------------------------------------------

TEST(PredictProbs, NullModelGivesEmpiricalProportions) {
  std::vector<int> y{1, 1, 2, 3, 3, 3, 2, 1, 3, 3};
  const Dataset d = Dataset::ordinal_response({}, Eigen::MatrixXd(10, 0), y, 3);
  const FittedModel m = fit_null(d, LinkKind::Probit);
  const Eigen::MatrixXd probs = predict_probs(m, d);
  for (Eigen::Index i = 0; i < 10; ++i) {
    EXPECT_NEAR(probs(i, 0), 0.3, 1e-9);
    EXPECT_NEAR(probs(i, 1), 0.2, 1e-9);
    EXPECT_NEAR(probs(i, 2), 0.5, 1e-9);
  }
}

TEST(PredictProbs, SymmetricBinaryRow) {
  FittedModel m;
  m.link = LinkKind::Probit;
  m.names = {"x"};
  m.categories = 2;
  m.beta = Eigen::VectorXd::Zero(1);
  m.tau = Eigen::VectorXd::Zero(1);
  const Dataset d = Dataset::ordinal_response({"x"}, Eigen::MatrixXd::Constant(1, 1, 0.7), {1}, 2);
  const Eigen::MatrixXd probs = predict_probs(m, d);
  EXPECT_DOUBLE_EQ(probs(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(probs(0, 1), 0.5);
}

TEST(PredictProbs, LogitScoreEquations) {
  std::mt19937_64 rng(55);
  // Mean fitted probability equals the observed share for a binary logit fit.
  const Dataset d = random_ordinal(rng, 250, 2, 2);
  const FittedModel m = fit_clm(d, LinkKind::Logit);
  const Eigen::MatrixXd probs = predict_probs(m, d);
  const auto counts = d.category_counts();
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(probs.col(j).mean(), counts[static_cast<std::size_t>(j)] / 250.0, 1e-6);
  }
  for (Eigen::Index i = 0; i < probs.rows(); ++i) EXPECT_NEAR(probs.row(i).sum(), 1.0, 1e-10);
}

TEST(PredictProbs, SchemaMismatch) {
  std::mt19937_64 rng(2);
  const Dataset d = random_ordinal(rng, 40, 2, 3);
  const FittedModel m = fit_clm(d, LinkKind::Probit);
  Dataset other = d;
  other.names = {"v2", "v1"};
  EXPECT_THROW(predict_probs(m, other), SchemaError);
}
