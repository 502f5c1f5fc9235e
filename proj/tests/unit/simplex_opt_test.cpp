#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "agsfh/error.hpp"
#include "agsfh/simplex_opt.hpp"
#include "oracles.hpp"

namespace agsfh {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

Eigen::VectorXd random_vector(Index n, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(gen);
  return v;
}

Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(gen);
  return m;
}

TEST(ProjectSimplex, PointOnSimplexIsUnchanged) {
  EXPECT_EQ(project_simplex(vec({0.5, 0.5})), vec({0.5, 0.5}));
}

TEST(ProjectSimplex, ClipsNegativeCoordinate) {
  const Eigen::VectorXd s = project_simplex(vec({1.2, -0.2}));
  EXPECT_NEAR(s(0), 1.0, 1e-15);
  EXPECT_EQ(s(1), 0.0);
}

TEST(ProjectSimplex, TwoOneGoesToVertex) {
  const Eigen::VectorXd s = project_simplex(vec({2.0, 1.0}));
  EXPECT_NEAR(s(0), 1.0, 1e-15);
  EXPECT_EQ(s(1), 0.0);

  // Grid search over the segment at step 1e-4.
  double best = 1e300, best_t = -1;
  for (int i = 0; i <= 10000; ++i) {
    const double t = i * 1e-4;
    const double d = (t - 2.0) * (t - 2.0) + (1.0 - t - 1.0) * (1.0 - t - 1.0);
    if (d < best) {
      best = d;
      best_t = t;
    }
  }
  EXPECT_NEAR(s(0), best_t, 1e-4);
}

TEST(ProjectSimplex, MatchesEnumerationOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    const Index n = 1 + trial % 8;
    const Eigen::VectorXd v = random_vector(n, gen, 2.0);
    const Eigen::VectorXd s = project_simplex(v);
    EXPECT_LE((s - oracle::projection_by_enumeration(v)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(s.minCoeff(), 0.0);
    EXPECT_NEAR(s.sum(), 1.0, 1e-12);
  }
}

TEST(ProjectSimplex, IsIdempotentExactly) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::VectorXd once = project_simplex(random_vector(1 + trial % 40, gen, 3.0));
    EXPECT_EQ(project_simplex(once), once);
  }
}

TEST(ProjectSimplex, FarNegativeEntryIsZeroed) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd v = random_vector(6, gen);
    v(trial % 6) = -10.0;
    EXPECT_EQ(project_simplex(v)(trial % 6), 0.0);
  }
}

TEST(ProjectSimplex, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(project_simplex(Eigen::VectorXd()), InvalidArgument);
  EXPECT_THROW(project_simplex(vec({1.0, std::nan("")})), NumericError);
}

TEST(Lipschitz, ZeroFactorGivesTwiceRidge) {
  const auto q = QuadraticTerm::low_rank(Eigen::MatrixXd::Zero(5, 2), 3.0);
  EXPECT_NEAR(q.lipschitz(), 6.0, 1e-12);
  EXPECT_NEAR(lipschitz(3.0 * Eigen::MatrixXd::Identity(5, 5)), 6.0, 1e-12);
}

TEST(Lipschitz, RankOneFactor) {
  Eigen::MatrixXd u(4, 1);
  u << 1.0, 2.0, -2.0, 0.5;
  const double rho2 = u.squaredNorm();
  const auto q = QuadraticTerm::low_rank(u, 0.7);
  EXPECT_NEAR(q.lipschitz(), 2.0 * (rho2 + 0.7), 1e-12);
  EXPECT_NEAR(lipschitz(u * u.transpose() + 0.7 * Eigen::MatrixXd::Identity(4, 4)), 2.0 * (rho2 + 0.7), 1e-12);
}

TEST(Lipschitz, MatchesDenseEigenOracle) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd u = random_matrix(30, 6, gen);
    const Eigen::MatrixXd q = u * u.transpose() + 2.0 * Eigen::MatrixXd::Identity(30, 30);
    const double expected = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff();
    EXPECT_NEAR(QuadraticTerm::low_rank(u, 2.0).lipschitz() / expected, 1.0, 1e-8);
    EXPECT_NEAR(lipschitz(q) / expected, 1.0, 1e-8);
  }
}

TEST(QuadraticTerm, LowRankAgreesWithDense) {
  std::mt19937_64 gen(23);
  const Eigen::MatrixXd u = random_matrix(12, 3, gen);
  const auto low = QuadraticTerm::low_rank(u, 0.5);
  const auto full = QuadraticTerm::dense(u * u.transpose() + 0.5 * Eigen::MatrixXd::Identity(12, 12));
  const Eigen::VectorXd x = random_vector(12, gen);
  EXPECT_LE((low.apply(x) - full.apply(x)).norm(), 1e-12 * full.apply(x).norm());
  EXPECT_LE((low.solve(x) - full.solve(x)).norm(), 1e-10 * full.solve(x).norm());
  EXPECT_LE((low.matrix() - full.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WarmStart, DiagonalSolve) {
  const auto q = QuadraticTerm::dense(2.0 * Eigen::MatrixXd::Identity(4, 4));
  const Eigen::VectorXd s0 = warm_start(ColumnQP(q, vec({2, 0, 0, 0})));
  EXPECT_LE((s0 - vec({1, 0, 0, 0})).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(WarmStart, ZeroFactorScalesLinearTerm) {
  const auto q = QuadraticTerm::low_rank(Eigen::MatrixXd::Zero(3, 2), 10.0);
  const Eigen::VectorXd c = vec({1.0, -2.0, 0.5});
  EXPECT_LE((warm_start(ColumnQP(q, c)) - c / 10.0).norm(), 1e-15);
}

TEST(WarmStart, ResidualIsSmall) {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd u = random_matrix(25, 5, gen);
    const Eigen::MatrixXd dense = u * u.transpose() + 0.3 * Eigen::MatrixXd::Identity(25, 25);
    const Eigen::VectorXd c = random_vector(25, gen);
    const auto q = QuadraticTerm::low_rank(u, 0.3);
    const Eigen::VectorXd s0 = warm_start(ColumnQP(q, c));
    EXPECT_LE((dense * s0 - c).norm(), 1e-10 * c.norm());
  }
}

TEST(Momentum, PrintedRecurrence) {
  const double c2 = next_momentum(1.0, Momentum::kPrinted);
  EXPECT_NEAR(c2, (1.0 + std::sqrt(5.0)) / 2.0, 1e-15);
  EXPECT_NEAR(c2, 1.6180, 1e-4);
  EXPECT_NEAR(next_momentum(c2, Momentum::kPrinted), 1.8667, 1e-4);
}

TEST(Momentum, ClassicRecurrenceAgreesAtFirstStep) {
  EXPECT_DOUBLE_EQ(next_momentum(1.0, Momentum::kClassic), next_momentum(1.0, Momentum::kPrinted));
  const double c2 = next_momentum(1.0, Momentum::kClassic);
  EXPECT_NEAR(next_momentum(c2, Momentum::kClassic), (1.0 + std::sqrt(4.0 * c2 * c2 + 1.0)) / 2.0, 1e-15);
}

TEST(Ogm, FeasibleUnconstrainedMinimiser) {
  // Q = I, c = 2 e_1: the unconstrained minimiser e_1 is on the simplex.
  const auto q = QuadraticTerm::low_rank(Eigen::MatrixXd::Zero(5, 1), 1.0);
  const OgmResult r = ogm_solve(ColumnQP(q, 2.0 * Eigen::VectorXd::Unit(5, 0)), std::nullopt);
  EXPECT_LE((r.solution - Eigen::VectorXd::Unit(5, 0)).norm(), 1e-12);
}

TEST(Ogm, MatchesActiveSetOracleOnRandomInstance) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd u = random_matrix(10, 3, gen, 0.5);
    const double ridge = 0.5 + trial;
    const Eigen::VectorXd c = random_vector(10, gen, 2.0);
    const auto q = QuadraticTerm::low_rank(u, ridge);
    const ColumnQP qp(q, c);
    const auto exact = oracle::simplex_qp_by_active_sets(q.matrix(), c);
    const OgmResult r = ogm_solve(qp, std::nullopt, {1e-12, 20000, Momentum::kPrinted});
    EXPECT_LE(qp.objective(r.solution) - exact.value, 1e-6);
    EXPECT_NEAR(r.solution.sum(), 1.0, 1e-12);
    EXPECT_GE(r.solution.minCoeff(), 0.0);
  }
}

TEST(Ogm, NoWorseThanProjectedWarmStart) {
  std::mt19937_64 gen(37);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd u = random_matrix(15, 4, gen, 0.4);
    const auto q = QuadraticTerm::low_rank(u, 1.0 + trial % 5);
    const ColumnQP qp(q, random_vector(15, gen));
    const OgmResult r = ogm_solve(qp, std::nullopt);
    EXPECT_LE(qp.objective(r.solution), qp.objective(project_simplex(warm_start(qp))) + 1e-12);
  }
}

TEST(Ogm, ClassicMomentumAlsoConverges) {
  std::mt19937_64 gen(41);
  const Eigen::MatrixXd u = random_matrix(8, 2, gen);
  const auto q = QuadraticTerm::low_rank(u, 0.2);
  const Eigen::VectorXd c = random_vector(8, gen, 3.0);
  const ColumnQP qp(q, c);
  const auto exact = oracle::simplex_qp_by_active_sets(q.matrix(), c);
  const OgmResult r = ogm_solve(qp, std::nullopt, {1e-12, 20000, Momentum::kClassic});
  EXPECT_LE(qp.objective(r.solution) - exact.value, 1e-6);
}

TEST(Ogm, RespectsIterationCap) {
  std::mt19937_64 gen(43);
  const auto q = QuadraticTerm::low_rank(random_matrix(8, 2, gen), 0.1);
  const OgmResult r = ogm_solve(ColumnQP(q, random_vector(8, gen, 5.0)), std::nullopt, {1e-15, 3, Momentum::kPrinted});
  EXPECT_LE(r.iterations, 3);
  EXPECT_NEAR(r.solution.sum(), 1.0, 1e-12);
}

TEST(Ogm, RejectsBadOptionsAndWarmStart) {
  const auto q = QuadraticTerm::low_rank(Eigen::MatrixXd::Zero(3, 1), 1.0);
  const ColumnQP qp(q, Eigen::VectorXd::Ones(3));
  EXPECT_THROW(ogm_solve(qp, std::nullopt, {0.0, 10, Momentum::kPrinted}), InvalidArgument);
  EXPECT_THROW(ogm_solve(qp, std::nullopt, {1e-4, 0, Momentum::kPrinted}), InvalidArgument);
  EXPECT_THROW(ogm_solve(qp, Eigen::VectorXd::Ones(4), {}), InvalidArgument);
}

TEST(Ogm, NonFiniteGradientFails) {
  const auto q = QuadraticTerm::low_rank(Eigen::MatrixXd::Zero(3, 1), 1.0);
  Eigen::VectorXd c = Eigen::VectorXd::Ones(3);
  c(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(ogm_solve(ColumnQP(q, c), Eigen::VectorXd::Constant(3, 1.0 / 3.0)), NumericError);
}

TEST(ColumnQP, ConvexityAndLipschitzWitnesses) {
  std::mt19937_64 gen(47);
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd u = random_matrix(9, 3, gen);
    const auto q = QuadraticTerm::low_rank(u, 0.5);
    const ColumnQP qp(q, random_vector(9, gen));
    const Eigen::VectorXd a = random_vector(9, gen), b = random_vector(9, gen);
    const double mu = unit(gen);
    EXPECT_LE(qp.objective(mu * a + (1 - mu) * b), mu * qp.objective(a) + (1 - mu) * qp.objective(b) + 1e-10);
    EXPECT_LE((qp.gradient(a) - qp.gradient(b)).norm(), qp.lipschitz() * (a - b).norm() * (1 + 1e-12));
  }
}

TEST(ColumnQP, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(53);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = QuadraticTerm::low_rank(random_matrix(7, 2, gen), 1.5);
    const ColumnQP qp(q, random_vector(7, gen));
    const Eigen::VectorXd x = random_vector(7, gen);
    const Eigen::VectorXd fd =
        oracle::finite_difference_gradient([&](const Eigen::VectorXd& s) { return qp.objective(s); }, x, 1e-6);
    EXPECT_LE((qp.gradient(x) - fd).norm(), 1e-5 * fd.norm());
  }
}

}  // namespace
}  // namespace agsfh
