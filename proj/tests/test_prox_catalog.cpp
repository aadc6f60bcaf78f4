#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fbflow/errors.hpp"
#include "fbflow/prox_catalog.hpp"
#include "oracles.hpp"

using namespace fbflow;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

constexpr double kGridStep = 1e-4;

}  // namespace

TEST(ProxL1, SoftThresholdAgainstGrid) {
  const double u = oracle::grid_prox_1d([](double x) { return std::abs(x); }, 2.0, 1.0, -4, 4, kGridStep);
  EXPECT_NEAR(prox_l1(vec({2.0}), 1.0, 1.0)(0), u, 2 * kGridStep);
  EXPECT_DOUBLE_EQ(prox_l1(vec({2.0}), 1.0, 1.0)(0), 1.0);
}

TEST(ProxL1, InsideThresholdGivesZero) {
  const double u = oracle::grid_prox_1d([](double x) { return std::abs(x); }, 0.5, 1.0, -4, 4, kGridStep);
  EXPECT_NEAR(u, 0.0, 2 * kGridStep);
  EXPECT_EQ(prox_l1(vec({0.5}), 1.0, 1.0)(0), 0.0);
}

TEST(ProxL1, KinkIsExactZero) {
  const Vector out = prox_l1(vec({0.7, -0.7}), 0.5, 1.4);
  EXPECT_EQ(out(0), 0.0);
  EXPECT_EQ(out(1), 0.0);
  EXPECT_FALSE(std::signbit(out(1)));
}

TEST(ProxL1, ZeroWeightIsIdentity) {
  const Vector y = vec({1.5, -0.2, 0.0});
  EXPECT_EQ(prox_l1(y, 3.0, 0.0), y);
}

TEST(ProxL1, RejectsBadParameters) {
  EXPECT_THROW(prox_l1(vec({1.0}), 0.0, 1.0), InvalidParameter);
  EXPECT_THROW(prox_l1(vec({1.0}), 1.0, -1.0), InvalidParameter);
}

TEST(ProxBox, Clamp) {
  const Vector out = prox_indicator_box(vec({2.0, -3.0}), 1.0, Vector::Zero(2), Vector::Ones(2));
  EXPECT_EQ(out, vec({1.0, 0.0}));
}

TEST(ProxBox, InteriorFixed) {
  const Vector y = vec({0.3, 0.9});
  EXPECT_EQ(prox_indicator_box(y, 1.0, Vector::Zero(2), Vector::Ones(2)), y);
}

TEST(ProxBox, IndependentOfEta) {
  const Vector y = vec({2.0, -0.5, 0.5});
  const Vector lo = Vector::Constant(3, -0.25), hi = Vector::Constant(3, 0.75);
  EXPECT_EQ(prox_indicator_box(y, 0.1, lo, hi), prox_indicator_box(y, 10.0, lo, hi));
}

TEST(ProxBox, InvertedBoundsThrow) {
  EXPECT_THROW(prox_indicator_box(vec({0.0}), 1.0, vec({1.0}), vec({0.0})), InvalidParameter);
  EXPECT_THROW(box_term(vec({1.0}), vec({0.0})), InvalidParameter);
}

TEST(ProxL2Squared, Stationarity) {
  // (u - 3) + u = 0.
  EXPECT_DOUBLE_EQ(prox_l2_squared(vec({3.0}), 1.0, 1.0)(0), 1.5);
  const double g = oracle::grid_prox_1d([](double x) { return 0.5 * x * x; }, 3.0, 1.0, -4, 4, kGridStep);
  EXPECT_NEAR(g, 1.5, 2 * kGridStep);
}

TEST(ProxL2Squared, LimitsAndSymmetry) {
  const Vector y = vec({1.0, -2.0});
  EXPECT_NEAR((prox_l2_squared(y, 1.0, 1e-14) - y).norm(), 0.0, 1e-13);
  EXPECT_EQ(prox_l2_squared(Vector::Zero(2), 1.0, 5.0), Vector::Zero(2));
}

TEST(ProxNumeric, MatchesSoftThreshold) {
  std::mt19937_64 rng(1);
  const double tol = 1e-10;
  const SeparableConvexTerm term("abs", std::vector<ScalarConvex>(4, scalar_abs(0.8)));
  for (int k = 0; k < 100; ++k) {
    const Vector y = oracle::random_vec(rng, 4, -3, 3);
    const Vector closed = prox_l1(y, 0.6, 0.8);
    EXPECT_LE((prox_numeric(term, y, 0.6, tol) - closed).lpNorm<Eigen::Infinity>(), 4 * tol);
  }
}

TEST(ProxNumeric, MatchesClamp) {
  std::mt19937_64 rng(2);
  const SeparableConvexTerm term("box", {scalar_interval(0.0, 1.0), scalar_interval(-2.0, -1.0)});
  for (int k = 0; k < 100; ++k) {
    const Vector y = oracle::random_vec(rng, 2, -4, 4);
    const Vector clamp = prox_indicator_box(y, 1.0, vec({0.0, -2.0}), vec({1.0, -1.0}));
    EXPECT_LE((prox_numeric(term, y, 1.0) - clamp).lpNorm<Eigen::Infinity>(), 1e-9);
  }
}

TEST(ProxNumeric, ZeroIsIdentity) {
  const SeparableConvexTerm term("zero", {scalar_zero(), scalar_zero()});
  const Vector y = vec({3.5, -1.25});
  EXPECT_EQ(prox_numeric(term, y, 2.0), y);
}

TEST(ProxNumeric, PowerAgainstGrid) {
  std::mt19937_64 rng(3);
  for (double p : {1.5, 3.0, 4.0}) {
    const SeparableConvexTerm term("power", {scalar_power(p, 0.7)});
    for (int k = 0; k < 20; ++k) {
      const double y = oracle::random_vec(rng, 1, -3.5, 3.5)(0);
      const double g = oracle::grid_prox_1d([p](double u) { return 0.7 * std::pow(std::abs(u), p); },
                                            y, 0.4, -4, 4, kGridStep);
      EXPECT_NEAR(prox_numeric(term, vec({y}), 0.4)(0), g, 2 * kGridStep) << "p=" << p << " y=" << y;
    }
  }
}

TEST(ProxNumeric, LargeDimension) {
  const SeparableConvexTerm term("abs", std::vector<ScalarConvex>(4096, scalar_abs(1.0)));
  const Vector y = Vector::LinSpaced(4096, -3.0, 3.0);
  EXPECT_LE((prox_numeric(term, y, 0.5) - prox_l1(y, 0.5, 1.0)).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(ProxNumeric, NonConvergenceCarriesResidual) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ScalarConvex broken{[](double) { return 0.0; }, [nan](double) { return nan; },
                      [nan](double) { return nan; }};
  const SeparableConvexTerm term("broken", {broken});
  try {
    prox_numeric(term, vec({1.0}), 1.0);
    FAIL() << "expected ConvergenceFailure";
  } catch (const ConvergenceFailure& e) {
    EXPECT_FALSE(e.last_residual() < 0.0);
  }
}

TEST(ProxNumeric, UnboundedDescentFailsToBracket) {
  const double inf = std::numeric_limits<double>::infinity();
  ScalarConvex broken{[](double) { return 0.0; }, [inf](double) { return -inf; },
                      [inf](double) { return -inf; }};
  EXPECT_THROW(prox_numeric(SeparableConvexTerm("broken", {broken}), vec({1.0}), 1.0), ConvergenceFailure);
}

TEST(ProxNumeric, CertificateRejectsInconsistentTerm) {
  // Derivatives claim f is flat while the value is |u|.
  ScalarConvex lying{[](double u) { return std::abs(u); }, [](double) { return 0.0; },
                     [](double) { return 0.0; }};
  const SeparableConvexTerm term("lying", {lying});
  EXPECT_THROW(prox_numeric(term, vec({2.0}), 1.0), ConvergenceFailure);
}

TEST(ProxNumeric, RejectsBadParameters) {
  const SeparableConvexTerm term("abs", {scalar_abs(1.0)});
  EXPECT_THROW(prox_numeric(term, vec({1.0}), 0.0), InvalidParameter);
  EXPECT_THROW(prox_numeric(term, vec({1.0}), 1.0, 0.0), InvalidParameter);
  EXPECT_THROW(prox_numeric(term, vec({1.0, 2.0}), 1.0), InvalidParameter);
  EXPECT_THROW(scalar_power(0.5, 1.0), InvalidParameter);
  EXPECT_THROW(scalar_interval(1.0, 0.0), InvalidParameter);
  EXPECT_THROW(SeparableConvexTerm("empty", {}), InvalidParameter);
}

TEST(SmoothQuadratic, IdentityGradientAndBeta) {
  const SmoothTerm g = smooth_quadratic(Matrix::Identity(3, 3), Vector::Zero(3));
  const Vector x = vec({1.0, -2.0, 0.5});
  EXPECT_EQ(g.gradient(x), x);
  EXPECT_NEAR(g.lipschitz_beta(), 1.0, 1e-10);
  EXPECT_DOUBLE_EQ(g.evaluate(x), 0.5 * x.squaredNorm());
}

TEST(SmoothQuadratic, AsymmetricThrows) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(smooth_quadratic(a, Vector::Zero(2)), InvalidParameter);
  EXPECT_THROW(smooth_quadratic(Matrix::Identity(2, 2), Vector::Zero(3)), InvalidParameter);
}

TEST(SmoothQuadratic, FiniteDifferenceGradient) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = oracle::random_symmetric(rng, 4);
    const Vector b = oracle::random_vec(rng, 4, -1, 1);
    const SmoothTerm g = smooth_quadratic(a, b);
    const Vector x = oracle::random_vec(rng, 4, -2, 2);
    const Vector fd = oracle::fd_gradient([&](const Vector& v) { return g.evaluate(v); }, x);
    EXPECT_LT((fd - g.gradient(x)).norm() / g.gradient(x).norm(), 1e-6);
  }
}

TEST(SmoothCosine, PureCosineGradient) {
  const SmoothTerm g = smooth_nonconvex_cosine(1.0, Matrix::Zero(2, 2));
  const Vector x = vec({0.3, -1.2});
  const Vector grad = g.gradient(x);
  EXPECT_DOUBLE_EQ(grad(0), -std::sin(0.3));
  EXPECT_DOUBLE_EQ(grad(1), -std::sin(-1.2));
  EXPECT_NEAR(g.lipschitz_beta(), 1.0, 1e-10);
}

TEST(SmoothCosine, BetaAndFiniteDifference) {
  Matrix q(2, 2);
  q << 2.0, 0.5, 0.5, 1.0;
  const SmoothTerm g = smooth_nonconvex_cosine(0.7, q);
  const double qnorm = Eigen::SelfAdjointEigenSolver<Matrix>(q).eigenvalues().maxCoeff();
  EXPECT_NEAR(g.lipschitz_beta(), qnorm + 0.7, 1e-9);
  const Vector x = vec({0.4, 2.1});
  const Vector fd = oracle::fd_gradient([&](const Vector& v) { return g.evaluate(v); }, x);
  EXPECT_LT((fd - g.gradient(x)).norm(), 1e-6 * g.gradient(x).norm());
}

TEST(SmoothCosine, RejectsBadParameters) {
  EXPECT_THROW(smooth_nonconvex_cosine(0.0, Matrix::Identity(2, 2)), InvalidParameter);
  EXPECT_THROW(smooth_nonconvex_cosine(1.0, -Matrix::Identity(2, 2)), InvalidParameter);
}

TEST(SmoothLeastSquares, GradientAndBeta) {
  std::mt19937_64 rng(8);
  Matrix m(5, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = oracle::random_vec(rng, 1, -1, 1)(0);
  const Vector c = oracle::random_vec(rng, 5, -1, 1);
  const SmoothTerm g = smooth_least_squares(m, c);
  const Vector x = oracle::random_vec(rng, 3, -1, 1);
  EXPECT_NEAR((g.gradient(x) - m.transpose() * (m * x - c)).norm(), 0.0, 1e-12);
  const double beta = Eigen::SelfAdjointEigenSolver<Matrix>(m.transpose() * m).eigenvalues().maxCoeff();
  EXPECT_NEAR(g.lipschitz_beta(), beta, 1e-9 * beta);
}

TEST(SmoothLinear, ZeroBeta) {
  const SmoothTerm g = smooth_linear(vec({1.0, -2.0}));
  EXPECT_EQ(g.lipschitz_beta(), 0.0);
  EXPECT_EQ(g.gradient(vec({5.0, 5.0})), vec({1.0, -2.0}));
  EXPECT_DOUBLE_EQ(g.evaluate(vec({1.0, 1.0})), -1.0);
}

TEST(SmoothQuartic, DomainAndBeta) {
  const SmoothTerm g = smooth_quartic(2, 2.0);
  EXPECT_DOUBLE_EQ(g.lipschitz_beta(), 12.0);
  ASSERT_TRUE(g.lipschitz_domain());
  EXPECT_EQ(g.lipschitz_domain()->hi, Vector::Constant(2, 2.0));
  EXPECT_DOUBLE_EQ(g.gradient(vec({2.0, -1.0}))(0), 8.0);
  EXPECT_THROW(smooth_quartic(2, 0.0), InvalidParameter);
}

// Property checks over every catalog prox term.
class CatalogProx : public ::testing::TestWithParam<int> {};

TEST_P(CatalogProx, FirmNonexpansive) {
  const Eigen::Index dim = GetParam();
  std::mt19937_64 rng(100 + dim);
  for (const CatalogEntry& e : catalog(dim)) {
    const auto* f = std::get_if<ProxTerm>(&e.term);
    if (!f) continue;
    for (int k = 0; k < 500; ++k) {
      const Vector y1 = oracle::random_vec(rng, dim, -5, 5), y2 = oracle::random_vec(rng, dim, -5, 5);
      const Vector d = f->prox(y1, 0.7) - f->prox(y2, 0.7);
      EXPECT_LE(d.squaredNorm(), d.dot(y1 - y2) + 1e-12 * (1.0 + (y1 - y2).squaredNorm())) << f->name();
    }
  }
}

TEST_P(CatalogProx, SubgradientCharacterization) {
  const Eigen::Index dim = GetParam();
  std::mt19937_64 rng(200 + dim);
  for (const CatalogEntry& e : catalog(dim)) {
    const auto* f = std::get_if<ProxTerm>(&e.term);
    if (!f) continue;
    const Vector y = oracle::random_vec(rng, dim, -3, 3);
    const double eta = 0.9;
    const Vector p = f->prox(y, eta);
    const Vector s = (y - p) / eta;
    const double fp = f->evaluate(p);
    ASSERT_TRUE(std::isfinite(fp));
    for (int k = 0; k < 1000; ++k) {
      const Vector u = oracle::random_vec(rng, dim, -5, 5);
      const double fu = f->evaluate(u);
      if (!std::isfinite(fu)) continue;
      EXPECT_GE(fu, fp + s.dot(u - p) - 1e-9) << f->name();
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Dims, CatalogProx, ::testing::Values(1, 2, 5));

TEST(Catalog, EveryEntryIsWellFormed) {
  const auto entries = catalog(2);
  int prox = 0, smooth = 0;
  for (const CatalogEntry& e : entries) {
    EXPECT_EQ(e.oracle_domain.dim(), 2);
    EXPECT_FALSE(e.description.empty());
    std::holds_alternative<ProxTerm>(e.term) ? ++prox : ++smooth;
  }
  EXPECT_GE(prox, 5);
  EXPECT_GE(smooth, 5);
}
