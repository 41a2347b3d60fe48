#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ktube/kernels.hpp"
#include "ktube/parallel.hpp"

using namespace ktube;

namespace {

PointSet random_points(Index n, Index d, unsigned seed, double lo = -5.0, double hi = 5.0) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = u(g);
  return PointSet(std::move(m));
}

// Closed forms written out independently of the library.
double reference_profile(KernelFamily f, double r) {
  switch (f) {
    case KernelFamily::Matern12: return std::exp(-r);
    case KernelFamily::Matern32: return (1 + std::sqrt(3.0) * r) * std::exp(-std::sqrt(3.0) * r);
    case KernelFamily::Matern52: return (1 + std::sqrt(5.0) * r + 5.0 * r * r / 3.0) * std::exp(-std::sqrt(5.0) * r);
    case KernelFamily::Gaussian: return std::exp(-0.5 * r * r);
    case KernelFamily::Wendland31: return r >= 1 ? 0.0 : std::pow(1 - r, 4) * (4 * r + 1);
  }
  return NAN;
}

const KernelFamily kAll[] = {KernelFamily::Matern12, KernelFamily::Matern32, KernelFamily::Matern52,
                             KernelFamily::Gaussian, KernelFamily::Wendland31};

}  // namespace

TEST_CASE("matern52 closed form at r = 1") {
  KernelSpec k;
  Eigen::RowVector3d x(0, 0, 0), y(1, 0, 0);
  CHECK(eval(k, x, x) == 1.0);
  CHECK(eval(k, x, y) == doctest::Approx((1 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0))).epsilon(1e-14));
  CHECK(eval(k, x, y) == doctest::Approx(0.52399).epsilon(1e-5));
}

TEST_CASE("wendland has compact support") {
  KernelSpec k{KernelFamily::Wendland31, 1.0, 1.0};
  Eigen::RowVector2d x(0, 0), y(2, 0), z(0.999, 0);
  CHECK(eval(k, x, y) == 0.0);
  CHECK(eval(k, x, z) > 0.0);
}

TEST_CASE("every family matches its closed form, scaled by variance and lengthscale") {
  for (auto f : kAll) {
    KernelSpec k{f, 1.7, 2.5};
    for (double r : {0.0, 0.1, 0.5, 0.99, 1.0, 2.3, 7.0}) {
      Eigen::RowVector3d x(0.3, -0.2, 0.1);
      Eigen::RowVector3d y = x + Eigen::RowVector3d(r * 1.7, 0, 0);
      CHECK(eval(k, x, y) == doctest::Approx(2.5 * reference_profile(f, r)).epsilon(1e-12));
    }
  }
}

TEST_CASE("vectorized radial profile agrees with the scalar one") {
  for (auto f : kAll) {
    KernelSpec k{f, 1.0, 1.3};
    Eigen::ArrayXd r = Eigen::ArrayXd::LinSpaced(101, 0.0, 3.0);
    const Eigen::ArrayXd v = eval_radial(k, r);
    for (Index i = 0; i < r.size(); ++i) CHECK(v[i] == doctest::Approx(eval_radial(k, r[i])).epsilon(1e-15));
  }
}

TEST_CASE("kernel spec validation and json") {
  CHECK_THROWS_AS((KernelSpec{KernelFamily::Matern52, 0.0, 1.0}.validate()), ValidationError);
  CHECK_THROWS_AS((KernelSpec{KernelFamily::Matern52, 1.0, -1.0}.validate()), ValidationError);
  KernelSpec k{KernelFamily::Gaussian, 2.0, 3.0};
  const nlohmann::json j = k;
  CHECK(j.at("family") == "gaussian");
  CHECK(j.get<KernelSpec>() == k);
  const auto parsed = nlohmann::json::parse(R"({"family":"matern32","lengthscale":0.5})").get<KernelSpec>();
  CHECK(parsed.family == KernelFamily::Matern32);
  CHECK(parsed.variance == 1.0);
  try {
    (void)nlohmann::json::parse(R"({"family":"bessel","lengthscale":1})").get<KernelSpec>();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("family") != std::string::npos);
  }
  CHECK_THROWS_AS((void)nlohmann::json::parse(R"({"family":"matern52","lengthscale":-2})").get<KernelSpec>(),
                  ValidationError);
}

TEST_CASE("eval rejects dimension mismatch") {
  KernelSpec k;
  Eigen::RowVector2d x(0, 0);
  Eigen::RowVector3d y(0, 0, 0);
  CHECK_THROWS_AS(eval(k, x, y), ValidationError);
}

TEST_CASE("gram: small cases") {
  KernelSpec k;
  PointSet one(1);
  one.push_back(Eigen::RowVectorXd::Constant(1, 0.3));
  CHECK(gram(k, one, 0.0)(0, 0) == 1.0);

  PointSet dup(3);
  dup.push_back(Eigen::RowVector3d(1, 2, 3));
  dup.push_back(Eigen::RowVector3d(1, 2, 3));
  const Matrix K = gram(k, dup, 1e-10);
  CHECK(K(0, 0) == 1.0 + 1e-10);
  CHECK(K(1, 1) == 1.0 + 1e-10);
  CHECK(K(0, 1) == 1.0);
  CHECK(K(1, 0) == 1.0);
}

TEST_CASE("gram is positive semidefinite (eigensolve oracle)") {
  for (auto f : kAll) {
    for (unsigned seed = 1; seed <= 5; ++seed) {
      KernelSpec k{f, 2.0, 1.0};
      const Index n = seed == 1 ? 5 : 60;
      const Matrix K = gram(k, random_points(n, 3, seed), 0.0);
      CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }
}

TEST_CASE("kernel invariants on random pairs: symmetry and Cauchy-Schwarz") {
  std::mt19937_64 g(42);
  std::uniform_real_distribution<double> u(-5, 5);
  for (auto f : kAll) {
    KernelSpec k{f, 1.3, 0.7};
    for (int t = 0; t < 500; ++t) {
      Eigen::RowVector3d x(u(g), u(g), u(g)), y(u(g), u(g), u(g));
      const double kxy = eval(k, x, y);
      CHECK(kxy == eval(k, y, x));
      CHECK(eval(k, x, x) == 0.7);
      CHECK(kxy * kxy <= eval(k, x, x) * eval(k, y, y) + 1e-12);
    }
  }
}

TEST_CASE("cross vector: scalar eval oracle and edge cases") {
  KernelSpec k{KernelFamily::Gaussian, 1.0, 1.0};
  PointSet Z(2);
  for (double t : {0.0, 1.0, 2.0}) Z.push_back(Eigen::RowVector2d(t, 0.0));
  Eigen::RowVector2d x(0.5, 0.5);
  const Vector c = cross(k, Z, x);
  REQUIRE(c.size() == 3);
  for (Index i = 0; i < 3; ++i) {
    const double r2 = (Z.point(i) - x).squaredNorm();
    CHECK(c[i] == doctest::Approx(std::exp(-r2 / 2)).epsilon(1e-14));
  }
  PointSet single(2);
  single.push_back(x);
  CHECK(cross(KernelSpec{KernelFamily::Matern32, 1.0, 4.0}, single, x)[0] == 4.0);
  CHECK(cross(k, PointSet(2), x).size() == 0);
}

TEST_CASE("gram assembly is bit-identical across thread counts") {
  const PointSet X = random_points(300, 3, 9);
  KernelSpec k;
  parallel::set_threads(1);
  const Matrix a = gram(k, X, 1e-10);
  const Matrix ca = cross_matrix(k, X, random_points(40, 3, 10));
  parallel::set_threads(4);
  const Matrix b = gram(k, X, 1e-10);
  const Matrix cb = cross_matrix(k, X, random_points(40, 3, 10));
  parallel::set_threads(1);
  CHECK((a.array() == b.array()).all());
  CHECK((ca.array() == cb.array()).all());
}

TEST_CASE("distance clamps tiny separations to zero") {
  Eigen::RowVector3d x(1, 1, 1);
  Eigen::RowVector3d y = x;
  y[0] += 1e-14;
  CHECK(distance(x, y) == 0.0);
  CHECK(distance(Eigen::RowVector2d(0, 0), Eigen::RowVector2d(3, 4)) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(distance(Eigen::RowVector2d(0, 0), Eigen::RowVector2d(3e200, 4e200)) == doctest::Approx(5e200));
}

TEST_CASE("cholesky with jitter escalation") {
  PointSet dup(1);
  for (int i = 0; i < 3; ++i) dup.push_back(Eigen::RowVectorXd::Constant(1, 0.0));
  const Matrix K = gram(KernelSpec{}, dup, 0.0);
  const CholeskyResult c = cholesky_with_jitter(K, 1e-10, 1e-2);
  CHECK(c.jitter_used >= 1e-10);
  const Matrix rebuilt = c.lower * c.lower.transpose();
  CHECK((rebuilt - K - c.jitter_used * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  Matrix bad = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS(cholesky_with_jitter(bad, 1e-10, 1e-6), NumericalError);
}

TEST_CASE("interpolation weights reproduce data at the centers") {
  const PointSet Z = random_points(25, 3, 3);
  KernelSpec k{KernelFamily::Matern52, 2.0, 1.0};
  Vector y(25);
  for (Index i = 0; i < 25; ++i) y[i] = std::sin(Z.point(i).sum());
  const Vector c = interpolation_weights(k, Z, y, 1e-12);
  const Vector fit = gram(k, Z, 0.0) * c;
  CHECK((fit - y).cwiseAbs().maxCoeff() < 1e-6);
}
