#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "helpers.hpp"
#include "zoconex/smoothing.hpp"

using namespace zoconex;
using namespace testing_helpers;

TEST_CASE("direction draws replay") {
  RngStream a(77);
  RngStream b(77);
  const Vector u = sample_direction(3, a);
  CHECK(u.size() == 3);
  CHECK(u == sample_direction(3, b));
}

TEST_CASE("direction moments") {
  RngStream rng(5);
  const int N = 100000;
  Vector mean = Vector::Zero(2);
  Matrix second = Matrix::Zero(2, 2);
  for (int k = 0; k < N; ++k) {
    const Vector u = sample_direction(2, rng);
    mean += u;
    second += u * u.transpose();
  }
  mean /= N;
  second /= N;
  CHECK(mean.cwiseAbs().maxCoeff() <= 0.02);
  CHECK((second - mean * mean.transpose() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 0.05);

  double sq = 0.0;
  for (int k = 0; k < N; ++k) sq += sample_direction(10, rng).squaredNorm();
  CHECK(std::abs(sq / N - 10.0) <= 0.02 * 10.0);
}

TEST_CASE("linear functions are estimated exactly") {
  const Vector a = (Vector(2) << 1.0, 0.0).finished();
  ProblemSpec p = affine_instance(a).to_problem(NoiseModel::none());
  RngStream xi(1);
  RngStream dir(2);
  for (int k = 0; k < 50; ++k) {
    const GradientEstimate e = two_point_gradient(p, 0, Vector::Zero(2), 0.1, xi, dir);
    // Stored ingredients reproduce g bit for bit.
    CHECK(e.g == ((e.value_at_shift - e.value_at_base) / 0.1) * e.direction);
    const Vector expect = a.dot(e.direction) * e.direction;
    CHECK((e.g - expect).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + expect.norm()));
  }
  CHECK(p.ledger().total() == 100);
}

TEST_CASE("common-coupled noise on a constant gives zero") {
  ProblemSpec p = affine_instance(Vector::Zero(3), 2.0)
                      .to_problem(NoiseModel::gaussian(0.5, NoiseCoupling::kCommon));
  RngStream xi(1);
  RngStream dir(2);
  const GradientEstimate e = two_point_gradient(p, 0, Vector::Zero(3), 0.3, xi, dir);
  CHECK(e.g.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("estimator reports non-finite values") {
  QcqpInstance q = affine_instance(Vector::Ones(2));
  ProblemSpec base = q.to_problem(NoiseModel::none());
  std::vector<StochasticOracle> oracles = base.oracles();
  const Vector x = (Vector(2) << 0.25, -0.5).finished();
  // Finite everywhere except at x itself.
  oracles[0].value = [x](const Vector& z) { return z == x ? std::nan("") : z.sum(); };
  ProblemSpec p(2, oracles, base.domain(), base.constants());
  RngStream xi(1);
  RngStream dir(2);
  try {
    two_point_gradient(p, 0, x, 0.1, xi, dir);
    FAIL("expected EstimatorError");
  } catch (const EstimatorError& e) {
    CHECK(e.point() == x);
  }
}

TEST_CASE("quadratic estimator mean matches the gradient") {
  ProblemSpec p = norm_instance(5).to_problem(NoiseModel::none());
  RngStream xi(3);
  RngStream dir(4);
  Vector x = Vector::Zero(5);
  x[0] = 1.0;
  Vector mean = Vector::Zero(5);
  const int N = 100000;
  for (int k = 0; k < N; ++k) mean += two_point_gradient(p, 0, x, 1e-3, xi, dir).g;
  mean /= N;
  Vector grad = Vector::Zero(5);
  grad[0] = 2.0;
  CHECK((mean - grad).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("theorem-one radii") {
  SmoothnessConstants k{{1.0, 1.0}, {1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}};
  const SmoothingConfig c = select_smoothing_parameters(k, 10, 1, 100, 1.0);
  CHECK(c.nu0 == doctest::Approx(0.015625));
  REQUIRE(c.nu.size() == 1);
  CHECK(c.nu[0] == doctest::Approx(0.015625));

  SmoothnessConstants k0{{1.0}, {1.0}, {0.0}, {0.0}};
  CHECK(select_smoothing_parameters(k0, 10, 0, 100, 1.0).nu.empty());

  // Small L_0 makes the T-dependent term bind; radii then shrink with T.
  SmoothnessConstants ks{{1e-3, 1e-3}, {1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}};
  double prev0 = 1e300;
  double prev1 = 1e300;
  for (int T : {1, 10, 100, 1000, 100000, 10000000}) {
    const SmoothingConfig s = select_smoothing_parameters(ks, 10, 1, T, 1.0);
    CHECK(s.nu0 <= prev0);
    CHECK(s.nu[0] <= prev1);
    prev0 = s.nu0;
    prev1 = s.nu[0];
  }
  const double t_free = std::min(2.0 / std::pow(13.0, 1.5), 1.0 / (1e-3 * std::pow(16.0, 1.5)));
  CHECK(select_smoothing_parameters(ks, 10, 1, 1, 1.0).nu0 == doctest::Approx(t_free));
}

TEST_CASE("variance bound formulas") {
  CHECK(gradient_variance_bound(0.0, 0.0, 1.0, 0.0, 1, 1.0) == doctest::Approx(50.0));
  double prev = gradient_variance_bound(0.0, 2.0, 1.0, 0.1, 4, 1.0);
  for (double nu : {0.01, 0.1, 1.0}) {
    const double next = gradient_variance_bound(nu, 2.0, 1.0, 0.1, 4, 1.0);
    CHECK(next > prev);
    prev = next;
  }
  SmoothnessConstants k{{0.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}};
  CHECK(value_variance_bound(k, {0.0, {1.0}}, 1) == doctest::Approx(12.0));
  CHECK(value_variance_bound(k, {0.0, {0.0}}, 1) == 0.0);
  CHECK(value_variance_bound(SmoothnessConstants{{1.0}, {1.0}, {0.0}, {0.0}}, {0.1, {}}, 3) == 0.0);
}

TEST_CASE("gradient variance of the squared norm on the unit ball") {
  const int n = 4;
  QcqpInstance q = norm_instance(n);
  q.domain = Domain::ball(Vector::Zero(n), 1.0);
  ProblemSpec p = q.to_problem(NoiseModel::none());
  const SmoothnessConstants k = p.constants();
  const double nu = 0.05;
  const double diam = domain_diameter(EuclideanGeometry{}, q.domain).diameter;
  const double bound = gradient_variance_bound(nu, k.grad_lipschitz[0], k.value_lipschitz[0],
                                               k.grad_noise[0], n, diam);
  RngStream xi(9);
  RngStream dir(10);
  const Vector x = (Vector(n) << 0.5, -0.3, 0.2, 0.1).finished();
  const int N = 100000;
  Vector mean = Vector::Zero(n);
  double sq = 0.0;
  for (int s = 0; s < N; ++s) {
    const Vector g = two_point_gradient(p, 0, x, nu, xi, dir).g;
    mean += g;
    sq += g.squaredNorm();
  }
  mean /= N;
  const double variance = sq / N - mean.squaredNorm();
  CHECK(variance <= bound);
}

TEST_CASE("value variance of a linear constraint") {
  const int n = 3;
  const Vector a = (Vector(n) << 1.0, -2.0, 0.5).finished();
  const double nu = 0.2;
  const double sigma = 0.1;
  // F_nu(x, xi, u) = a^T (x + nu u) + xi.
  RngStream rng(4);
  const int N = 100000;
  double sum = 0.0;
  double sq = 0.0;
  for (int s = 0; s < N; ++s) {
    const double v = nu * a.dot(sample_direction(n, rng)) + sigma * rng.gaussian();
    sum += v;
    sq += v * v;
  }
  const double variance = sq / N - (sum / N) * (sum / N);
  SmoothnessConstants k{{0.0, 0.0}, {0.0, a.norm()}, {0.0, 0.0}, {0.0, sigma}};
  CHECK(variance <= value_variance_bound(k, {nu, {nu}}, n));
}

TEST_CASE("smoothing bias") {
  CHECK(smoothing_bias_bound(3.0, 0.0, 5) == 0.0);
  CHECK(smoothing_bias_bound(2.0, 0.5, 4) == doctest::Approx(1.0));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const QcqpInstance q = generate_qcqp(6, 1, seed % 2 == 0, seed);
    const SmoothnessConstants k = q.constants(NoiseModel::none());
    const Vector x = Vector::Constant(6, 0.3);
    for (int i = 0; i <= 1; ++i) {
      for (double nu : {0.01, 0.1, 1.0}) {
        const double gap = std::abs(q.smoothed_value(i, x, nu) - q.value(i, x));
        CHECK(gap == doctest::Approx(nu * nu * std::abs(q.A[static_cast<std::size_t>(i)].trace())));
        CHECK(gap <= smoothing_bias_bound(k.grad_lipschitz[static_cast<std::size_t>(i)], nu, 6) + 1e-12);
      }
    }
  }
  const QcqpInstance lin = affine_instance(Vector::Ones(3));
  CHECK(lin.smoothed_value(0, Vector::Zero(3), 0.7) == lin.value(0, Vector::Zero(3)));
}

TEST_CASE("smoothing radius floor") {
  const SmoothingConfig c{0.0, {1e-12, 0.3}};
  CHECK(c.radius(0) == kMinSmoothingRadius);
  CHECK(c.radius(1) == kMinSmoothingRadius);
  CHECK(c.radius(2) == 0.3);
  CHECK_THROWS_AS(SmoothingConfig::uniform(0.1, 2).validate(3), Error);
}
