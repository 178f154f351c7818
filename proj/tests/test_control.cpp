#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aoisched/control.hpp"
#include "aoisched/penalty.hpp"

using namespace aoisched;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST(Riccati, DeadbeatScalar) {
  for (double a : {1.0, 1.25, 1.5}) {
    const auto m = PlantModel::scalar(a, 1, 1, 1, 0);
    EXPECT_NEAR(m.riccati()(0, 0), 1.0, 1e-9);
    EXPECT_NEAR(m.gain()(0, 0), a, 1e-9);
  }
}

TEST(Riccati, ScalarWithInputWeight) {
  // Positive root of P^2 - 0.25 P - 1 = 0.
  const double P = (0.25 + std::sqrt(4.0625)) / 2.0;
  const auto m = PlantModel::scalar(0.5, 1, 1, 1, 1);
  EXPECT_NEAR(m.riccati()(0, 0), P, 1e-9);
  EXPECT_NEAR(m.riccati()(0, 0), 1.132782, 1e-6);
  EXPECT_NEAR(m.gain()(0, 0), 0.5 * P / (1.0 + P), 1e-9);
  EXPECT_NEAR(m.gain()(0, 0), 0.265564, 1e-6);
}

TEST(Riccati, ZeroDynamics) {
  Matrix A = Matrix::Zero(2, 2), B(2, 1), Q(2, 2), R(1, 1);
  B << 1, 0.5;
  Q << 2, 0.5, 0.5, 1;
  R << 0.3;
  PlantModel m(A, B, Matrix::Identity(2, 2), Q, R);
  EXPECT_LT((m.riccati() - Q).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(m.gain().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Riccati, ResidualAndGainReproduction) {
  Matrix A(2, 2), B(2, 1), Q = Matrix::Identity(2, 2), R = Matrix::Constant(1, 1, 0.1);
  A << 1.1, 0.2, 0.0, 0.9;
  B << 0.0, 1.0;
  const auto sol = solve_riccati(A, B, Q, R);
  const Matrix& P = sol.P;
  const Matrix rhs = Q + A.transpose() * P * A -
                     A.transpose() * P * B * (R + B.transpose() * P * B).inverse() * B.transpose() * P * A;
  EXPECT_LT((P - rhs).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(detail::feedback_gain(A, B, R, P), sol.gain);
}

TEST(Riccati, SingularInputWeightFails) {
  // Q = 0 and R = 0 make R + B'PB singular from the first iterate.
  EXPECT_THROW(PlantModel::scalar(1.0, 1.0, 1.0, 0.0, 0.0), SynthesisError);
}

TEST(PlantModelTest, ValidatesInputs) {
  EXPECT_THROW(PlantModel(Matrix::Identity(2, 2), Matrix::Identity(3, 1), Matrix::Identity(2, 2),
                          Matrix::Identity(2, 2), Matrix::Zero(1, 1)),
               std::invalid_argument);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(PlantModel(Matrix::Identity(2, 2), Matrix::Identity(2, 1), asym, Matrix::Identity(2, 2),
                          Matrix::Zero(1, 1)),
               std::invalid_argument);
  EXPECT_THROW(PlantModel::scalar(1, 1, -1, 1, 0), std::invalid_argument);
}

TEST(Plant, StepExamples) {
  const auto m1 = PlantModel::scalar(1, 1, 1, 1, 0);
  PlantState s{v1(2), {}, 0};
  s = plant_step(m1, s, v1(-2), v1(0));
  EXPECT_DOUBLE_EQ(s.x[0], 0.0);
  EXPECT_EQ(s.inputs.size(), 1u);

  const auto m2 = PlantModel::scalar(1.5, 1, 1, 1, 0);
  PlantState s2{v1(1), {}, 0};
  EXPECT_DOUBLE_EQ(plant_step(m2, s2, v1(0), v1(0.5)).x[0], 2.0);

  PlantState s3{v1(3.7), {}, 0};
  EXPECT_DOUBLE_EQ(plant_step(m1, s3, v1(0), v1(0)).x[0], 3.7);
  EXPECT_THROW(plant_step(m1, s3, Vector::Zero(2), v1(0)), std::invalid_argument);
}

TEST(Estimator, Examples) {
  const auto m = PlantModel::scalar(1.5, 1, 1, 1, 0);
  // One period: A x + B u.
  std::vector<Vector> u1{v1(0.7)};
  EXPECT_DOUBLE_EQ(estimate(m, v1(2), 1, u1)[0], 1.5 * 2 + 0.7);
  // Zero inputs: A^age x.
  std::vector<Vector> zeros(4, v1(0));
  EXPECT_DOUBLE_EQ(estimate(m, v1(1), 4, zeros)[0], std::pow(1.5, 4));
  // Two periods with u[k-2] = -1, u[k-1] = 0.5.
  std::vector<Vector> u2{v1(-1), v1(0.5)};
  EXPECT_DOUBLE_EQ(estimate(m, v1(1), 2, u2)[0], 1.25);
  EXPECT_THROW(estimate(m, v1(1), 0, u2), std::invalid_argument);
  EXPECT_THROW(estimate(m, v1(1), 3, u2), std::out_of_range);
}

TEST(ControlLaw, Examples) {
  const auto m = PlantModel::scalar(1.25, 1, 1, 1, 0);
  EXPECT_DOUBLE_EQ(control_input(m, v1(0))[0], 0.0);
  EXPECT_NEAR(control_input(m, v1(2))[0], -2.5, 1e-9);
  // Deadbeat with a perfect estimate: the next state is the noise alone.
  PlantState s{v1(3), {}, 0};
  s = plant_step(m, s, control_input(m, s.x), v1(0.4));
  EXPECT_NEAR(s.x[0], 0.4, 1e-9);
}

TEST(ErrorAndCost, Examples) {
  EXPECT_DOUBLE_EQ(estimation_error(v1(1.5), v1(1.5)), 0.0);
  EXPECT_DOUBLE_EQ(estimation_error(v1(2), v1(0.5)), 2.25);

  LqgCost c;
  c.add(v1(3), v1(17), Matrix::Ones(1, 1), Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(c.sum, 9.0);
  LqgCost z;
  z.add(v1(3), v1(1), Matrix::Zero(1, 1), Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(z.value(), 0.0);
  LqgCost k;
  for (int i = 0; i < 5; ++i) k.add(v1(1), v1(0), Matrix::Ones(1, 1), Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(k.value(), 1.0);
}

namespace {

// Monte-Carlo estimation error at fixed age. The plant runs `age` periods from
// the delivered state with fresh noise and random inputs.
struct ErrorStats {
  double mean_e = 0.0;
  double se_e = 0.0;
  double mean_sq = 0.0;
};

ErrorStats monte_carlo_error(const PlantModel& m, long age, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  double se = 0.0, see = 0.0, sq = 0.0;
  for (int r = 0; r < samples; ++r) {
    PlantState s{v1(g(rng)), {}, 0};
    const Vector payload = s.x;
    for (long q = 0; q < age; ++q) s = plant_step(m, s, v1(g(rng)), m.noise_factor() * v1(g(rng)));
    const double e = s.x[0] - estimate(m, payload, age, s.inputs)[0];
    se += e;
    see += e * e;
    sq += estimation_error(s.x, estimate(m, payload, age, s.inputs));
  }
  const double n = samples;
  const double mean = se / n;
  return {mean, std::sqrt((see / n - mean * mean) / n), sq / n};
}

}  // namespace

TEST(Estimator, Unbiased) {
  for (double a : {1.0, 1.5}) {
    const auto m = PlantModel::scalar(a, 1, 1, 1, 0);
    const auto st = monte_carlo_error(m, 3, 100000, 17);
    EXPECT_LT(std::abs(st.mean_e), 4.0 * st.se_e) << "A=" << a;
  }
}

// The error after `age` periods collects `age` noise terms, so its mean square
// is tr(Sigma) + g(age) with g summing the powers r = 1 .. age-1.
TEST(Estimator, MeanSquareErrorMatchesNoiseOffsetPlusPenalty) {
  for (double a : {1.0, 1.25, 1.5}) {
    const auto m = PlantModel::scalar(a, 1, 1, 1, 0);
    const AgePenalty g(m);
    for (long age : {1L, 2L, 3L, 5L}) {
      const auto st = monte_carlo_error(m, age, 100000, 100 + static_cast<std::uint64_t>(age));
      const double expected = m.sigma().trace() + g(age);
      EXPECT_NEAR(st.mean_sq / expected, 1.0, 0.02) << "A=" << a << " age=" << age;
    }
  }
}

TEST(Plant, DeadbeatStationaryVarianceEqualsSigma) {
  for (double a : {0.5, 1.0, 1.5, 3.0}) {
    const auto m = PlantModel::scalar(a, 1, 1, 1, 0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    PlantState s{v1(g(rng)), {}, 0};
    double sq = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
      s = plant_step(m, s, control_input(m, s.x), v1(g(rng)));
      sq += s.x[0] * s.x[0];
      s.inputs.clear();
    }
    EXPECT_NEAR(sq / n, 1.0, 0.02) << "A=" << a;
  }
}
