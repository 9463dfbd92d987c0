#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cosserat/optim.hpp"

using namespace cosserat;

namespace {

// Extended Rosenbrock function on consecutive pairs.
double rosenbrock(std::span<const double> x, std::span<double> g, SparseHessian* H = nullptr)
{
  double f = 0.0;
  std::fill(g.begin(), g.end(), 0.0);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
    const double a = 1.0 - x[i], b = x[i + 1] - x[i] * x[i];
    f += a * a + 100.0 * b * b;
    g[i] += -2.0 * a - 400.0 * x[i] * b;
    g[i + 1] += 200.0 * b;
    if (H) {
      const auto I = static_cast<int>(i);
      trip.emplace_back(I, I, 2.0 - 400.0 * b + 800.0 * x[i] * x[i]);
      trip.emplace_back(I, I + 1, -400.0 * x[i]);
      trip.emplace_back(I + 1, I, -400.0 * x[i]);
      trip.emplace_back(I + 1, I + 1, 200.0);
    }
  }
  if (H) {
    H->resize(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x.size()));
    H->setFromTriplets(trip.begin(), trip.end());
  }
  return f;
}

// f = 1/2 sum c_i (x_i - i)^2
struct Quadratic
{
  std::vector<double> c;
  double operator()(std::span<const double> x, std::span<double> g, SparseHessian* H = nullptr) const
  {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i] - static_cast<double>(i);
      f += 0.5 * c[i] * r * r;
      g[i] = c[i] * r;
    }
    if (H) {
      H->resize(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(x.size()));
      std::vector<Eigen::Triplet<double>> trip;
      for (std::size_t i = 0; i < x.size(); ++i)
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i), c[i]);
      H->setFromTriplets(trip.begin(), trip.end());
    }
    return f;
  }
};

} // namespace

TEST(Adam, FirstStepHasLearningRateMagnitude)
{
  Adam adam(3, {});
  std::vector<double> x{0.0, 0.0, 0.0};
  const std::vector<double> g{5.0, -0.01, 1e3};
  adam.step(x, g, 0.01);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(std::abs(x[i]), 0.01, 1e-8);
  EXPECT_LT(x[0], 0.0);
  EXPECT_GT(x[1], 0.0);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, ConvergesOnQuadratic)
{
  const Quadratic q{{1.0, 10.0, 0.1, 3.0}};
  std::vector<double> x(4, 5.0), g(4);
  Adam adam(4, {.learning_rate = 0.05});
  for (int k = 0; k < 5000; ++k) {
    q(x, g);
    adam.step(x, g);
  }
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_NEAR(x[i], static_cast<double>(i), 1e-3);
}

TEST(Lbfgs, SolvesQuadraticExactly)
{
  const Quadratic q{{1.0, 4.0, 9.0, 0.5, 2.0}};
  std::vector<double> x(5, 0.0);
  const MinimizerResult r = lbfgs_minimize(q, std::span<double>(x), {.gradient_tolerance = 1e-12});
  EXPECT_EQ(r.status, MinimizerStatus::converged);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(x[i], static_cast<double>(i), 1e-11);
}

TEST(Lbfgs, SolvesRosenbrock)
{
  std::vector<double> x;
  for (int i = 0; i < 10; ++i)
    x.push_back(i % 2 ? 1.0 : -1.2);
  std::vector<double> seen;
  const MinimizerResult r = lbfgs_minimize([](std::span<const double> z, std::span<double> g) { return rosenbrock(z, g); },
                                           std::span<double>(x), {.max_iterations = 5000, .gradient_tolerance = 1e-10},
                                           [&](std::size_t, double f) { seen.push_back(f); });
  EXPECT_EQ(r.status, MinimizerStatus::converged);
  for (double v : x)
    EXPECT_NEAR(v, 1.0, 1e-8);
  ASSERT_FALSE(seen.empty());
  for (std::size_t k = 1; k < seen.size(); ++k)
    EXPECT_LE(seen[k], seen[k - 1] * (1.0 + 1e-10) + 1e-300);
}

TEST(Lbfgs, IterationLimit)
{
  std::vector<double> x{-1.2, 1.0};
  const MinimizerResult r = lbfgs_minimize([](std::span<const double> z, std::span<double> g) { return rosenbrock(z, g); },
                                           std::span<double>(x), {.max_iterations = 3});
  EXPECT_EQ(r.status, MinimizerStatus::max_iterations);
  EXPECT_EQ(r.iterations, 3u);
  EXPECT_STREQ(to_string(r.status), "max_iterations");
}

TEST(Lbfgs, NonFiniteStartIsReported)
{
  std::vector<double> x{1.0};
  EXPECT_THROW(lbfgs_minimize([](std::span<const double>, std::span<double>) { return std::nan(""); },
                              std::span<double>(x), {}),
               NonFiniteLoss);
}

TEST(Lbfgs, EmptyProblem)
{
  std::vector<double> x;
  const MinimizerResult r =
    lbfgs_minimize([](std::span<const double>, std::span<double>) { return 2.5; }, std::span<double>(x), {});
  EXPECT_EQ(r.status, MinimizerStatus::converged);
  EXPECT_EQ(r.f, 2.5);
}

TEST(Lbfgs, ProgressesBelowRoundoffOfObjective)
{
  // a large constant offset hides the decrease from a plain Armijo test
  const Quadratic q{{1.0, 2.0, 3.0}};
  auto shifted = [&](std::span<const double> z, std::span<double> g) { return 1e8 + q(z, g); };
  std::vector<double> x{3.0, 4.0, 5.0};
  const MinimizerResult r = lbfgs_minimize(shifted, std::span<double>(x), {.gradient_tolerance = 1e-7});
  EXPECT_EQ(r.status, MinimizerStatus::converged);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(x[i], static_cast<double>(i), 1e-6);
}

TEST(Newton, QuadraticInOneStep)
{
  const Quadratic q{{1.0, 4.0, 9.0, 0.5}};
  std::vector<double> x(4, 7.0);
  const MinimizerResult r = newton_minimize(q, std::span<double>(x), {.gradient_tolerance = 1e-12});
  EXPECT_EQ(r.status, MinimizerStatus::converged);
  EXPECT_EQ(r.iterations, 1u);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(x[i], static_cast<double>(i), 1e-13);
}

TEST(Newton, RosenbrockWithIndefiniteStart)
{
  // the Hessian at (0, 1) is indefinite
  std::vector<double> x{0.0, 1.0, -1.2, 1.0};
  SparseHessian H;
  std::vector<double> g(4);
  rosenbrock(x, g, &H);
  EXPECT_LT(H.coeff(0, 0) * H.coeff(1, 1) - H.coeff(0, 1) * H.coeff(1, 0), 0.0);
  const MinimizerResult r = newton_minimize(
    [](std::span<const double> z, std::span<double> gz, SparseHessian* Hz) { return rosenbrock(z, gz, Hz); },
    std::span<double>(x), {.gradient_tolerance = 1e-12});
  EXPECT_EQ(r.status, MinimizerStatus::converged);
  for (double v : x)
    EXPECT_NEAR(v, 1.0, 1e-10);
  EXPECT_LT(r.iterations, 100u);
}

TEST(Newton, AgreesWithLbfgs)
{
  std::vector<double> a{-1.2, 1.0, 0.5, -0.5}, b = a;
  const auto r1 = newton_minimize(
    [](std::span<const double> z, std::span<double> gz, SparseHessian* Hz) { return rosenbrock(z, gz, Hz); },
    std::span<double>(a), {.gradient_tolerance = 1e-10});
  const auto r2 = lbfgs_minimize([](std::span<const double> z, std::span<double> g) { return rosenbrock(z, g); },
                                 std::span<double>(b), {.max_iterations = 5000, .gradient_tolerance = 1e-10});
  EXPECT_NEAR(r1.f, r2.f, 1e-15);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_NEAR(a[i], b[i], 1e-8);
}
