#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "cosserat/tensor2.hpp"

using namespace cosserat;

TEST(Tensor2, Determinant)
{
  EXPECT_EQ(det(Mat2::identity()), 1.0);
  EXPECT_EQ(det(Mat2{2, 0, 0, 1}), 2.0);
  EXPECT_EQ(det(Mat2{1, 2, 3, 4}), -2.0);
}

TEST(Tensor2, Inverse)
{
  EXPECT_EQ(inverse(Mat2::identity()), Mat2::identity());
  EXPECT_EQ(inverse(Mat2{2, 0, 0, 1}), (Mat2{0.5, 0, 0, 1}));
  EXPECT_THROW(inverse(Mat2{}), SingularMatrix);
  EXPECT_THROW(inverse(Mat2{1, 2, 2, 4}), SingularMatrix);
}

TEST(Tensor2, InverseThresholdIsAbsolute)
{
  EXPECT_THROW(inverse(Mat2::diag(1e-13, 1.0)), SingularMatrix);
  EXPECT_NO_THROW(inverse(Mat2::diag(1e-11, 1.0)));
  try {
    inverse(Mat2{});
  } catch (const SingularMatrix& e) {
    EXPECT_EQ(e.det(), 0.0);
  }
}

TEST(Tensor2, Products)
{
  EXPECT_EQ(perp(Vec2{1, 0}), (Vec2{0, 1}));
  EXPECT_EQ(outer(Vec2{1, 0}, Vec2{0, 1}), (Mat2{0, 1, 0, 0}));
  EXPECT_EQ(frobenius_inner(Mat2::identity(), Mat2::identity()), 2.0);
  EXPECT_EQ(trace(Mat2{1, 2, 3, 4}), 5.0);
  EXPECT_EQ(transpose(Mat2{1, 2, 3, 4}), (Mat2{1, 3, 2, 4}));
  EXPECT_EQ((Mat2{1, 2, 3, 4} * Vec2{1, 1}), (Vec2{3, 7}));
  EXPECT_EQ((Mat2{1, 2, 3, 4} * Mat2{0, 1, 1, 0}), (Mat2{2, 1, 4, 3}));
}

TEST(Tensor2, SymSkewSplit)
{
  const Mat2 A{1, 2, 3, 4};
  EXPECT_EQ(sym(A) + skew(A), A);
  EXPECT_EQ(sym(A), transpose(sym(A)));
  EXPECT_EQ(skew(A), -transpose(skew(A)));
}

TEST(Tensor2, RandomProperties)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const Mat2 A{u(rng), u(rng), u(rng), u(rng)};
    const Mat2 B{u(rng), u(rng), u(rng), u(rng)};
    const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    EXPECT_NEAR(det(A * B), det(A) * det(B), 1e-12 * (1 + std::abs(det(A) * det(B))));
    EXPECT_NEAR(frobenius_inner(A, outer(a, b)), dot(a, A * b), 1e-12 * (1 + frobenius_norm(A) * norm(a) * norm(b)));
    EXPECT_EQ(dot(a, perp(a)), 0.0 * a.x);
    EXPECT_NEAR(norm(perp(a)), norm(a), 1e-15 * norm(a));
    if (std::abs(det(A)) > 1e-3) {
      const Mat2 I = A * inverse(A);
      EXPECT_NEAR(frobenius_norm(I - Mat2::identity()), 0.0, 1e-10 / std::abs(det(A)));
    }
  }
}

TEST(Tensor2, Rotation)
{
  const Mat2 R = rotation(std::numbers::pi / 2);
  EXPECT_NEAR(norm(R * Vec2{1, 0} - perp(Vec2{1, 0})), 0.0, 1e-15);
  for (double t : {0.1, 1.0, 2.5, -0.7}) {
    EXPECT_NEAR(det(rotation(t)), 1.0, 1e-15);
    EXPECT_NEAR(frobenius_norm(transpose(rotation(t)) * rotation(t) - Mat2::identity()), 0.0, 1e-15);
  }
}
