#include <random>

#include <gtest/gtest.h>

#include "slf/slf.hpp"

using namespace slf;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }

// E[phi(x + f h + sigma sqrt(h) xi)] - phi(x) over h, by Gauss-Hermite with
// 3 nodes per noise, exact for quadratics; used as an oracle for polynomial
// test functions of degree <= 3 up to O(h)
double expected_increment(const SdeSystem& s, const Expr& phi, const Vector& x, double h) {
  const Vector f = s.drift_at(x);
  const Matrix sig = s.diffusion_at(x);
  const double nodes[3] = {-std::sqrt(3.0), 0.0, std::sqrt(3.0)};
  const double weights[3] = {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
  const int d = s.d;
  double acc = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Vector y = x + h * f;
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      y += std::sqrt(h) * nodes[idx[static_cast<std::size_t>(a)]] * sig.col(a);
      w *= weights[idx[static_cast<std::size_t>(a)]];
    }
    acc += w * phi.eval(y);
    int a = 0;
    while (a < d && ++idx[static_cast<std::size_t>(a)] == 3) idx[static_cast<std::size_t>(a++)] = 0;
    if (a == d) break;
  }
  return (acc - phi.eval(x)) / h;
}

}  // namespace

TEST(Generator, OuQuadraticTestFunction) {
  // phi = x^2 at x = 0: p = 0, X = 2, L = 0 + 1
  const SdeSystem s = builtin_example("ou_additive");
  const GeneratorValue g = apply_generator(s, vec({0.0}), vec({0.0}), mat1(2.0));
  EXPECT_DOUBLE_EQ(g.value, 1.0);
  EXPECT_DOUBLE_EQ(g.drift_part, 0.0);
  EXPECT_DOUBLE_EQ(g.diffusion_part, 1.0);
}

TEST(Generator, OuAbsAwayFromKink) {
  // V = |x| at x = 0.5: p = 1, X = 0, L = -0.5
  const SdeSystem s = builtin_example("ou_additive");
  EXPECT_DOUBLE_EQ(apply_generator(s, vec({0.5}), vec({1.0}), mat1(0.0)).value, -0.5);
}

TEST(Generator, GeometricAbs) {
  // f = -x/2, sigma = x: at x = 2, p = 1, X = 0 gives -1
  const SdeSystem s = builtin_example("geometric_half");
  EXPECT_DOUBLE_EQ(apply_generator(s, vec({2.0}), vec({1.0}), mat1(0.0)).value, -1.0);
  // at 0 everything vanishes whatever the curvature
  EXPECT_DOUBLE_EQ(apply_generator(s, vec({0.0}), vec({0.3}), mat1(1e6)).value, 0.0);
}

TEST(Generator, Chained3Hand) {
  const SdeSystem s = builtin_example("chained3");
  const Vector x = vec({1.0, 2.0, -1.0});
  const Vector p = vec({1.0, 1.0, -1.0});
  Matrix X = Matrix::Zero(3, 3);
  X(0, 0) = 2.0;
  X(2, 2) = 4.0;
  X(0, 2) = X(2, 0) = 1.0;
  // p.f = -1 - 2 - 1 = -4; sigma1 = (1, 0, 2): 2 + 16 + 4 = 22; sigma2 = (0, 1, 0): 0
  const GeneratorValue g = apply_generator(s, x, p, X);
  EXPECT_DOUBLE_EQ(g.drift_part, -4.0);
  EXPECT_DOUBLE_EQ(g.diffusion_part, 11.0);
  EXPECT_DOUBLE_EQ(g.value, 7.0);
}

TEST(Generator, SymmetrizesX) {
  const SdeSystem s = builtin_example("chained3");
  const Vector x = vec({0.1, 0.2, 0.3});
  Matrix X(3, 3);
  X << 1, 4, 0, 0, 1, 2, 0, 0, 1;
  const double lhs = apply_generator(s, x, Vector::Zero(3), X).value;
  const double rhs = apply_generator(s, x, Vector::Zero(3), symmetrize(X)).value;
  EXPECT_DOUBLE_EQ(lhs, rhs);
}

TEST(Generator, ShapeErrors) {
  const SdeSystem s = builtin_example("chained3");
  EXPECT_THROW(apply_generator(s, vec({1.0}), vec({1.0}), mat1(0.0)), DimensionError);
  EXPECT_THROW(apply_generator(s, Vector::Zero(3), vec({1.0}), Matrix::Zero(3, 3)), DimensionError);
  EXPECT_THROW(apply_generator(s, Vector::Zero(3), Vector::Zero(3), Matrix::Zero(2, 2)), DimensionError);
}

TEST(Generator, SmoothTestFunction) {
  const SdeSystem s = builtin_example("ou_additive");
  EXPECT_DOUBLE_EQ(apply_generator_smooth(s, parse("x1^2", 1), vec({0.0})).value, 1.0);
  // x^2 at x: -2x^2 + 1
  EXPECT_NEAR(apply_generator_smooth(s, parse("x1^2", 1), vec({0.7})).value, -2 * 0.49 + 1, 1e-14);
  EXPECT_THROW(apply_generator_smooth(s, parse("abs(x1)", 1), vec({0.0})), NonSmoothPoint);
  EXPECT_THROW(apply_generator_smooth(s, parse("x1*x2", 2), vec({0.0})), DimensionError);
}

// property: for cubic test functions the generator matches the one-step
// expected increment as h -> 0
TEST(Generator, MatchesExpectedIncrement) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  const SdeSystem sys = builtin_example("chained3");
  const std::vector<std::string> phis{"x1^2 + x2*x3", "x1*x2*x3 + x3^2", "x1^3 - 2*x2^2 + x1*x3"};
  for (const auto& text : phis) {
    const Expr phi = parse(text, 3);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = vec({nd(rng), nd(rng), nd(rng)});
      const double exact = apply_generator_smooth(sys, phi, x).value;
      const double h1 = expected_increment(sys, phi, x, 1e-4);
      const double h2 = expected_increment(sys, phi, x, 2e-4);
      // Richardson removes the O(h) term
      const double extrapolated = 2.0 * h1 - h2;
      EXPECT_NEAR(extrapolated, exact, 1e-5 * (1.0 + std::abs(exact))) << text;
    }
  }
}

// property: linear in (p, X)
TEST(Generator, Linearity) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const SdeSystem sys = builtin_example("chained3");
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = vec({nd(rng), nd(rng), nd(rng)});
    const Vector p1 = vec({nd(rng), nd(rng), nd(rng)}), p2 = vec({nd(rng), nd(rng), nd(rng)});
    Matrix X1(3, 3), X2(3, 3);
    for (int i = 0; i < 9; ++i) {
      X1.data()[i] = nd(rng);
      X2.data()[i] = nd(rng);
    }
    const double a = nd(rng);
    const double lhs = apply_generator(sys, x, p1 + a * p2, X1 + a * X2).value;
    const double rhs = apply_generator(sys, x, p1, X1).value + a * apply_generator(sys, x, p2, X2).value;
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
  }
}
