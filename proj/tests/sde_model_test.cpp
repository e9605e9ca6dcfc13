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

}  // namespace

TEST(Builtins, OuAdditive) {
  const SdeSystem s = builtin_example("ou_additive");
  EXPECT_EQ(s.n, 1);
  EXPECT_EQ(s.d, 1);
  EXPECT_DOUBLE_EQ(s.drift_at(vec({0.3}))(0), -0.3);
  EXPECT_DOUBLE_EQ(s.diffusion_at(vec({0.3}))(0, 0), 1.0);
  EXPECT_EQ(classify_origin(s), OriginClass::NoisyEquilibrium);
}

TEST(Builtins, GeometricHalf) {
  const SdeSystem s = builtin_example("geometric_half");
  EXPECT_DOUBLE_EQ(s.drift_at(vec({2.0}))(0), -1.0);
  EXPECT_DOUBLE_EQ(s.diffusion_at(vec({2.0}))(0, 0), 2.0);
  EXPECT_EQ(classify_origin(s), OriginClass::AlmostSureEquilibrium);
}

TEST(Builtins, Chained3) {
  const SdeSystem s = builtin_example("chained3");
  EXPECT_EQ(s.n, 3);
  EXPECT_EQ(s.d, 2);
  const Vector x = vec({0.5, -2.0, 3.0});
  EXPECT_EQ(s.drift_at(x), -x);
  Matrix want(3, 2);
  want << 1, 0, 0, 1, -2, 0;
  EXPECT_EQ(s.diffusion_at(x), want);
  EXPECT_EQ(classify_origin(s), OriginClass::NoisyEquilibrium);
}

TEST(Builtins, UnknownName) { EXPECT_THROW(builtin_example("nope"), InvalidArgument); }

TEST(OriginClass, NotEquilibrium) {
  const SdeSystem s = make_system(1, {"1 - x1"}, {{"0"}});
  EXPECT_EQ(classify_origin(s), OriginClass::NotEquilibrium);
}

TEST(OriginClass, NoNoiseIsAlmostSure) {
  const SdeSystem s = make_system(2, {"-x1", "x1 - x2"}, {});
  EXPECT_EQ(s.d, 0);
  EXPECT_EQ(classify_origin(s), OriginClass::AlmostSureEquilibrium);
}

TEST(OriginClass, ToleranceMatters) {
  const SdeSystem s = make_system(1, {"-x1 + 1e-10"}, {{"x1"}});
  EXPECT_EQ(classify_origin(s), OriginClass::NotEquilibrium);
  EXPECT_EQ(classify_origin(s, 1e-9), OriginClass::AlmostSureEquilibrium);
  EXPECT_THROW(classify_origin(s, -1.0), InvalidArgument);
}

TEST(MakeSystem, DimensionErrors) {
  EXPECT_THROW(make_system(2, {"-x1"}, {}), DimensionError);
  EXPECT_THROW(make_system(1, {"-x1"}, {{"1", "0"}}), DimensionError);
  // x2 does not exist in one dimension
  EXPECT_THROW(make_system(1, {"-x2"}, {}), ParseError);
  EXPECT_THROW(make_system(0, {}, {}), DimensionError);
}

TEST(MakeSystem, PointDimensionChecked) {
  const SdeSystem s = builtin_example("chained3");
  EXPECT_THROW(s.drift_at(vec({1.0})), DimensionError);
  EXPECT_THROW(s.diffusion_at(vec({1.0, 2.0})), DimensionError);
}

TEST(MakeSystem, DomainErrorsSurface) {
  const SdeSystem s = make_system(1, {"-log(x1)"}, {{"sqrt(x1)"}});
  EXPECT_NEAR(s.drift_at(vec({std::exp(1.0)}))(0), -1.0, 1e-15);
  EXPECT_THROW(s.drift_at(vec({-1.0})), DomainError);
  EXPECT_THROW(s.diffusion_at(vec({-1.0})), DomainError);
}

TEST(LinearSystem, MatchesMatrices) {
  Matrix a(2, 2);
  a << -1, 2, 0, -3;
  Matrix g(2, 1);
  g << 0.5, -1;
  const SdeSystem s = make_linear_system(a, g);
  const Vector x = vec({0.7, -1.1});
  EXPECT_NEAR((s.drift_at(x) - a * x).norm(), 0.0, 1e-15);
  EXPECT_EQ(s.diffusion_at(x), g);
  EXPECT_EQ(classify_origin(s), OriginClass::NoisyEquilibrium);
  EXPECT_THROW(make_linear_system(Matrix::Zero(2, 3), g), DimensionError);
}

// property: drift of a random linear system evaluates as A x
TEST(LinearSystem, RandomAgreement) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    Matrix a(n, n), g(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = nd(rng);
      g(i, 0) = nd(rng);
      g(i, 1) = nd(rng);
    }
    const SdeSystem s = make_linear_system(a, g);
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = nd(rng);
    EXPECT_LT((s.drift_at(x) - a * x).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + (a * x).norm()));
    EXPECT_EQ(s.diffusion_at(x), g);
  }
}
