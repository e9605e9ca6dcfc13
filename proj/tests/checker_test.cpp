#include <random>
#include <set>

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

const Candidate kAbs1 = WeightedAbsSum{{1.0}};
const Candidate kAbs3 = WeightedAbsSum{{1.0, 1.0, 1.0}};

double margin_at(const LyapunovVerdict& v, const Vector& x) {
  for (const auto& r : v.margin_records)
    if (r.x == x) return r.margin;
  ADD_FAILURE() << "point not on grid";
  return 0.0;
}

}  // namespace

TEST(Grid, ContainsOriginSlicesAndShells) {
  const Grid g = make_grid(3);
  std::set<std::vector<double>> seen;
  bool origin = false;
  int slice_points = 0;
  for (const auto& x : g.points) {
    EXPECT_TRUE(seen.insert(to_std(x)).second) << "duplicate point";
    origin = origin || x.isZero();
    if (x(0) == 0.0 && x(1) == 0.0) ++slice_points;
  }
  EXPECT_TRUE(origin);
  EXPECT_GE(slice_points, 21);
  ASSERT_EQ(g.shells.size(), 6u);
  for (const auto& s : g.shells) {
    EXPECT_FALSE(s.indices.empty());
    for (std::size_t i : s.indices) EXPECT_NEAR(g.points[i].norm(), s.radius, 1e-15);
  }
  EXPECT_FALSE(g.description.empty());
}

TEST(Grid, EvenCountStillHasZero) {
  GridSpec spec;
  spec.points_per_axis = 4;
  spec.shells = false;
  const Grid g = make_grid(1, spec);
  bool zero = false;
  for (const auto& x : g.points) zero = zero || x(0) == 0.0;
  EXPECT_TRUE(zero);
  EXPECT_EQ(g.points.size(), 5u);
}

TEST(Weak, OuAbsZeroRate) {
  const SdeSystem sys = builtin_example("ou_additive");
  const LyapunovVerdict v = check_weak_supersolution(sys, kAbs1, zero_rate(1), make_grid(1));
  EXPECT_TRUE(v.weak_supersolution);
  EXPECT_EQ(margin_at(v, vec({0.0})), 0.0);
  // away from 0 the margin is |x|
  EXPECT_DOUBLE_EQ(margin_at(v, vec({1.0})), 1.0);
  EXPECT_DOUBLE_EQ(margin_at(v, vec({-0.1})), 0.1);
}

TEST(Weak, OuAbsWithAbsRate) {
  const SdeSystem sys = builtin_example("ou_additive");
  const LyapunovVerdict v = check_weak_supersolution(sys, kAbs1, parse("abs(x1)", 1), make_grid(1));
  EXPECT_TRUE(v.weak_supersolution);
  EXPECT_EQ(v.worst_margin, 0.0);
}

TEST(Weak, Chained3) {
  const SdeSystem sys = builtin_example("chained3");
  const LyapunovVerdict v =
      check_weak_supersolution(sys, kAbs3, parse("abs(x1)+abs(x2)+abs(x3)", 3), make_grid(3));
  EXPECT_TRUE(v.weak_supersolution);
  EXPECT_GE(v.worst_margin, -1e-9);
}

TEST(Weak, NegativeRateRejected) {
  const SdeSystem sys = builtin_example("ou_additive");
  EXPECT_THROW(check_weak_supersolution(sys, kAbs1, parse("x1", 1), make_grid(1)), InvalidArgument);
  EXPECT_THROW(check_weak_supersolution(sys, kAbs3, zero_rate(3), make_grid(3)), DimensionError);
  EXPECT_THROW(check_weak_supersolution(sys, kAbs1, zero_rate(1), make_grid(1), -1.0), InvalidArgument);
}

TEST(Weak, DomainErrorsPropagate) {
  const SdeSystem sys = make_system(1, {"-sqrt(x1)"}, {{"1"}});
  EXPECT_THROW(check_weak_supersolution(sys, kAbs1, zero_rate(1), make_grid(1)), DomainError);
}

TEST(Plain, OuAbsRefutedAtOrigin) {
  const SdeSystem sys = builtin_example("ou_additive");
  const LyapunovVerdict v = check_plain_supersolution(sys, kAbs1, zero_rate(1), make_grid(1));
  EXPECT_EQ(v.plain_supersolution, PlainStatus::Refuted);
  ASSERT_FALSE(v.counterexamples.empty());
  const Counterexample& first = v.counterexamples.front();
  EXPECT_EQ(first.x(0), 0.0);
  EXPECT_EQ(first.element.p(0), 0.0);
  EXPECT_EQ(first.element.X(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(first.margin, -1.0);
  EXPECT_FALSE(first.analytic);
  for (const auto& ce : v.counterexamples) EXPECT_EQ(ce.x(0), 0.0);
}

TEST(Plain, GeometricHolds) {
  const SdeSystem sys = builtin_example("geometric_half");
  const LyapunovVerdict v = check_plain_supersolution(sys, kAbs1, zero_rate(1), make_grid(1));
  EXPECT_EQ(v.plain_supersolution, PlainStatus::Holds);
  EXPECT_TRUE(v.counterexamples.empty());
  EXPECT_TRUE(v.analytic_refutations.empty());
}

TEST(Plain, Chained3RefutedOnFirstSlice) {
  const SdeSystem sys = builtin_example("chained3");
  const LyapunovVerdict v = check_plain_supersolution(sys, kAbs3, zero_rate(3), make_grid(3));
  EXPECT_EQ(v.plain_supersolution, PlainStatus::Refuted);
  ASSERT_FALSE(v.counterexamples.empty());
  bool loaded = false;
  for (const auto& ce : v.counterexamples) {
    const Matrix s = sys.diffusion_at(ce.x);
    if (ce.x(0) == 0.0 && s.col(0).dot(ce.element.X * s.col(0)) > 0.0) loaded = true;
  }
  EXPECT_TRUE(loaded);
  EXPECT_LE(v.counterexamples.size(), CheckOptions{}.max_counterexamples);
}

// a kink the noise loads only weakly: sized elements cannot refute, so
// the refutation is analytic and kept out of the counterexample list
TEST(Plain, AnalyticRefutation) {
  const SdeSystem sys = make_system(1, {"-x1"}, {{"1e-6"}});
  const Grid g = grid_from_points({vec({0.0})});
  const LyapunovVerdict v = check_plain_supersolution(sys, kAbs1, zero_rate(1), g);
  EXPECT_EQ(v.plain_supersolution, PlainStatus::Refuted);
  EXPECT_TRUE(v.counterexamples.empty());
  ASSERT_EQ(v.analytic_refutations.size(), 1u);
  EXPECT_TRUE(v.analytic_refutations[0].analytic);
  EXPECT_LT(v.analytic_refutations[0].margin, 0.0);
  EXPECT_EQ(v.analytic_refutations[0].kink_coordinate, 0);
}

TEST(Plain, EmptyGridUnknown) {
  const SdeSystem sys = builtin_example("ou_additive");
  EXPECT_EQ(check_plain_supersolution(sys, kAbs1, zero_rate(1), grid_from_points({})).plain_supersolution,
            PlainStatus::Unknown);
}

TEST(Classify, Examples) {
  const SdeSystem ou = builtin_example("ou_additive");
  const SdeSystem geo = builtin_example("geometric_half");
  const Grid g1 = make_grid(1);
  EXPECT_EQ(classify(ou, kAbs1, {parse("abs(x1)", 1)}, g1).classification, Classification::StrictSLF);
  EXPECT_EQ(classify(ou, Quadratic{Matrix::Identity(1, 1)}, {}, g1).classification, Classification::NotVerified);
  EXPECT_EQ(classify(geo, kAbs1, {parse("abs(x1)/2", 1)}, g1).classification, Classification::StrictSLF);
  // no strict rate offered: SLF only
  EXPECT_EQ(classify(ou, kAbs1, {}, g1).classification, Classification::SLF);
  // a rate vanishing on a shell point is not positive off the origin
  EXPECT_EQ(classify(ou, kAbs1, {parse("abs(x1)*(abs(x1) - 0.1)^2", 1)}, g1).classification,
            Classification::SLF);
  // a rate that is too large fails the weak check, the next one is used
  const LyapunovVerdict v = classify(ou, kAbs1, {parse("2*abs(x1)", 1), parse("abs(x1)/3", 1)}, g1);
  EXPECT_EQ(v.classification, Classification::StrictSLF);
  EXPECT_EQ(v.l_used, parse("abs(x1)/3", 1).render());
}

TEST(Conclusion, Table) {
  using C = Classification;
  using O = OriginClass;
  EXPECT_EQ(stability_conclusion(C::StrictSLF, O::NoisyEquilibrium, true).conclusion, Conclusion::NAS);
  EXPECT_EQ(stability_conclusion(C::SLF, O::AlmostSureEquilibrium, true).conclusion, Conclusion::SiP);
  EXPECT_EQ(stability_conclusion(C::StrictSLF, O::NoisyEquilibrium, false).conclusion, Conclusion::None);
  EXPECT_EQ(stability_conclusion(C::SLF, O::NoisyEquilibrium, true).conclusion, Conclusion::NS);
  EXPECT_EQ(stability_conclusion(C::StrictSLF, O::AlmostSureEquilibrium, true).conclusion, Conclusion::ASiP);
  EXPECT_EQ(stability_conclusion(C::NotVerified, O::NoisyEquilibrium, true).conclusion, Conclusion::None);
  EXPECT_EQ(stability_conclusion(C::StrictSLF, O::NotEquilibrium, true).conclusion, Conclusion::None);
  EXPECT_TRUE(stability_conclusion(C::SLF, O::NoisyEquilibrium, true).grid_evidence);
  EXPECT_FALSE(stability_conclusion(C::SLF, O::NoisyEquilibrium, true, true).grid_evidence);
}

// property: StrictSLF => SLF => weak, over random linear systems and candidates
TEST(Properties, ClassificationChain) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.2, 2.0);
  GridSpec spec;
  spec.points_per_axis = 7;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 2;
    Matrix a(n, n), gm(n, 1);
    for (int i = 0; i < n * n; ++i) a.data()[i] = nd(rng);
    a -= 1.5 * Matrix::Identity(n, n);
    for (int i = 0; i < n; ++i) gm(i) = 0.3 * nd(rng);
    const SdeSystem sys = make_linear_system(a, gm);
    WeightedAbsSum f;
    for (int i = 0; i < n; ++i) f.weights.push_back(u(rng));
    const Candidate c = f;
    const Grid g = make_grid(n, spec);
    const std::string rate = n == 1 ? "abs(x1)/10" : "(abs(x1)+abs(x2))/10";
    const LyapunovVerdict v = classify(sys, c, {parse(rate, n)}, g);
    const bool weak = check_weak_supersolution(sys, c, zero_rate(n), g).weak_supersolution;
    if (v.classification != Classification::NotVerified) {
      EXPECT_TRUE(weak);
    }
    if (v.classification == Classification::StrictSLF) {
      EXPECT_TRUE(v.weak_supersolution);
    }
    EXPECT_EQ(v.classification == Classification::NotVerified, !weak);
  }
}

// property: passing with l implies passing with any smaller l
TEST(Properties, MonotoneInRate) {
  const SdeSystem sys = builtin_example("chained3");
  const Grid g = make_grid(3);
  const Expr l = parse("abs(x1)+abs(x2)+abs(x3)", 3);
  ASSERT_TRUE(check_weak_supersolution(sys, kAbs3, l, g).weak_supersolution);
  for (const char* smaller : {"abs(x1)+abs(x2)", "(abs(x1)+abs(x2)+abs(x3))/2", "abs(x1)*abs(x3)/(1 + abs(x1) + abs(x3))",
                              "0"}) {
    EXPECT_TRUE(check_weak_supersolution(sys, kAbs3, parse(smaller, 3), g).weak_supersolution) << smaller;
  }
  // margins move by exactly the rate difference
  const LyapunovVerdict a = check_weak_supersolution(sys, kAbs3, l, g);
  const LyapunovVerdict b = check_weak_supersolution(sys, kAbs3, zero_rate(3), g);
  for (std::size_t i = 0; i < a.margin_records.size(); ++i)
    EXPECT_NEAR(b.margin_records[i].margin - a.margin_records[i].margin, l.eval(g.points[i]), 1e-12);
}

// property: plain Holds implies weak, and on smooth candidates the two agree
TEST(Properties, PlainImpliesWeakAndSmoothAgree) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  GridSpec spec;
  spec.points_per_axis = 9;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 2;
    Matrix a(n, n), gm(n, n);
    for (int i = 0; i < n * n; ++i) {
      a.data()[i] = nd(rng);
      gm.data()[i] = 0.5 * nd(rng);
    }
    const SdeSystem sys = make_linear_system(a, gm);
    Matrix L(n, n);
    for (int i = 0; i < n * n; ++i) L.data()[i] = nd(rng);
    const Candidate quad = Quadratic{L * L.transpose() + 0.1 * Matrix::Identity(n, n)};
    const Candidate abs = WeightedAbsSum{std::vector<double>(static_cast<std::size_t>(n), 1.0)};
    const Grid g = make_grid(n, spec);
    for (const Candidate& c : {quad, abs}) {
      const LyapunovVerdict plain = check_plain_supersolution(sys, c, zero_rate(n), g);
      const LyapunovVerdict weak = check_weak_supersolution(sys, c, zero_rate(n), g);
      if (plain.plain_supersolution == PlainStatus::Holds) {
        EXPECT_TRUE(weak.weak_supersolution);
      }
      if (std::holds_alternative<Quadratic>(c)) {
        EXPECT_EQ(plain.plain_supersolution == PlainStatus::Holds, weak.weak_supersolution);
      }
    }
  }
}

// property: every counterexample passes the membership test
TEST(Properties, RefutationsAreMembers) {
  const SdeSystem sys = builtin_example("chained3");
  CheckOptions opt;
  opt.max_counterexamples = 200;
  const LyapunovVerdict v = check_plain_supersolution(sys, kAbs3, zero_rate(3), make_grid(3), opt);
  ASSERT_FALSE(v.counterexamples.empty());
  for (const auto& ce : v.counterexamples)
    EXPECT_TRUE(check_semijet_membership(kAbs3, ce.x, ce.element, {1e-2, 1e-3}, 2000).passed);
}

TEST(Properties, ParallelMatchesSerial) {
  const SdeSystem sys = builtin_example("chained3");
  const Grid g = make_grid(3);
  set_thread_count(1);
  const LyapunovVerdict a = check_plain_supersolution(sys, kAbs3, zero_rate(3), g);
  set_thread_count(4);
  const LyapunovVerdict b = check_plain_supersolution(sys, kAbs3, zero_rate(3), g);
  set_thread_count(0);
  EXPECT_EQ(io::to_json(a).dump(), io::to_json(b).dump());
}
