#pragma once

// Structured Lyapunov candidates with analytic values, jets and second-order
// subjets. Every family is C2 away from coordinate hyperplanes, so all kinks
// sit where some coordinate vanishes.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "slf/errors.hpp"
#include "slf/expr.hpp"
#include "slf/linalg.hpp"

namespace slf {

/// One coordinate of the C2 surrogate: v(s) for |s| < a, the quintic
/// c(|s|) = sum_k alpha_k |s|^k on [a, b), and |s|^p / p beyond b.
/// The same quintic is also kept as sum_k beta_k t^k, t = (|s| - a) / (b - a);
/// that form is the one evaluated, since alpha cancels badly when b/a is near 1.
struct ConnectorSpec {
  double a = 0.0;
  double b = 0.0;
  double p = 0.0;
  Expr inner;  // one-dimensional, even, C2 on [-a, a]
  std::array<double, 6> alpha{};
  std::array<double, 6> beta{};
};

struct ScalarJet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Monomial quintic and its first two derivatives at r.
inline ScalarJet quintic_jet(const std::array<double, 6>& alpha, double r) {
  long double v = 0.0L, d1 = 0.0L, d2 = 0.0L;
  const long double x = r;
  for (int k = 5; k >= 0; --k) v = v * x + alpha[static_cast<std::size_t>(k)];
  for (int k = 5; k >= 1; --k) d1 = d1 * x + static_cast<long double>(k) * alpha[static_cast<std::size_t>(k)];
  for (int k = 5; k >= 2; --k) d2 = d2 * x + static_cast<long double>(k * (k - 1)) * alpha[static_cast<std::size_t>(k)];
  return {static_cast<double>(v), static_cast<double>(d1), static_cast<double>(d2)};
}

/// Jet in r = |s| of the connector quintic, from the shifted coefficients.
inline ScalarJet connector_quintic_jet(const ConnectorSpec& spec, double r) {
  const long double h = static_cast<long double>(spec.b) - spec.a;
  const long double t = (r - static_cast<long double>(spec.a)) / h;
  long double v = 0.0L, d1 = 0.0L, d2 = 0.0L;
  for (int k = 5; k >= 0; --k) v = v * t + spec.beta[static_cast<std::size_t>(k)];
  for (int k = 5; k >= 1; --k) d1 = d1 * t + static_cast<long double>(k) * spec.beta[static_cast<std::size_t>(k)];
  for (int k = 5; k >= 2; --k) d2 = d2 * t + static_cast<long double>(k * (k - 1)) * spec.beta[static_cast<std::size_t>(k)];
  return {static_cast<double>(v), static_cast<double>(d1 / h), static_cast<double>(d2 / (h * h))};
}

inline ScalarJet power_branch_jet(double p, double r) {
  return {std::pow(r, p) / p, std::pow(r, p - 1.0), (p - 1.0) * std::pow(r, p - 2.0)};
}

inline ScalarJet inner_jet(const Expr& inner, double s) {
  Vector at(1);
  at(0) = s;
  const Jet2 j = inner.eval_jet(at);
  if (!j.smooth) throw NonSmoothPoint("connector inner function is not C2 at the sample point");
  return {j.value, j.gradient(0), j.hessian(0, 0)};
}

/// Jet in s (not |s|) of the piecewise coordinate function.
inline ScalarJet connector_coordinate_jet(const ConnectorSpec& spec, double s) {
  const double r = std::abs(s);
  const double sg = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
  if (r >= spec.b) {
    ScalarJet j = power_branch_jet(spec.p, r);
    j.d1 *= sg;
    return j;
  }
  if (r >= spec.a) {
    ScalarJet j = connector_quintic_jet(spec, r);
    j.d1 *= sg;
    return j;
  }
  return inner_jet(spec.inner, s);
}

/// V(x) = sum_i |x_i|^{p_i} / p_i.
struct PowerSum {
  std::vector<double> exponents;
};

/// V(x) = sum_i w_i |x_i|.
struct WeightedAbsSum {
  std::vector<double> weights;
};

/// V(x) = x^T P x.
struct Quadratic {
  Matrix P;
};

/// sum_i of connector-smoothed coordinates built over a PowerSum.
struct Smoothed {
  PowerSum base;
  std::vector<ConnectorSpec> connectors;
};

using Candidate = std::variant<PowerSum, WeightedAbsSum, Quadratic, Smoothed>;

enum class Provenance { TrueJet, CanonicalWitness, Adversarial };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::TrueJet: return "TrueJet";
    case Provenance::CanonicalWitness: return "CanonicalWitness";
    case Provenance::Adversarial: return "Adversarial";
  }
  return "";
}

struct SemijetElement {
  Vector p;
  Matrix X;
  Provenance provenance = Provenance::TrueJet;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline std::string_view family_name(const Candidate& c) {
  return std::visit(overloaded{
                        [](const PowerSum&) { return std::string_view("power_sum"); },
                        [](const WeightedAbsSum&) { return std::string_view("abs_sum"); },
                        [](const Quadratic&) { return std::string_view("quadratic"); },
                        [](const Smoothed&) { return std::string_view("smoothed"); },
                    },
                    c);
}

inline int dimension(const Candidate& c) {
  return std::visit(
      overloaded{
          [](const PowerSum& f) { return static_cast<int>(f.exponents.size()); },
          [](const WeightedAbsSum& f) { return static_cast<int>(f.weights.size()); },
          [](const Quadratic& f) { return static_cast<int>(f.P.rows()); },
          [](const Smoothed& f) { return static_cast<int>(f.base.exponents.size()); },
      },
      c);
}

/// Structural positive definiteness and properness.
inline void validate(const Candidate& c) {
  std::visit(
      overloaded{
          [](const PowerSum& f) {
            if (f.exponents.empty()) throw DimensionError("power_sum needs at least one exponent");
            for (double q : f.exponents)
              if (!(q > 0.0) || !std::isfinite(q))
                throw InvalidArgument("power_sum exponents must be positive");
          },
          [](const WeightedAbsSum& f) {
            if (f.weights.empty()) throw DimensionError("abs_sum needs at least one weight");
            for (double w : f.weights)
              if (!(w > 0.0) || !std::isfinite(w))
                throw InvalidArgument("abs_sum weights must be positive");
          },
          [](const Quadratic& f) {
            if (f.P.rows() == 0 || f.P.rows() != f.P.cols())
              throw DimensionError("quadratic P must be square and non-empty");
            if ((f.P - f.P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + f.P.norm()))
              throw InvalidArgument("quadratic P must be symmetric");
            if (!is_positive_definite(f.P))
              throw InvalidArgument("quadratic P must be positive definite");
          },
          [](const Smoothed& f) {
            if (f.base.exponents.empty()) throw DimensionError("smoothed needs a base");
            if (f.connectors.size() != f.base.exponents.size())
              throw DimensionError("smoothed needs one connector per coordinate");
            for (std::size_t i = 0; i < f.connectors.size(); ++i) {
              const auto& s = f.connectors[i];
              if (s.p != f.base.exponents[i])
                throw InvalidArgument("connector exponent differs from the base exponent");
              if (!(s.a > 0.0) || !(s.b > s.a))
                throw InvalidArgument("connector radii must satisfy 0 < a < b");
              if (s.inner.dimension() != 1)
                throw DimensionError("connector inner function must be one-dimensional");
            }
          },
      },
      c);
}

namespace detail {

inline void check_dimension(const Candidate& c, const Vector& x) {
  if (x.size() != dimension(c)) {
    throw DimensionError("candidate has dimension " + std::to_string(dimension(c)) +
                         ", point has " + std::to_string(x.size()));
  }
}

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

inline double evaluate(const Candidate& c, const Vector& x) {
  detail::check_dimension(c, x);
  return std::visit(overloaded{
                        [&](const PowerSum& f) {
                          double v = 0.0;
                          for (Eigen::Index i = 0; i < x.size(); ++i) {
                            const double q = f.exponents[static_cast<std::size_t>(i)];
                            v += std::pow(std::abs(x(i)), q) / q;
                          }
                          return v;
                        },
                        [&](const WeightedAbsSum& f) {
                          double v = 0.0;
                          for (Eigen::Index i = 0; i < x.size(); ++i)
                            v += f.weights[static_cast<std::size_t>(i)] * std::abs(x(i));
                          return v;
                        },
                        [&](const Quadratic& f) { return x.dot(f.P * x); },
                        [&](const Smoothed& f) {
                          double v = 0.0;
                          for (Eigen::Index i = 0; i < x.size(); ++i)
                            v += connector_coordinate_jet(f.connectors[static_cast<std::size_t>(i)],
                                                          x(i))
                                     .value;
                          return v;
                        },
                    },
                    c);
}

/// Coordinates k with x_k = 0 at which the candidate fails to be C2.
inline std::vector<int> kink_coordinates(const Candidate& c, const Vector& x) {
  detail::check_dimension(c, x);
  std::vector<int> kinks;
  std::visit(overloaded{
                 [&](const PowerSum& f) {
                   for (Eigen::Index i = 0; i < x.size(); ++i)
                     if (x(i) == 0.0 && f.exponents[static_cast<std::size_t>(i)] < 2.0)
                       kinks.push_back(static_cast<int>(i));
                 },
                 [&](const WeightedAbsSum&) {
                   for (Eigen::Index i = 0; i < x.size(); ++i)
                     if (x(i) == 0.0) kinks.push_back(static_cast<int>(i));
                 },
                 [](const Quadratic&) {},
                 [](const Smoothed&) {},
             },
             c);
  return kinks;
}

inline bool smooth_locus(const Candidate& c, const Vector& x) {
  return kink_coordinates(c, x).empty();
}

/// Kinks of power_sum coordinates with exponent below one have unbounded
/// one-sided slopes.
inline bool has_steep_kink(const Candidate& c, const Vector& x) {
  const auto* f = std::get_if<PowerSum>(&c);
  if (!f) return false;
  for (int k : kink_coordinates(c, x))
    if (f->exponents[static_cast<std::size_t>(k)] < 1.0) return true;
  return false;
}

namespace detail {

// Gradient and Hessian entries of the coordinate-separable families at the
// coordinates that are smooth at x; kink coordinates are left at zero.
inline SemijetElement separable_jet(const Candidate& c, const Vector& x,
                                    const std::vector<int>& kinks) {
  const Eigen::Index n = x.size();
  SemijetElement e{Vector::Zero(n), Matrix::Zero(n, n), Provenance::TrueJet};
  auto is_kink = [&](Eigen::Index i) {
    return std::find(kinks.begin(), kinks.end(), static_cast<int>(i)) != kinks.end();
  };
  std::visit(overloaded{
                 [&](const PowerSum& f) {
                   for (Eigen::Index i = 0; i < n; ++i) {
                     if (is_kink(i)) continue;
                     const double q = f.exponents[static_cast<std::size_t>(i)];
                     const double r = std::abs(x(i));
                     if (r == 0.0) {
                       e.p(i) = 0.0;
                       e.X(i, i) = q == 2.0 ? 1.0 : 0.0;
                     } else {
                       e.p(i) = sgn(x(i)) * std::pow(r, q - 1.0);
                       e.X(i, i) = (q - 1.0) * std::pow(r, q - 2.0);
                     }
                   }
                 },
                 [&](const WeightedAbsSum& f) {
                   for (Eigen::Index i = 0; i < n; ++i)
                     if (!is_kink(i)) e.p(i) = f.weights[static_cast<std::size_t>(i)] * sgn(x(i));
                 },
                 [&](const Quadratic& f) {
                   const Matrix ps = symmetrize(f.P);
                   e.p = 2.0 * ps * x;
                   e.X = 2.0 * ps;
                 },
                 [&](const Smoothed& f) {
                   for (Eigen::Index i = 0; i < n; ++i) {
                     const ScalarJet j =
                         connector_coordinate_jet(f.connectors[static_cast<std::size_t>(i)], x(i));
                     e.p(i) = j.d1;
                     e.X(i, i) = j.d2;
                   }
                 },
             },
             c);
  return e;
}

}  // namespace detail

/// Gradient and Hessian on the smooth locus.
inline SemijetElement jet_at(const Candidate& c, const Vector& x) {
  const auto kinks = kink_coordinates(c, x);
  if (!kinks.empty()) throw NonSmoothPoint("jet_at: candidate is not C2 at this point");
  return detail::separable_jet(c, x, kinks);
}

/// A member of the second-order subjet that makes the diffusion term vanish
/// along kink directions: zero slope and zero curvature on every kink
/// coordinate, true derivatives elsewhere. Several simultaneous kinks are
/// treated coordinate-wise. At smooth points this is the true jet.
inline SemijetElement canonical_witness(const Candidate& c, const Vector& x) {
  const auto kinks = kink_coordinates(c, x);
  SemijetElement e = detail::separable_jet(c, x, kinks);
  if (!kinks.empty()) e.provenance = Provenance::CanonicalWitness;
  return e;
}

/// Radius at which adversarial elements are sized to satisfy the numeric
/// subjet inequality.
inline constexpr double kAdversarialRadius = 1e-2;

namespace detail {

struct KinkShape {
  bool abs_like = false;  // slope interval (-w, w), cross terms admissible
  double weight = 1.0;    // slope bound for abs-like kinks
  double exponent = 1.0;  // power_sum exponent, 1 for abs_sum
};

inline KinkShape kink_shape(const Candidate& c, int k) {
  KinkShape s;
  if (const auto* f = std::get_if<WeightedAbsSum>(&c)) {
    s.abs_like = true;
    s.weight = f->weights[static_cast<std::size_t>(k)];
  } else if (const auto* g = std::get_if<PowerSum>(&c)) {
    s.exponent = g->exponents[static_cast<std::size_t>(k)];
    s.abs_like = s.exponent == 1.0;
  }
  return s;
}

// Slack V_k(r) - |p_k| r available at radius r along a kink axis.
inline double kink_slack(const KinkShape& s, double pk, double r) {
  if (s.abs_like) return (s.weight - std::abs(pk)) * r;
  return std::pow(r, s.exponent) / s.exponent - std::abs(pk) * r;
}

inline bool slope_admissible(const KinkShape& s, double pk) {
  if (s.abs_like) return std::abs(pk) < s.weight;
  if (s.exponent > 1.0) return pk == 0.0;
  return true;  // exponent below one: every slope is a subgradient
}

// Boundary slopes +-w only admit non-positive curvature. Otherwise
// 1/2 X_kk r + sum_j |X_kj| r must stay below half the slack per unit length.
inline bool within_budget(const Candidate& c, const SemijetElement& e,
                          const std::vector<int>& kinks, double r) {
  for (int k : kinks) {
    const KinkShape s = kink_shape(c, k);
    const double pk = e.p(k);
    double cross = 0.0;
    for (Eigen::Index j = 0; j < e.X.cols(); ++j)
      if (j != k) cross += std::abs(e.X(k, j));
    if (s.abs_like && std::abs(pk) == s.weight) {
      if (e.X(k, k) > 0.0 || cross > 0.0) return false;
      continue;
    }
    if (!slope_admissible(s, pk)) return false;
    // |h|^q/q with 1 < q < 2 is flatter than |h| near 0: no room for cross terms
    if (cross > 0.0 && !s.abs_like && s.exponent > 1.0) return false;
    const double load = 0.5 * std::max(e.X(k, k), 0.0) * r + cross * r;
    if (load > 0.5 * kink_slack(s, pk, r) / r) return false;
  }
  return true;
}

}  // namespace detail

/// Elements of the second-order subjet at a kink that probe directions the
/// canonical witness leaves free: interior slopes with escalating positive
/// curvature on the kink coordinates, cross terms for abs-type kinks, and
/// boundary slopes +-w with non-positive curvature. Curvature is capped so
/// that each element satisfies the subjet inequality on the ball of radius
/// kAdversarialRadius.
inline std::vector<SemijetElement> adversarial_elements(const Candidate& c, const Vector& x,
                                                        int count) {
  if (count < 1) throw InvalidArgument("adversarial_elements: count must be positive");
  const auto kinks = kink_coordinates(c, x);
  if (kinks.empty()) throw SmoothPoint("adversarial_elements: candidate is C2 at this point");

  const SemijetElement base = detail::separable_jet(c, x, kinks);
  const Eigen::Index n = x.size();
  std::vector<SemijetElement> out;
  auto offer = [&](SemijetElement e) {
    if (static_cast<int>(out.size()) >= count) return;
    e.provenance = Provenance::Adversarial;
    if (detail::within_budget(c, e, kinks, kAdversarialRadius)) out.push_back(std::move(e));
  };

  static constexpr std::array<double, 5> fractions{0.0, 0.5, -0.5, 0.9, -0.9};
  static constexpr std::array<double, 7> levels{2.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6};
  for (double frac : fractions) {
    for (double level : levels) {
      SemijetElement e = base;
      for (int k : kinks) {
        const auto s = detail::kink_shape(c, k);
        e.p(k) = frac * s.weight;
        e.X(k, k) = level;
      }
      offer(std::move(e));
    }
  }

  if (n > 1) {
    for (double sign : {1.0, -1.0}) {
      SemijetElement e = base;
      bool any = false;
      for (int k : kinks) {
        if (!detail::kink_shape(c, k).abs_like) continue;
        any = true;
        e.X(k, k) = 10.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (j == k) continue;
          e.X(k, j) = sign;
          e.X(j, k) = sign;
        }
      }
      if (any) offer(std::move(e));
    }
  }

  for (double sign : {1.0, -1.0}) {
    SemijetElement e = base;
    bool any = false;
    for (int k : kinks) {
      const auto s = detail::kink_shape(c, k);
      if (!s.abs_like) continue;
      any = true;
      e.p(k) = sign * s.weight;
      e.X(k, k) = -1.0;
    }
    if (any) offer(std::move(e));
  }
  return out;
}

struct MembershipResult {
  bool passed = true;
  std::vector<double> radii;
  std::vector<double> min_remainder;  // per radius
};

/// Numerical check of V(y) >= V(x) + p.(y-x) + 1/2 (y-x)^T X (y-x) + o(|y-x|^2):
/// the minimum remainder over samples with |y - x| <= r must stay above
/// -1e-3 r^2 at every radius.
inline MembershipResult check_semijet_membership(const Candidate& c, const Vector& x,
                                                 const SemijetElement& e,
                                                 std::vector<double> radii = {1e-2, 1e-3},
                                                 int samples = 10000,
                                                 std::uint64_t seed = 0x5eedULL) {
  detail::check_dimension(c, x);
  const Eigen::Index n = x.size();
  const double v0 = evaluate(c, x);
  const Matrix xs = symmetrize(e.X);
  auto remainder = [&](const Vector& h) {
    return evaluate(c, x + h) - v0 - e.p.dot(h) - 0.5 * h.dot(xs * h);
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  MembershipResult result;
  result.radii = radii;
  for (double r : radii) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (double frac : {1.0, 0.5, 0.1, 0.01}) {
        for (double sign : {1.0, -1.0}) {
          Vector h = Vector::Zero(n);
          h(i) = sign * frac * r;
          worst = std::min(worst, remainder(h));
        }
      }
    }
    for (int s = 0; s < samples; ++s) {
      Vector dir(n);
      for (Eigen::Index i = 0; i < n; ++i) dir(i) = normal(rng);
      if (n > 1 && s % 2 == 1) {
        // sparse directions reach kink-adjacent regions more often
        for (Eigen::Index i = 0; i < n; ++i)
          if (unit(rng) < 0.5) dir(i) = 0.0;
      }
      const double norm = dir.norm();
      if (norm == 0.0) continue;
      const double radius = r * std::pow(unit(rng), 1.0 / static_cast<double>(n));
      worst = std::min(worst, remainder(dir * (radius / norm)));
    }
    result.min_remainder.push_back(worst);
    if (worst < -1e-3 * r * r) result.passed = false;
  }
  return result;
}

namespace detail {

// min sum_i u_i^{q_i/2}/q_i over u >= 0, sum u_i = total, for exponents > 2.
inline double convex_waterfill(const std::vector<double>& q, double total) {
  if (q.empty()) return total == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  if (total <= 0.0) return 0.0;
  auto mass = [&](double lambda) {
    double s = 0.0;
    for (double qi : q) s += std::pow(2.0 * lambda, 2.0 / (qi - 2.0));
    return s;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (mass(hi) < total) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) < total ? lo : hi) = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  double value = 0.0;
  double used = 0.0;
  for (double qi : q) {
    const double u = std::pow(2.0 * lambda, 2.0 / (qi - 2.0));
    used += u;
    value += std::pow(u, qi / 2.0) / qi;
  }
  // rescale to hit the constraint exactly
  const double scale = total / used;
  value = 0.0;
  for (double qi : q) value += std::pow(std::pow(2.0 * lambda, 2.0 / (qi - 2.0)) * scale, qi / 2.0) / qi;
  return value;
}

inline double power_sum_sphere_infimum(const std::vector<double>& exponents, double eta) {
  std::vector<double> convex;
  std::vector<double> concave;
  for (double q : exponents) (q > 2.0 ? convex : concave).push_back(q);
  const double total = eta * eta;
  double best = convex.empty() ? std::numeric_limits<double>::infinity()
                               : convex_waterfill(convex, total);
  // A concave term is minimized at a vertex, so at most one concave
  // coordinate carries mass at the optimum.
  for (double qj : concave) {
    auto objective = [&](double t) {
      return std::pow(t, qj / 2.0) / qj + convex_waterfill(convex, total - t);
    };
    if (convex.empty()) {
      best = std::min(best, objective(total));
      continue;
    }
    constexpr int kGrid = 400;
    int arg = 0;
    double val = objective(0.0);
    for (int i = 1; i <= kGrid; ++i) {
      const double v = objective(total * i / kGrid);
      if (v < val) {
        val = v;
        arg = i;
      }
    }
    double lo = total * std::max(arg - 1, 0) / kGrid;
    double hi = total * std::min(arg + 1, kGrid) / kGrid;
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
      const double m1 = hi - ratio * (hi - lo);
      const double m2 = lo + ratio * (hi - lo);
      (objective(m1) < objective(m2) ? hi : lo) = (objective(m1) < objective(m2) ? m2 : m1);
    }
    best = std::min({best, val, objective(0.5 * (lo + hi))});
  }
  return best;
}

}  // namespace detail

/// inf of V over the Euclidean sphere |x| = eta.
inline double sphere_infimum(const Candidate& c, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("sphere_infimum: eta must be positive");
  return std::visit(
      overloaded{
          [&](const PowerSum& f) { return detail::power_sum_sphere_infimum(f.exponents, eta); },
          [&](const WeightedAbsSum& f) {
            return *std::min_element(f.weights.begin(), f.weights.end()) * eta;
          },
          [&](const Quadratic& f) { return min_eigenvalue(f.P) * eta * eta; },
          [&](const Smoothed&) -> double {
            throw InvalidArgument("sphere_infimum is not available for smoothed candidates");
          },
      },
      c);
}

}  // namespace slf
