#pragma once

// Grid verification of the Lyapunov inequality -Lv - l >= 0 in the weak
// (some subjet element) and plain (every subjet element) sense.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "slf/candidates.hpp"
#include "slf/errors.hpp"
#include "slf/expr.hpp"
#include "slf/generator.hpp"
#include "slf/linalg.hpp"
#include "slf/parallel.hpp"
#include "slf/sde_model.hpp"

namespace slf {

struct GridSpec {
  double half_width = 2.0;
  int points_per_axis = 21;
  bool shells = true;
  int shell_min_exponent = 1;  // radii 10^-k for k in [min, max]
  int shell_max_exponent = 6;
};

struct Shell {
  double radius = 0.0;
  std::vector<std::size_t> indices;  // into Grid::points
};

struct Grid {
  std::vector<Vector> points;
  std::vector<Shell> shells;
  std::string description;
};

namespace detail {

inline std::vector<double> axis_values(double half_width, int count) {
  std::vector<double> v;
  if (count == 1) return {0.0};
  for (int i = 0; i < count; ++i)
    v.push_back(-half_width + 2.0 * half_width * i / static_cast<double>(count - 1));
  // snap the value closest to zero, or insert zero
  auto closest = std::min_element(v.begin(), v.end(),
                                  [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (std::abs(*closest) <= 1e-12 * half_width) {
    *closest = 0.0;
  } else {
    v.insert(std::upper_bound(v.begin(), v.end(), 0.0), 0.0);
  }
  return v;
}

// Unit directions used for the radial shells.
inline std::vector<Vector> shell_directions(int n) {
  std::vector<Vector> dirs;
  if (n <= 6) {
    std::vector<int> digits(static_cast<std::size_t>(n), -1);
    for (;;) {
      Vector d(n);
      bool nonzero = false;
      for (int i = 0; i < n; ++i) {
        d(i) = digits[static_cast<std::size_t>(i)];
        nonzero = nonzero || d(i) != 0.0;
      }
      if (nonzero) dirs.push_back(d / d.norm());
      int i = 0;
      while (i < n && ++digits[static_cast<std::size_t>(i)] > 1) digits[static_cast<std::size_t>(i++)] = -1;
      if (i == n) break;
    }
    return dirs;
  }
  for (int i = 0; i < n; ++i) {
    for (double s : {1.0, -1.0}) {
      Vector d = Vector::Zero(n);
      d(i) = s;
      dirs.push_back(d);
    }
  }
  for (double s : {1.0, -1.0}) dirs.push_back(Vector::Constant(n, s / std::sqrt(n)));
  return dirs;
}

struct PointLess {
  bool operator()(const Vector& a, const Vector& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  }
};

}  // namespace detail

/// Box [-L, L]^n with zero on every axis (so every kink slice through the
/// box lattice is present) plus radial shells around the origin.
inline Grid make_grid(int n, const GridSpec& spec = {}) {
  if (n < 1) throw DimensionError("make_grid: n must be at least 1");
  if (!(spec.half_width > 0.0)) throw InvalidArgument("grid half width must be positive");
  if (spec.points_per_axis < 1) throw InvalidArgument("grid needs at least one point per axis");
  const auto axis = detail::axis_values(spec.half_width, spec.points_per_axis);
  const double total = std::pow(static_cast<double>(axis.size()), n);
  if (total > 5e6) throw InvalidArgument("grid would exceed 5e6 points; lower points_per_axis");

  std::map<Vector, std::size_t, detail::PointLess> index_of;
  Grid grid;
  auto add = [&](const Vector& x) {
    auto [it, inserted] = index_of.emplace(x, grid.points.size());
    if (inserted) grid.points.push_back(x);
    return it->second;
  };

  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  for (;;) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = axis[idx[static_cast<std::size_t>(i)]];
    add(x);
    int i = 0;
    while (i < n && ++idx[static_cast<std::size_t>(i)] == axis.size()) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }

  if (spec.shells) {
    const auto dirs = detail::shell_directions(n);
    for (int k = spec.shell_min_exponent; k <= spec.shell_max_exponent; ++k) {
      Shell shell;
      shell.radius = std::pow(10.0, -k);
      for (const Vector& d : dirs) shell.indices.push_back(add(d * shell.radius));
      grid.shells.push_back(std::move(shell));
    }
  }
  grid.description = "box [-" + std::to_string(spec.half_width) + ", " +
                     std::to_string(spec.half_width) + "]^" + std::to_string(n) + " with " +
                     std::to_string(axis.size()) + " values per axis";
  if (spec.shells) {
    grid.description += ", shells at 10^-" + std::to_string(spec.shell_min_exponent) +
                        " .. 10^-" + std::to_string(spec.shell_max_exponent);
  }
  return grid;
}

/// A grid made of explicit points; duplicates are dropped.
inline Grid grid_from_points(const std::vector<Vector>& points, std::string description = "explicit points") {
  std::set<Vector, detail::PointLess> seen;
  Grid grid;
  for (const auto& x : points)
    if (seen.insert(x).second) grid.points.push_back(x);
  grid.description = std::move(description);
  return grid;
}

enum class PlainStatus { Holds, Refuted, Unknown };
enum class Classification { NotVerified, SLF, StrictSLF };
enum class Conclusion { None, NS, SiP, NAS, ASiP };

inline std::string_view to_string(PlainStatus s) {
  switch (s) {
    case PlainStatus::Holds: return "Holds";
    case PlainStatus::Refuted: return "RefutedWithCounterexample";
    case PlainStatus::Unknown: return "Unknown";
  }
  return "";
}

inline std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::NotVerified: return "NotVerified";
    case Classification::SLF: return "SLF";
    case Classification::StrictSLF: return "StrictSLF";
  }
  return "";
}

inline std::string_view to_string(Conclusion c) {
  switch (c) {
    case Conclusion::None: return "None";
    case Conclusion::NS: return "NS";
    case Conclusion::SiP: return "SiP";
    case Conclusion::NAS: return "NAS";
    case Conclusion::ASiP: return "ASiP";
  }
  return "";
}

struct MarginRecord {
  Vector x;
  double margin = 0.0;  // -Lv - l at the witness
};

struct Counterexample {
  Vector x;
  SemijetElement element;
  double margin = 0.0;
  // true when the element was built from the unbounded curvature direction
  // rather than taken from the sized adversarial family
  bool analytic = false;
  int kink_coordinate = -1;
};

struct LyapunovVerdict {
  bool weak_supersolution = false;
  PlainStatus plain_supersolution = PlainStatus::Unknown;
  Classification classification = Classification::NotVerified;
  std::vector<MarginRecord> margin_records;
  std::vector<Counterexample> counterexamples;
  // refutations whose element only holds on a ball smaller than the
  // membership radii; kept apart so every counterexample stays checkable
  std::vector<Counterexample> analytic_refutations;
  double worst_margin = std::numeric_limits<double>::infinity();
  Vector worst_point;
  std::string l_used;  // rendered rate function of the recorded margins
  std::size_t grid_size = 0;
  std::string grid_description;
};

struct CheckOptions {
  double tol = 1e-9;
  int adversarial_count = 64;
  std::size_t max_counterexamples = 32;
};

namespace detail {

inline void check_inputs(const SdeSystem& sys, const Candidate& c, const Expr& l, const Grid& grid,
                         double tol) {
  sys.validate();
  validate(c);
  if (dimension(c) != sys.n)
    throw DimensionError("candidate dimension " + std::to_string(dimension(c)) +
                         " differs from system dimension " + std::to_string(sys.n));
  if (l.dimension() != sys.n && l.depends_on_state())
    throw DimensionError("rate function dimension differs from system dimension");
  if (!(tol >= 0.0)) throw InvalidArgument("tol must be non-negative");
  for (const auto& x : grid.points) sys.check_point(x);
}

inline std::vector<double> rate_values(const Expr& l, const Grid& grid, int n) {
  const Expr rate = l.dimension() == n ? l : l.with_dimension(n);
  std::vector<double> values(grid.points.size());
  parallel_for(grid.points.size(), [&](std::size_t i) { values[i] = rate.eval(grid.points[i]); });
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0)) {
      std::string where;
      for (Eigen::Index k = 0; k < grid.points[i].size(); ++k)
        where += (k ? ", " : "") + std::to_string(grid.points[i](k));
      throw InvalidArgument("rate function l is negative at (" + where + ")");
    }
  }
  return values;
}

inline void fill_worst(LyapunovVerdict& v) {
  for (const auto& r : v.margin_records) {
    if (r.margin < v.worst_margin) {
      v.worst_margin = r.margin;
      v.worst_point = r.x;
    }
  }
}

}  // namespace detail

inline Expr zero_rate(int n) { return Expr::constant(0.0, n); }

/// Weak supersolution: at each grid point the canonical witness satisfies
/// -Lv - l >= -tol.
inline LyapunovVerdict check_weak_supersolution(const SdeSystem& sys, const Candidate& c,
                                                const Expr& l, const Grid& grid,
                                                double tol = 1e-9) {
  detail::check_inputs(sys, c, l, grid, tol);
  const auto rates = detail::rate_values(l, grid, sys.n);
  LyapunovVerdict v;
  v.grid_size = grid.points.size();
  v.grid_description = grid.description;
  v.l_used = l.render();
  v.margin_records.resize(grid.points.size());
  parallel_for(grid.points.size(), [&](std::size_t i) {
    const Vector& x = grid.points[i];
    const SemijetElement w = canonical_witness(c, x);
    const double margin = -apply_generator(sys, x, w.p, w.X).value - rates[i];
    v.margin_records[i] = {x, margin};
  });
  v.weak_supersolution = true;
  for (const auto& r : v.margin_records) v.weak_supersolution = v.weak_supersolution && r.margin >= -tol;
  detail::fill_worst(v);
  v.plain_supersolution = PlainStatus::Unknown;
  return v;
}

/// Plain supersolution: the true jet at smooth points, and at kinks the
/// canonical witness plus the adversarial family. When every sized element
/// passes at a kink but the noise loads the kink direction, the curvature
/// along that direction is unbounded in the subjet and the point is refuted
/// with an analytic element, reported under analytic_refutations.
inline LyapunovVerdict check_plain_supersolution(const SdeSystem& sys, const Candidate& c,
                                                 const Expr& l, const Grid& grid,
                                                 const CheckOptions& opt = {}) {
  detail::check_inputs(sys, c, l, grid, opt.tol);
  const auto rates = detail::rate_values(l, grid, sys.n);
  LyapunovVerdict v;
  v.grid_size = grid.points.size();
  v.grid_description = grid.description;
  v.l_used = l.render();
  v.margin_records.resize(grid.points.size());
  std::vector<std::vector<Counterexample>> found(grid.points.size());

  parallel_for(grid.points.size(), [&](std::size_t i) {
    const Vector& x = grid.points[i];
    auto margin_of = [&](const SemijetElement& e) {
      return -apply_generator(sys, x, e.p, e.X).value - rates[i];
    };
    const auto kinks = kink_coordinates(c, x);
    const SemijetElement witness = canonical_witness(c, x);
    const double witness_margin = margin_of(witness);
    v.margin_records[i] = {x, witness_margin};
    if (witness_margin < -opt.tol) found[i].push_back({x, witness, witness_margin, false, -1});
    if (kinks.empty()) return;

    bool refuted = !found[i].empty();
    for (auto& e : adversarial_elements(c, x, opt.adversarial_count)) {
      const double m = margin_of(e);
      if (m < -opt.tol) {
        found[i].push_back({x, std::move(e), m, false, -1});
        refuted = true;
      }
    }
    if (refuted) return;

    const Matrix sigma = sys.diffusion_at(x);
    for (int k : kinks) {
      const double load = sigma.row(k).squaredNorm();
      if (!(load > 0.0)) continue;
      // X_kk = t adds t * load / 2 to the generator
      SemijetElement e = witness;
      e.provenance = Provenance::Adversarial;
      const double t = 2.0 * (std::max(witness_margin, 0.0) + 1.0) / load;
      e.X(k, k) += t;
      found[i].push_back({x, e, margin_of(e), true, k});
      break;
    }
  });

  v.weak_supersolution = true;
  for (const auto& r : v.margin_records) v.weak_supersolution = v.weak_supersolution && r.margin >= -opt.tol;
  for (auto& list : found) {
    for (auto& ce : list) {
      auto& dest = ce.analytic ? v.analytic_refutations : v.counterexamples;
      if (dest.size() >= opt.max_counterexamples) continue;
      dest.push_back(std::move(ce));
    }
  }
  const bool any = std::any_of(found.begin(), found.end(), [](const auto& f) { return !f.empty(); });
  v.plain_supersolution =
      grid.points.empty() ? PlainStatus::Unknown : (any ? PlainStatus::Refuted : PlainStatus::Holds);
  detail::fill_worst(v);
  return v;
}

inline LyapunovVerdict check_plain_supersolution(const SdeSystem& sys, const Candidate& c,
                                                 const Expr& l, const Grid& grid, double tol) {
  CheckOptions opt;
  opt.tol = tol;
  return check_plain_supersolution(sys, c, l, grid, opt);
}

/// Positivity of l away from the origin: l > 0 at every nonzero grid point
/// and the minimum over each radial shell is positive.
inline bool rate_positive_off_origin(const Expr& l, const Grid& grid, int n) {
  const Expr rate = l.dimension() == n ? l : l.with_dimension(n);
  for (const auto& x : grid.points)
    if (x.norm() > 0.0 && !(rate.eval(x) > 0.0)) return false;
  for (const auto& shell : grid.shells) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i : shell.indices) lo = std::min(lo, rate.eval(grid.points[i]));
    if (!(lo > 0.0)) return false;
  }
  return true;
}

/// SLF when the weak check passes with l = 0; StrictSLF when some supplied
/// l, positive off the origin, also passes.
inline LyapunovVerdict classify(const SdeSystem& sys, const Candidate& c,
                                const std::vector<Expr>& l_candidates, const Grid& grid,
                                double tol = 1e-9) {
  LyapunovVerdict base = check_weak_supersolution(sys, c, zero_rate(sys.n), grid, tol);
  if (!base.weak_supersolution) {
    base.classification = Classification::NotVerified;
    return base;
  }
  base.classification = Classification::SLF;
  for (const Expr& l : l_candidates) {
    if (!rate_positive_off_origin(l, grid, sys.n)) continue;
    LyapunovVerdict strict = check_weak_supersolution(sys, c, l, grid, tol);
    if (strict.weak_supersolution) {
      strict.classification = Classification::StrictSLF;
      return strict;
    }
  }
  return base;
}

struct StabilityConclusion {
  Conclusion conclusion = Conclusion::None;
  bool grid_evidence = true;  // false only when an analytic argument backs the verdict
};

inline StabilityConclusion stability_conclusion(Classification cls, OriginClass origin, bool fcip,
                                                bool analytic = false) {
  StabilityConclusion out;
  out.grid_evidence = !analytic;
  if (!fcip || cls == Classification::NotVerified) return out;
  const bool strict = cls == Classification::StrictSLF;
  switch (origin) {
    case OriginClass::NoisyEquilibrium: out.conclusion = strict ? Conclusion::NAS : Conclusion::NS; break;
    case OriginClass::AlmostSureEquilibrium: out.conclusion = strict ? Conclusion::ASiP : Conclusion::SiP; break;
    case OriginClass::NotEquilibrium: break;
  }
  return out;
}

inline StabilityConclusion stability_conclusion(const LyapunovVerdict& v, OriginClass origin, bool fcip,
                                                bool analytic = false) {
  return stability_conclusion(v.classification, origin, fcip, analytic);
}

}  // namespace slf
