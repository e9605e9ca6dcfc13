#pragma once

// Quintic connectors that glue an even C2 inner function on |s| < a to the
// power branch |s|^p / p beyond b, and the forward-completeness bound
// L y <= c y + g for the resulting C2 surrogate.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slf/candidates.hpp"
#include "slf/errors.hpp"
#include "slf/expr.hpp"
#include "slf/generator.hpp"
#include "slf/linalg.hpp"
#include "slf/parallel.hpp"
#include "slf/sde_model.hpp"

namespace slf {

/// v(s) = (kappa / 2) s^2 with kappa = a^{p-2}.
inline Expr default_inner(double a, double p) {
  const double kappa = std::pow(a, p - 2.0);
  return parse(detail::format_number(kappa / 2.0) + "*x1^2", 1);
}

inline Expr quadratic_inner(double kappa) {
  return parse(detail::format_number(kappa / 2.0) + "*x1^2", 1);
}

/// Largest jump in value, slope or curvature across the two knots.
inline double connector_residual(const ConnectorSpec& s) {
  const ScalarJet va = inner_jet(s.inner, s.a);
  const ScalarJet ca = connector_quintic_jet(s, s.a);
  const ScalarJet cb = connector_quintic_jet(s, s.b);
  const ScalarJet pb = power_branch_jet(s.p, s.b);
  return std::max({std::abs(ca.value - va.value), std::abs(ca.d1 - va.d1), std::abs(ca.d2 - va.d2),
                   std::abs(cb.value - pb.value), std::abs(cb.d1 - pb.d1), std::abs(cb.d2 - pb.d2)});
}

struct ConnectorFit {
  ConnectorSpec spec;
  double residual = 0.0;            // max jump in value, slope, curvature at the knots
  double monomial_residual = 0.0;   // max-norm of M alpha - rhs for the |s|^k form
  double min_slope = 0.0;       // min of c' over the interior samples
  double min_slope_at = 0.0;
};

namespace detail {

inline std::array<double, 6> connector_row(int derivative, double r) {
  std::array<double, 6> row{};
  for (int k = 0; k < 6; ++k) {
    double coeff = 1.0;
    for (int j = 0; j < derivative; ++j) coeff *= (k - j);
    const int power = k - derivative;
    row[static_cast<std::size_t>(k)] = power < 0 ? 0.0 : coeff * std::pow(r, power);
  }
  return row;
}

}  // namespace detail

/// Solves the six boundary conditions at |s| = a (match the inner function)
/// and |s| = b (match |s|^p / p), then validates the curve. The solve runs in
/// t = (|s| - a) / (b - a); alpha is expanded from it afterwards.
inline ConnectorFit fit_connector_report(double a, double b, double p, const Expr& inner) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("connector: a must be positive");
  if (!(b > a) || !std::isfinite(b)) throw InvalidArgument("connector: need a < b");
  if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("connector: p must be positive");
  if (inner.dimension() != 1) throw DimensionError("connector: inner function must be one-dimensional");

  constexpr int kInnerSamples = 201;
  for (int i = 0; i < kInnerSamples; ++i) {
    const double s = a * i / (kInnerSamples - 1.0);
    const ScalarJet plus = inner_jet(inner, s);
    const ScalarJet minus = inner_jet(inner, -s);
    if (std::abs(plus.value - minus.value) > 1e-12 * (1.0 + std::abs(plus.value)))
      throw InvalidArgument("connector: inner function is not even on [-a, a]");
    if (i == 0 ? std::abs(plus.value) > 1e-15 : !(plus.value > 0.0))
      throw InvalidArgument("connector: inner function must be positive definite on [-a, a]");
  }
  const ScalarJet va = inner_jet(inner, a);
  const ScalarJet pb = power_branch_jet(p, b);
  if (!(pb.value > va.value))
    throw InvalidArgument("connector: need b^p/p > v(a)");

  // t-basis: beta_0..2 follow from the conditions at t = 0, beta_3..5 from a
  // 3x3 system at t = 1
  const long double h = static_cast<long double>(b) - a;
  std::array<long double, 6> beta{};
  beta[0] = va.value;
  beta[1] = h * va.d1;
  beta[2] = h * h * va.d2 / 2.0L;
  Eigen::Matrix<long double, 3, 3> m3;
  m3 << 1, 1, 1, 3, 4, 5, 6, 12, 20;
  Eigen::Matrix<long double, 3, 1> r3;
  r3 << pb.value - beta[0] - beta[1] - beta[2], h * pb.d1 - beta[1] - 2.0L * beta[2],
      h * h * pb.d2 - 2.0L * beta[2];
  const Eigen::Matrix<long double, 3, 1> tail = m3.fullPivLu().solve(r3);
  for (int k = 0; k < 3; ++k) beta[static_cast<std::size_t>(k + 3)] = tail(k);

  ConnectorFit fit;
  fit.spec.a = a;
  fit.spec.b = b;
  fit.spec.p = p;
  fit.spec.inner = inner;
  for (std::size_t k = 0; k < 6; ++k) fit.spec.beta[k] = static_cast<double>(beta[k]);
  // alpha_j = sum_k beta_k C(k, j) (-a)^(k-j) / h^k
  for (int j = 0; j < 6; ++j) {
    long double acc = 0.0L;
    for (int k = j; k < 6; ++k) {
      long double binom = 1.0L;
      for (int q = 0; q < j; ++q) binom = binom * (k - q) / (q + 1);
      acc += beta[static_cast<std::size_t>(k)] * binom * std::pow(-static_cast<long double>(a), k - j) /
             std::pow(h, k);
    }
    fit.spec.alpha[static_cast<std::size_t>(j)] = static_cast<double>(acc);
  }

  const std::array<double, 6> targets{va.value, pb.value, va.d1, pb.d1, va.d2, pb.d2};
  for (int row = 0; row < 6; ++row) {
    const auto r = detail::connector_row(row / 2, row % 2 == 0 ? a : b);
    long double acc = -static_cast<long double>(targets[static_cast<std::size_t>(row)]);
    for (std::size_t k = 0; k < 6; ++k) acc += static_cast<long double>(r[k]) * fit.spec.alpha[k];
    fit.monomial_residual = std::max(fit.monomial_residual, static_cast<double>(std::abs(acc)));
  }
  fit.residual = connector_residual(fit.spec);
  if (!(fit.residual < 1e-9))
    throw ConvergenceError("connector: boundary residual " + detail::format_number(fit.residual) +
                           " exceeds 1e-9");

  constexpr int kSlopeSamples = 10000;
  fit.min_slope = std::numeric_limits<double>::infinity();
  for (int i = 1; i < kSlopeSamples; ++i) {
    const double r = a + (b - a) * i / static_cast<double>(kSlopeSamples);
    const double slope = connector_quintic_jet(fit.spec, r).d1;
    if (slope < fit.min_slope) {
      fit.min_slope = slope;
      fit.min_slope_at = r;
    }
  }
  if (!(fit.min_slope > 0.0)) {
    std::ostringstream msg;
    msg << "connector: curve has an interior extremum near |x| = " << fit.min_slope_at
        << " (slope " << fit.min_slope << ")";
    throw InvalidArgument(msg.str());
  }
  return fit;
}

inline ConnectorSpec fit_connector(double a, double b, double p, const Expr& inner) {
  return fit_connector_report(a, b, p, inner).spec;
}

inline ConnectorSpec fit_connector(double a, double b, double p) {
  return fit_connector(a, b, p, default_inner(a, p));
}

inline Candidate build_smoothed(const PowerSum& base, const std::vector<ConnectorSpec>& specs) {
  if (base.exponents.size() != specs.size())
    throw DimensionError("build_smoothed: need one connector per coordinate");
  Smoothed s{base, specs};
  Candidate c = s;
  validate(c);
  for (const auto& spec : specs) {
    if (!(connector_residual(spec) < 1e-8))
      throw InvalidArgument("build_smoothed: connector is not C2 at its knots");
  }
  return c;
}

/// Smoothed surrogate of a power sum with the same radii on every axis and
/// the default inner function.
inline Candidate smooth_power_sum(const PowerSum& base, double a, double b) {
  std::vector<ConnectorSpec> specs;
  for (double p : base.exponents) specs.push_back(fit_connector(a, b, p));
  return build_smoothed(base, specs);
}

struct FcipOptions {
  double half_width = 10.0;     // L: outer radius of the sampled regions
  double far_factor = 10.0;     // far-field shell at far_factor * L
  std::size_t budget = 60000;   // approximate points per region family
};

struct FcipCertificate {
  double c = 0.0;
  double g = 0.0;
  double case_a_max = -std::numeric_limits<double>::infinity();
  double case_b_bound = -std::numeric_limits<double>::infinity();
  double case_c_bound = -std::numeric_limits<double>::infinity();
  bool verdict = false;
  std::optional<Vector> violation;  // worst Case (a) point when the verdict fails
  double largest_radius = 0.0;
  std::size_t case_a_points = 0;
  std::size_t case_b_points = 0;
  std::size_t case_c_points = 0;
  std::string grid_description;
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v;
  if (count == 1) return {0.5 * (lo + hi)};
  for (int i = 0; i < count; ++i) v.push_back(lo + (hi - lo) * i / static_cast<double>(count - 1));
  return v;
}

inline int per_axis_count(std::size_t budget, int n, int lo = 3) {
  const double c = std::floor(std::pow(static_cast<double>(budget), 1.0 / n));
  return std::max(lo, static_cast<int>(c));
}

// Product of per-axis value lists.
inline std::vector<Vector> product(const std::vector<std::vector<double>>& axes) {
  const int n = static_cast<int>(axes.size());
  std::vector<Vector> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (const auto& a : axes)
    if (a.empty()) return out;
  for (;;) {
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    out.push_back(std::move(x));
    int i = 0;
    while (i < n && ++idx[static_cast<std::size_t>(i)] == axes[static_cast<std::size_t>(i)].size())
      idx[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return out;
}

inline std::vector<double> outer_values(double b, double L, int count) {
  std::vector<double> v;
  const int half = std::max(2, count / 2);
  for (double x : linspace(b, std::max(L, b), half)) {
    v.push_back(x);
    v.push_back(-x);
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

struct MaxResult {
  double value = -std::numeric_limits<double>::infinity();
  Vector at;
};

inline MaxResult max_generator(const SdeSystem& sys, const Candidate& c, const std::vector<Vector>& pts) {
  std::vector<double> values(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const SemijetElement e = jet_at(c, pts[i]);
    values[i] = apply_generator(sys, pts[i], e.p, e.X).value;
  });
  MaxResult r;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (values[i] > r.value || std::isnan(values[i])) {
      r.value = values[i];
      r.at = pts[i];
      if (std::isnan(values[i])) break;
    }
  }
  return r;
}

}  // namespace detail

/// Case (a): L V <= 0 where every |x_i| >= b_i, sampled out to L and on a
/// far-field shell. Case (b): max of L V over |x_i| <= a_i. Case (c): max
/// over the mixed regions where a nonempty set S of coordinates has
/// |x_i| < b_i and the rest sit in [b_i, L]. Result: c = 0 and
/// g = max(0, case b, case c); the verdict is the Case (a) sign test.
inline FcipCertificate fcip_certificate(const SdeSystem& sys, const Candidate& smoothed,
                                        const FcipOptions& opt = {}) {
  const auto* s = std::get_if<Smoothed>(&smoothed);
  if (!s) throw InvalidArgument("fcip_certificate: candidate must be a smoothed power sum");
  validate(smoothed);
  sys.validate();
  if (dimension(smoothed) != sys.n) throw DimensionError("fcip_certificate: dimension mismatch");
  if (!(opt.half_width > 0.0) || !(opt.far_factor >= 1.0))
    throw InvalidArgument("fcip_certificate: bad sampling options");
  const int n = sys.n;
  const double L = opt.half_width;
  FcipCertificate cert;

  // Case (a)
  {
    const int m = detail::per_axis_count(opt.budget, n, 4);
    std::vector<std::vector<double>> axes;
    for (const auto& spec : s->connectors) axes.push_back(detail::outer_values(spec.b, L, m));
    auto pts = detail::product(axes);
    const double far = opt.far_factor * L;
    std::vector<std::vector<double>> dir_axes(static_cast<std::size_t>(n), {-1.0, -0.5, 0.5, 1.0});
    if (n > 6) dir_axes.assign(static_cast<std::size_t>(n), {-1.0, 1.0});
    if (n > 12) dir_axes.clear();
    for (const Vector& d : detail::product(dir_axes)) {
      const Vector x = d * (far / d.norm());
      bool outside = true;
      for (int i = 0; i < n; ++i) outside = outside && std::abs(x(i)) >= s->connectors[static_cast<std::size_t>(i)].b;
      if (outside) pts.push_back(x);
    }
    for (const auto& x : pts) cert.largest_radius = std::max(cert.largest_radius, x.norm());
    cert.case_a_points = pts.size();
    const auto r = detail::max_generator(sys, smoothed, pts);
    cert.case_a_max = r.value;
    cert.verdict = r.value <= 0.0;
    if (!cert.verdict) cert.violation = r.at;
  }

  // Case (b)
  {
    int m = detail::per_axis_count(opt.budget, n, 5);
    if (m % 2 == 0) ++m;  // keeps the origin in the lattice
    std::vector<std::vector<double>> axes;
    for (const auto& spec : s->connectors) axes.push_back(detail::linspace(-spec.a, spec.a, m));
    const auto pts = detail::product(axes);
    cert.case_b_points = pts.size();
    cert.case_b_bound = detail::max_generator(sys, smoothed, pts).value;
  }

  // Case (c)
  {
    const std::size_t subsets = (std::size_t{1} << n) - 1;
    const std::size_t per_subset = std::max<std::size_t>(opt.budget / subsets, 64);
    for (std::size_t mask = 1; mask <= subsets; ++mask) {
      int m = detail::per_axis_count(per_subset, n, 4);
      if (m % 2 == 0) ++m;
      std::vector<std::vector<double>> axes;
      for (int i = 0; i < n; ++i) {
        const auto& spec = s->connectors[static_cast<std::size_t>(i)];
        if (mask & (std::size_t{1} << i)) {
          // |x_i| < b_i, endpoints excluded
          auto v = detail::linspace(-spec.b, spec.b, m + 2);
          axes.emplace_back(v.begin() + 1, v.end() - 1);
        } else {
          axes.push_back(detail::outer_values(spec.b, L, m));
        }
      }
      const auto pts = detail::product(axes);
      cert.case_c_points += pts.size();
      cert.case_c_bound = std::max(cert.case_c_bound, detail::max_generator(sys, smoothed, pts).value);
    }
  }

  cert.c = 0.0;
  cert.g = std::max({0.0, cert.case_b_bound, cert.case_c_bound});
  std::ostringstream desc;
  desc << "M^b sampled to radius " << L << " plus far shell at " << opt.far_factor * L
       << "; M_a lattice; " << ((std::size_t{1} << n) - 1) << " mixed-region archetypes";
  cert.grid_description = desc.str();
  return cert;
}

inline bool fcip_conclusion(const FcipCertificate& cert) { return cert.verdict; }

struct ConnectorCurveRow {
  double x = 0.0;
  double v_branch = 0.0;
  double c_branch = 0.0;
  double power_branch = 0.0;
};

/// Samples of the three branches on [0, x_max] for plotting.
inline std::vector<ConnectorCurveRow> connector_curve(const ConnectorSpec& spec, double x_max,
                                                      int samples) {
  if (samples < 2) throw InvalidArgument("connector_curve: need at least two samples");
  std::vector<ConnectorCurveRow> rows;
  for (int i = 0; i < samples; ++i) {
    const double x = x_max * i / static_cast<double>(samples - 1);
    Vector at(1);
    at(0) = x;
    rows.push_back({x, spec.inner.eval(at), connector_quintic_jet(spec, x).value,
                    std::pow(x, spec.p) / spec.p});
  }
  return rows;
}

}  // namespace slf
