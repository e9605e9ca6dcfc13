#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "slf/errors.hpp"
#include "slf/expr.hpp"
#include "slf/linalg.hpp"

namespace slf {

/// dx = f(x) dt + sum_a sigma_a(x) dw_a with x in R^n and d noise channels.
///
/// Local Lipschitz continuity of the coefficients is assumed and is not
/// checked; reports carry the "lipschitz_unverified" flag.
struct SdeSystem {
  int n = 0;
  int d = 0;
  std::vector<Expr> drift;                   // n entries
  std::vector<std::vector<Expr>> diffusion;  // d columns of n entries
  std::string name;

  void validate() const {
    if (n < 1) throw DimensionError("system dimension n must be at least 1");
    if (d < 0) throw DimensionError("noise dimension d must be non-negative");
    if (static_cast<int>(drift.size()) != n)
      throw DimensionError("drift must have exactly n components");
    if (static_cast<int>(diffusion.size()) != d)
      throw DimensionError("diffusion must have exactly d columns");
    for (const auto& e : drift)
      if (e.dimension() != n) throw DimensionError("drift expression dimension differs from n");
    for (const auto& col : diffusion) {
      if (static_cast<int>(col.size()) != n)
        throw DimensionError("every diffusion column must have exactly n components");
      for (const auto& e : col)
        if (e.dimension() != n)
          throw DimensionError("diffusion expression dimension differs from n");
    }
  }

  void check_point(const Vector& x) const {
    if (x.size() != n) {
      throw DimensionError("point has dimension " + std::to_string(x.size()) + ", system has n=" +
                           std::to_string(n));
    }
  }

  Vector drift_at(const Vector& x) const {
    check_point(x);
    Vector f(n);
    for (int i = 0; i < n; ++i) f(i) = drift[static_cast<std::size_t>(i)].eval(x);
    return f;
  }

  /// n x d matrix whose column a is sigma_a(x).
  Matrix diffusion_at(const Vector& x) const {
    check_point(x);
    Matrix s(n, d);
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < n; ++i)
        s(i, a) = diffusion[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)].eval(x);
    return s;
  }
};

/// Builds a system from expression strings. diffusion is column-major: d
/// arrays of n strings.
inline SdeSystem make_system(int n, const std::vector<std::string>& drift,
                             const std::vector<std::vector<std::string>>& diffusion,
                             std::string name = {}) {
  SdeSystem sys;
  sys.n = n;
  sys.d = static_cast<int>(diffusion.size());
  sys.name = std::move(name);
  if (static_cast<int>(drift.size()) != n)
    throw DimensionError("drift must have exactly n components");
  for (const auto& s : drift) sys.drift.push_back(parse(s, n));
  for (const auto& col : diffusion) {
    if (static_cast<int>(col.size()) != n)
      throw DimensionError("every diffusion column must have exactly n components");
    std::vector<Expr> parsed;
    parsed.reserve(col.size());
    for (const auto& s : col) parsed.push_back(parse(s, n));
    sys.diffusion.push_back(std::move(parsed));
  }
  sys.validate();
  return sys;
}

/// Affine drift A x and constant diffusion columns G_k.
inline SdeSystem make_linear_system(const Matrix& a, const Matrix& g, std::string name = {}) {
  if (a.rows() != a.cols()) throw DimensionError("drift matrix must be square");
  if (g.rows() != a.rows() && g.size() != 0)
    throw DimensionError("noise matrix must have n rows");
  SdeSystem sys;
  sys.n = static_cast<int>(a.rows());
  sys.d = static_cast<int>(g.cols());
  sys.name = std::move(name);
  for (int i = 0; i < sys.n; ++i) sys.drift.push_back(linear_form(a.row(i).transpose()));
  for (int k = 0; k < sys.d; ++k) {
    std::vector<Expr> col;
    for (int i = 0; i < sys.n; ++i) col.push_back(Expr::constant(g(i, k), sys.n));
    sys.diffusion.push_back(std::move(col));
  }
  sys.validate();
  return sys;
}

enum class OriginClass { AlmostSureEquilibrium, NoisyEquilibrium, NotEquilibrium };

inline std::string_view to_string(OriginClass c) {
  switch (c) {
    case OriginClass::AlmostSureEquilibrium: return "AlmostSureEquilibrium";
    case OriginClass::NoisyEquilibrium: return "NoisyEquilibrium";
    case OriginClass::NotEquilibrium: return "NotEquilibrium";
  }
  return "";
}

/// Noisy equilibrium: |f(0)| <= tol. Almost sure equilibrium: additionally
/// max_a |sigma_a(0)| <= tol.
inline OriginClass classify_origin(const SdeSystem& sys, double tol = 1e-12) {
  if (!(tol >= 0.0)) throw InvalidArgument("classify_origin: tol must be non-negative");
  const Vector zero = Vector::Zero(sys.n);
  if (sys.drift_at(zero).norm() > tol) return OriginClass::NotEquilibrium;
  const Matrix s = sys.diffusion_at(zero);
  for (int a = 0; a < sys.d; ++a)
    if (s.col(a).norm() > tol) return OriginClass::NoisyEquilibrium;
  return OriginClass::AlmostSureEquilibrium;
}

inline const std::vector<std::string>& builtin_example_names() {
  static const std::vector<std::string> names{"ou_additive", "geometric_half", "chained3"};
  return names;
}

/// ou_additive:    dx = -x dt + dw
/// geometric_half: dx = -x/2 dt + x dw
/// chained3:       dx = -x dt + (1, 0, x2)^T dw1 + (0, 1, 0)^T dw2 in R^3
inline SdeSystem builtin_example(std::string_view name) {
  if (name == "ou_additive") return make_system(1, {"-x1"}, {{"1"}}, "ou_additive");
  if (name == "geometric_half")
    return make_system(1, {"-x1/2"}, {{"x1"}}, "geometric_half");
  if (name == "chained3") {
    return make_system(3, {"-x1", "-x2", "-x3"}, {{"1", "0", "x2"}, {"0", "1", "0"}},
                       "chained3");
  }
  throw InvalidArgument("unknown builtin example '" + std::string(name) + "'");
}

}  // namespace slf
