#pragma once

#include "slf/errors.hpp"
#include "slf/expr.hpp"
#include "slf/linalg.hpp"
#include "slf/sde_model.hpp"

namespace slf {

struct GeneratorValue {
  double value = 0.0;           // drift_part + diffusion_part
  double drift_part = 0.0;      // p . f(x)
  double diffusion_part = 0.0;  // 1/2 sum_a sigma_a^T X sigma_a
};

/// (Lv)(x, p, X) = p f(x) + 1/2 sum_a sigma_a(x)^T X sigma_a(x).
/// X is symmetrized on entry.
inline GeneratorValue apply_generator(const SdeSystem& sys, const Vector& x, const Vector& p,
                                      const Matrix& X) {
  sys.check_point(x);
  if (p.size() != sys.n) throw DimensionError("apply_generator: p has the wrong dimension");
  if (X.rows() != sys.n || X.cols() != sys.n)
    throw DimensionError("apply_generator: X has the wrong shape");
  const Matrix xs = symmetrize(X);
  GeneratorValue g;
  g.drift_part = p.dot(sys.drift_at(x));
  const Matrix sigma = sys.diffusion_at(x);
  double quad = 0.0;
  for (int a = 0; a < sys.d; ++a) quad += sigma.col(a).dot(xs * sigma.col(a));
  g.diffusion_part = 0.5 * quad;
  g.value = g.drift_part + g.diffusion_part;
  return g;
}

/// Generator applied to a smooth test function via its AD jet at x.
inline GeneratorValue apply_generator_smooth(const SdeSystem& sys, const Expr& phi,
                                             const Vector& x) {
  if (phi.dimension() != sys.n)
    throw DimensionError("apply_generator_smooth: test function dimension differs from n");
  const Jet2 jet = phi.eval_jet(x);
  if (!jet.smooth) throw NonSmoothPoint("test function is not C2 at the evaluation point");
  return apply_generator(sys, x, jet.gradient, jet.hessian);
}

}  // namespace slf
