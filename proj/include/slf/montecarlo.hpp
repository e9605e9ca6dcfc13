#pragma once

// Euler-Maruyama paths of dx = f dt + sum_a sigma_a dw_a, stopped at the
// first visit of the origin, with exceedance and hitting-time statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "slf/candidates.hpp"
#include "slf/errors.hpp"
#include "slf/linalg.hpp"
#include "slf/parallel.hpp"
#include "slf/sde_model.hpp"

namespace slf {

/// Philox4x32 with 10 rounds.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Standard normals for one path: draw j of path i depends only on
/// (seed, i, j).
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, path_(path) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const Philox4x32::Counter out = Philox4x32::generate(
        {static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32),
         static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32)},
        key_);
    ++block_;
    const std::uint64_t a = (std::uint64_t{out[0]} << 32) | out[1];
    const std::uint64_t b = (std::uint64_t{out[2]} << 32) | out[3];
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  Philox4x32::Key key_;
  std::uint64_t path_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

struct SimConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  double hit_eps = 1e-4;
  bool stopped = true;
  // in one dimension a sign change between steps also counts as hitting 0
  bool detect_crossing = true;
  std::vector<double> thresholds{1.0};
  int time_points = 21;
  std::size_t retain_paths = 0;  // at most 100 full trajectories

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("sim: dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("sim: horizon must be positive");
    if (dt > horizon) throw InvalidArgument("sim: dt must not exceed the horizon");
    if (n_paths < 1) throw InvalidArgument("sim: n_paths must be at least 1");
    if (!(hit_eps > 0.0)) throw InvalidArgument("sim: hit_eps must be positive");
    if (time_points < 2) throw InvalidArgument("sim: time_points must be at least 2");
    if (retain_paths > 100) throw InvalidArgument("sim: at most 100 paths can be retained");
    for (double eta : thresholds)
      if (!(eta >= 0.0)) throw InvalidArgument("sim: thresholds must be non-negative");
  }

  std::size_t steps() const {
    return static_cast<std::size_t>(std::max<long long>(1, std::llround(horizon / dt)));
  }
};

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
};

/// Wilson score interval at 95%.
inline Interval wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double m = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / m;
  const double denom = 1.0 + z * z / m;
  const double centre = (phat + z * z / (2.0 * m)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / m + z * z / (4.0 * m * m)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct ExceedanceStat {
  double eta = 0.0;
  std::size_t count = 0;
  double frequency = 0.0;
  Interval wilson;
};

struct PathStats {
  std::size_t n_paths = 0;
  std::size_t n_failed = 0;
  std::size_t n_exploded = 0;
  std::size_t n_hit = 0;
  std::size_t n_steps = 0;
  double dt = 0.0;  // effective step horizon / n_steps
  double horizon = 0.0;
  double hit_eps = 0.0;
  bool stopped = true;
  std::uint64_t seed = 0;
  std::vector<ExceedanceStat> exceedance;
  std::vector<double> time_grid;
  std::vector<double> tau0_cdf;  // fraction of valid paths with tau0 <= t
  std::vector<double> quantile_levels{0.5, 0.9, 0.99};
  std::vector<double> terminal_quantiles;           // of |x(T ^ tau0)|
  std::vector<std::vector<double>> envelope;        // [level][time] quantiles of |x(t)|
  Vector terminal_mean;
  double terminal_second_moment = 0.0;              // mean of |x(T ^ tau0)|^2
  std::vector<std::vector<Vector>> retained;        // full trajectories
};

namespace detail {

struct PathResult {
  double sup = 0.0;
  double tau = std::numeric_limits<double>::infinity();
  Vector terminal;
  std::vector<double> norms;  // |x| at the time grid
  bool failed = false;
  bool exploded = false;
  std::vector<Vector> trajectory;
};

inline std::vector<std::size_t> grid_steps(std::size_t steps, int points) {
  std::vector<std::size_t> out;
  for (int j = 0; j < points; ++j)
    out.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(j) * steps / (points - 1))));
  return out;
}

inline PathResult simulate_path(const SdeSystem& sys, const Vector& x0, const SimConfig& cfg,
                                std::size_t steps, double dt, const std::vector<std::size_t>& marks,
                                std::size_t index) {
  const int n = sys.n;
  PathResult r;
  r.norms.assign(marks.size(), 0.0);
  NormalStream normals(cfg.seed, index);
  const double sqdt = std::sqrt(dt);
  const bool keep = index < cfg.retain_paths;

  Vector x = x0;
  Vector next(n);
  std::size_t mark = 0;
  auto record = [&](std::size_t k) {
    const double norm = x.norm();
    while (mark < marks.size() && marks[mark] == k) r.norms[mark++] = norm;
    if (keep) r.trajectory.push_back(x);
  };

  bool frozen = cfg.stopped && x.norm() <= cfg.hit_eps;
  if (frozen) r.tau = 0.0;
  r.sup = x.norm();
  record(0);
  std::size_t k = 0;
  try {
    for (; k < steps && !frozen; ++k) {
      const std::span<const double> at(x.data(), static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) next(i) = x(i) + sys.drift[static_cast<std::size_t>(i)].eval(at) * dt;
      for (int a = 0; a < sys.d; ++a) {
        const double dw = sqdt * normals.next();
        const auto& col = sys.diffusion[static_cast<std::size_t>(a)];
        for (int i = 0; i < n; ++i) next(i) += col[static_cast<std::size_t>(i)].eval(at) * dw;
      }
      if (!next.allFinite()) {
        r.exploded = true;
        break;
      }
      if (cfg.stopped) {
        if (n == 1 && cfg.detect_crossing && x(0) * next(0) < 0.0) {
          next(0) = 0.0;
          frozen = true;
        } else if (next.norm() <= cfg.hit_eps) {
          frozen = true;
        }
        if (frozen) r.tau = static_cast<double>(k + 1) * dt;
      }
      x = next;
      r.sup = std::max(r.sup, x.norm());
      record(k + 1);
    }
  } catch (const DomainError&) {
    r.failed = true;
    return r;
  }
  if (r.exploded) {
    const double inf = std::numeric_limits<double>::infinity();
    r.sup = inf;
    r.tau = inf;
    r.terminal = Vector::Constant(n, inf);
    for (; mark < marks.size(); ++mark) r.norms[mark] = inf;
    return r;
  }
  // frozen or finished: the rest of the time grid sees the stopped state
  const double norm = x.norm();
  for (; mark < marks.size(); ++mark) r.norms[mark] = norm;
  r.terminal = x;
  return r;
}

// Nearest-rank quantile of sorted values.
inline double sorted_quantile(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double rank = std::ceil(level * static_cast<double>(sorted.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size()))) - 1;
  return sorted[idx];
}

}  // namespace detail

/// Euler-Maruyama with per-path counter-based noise. Results are reduced in
/// path order, so they do not depend on the worker count.
inline PathStats simulate(const SdeSystem& sys, const Vector& x0, const SimConfig& cfg) {
  sys.validate();
  cfg.validate();
  sys.check_point(x0);
  const std::size_t steps = cfg.steps();
  const double dt = cfg.horizon / static_cast<double>(steps);
  const auto marks = detail::grid_steps(steps, cfg.time_points);

  std::vector<detail::PathResult> paths(cfg.n_paths);
  parallel_for(cfg.n_paths, [&](std::size_t i) {
    paths[i] = detail::simulate_path(sys, x0, cfg, steps, dt, marks, i);
  });

  PathStats st;
  st.n_paths = cfg.n_paths;
  st.n_steps = steps;
  st.dt = dt;
  st.horizon = cfg.horizon;
  st.hit_eps = cfg.hit_eps;
  st.stopped = cfg.stopped;
  st.seed = cfg.seed;
  for (std::size_t m : marks) st.time_grid.push_back(static_cast<double>(m) * dt);

  std::vector<const detail::PathResult*> valid;
  for (const auto& p : paths) {
    if (p.failed) {
      ++st.n_failed;
      continue;
    }
    valid.push_back(&p);
    if (p.exploded) ++st.n_exploded;
    if (std::isfinite(p.tau)) ++st.n_hit;
  }
  const std::size_t m = valid.size();

  for (double eta : cfg.thresholds) {
    ExceedanceStat e;
    e.eta = eta;
    for (const auto* p : valid) e.count += p->sup > eta ? 1 : 0;
    e.frequency = m == 0 ? 0.0 : static_cast<double>(e.count) / static_cast<double>(m);
    e.wilson = wilson_interval(e.count, m);
    st.exceedance.push_back(e);
  }

  for (double t : st.time_grid) {
    std::size_t hits = 0;
    for (const auto* p : valid) hits += p->tau <= t ? 1 : 0;
    st.tau0_cdf.push_back(m == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(m));
  }

  std::vector<double> terminal;
  st.terminal_mean = Vector::Zero(sys.n);
  for (const auto* p : valid) {
    terminal.push_back(p->terminal.norm());
    st.terminal_mean += p->terminal;
    st.terminal_second_moment += p->terminal.squaredNorm();
  }
  if (m > 0) {
    st.terminal_mean /= static_cast<double>(m);
    st.terminal_second_moment /= static_cast<double>(m);
  }
  std::sort(terminal.begin(), terminal.end());
  for (double level : st.quantile_levels) st.terminal_quantiles.push_back(detail::sorted_quantile(terminal, level));

  st.envelope.assign(st.quantile_levels.size(), std::vector<double>(marks.size(), 0.0));
  std::vector<double> column(m);
  for (std::size_t j = 0; j < marks.size(); ++j) {
    for (std::size_t i = 0; i < m; ++i) column[i] = valid[i]->norms[j];
    std::sort(column.begin(), column.end());
    for (std::size_t q = 0; q < st.quantile_levels.size(); ++q)
      st.envelope[q][j] = detail::sorted_quantile(column, st.quantile_levels[q]);
  }

  for (std::size_t i = 0; i < std::min(cfg.retain_paths, paths.size()); ++i)
    st.retained.push_back(paths[i].trajectory);
  return st;
}

struct ChebyshevReport {
  double v_x0 = 0.0;
  double v_eta = 0.0;
  double bound = 0.0;  // V(x0) / V_eta
  double eta = 0.0;
  double slack = 0.01;
  ExceedanceStat exceedance;
  bool passed = false;
  PathStats stats;
};

/// P[sup |x(t ^ tau0)| > eta] <= V(x0) / V_eta with V_eta the infimum of V
/// on the sphere of radius eta; passes when the Wilson upper bound stays
/// within bound + slack.
inline ChebyshevReport check_chebyshev_bound(const SdeSystem& sys, const Candidate& c, const Vector& x0,
                                             double eta, SimConfig cfg, double slack = 0.01) {
  validate(c);
  if (dimension(c) != sys.n) throw DimensionError("chebyshev: candidate dimension differs from system");
  ChebyshevReport rep;
  rep.eta = eta;
  rep.slack = slack;
  rep.v_x0 = evaluate(c, x0);
  rep.v_eta = sphere_infimum(c, eta);
  rep.bound = rep.v_x0 / rep.v_eta;
  cfg.thresholds = {eta};
  cfg.stopped = true;
  rep.stats = simulate(sys, x0, cfg);
  rep.exceedance = rep.stats.exceedance.front();
  rep.passed = rep.bound >= 1.0 || rep.exceedance.wilson.upper <= rep.bound + slack;
  return rep;
}

struct StabilityProfile {
  std::vector<Vector> x0s;
  std::vector<double> etas;
  std::vector<std::vector<ExceedanceStat>> table;  // [x0][eta]
  std::vector<std::vector<double>> terminal_quantiles;  // [x0][level]
  std::vector<double> quantile_levels;
  // per eta: exceedance is nonincreasing as |x0| shrinks
  std::vector<bool> ns_trend;
};

/// Exceedance table over starting points and thresholds. Every row reuses
/// the same seed, so rows share their noise.
inline StabilityProfile estimate_stability_profile(const SdeSystem& sys, const std::vector<Vector>& x0s,
                                                   const std::vector<double>& etas, SimConfig cfg) {
  StabilityProfile prof;
  prof.x0s = x0s;
  prof.etas = etas;
  cfg.thresholds = etas;
  for (const auto& x0 : x0s) {
    const PathStats st = simulate(sys, x0, cfg);
    prof.table.push_back(st.exceedance);
    prof.terminal_quantiles.push_back(st.terminal_quantiles);
    prof.quantile_levels = st.quantile_levels;
  }
  std::vector<std::size_t> order(x0s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x0s[a].norm() > x0s[b].norm(); });
  for (std::size_t j = 0; j < etas.size(); ++j) {
    bool monotone = true;
    for (std::size_t k = 1; k < order.size(); ++k)
      monotone = monotone && prof.table[order[k]][j].frequency <= prof.table[order[k - 1]][j].frequency;
    prof.ns_trend.push_back(monotone);
  }
  return prof;
}

}  // namespace slf
