#pragma once

// JSON and CSV renderings of the analysis results.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "slf/candidates.hpp"
#include "slf/checker.hpp"
#include "slf/connector.hpp"
#include "slf/linalg.hpp"
#include "slf/lqg.hpp"
#include "slf/montecarlo.hpp"
#include "slf/sde_model.hpp"

namespace slf::io {

using json = nlohmann::ordered_json;

/// Non-finite values become the strings "inf", "-inf" and "nan".
inline json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline json vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

inline json vector(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

inline json matrix(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector(Vector(m.row(i).transpose())));
  return out;
}

/// %.17g, which round-trips every double.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json to_json(const SdeSystem& sys) {
  json drift = json::array();
  for (const auto& e : sys.drift) drift.push_back(e.render());
  json diffusion = json::array();
  for (const auto& col : sys.diffusion) {
    json c = json::array();
    for (const auto& e : col) c.push_back(e.render());
    diffusion.push_back(c);
  }
  return {{"name", sys.name}, {"n", sys.n}, {"d", sys.d}, {"drift", drift}, {"diffusion", diffusion},
          {"lipschitz_unverified", true}};
}

inline json to_json(const ConnectorSpec& s) {
  json alpha = json::array();
  for (double a : s.alpha) alpha.push_back(number(a));
  return {{"a", number(s.a)}, {"b", number(s.b)}, {"p", number(s.p)}, {"inner", s.inner.render()},
          {"alpha", alpha}, {"residual", number(connector_residual(s))}};
}

inline json to_json(const Candidate& c) {
  json out{{"family", family_name(c)}};
  std::visit(overloaded{
                 [&](const PowerSum& f) { out["exponents"] = vector(f.exponents); },
                 [&](const WeightedAbsSum& f) { out["weights"] = vector(f.weights); },
                 [&](const Quadratic& f) { out["P"] = matrix(f.P); },
                 [&](const Smoothed& f) {
                   out["exponents"] = vector(f.base.exponents);
                   json specs = json::array();
                   for (const auto& s : f.connectors) specs.push_back(to_json(s));
                   out["connectors"] = specs;
                 },
             },
             c);
  return out;
}

inline json to_json(const SemijetElement& e) {
  return {{"p", vector(e.p)}, {"X", matrix(e.X)}, {"provenance", to_string(e.provenance)}};
}

inline json to_json(const Counterexample& ce) {
  json out{{"x", vector(ce.x)}, {"p", vector(ce.element.p)}, {"X", matrix(ce.element.X)},
           {"margin", number(ce.margin)}, {"provenance", to_string(ce.element.provenance)},
           {"analytic", ce.analytic}};
  if (ce.analytic) out["kink_coordinate"] = ce.kink_coordinate;
  return out;
}

/// worst_count lowest margins are listed individually.
inline json to_json(const LyapunovVerdict& v, std::size_t worst_count = 20) {
  std::vector<std::size_t> order(v.margin_records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v.margin_records[a].margin < v.margin_records[b].margin;
  });
  json worst = json::array();
  for (std::size_t k = 0; k < std::min(worst_count, order.size()); ++k) {
    const auto& r = v.margin_records[order[k]];
    worst.push_back({{"x", vector(r.x)}, {"margin", number(r.margin)}});
  }
  json ces = json::array();
  for (const auto& ce : v.counterexamples) ces.push_back(to_json(ce));
  json analytic = json::array();
  for (const auto& ce : v.analytic_refutations) analytic.push_back(to_json(ce));
  return {{"classification", to_string(v.classification)},
          {"weak_supersolution", v.weak_supersolution},
          {"plain_supersolution", to_string(v.plain_supersolution)},
          {"l", v.l_used},
          {"worst_margin", number(v.worst_margin)},
          {"worst_point", vector(v.worst_point)},
          {"worst_margins", worst},
          {"counterexamples", ces},
          {"analytic_refutations", analytic},
          {"grid", {{"points", v.grid_size}, {"description", v.grid_description}}}};
}

inline std::string margins_csv(const LyapunovVerdict& v, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += "x" + std::to_string(i + 1) + ",";
  out += "margin\n";
  for (const auto& r : v.margin_records) {
    for (Eigen::Index i = 0; i < r.x.size(); ++i) out += csv_number(r.x(i)) + ",";
    out += csv_number(r.margin) + "\n";
  }
  return out;
}

inline json to_json(const FcipCertificate& c) {
  json out{{"c", number(c.c)},
           {"g", number(c.g)},
           {"case_bounds",
            {{"case_a_max", number(c.case_a_max)},
             {"case_b_bound", number(c.case_b_bound)},
             {"case_c_bound", number(c.case_c_bound)}}},
           {"verdict", c.verdict},
           {"grid_meta",
            {{"largest_radius", number(c.largest_radius)},
             {"case_a_points", c.case_a_points},
             {"case_b_points", c.case_b_points},
             {"case_c_points", c.case_c_points},
             {"description", c.grid_description}}}};
  if (c.violation) out["violation"] = vector(*c.violation);
  return out;
}

inline json to_json(const RiccatiSolution& s) {
  return {{"P", matrix(s.P)}, {"residual", number(s.residual)}, {"iterations", s.iterations},
          {"K", matrix(s.K)}, {"A_closed", matrix(s.A_closed)},
          {"closed_loop_abscissa", number(s.closed_loop_abscissa)}};
}

inline json to_json(const LqgCertificate& c) {
  return {{"problem",
           {{"A", matrix(c.problem.A)}, {"B", matrix(c.problem.B)}, {"Q", matrix(c.problem.Q)},
            {"R", matrix(c.problem.R)}, {"G", matrix(c.problem.G)}}},
          {"riccati", to_json(c.riccati)},
          {"transform", {{"T", matrix(c.transform.T)}, {"pbar", vector(c.transform.pbar)}}},
          {"candidate", {{"family", "abs_sum"}, {"weights", vector(c.candidate.weights)}}},
          {"M", matrix(c.M)},
          {"M_min_eigenvalue", number(c.m_min_eigenvalue)},
          {"M_positive_definite", c.m_positive_definite},
          {"smooth_points", c.smooth_points},
          {"max_identity_error", number(c.max_identity_error)},
          {"identity_holds", c.identity_holds},
          {"max_generator", number(c.max_generator)},
          {"generator_negative", c.generator_negative},
          {"kink_points", c.kink_points},
          {"min_kink_margin", number(c.min_kink_margin)},
          {"kink_ok", c.kink_ok},
          {"fcip", {{"c", number(c.fcip_c)}, {"g", number(c.fcip_g)}, {"ok", c.fcip_ok}}},
          {"ascip_eligible", c.ascip_eligible},
          {"nas", c.nas},
          {"grid", c.grid_description}};
}

inline json to_json(const ExceedanceStat& e) {
  return {{"eta", number(e.eta)}, {"count", e.count}, {"frequency", number(e.frequency)},
          {"wilson95", json::array({number(e.wilson.lower), number(e.wilson.upper)})}};
}

inline json to_json(const PathStats& s) {
  json exc = json::array();
  for (const auto& e : s.exceedance) exc.push_back(to_json(e));
  json env = json::array();
  for (std::size_t q = 0; q < s.envelope.size(); ++q)
    env.push_back({{"level", number(s.quantile_levels[q])}, {"curve", vector(s.envelope[q])}});
  return {{"n_paths", s.n_paths},
          {"n_failed", s.n_failed},
          {"n_exploded", s.n_exploded},
          {"n_hit", s.n_hit},
          {"n_steps", s.n_steps},
          {"dt", number(s.dt)},
          {"horizon", number(s.horizon)},
          {"hit_eps", number(s.hit_eps)},
          {"stopped", s.stopped},
          {"seed", s.seed},
          {"exceedance", exc},
          {"time_grid", vector(s.time_grid)},
          {"tau0_cdf", vector(s.tau0_cdf)},
          {"quantile_levels", vector(s.quantile_levels)},
          {"terminal_quantiles", vector(s.terminal_quantiles)},
          {"envelope", env},
          {"terminal_mean", vector(s.terminal_mean)},
          {"terminal_second_moment", number(s.terminal_second_moment)}};
}

/// t, tau0 CDF and one quantile column per level.
inline std::string envelope_csv(const PathStats& s) {
  std::string out = "t,tau0_cdf";
  for (double level : s.quantile_levels) out += ",q" + csv_number(level);
  out += "\n";
  for (std::size_t j = 0; j < s.time_grid.size(); ++j) {
    out += csv_number(s.time_grid[j]) + "," + csv_number(s.tau0_cdf[j]);
    for (const auto& curve : s.envelope) out += "," + csv_number(curve[j]);
    out += "\n";
  }
  return out;
}

inline std::string paths_csv(const PathStats& s) {
  std::string out = "path,step,t";
  const int n = s.terminal_mean.size();
  for (int i = 0; i < n; ++i) out += ",x" + std::to_string(i + 1);
  out += "\n";
  for (std::size_t p = 0; p < s.retained.size(); ++p) {
    for (std::size_t k = 0; k < s.retained[p].size(); ++k) {
      out += std::to_string(p) + "," + std::to_string(k) + "," + csv_number(static_cast<double>(k) * s.dt);
      for (Eigen::Index i = 0; i < s.retained[p][k].size(); ++i) out += "," + csv_number(s.retained[p][k](i));
      out += "\n";
    }
  }
  return out;
}

inline json to_json(const ChebyshevReport& r) {
  return {{"eta", number(r.eta)},       {"v_x0", number(r.v_x0)},
          {"v_eta", number(r.v_eta)},   {"bound", number(r.bound)},
          {"slack", number(r.slack)},   {"exceedance", to_json(r.exceedance)},
          {"passed", r.passed}};
}

inline json to_json(const StabilityProfile& p) {
  json rows = json::array();
  for (std::size_t i = 0; i < p.x0s.size(); ++i) {
    json exc = json::array();
    for (const auto& e : p.table[i]) exc.push_back(to_json(e));
    rows.push_back({{"x0", vector(p.x0s[i])}, {"exceedance", exc},
                    {"terminal_quantiles", vector(p.terminal_quantiles[i])}});
  }
  json trend = json::array();
  for (bool b : p.ns_trend) trend.push_back(b);
  return {{"etas", vector(p.etas)}, {"quantile_levels", vector(p.quantile_levels)}, {"rows", rows},
          {"ns_trend_monotone", trend}};
}

inline std::string connector_csv(const std::vector<ConnectorCurveRow>& rows) {
  std::string out = "x,v_branch,c_branch,power_branch\n";
  for (const auto& r : rows)
    out += csv_number(r.x) + "," + csv_number(r.v_branch) + "," + csv_number(r.c_branch) + "," +
           csv_number(r.power_branch) + "\n";
  return out;
}

}  // namespace slf::io
