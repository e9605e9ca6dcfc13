#pragma once

// Scenario files and the commands behind the slfcert tool.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "slf/candidates.hpp"
#include "slf/checker.hpp"
#include "slf/connector.hpp"
#include "slf/errors.hpp"
#include "slf/io.hpp"
#include "slf/lqg.hpp"
#include "slf/montecarlo.hpp"
#include "slf/sde_model.hpp"

namespace slf::cli {

using json = io::json;
namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotVerified = 2;

/// Malformed scenario content; the message starts with the JSON path.
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& path, const std::string& what) : Error(path + ": " + what) {}
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_string(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

namespace detail {

inline const json& require(const json& node, const std::string& path, const char* key) {
  if (!node.is_object()) throw ScenarioError(path, "expected an object");
  auto it = node.find(key);
  if (it == node.end()) throw ScenarioError(path + "/" + key, "missing");
  return *it;
}

inline double as_number(const json& node, const std::string& path) {
  if (!node.is_number()) throw ScenarioError(path, "expected a number");
  return node.get<double>();
}

inline double number_or(const json& node, const std::string& path, const char* key, double fallback) {
  if (!node.is_object() || !node.contains(key)) return fallback;
  return as_number(node[key], path + "/" + key);
}

inline std::string as_string(const json& node, const std::string& path) {
  if (!node.is_string()) throw ScenarioError(path, "expected a string");
  return node.get<std::string>();
}

inline std::vector<double> as_numbers(const json& node, const std::string& path) {
  if (!node.is_array()) throw ScenarioError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(as_number(node[i], path + "/" + std::to_string(i)));
  return out;
}

inline Matrix as_matrix(const json& node, const std::string& path) {
  if (!node.is_array()) throw ScenarioError(path, "expected an array of rows");
  if (node.empty()) return Matrix(0, 0);
  const auto cols = node[0].is_array() ? node[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(node.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto row = as_numbers(node[i], path + "/" + std::to_string(i));
    if (row.size() != cols) throw ScenarioError(path + "/" + std::to_string(i), "ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return m;
}

inline Expr parse_at(const std::string& text, int n, const std::string& path) {
  try {
    return parse(text, n);
  } catch (const ParseError& e) {
    throw ScenarioError(path, e.what());
  }
}

}  // namespace detail

struct Scenario {
  json doc;
  std::string hash;
  std::string name;

  static Scenario from_text(const std::string& text) {
    Scenario s;
    try {
      s.doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ScenarioError("", std::string("invalid JSON: ") + e.what());
    }
    if (!s.doc.is_object()) throw ScenarioError("", "scenario must be a JSON object");
    s.hash = hash_string(text);
    s.name = s.doc.contains("name") ? detail::as_string(s.doc["name"], "/name") : "";
    return s;
  }

  static Scenario load(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot read scenario file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
  }

  bool has(const char* key) const { return doc.contains(key) && !doc[key].is_null(); }

  /// "system": "ou_additive" | {"builtin": name} | {"n", "drift", "diffusion", "name"}
  SdeSystem system() const {
    const json& node = detail::require(doc, "", "system");
    const std::string path = "/system";
    try {
      if (node.is_string()) return builtin_example(node.get<std::string>());
      if (node.contains("builtin")) return builtin_example(detail::as_string(node["builtin"], path + "/builtin"));
      const int n = static_cast<int>(detail::as_number(detail::require(node, path, "n"), path + "/n"));
      if (n < 1) throw ScenarioError(path + "/n", "must be at least 1");
      const json& drift = detail::require(node, path, "drift");
      if (!drift.is_array()) throw ScenarioError(path + "/drift", "expected an array of expressions");
      if (static_cast<int>(drift.size()) != n)
        throw ScenarioError(path + "/drift", "needs exactly n = " + std::to_string(n) + " entries");
      SdeSystem sys;
      sys.n = n;
      sys.name = node.contains("name") ? detail::as_string(node["name"], path + "/name") : name;
      for (std::size_t i = 0; i < drift.size(); ++i) {
        const std::string p = path + "/drift/" + std::to_string(i);
        sys.drift.push_back(detail::parse_at(detail::as_string(drift[i], p), n, p));
      }
      const json& diff = node.contains("diffusion") ? node["diffusion"] : json::array();
      if (!diff.is_array()) throw ScenarioError(path + "/diffusion", "expected an array of columns");
      for (std::size_t a = 0; a < diff.size(); ++a) {
        const std::string pa = path + "/diffusion/" + std::to_string(a);
        if (!diff[a].is_array() || static_cast<int>(diff[a].size()) != n)
          throw ScenarioError(pa, "each column needs exactly n entries");
        std::vector<Expr> col;
        for (std::size_t i = 0; i < diff[a].size(); ++i) {
          const std::string p = pa + "/" + std::to_string(i);
          col.push_back(detail::parse_at(detail::as_string(diff[a][i], p), n, p));
        }
        sys.diffusion.push_back(std::move(col));
      }
      sys.d = static_cast<int>(sys.diffusion.size());
      sys.validate();
      return sys;
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      throw ScenarioError(path, e.what());
    }
  }

  /// "candidate": {"family": "power_sum", "exponents": [...]} |
  /// {"family": "abs_sum", "weights": [...]} | {"family": "quadratic", "P": [[...]]}
  Candidate candidate() const {
    const json& node = detail::require(doc, "", "candidate");
    const std::string path = "/candidate";
    const std::string family = detail::as_string(detail::require(node, path, "family"), path + "/family");
    Candidate c;
    if (family == "power_sum") {
      c = PowerSum{detail::as_numbers(detail::require(node, path, "exponents"), path + "/exponents")};
    } else if (family == "abs_sum") {
      c = WeightedAbsSum{detail::as_numbers(detail::require(node, path, "weights"), path + "/weights")};
    } else if (family == "quadratic") {
      c = Quadratic{detail::as_matrix(detail::require(node, path, "P"), path + "/P")};
    } else if (family == "smoothed") {
      const PowerSum base{detail::as_numbers(detail::require(node, path, "exponents"), path + "/exponents")};
      try {
        c = smooth_power_sum(base, detail::number_or(node, path, "a", 0.25), detail::number_or(node, path, "b", 1.0));
      } catch (const Error& e) {
        throw ScenarioError(path, e.what());
      }
    } else {
      throw ScenarioError(path + "/family", "unknown family '" + family + "'");
    }
    try {
      validate(c);
    } catch (const Error& e) {
      throw ScenarioError(path, e.what());
    }
    return c;
  }

  /// "l": ["abs(x1)", ...]
  std::vector<Expr> rates(int n) const {
    std::vector<Expr> out;
    if (!has("l")) return out;
    const json& node = doc["l"];
    if (!node.is_array()) throw ScenarioError("/l", "expected an array of expressions");
    for (std::size_t i = 0; i < node.size(); ++i) {
      const std::string p = "/l/" + std::to_string(i);
      out.push_back(detail::parse_at(detail::as_string(node[i], p), n, p));
    }
    return out;
  }

  GridSpec grid() const {
    GridSpec g;
    if (!has("grid")) return g;
    const json& node = doc["grid"];
    g.half_width = detail::number_or(node, "/grid", "half_width", g.half_width);
    g.points_per_axis = static_cast<int>(detail::number_or(node, "/grid", "points_per_axis", g.points_per_axis));
    if (node.contains("shells")) {
      if (!node["shells"].is_boolean()) throw ScenarioError("/grid/shells", "expected a boolean");
      g.shells = node["shells"].get<bool>();
    }
    return g;
  }

  double tol() const { return detail::number_or(doc, "", "tol", 1e-9); }

  LqgProblem lqg() const {
    const json& node = detail::require(doc, "", "lqg");
    LqgProblem p;
    p.A = detail::as_matrix(detail::require(node, "/lqg", "A"), "/lqg/A");
    p.B = detail::as_matrix(detail::require(node, "/lqg", "B"), "/lqg/B");
    p.Q = detail::as_matrix(detail::require(node, "/lqg", "Q"), "/lqg/Q");
    p.R = detail::as_matrix(detail::require(node, "/lqg", "R"), "/lqg/R");
    p.G = node.contains("G") ? detail::as_matrix(node["G"], "/lqg/G") : Matrix(p.A.rows(), 0);
    try {
      p.validate();
    } catch (const Error& e) {
      throw ScenarioError("/lqg", e.what());
    }
    return p;
  }

  /// "simulation": {"x0": [...] or "x0_list": [[...]], "dt", "horizon",
  /// "n_paths", "seed", "hit_eps", "thresholds", "stopped", "time_points",
  /// "retain_paths", "eta"}
  SimConfig sim_config() const {
    const json& node = detail::require(doc, "", "simulation");
    const std::string path = "/simulation";
    SimConfig cfg;
    cfg.dt = detail::number_or(node, path, "dt", cfg.dt);
    cfg.horizon = detail::number_or(node, path, "horizon", cfg.horizon);
    cfg.n_paths = static_cast<std::size_t>(detail::number_or(node, path, "n_paths", static_cast<double>(cfg.n_paths)));
    if (node.contains("seed")) {
      if (!node["seed"].is_number_unsigned()) throw ScenarioError(path + "/seed", "expected a non-negative integer");
      cfg.seed = node["seed"].get<std::uint64_t>();
    }
    cfg.hit_eps = detail::number_or(node, path, "hit_eps", cfg.hit_eps);
    if (node.contains("thresholds")) cfg.thresholds = detail::as_numbers(node["thresholds"], path + "/thresholds");
    if (node.contains("stopped")) {
      if (!node["stopped"].is_boolean()) throw ScenarioError(path + "/stopped", "expected a boolean");
      cfg.stopped = node["stopped"].get<bool>();
    }
    cfg.time_points = static_cast<int>(detail::number_or(node, path, "time_points", cfg.time_points));
    cfg.retain_paths = static_cast<std::size_t>(detail::number_or(node, path, "retain_paths", 0.0));
    try {
      cfg.validate();
    } catch (const Error& e) {
      throw ScenarioError(path, e.what());
    }
    return cfg;
  }

  std::vector<Vector> start_points(int n) const {
    const json& node = detail::require(doc, "", "simulation");
    std::vector<Vector> out;
    auto check = [&](const std::vector<double>& v, const std::string& p) {
      if (static_cast<int>(v.size()) != n)
        throw ScenarioError(p, "start point has dimension " + std::to_string(v.size()) + ", system has n=" + std::to_string(n));
      out.push_back(to_vector(v));
    };
    if (node.contains("x0_list")) {
      const json& list = node["x0_list"];
      if (!list.is_array()) throw ScenarioError("/simulation/x0_list", "expected an array of points");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string p = "/simulation/x0_list/" + std::to_string(i);
        check(detail::as_numbers(list[i], p), p);
      }
    } else {
      check(detail::as_numbers(detail::require(node, "/simulation", "x0"), "/simulation/x0"), "/simulation/x0");
    }
    return out;
  }
};

struct RunOptions {
  fs::path out_dir = ".";
  std::optional<std::uint64_t> seed;  // already resolved against the environment
};

struct CommandResult {
  int exit_code = kExitOk;
  json report;
  std::vector<fs::path> written;
};

namespace detail {

inline void write_file(const fs::path& file, const std::string& content, CommandResult& res) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << content;
  if (!out) throw Error("failed writing " + file.string());
  res.written.push_back(file);
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

inline json header(const Scenario& s, const char* command) {
  return {{"command", command}, {"scenario", s.name}, {"scenario_hash", s.hash}};
}

inline std::vector<double> fcip_exponents(const Candidate& c) {
  return std::visit(overloaded{
                        [](const PowerSum& f) { return f.exponents; },
                        [](const WeightedAbsSum& f) { return std::vector<double>(f.weights.size(), 1.0); },
                        [](const Quadratic& f) { return std::vector<double>(static_cast<std::size_t>(f.P.rows()), 2.0); },
                        [](const Smoothed& f) { return f.base.exponents; },
                    },
                    c);
}

}  // namespace detail

/// Origin class, SLF classification, plain check, forward completeness and
/// the resulting stability conclusion.
inline CommandResult cmd_classify(const Scenario& s, const RunOptions& opt) {
  CommandResult res;
  const SdeSystem sys = s.system();
  const Candidate c = s.candidate();
  if (dimension(c) != sys.n)
    throw ScenarioError("/candidate", "dimension " + std::to_string(dimension(c)) + " differs from system n=" + std::to_string(sys.n));
  const auto rates = s.rates(sys.n);
  const Grid grid = make_grid(sys.n, s.grid());
  const double tol = s.tol();

  const OriginClass origin = classify_origin(sys);
  const LyapunovVerdict verdict = classify(sys, c, rates, grid, tol);
  CheckOptions copt;
  copt.tol = tol;
  const LyapunovVerdict plain = check_plain_supersolution(sys, c, zero_rate(sys.n), grid, copt);

  json fcip_json;
  bool fcip = false;
  const json fnode = s.has("fcip") ? s.doc["fcip"] : json::object();
  if (fnode.contains("assume")) {
    if (!fnode["assume"].is_boolean()) throw ScenarioError("/fcip/assume", "expected a boolean");
    fcip = fnode["assume"].get<bool>();
    fcip_json = {{"assumed", fcip}};
  } else {
    Candidate smoothed;
    if (std::holds_alternative<Smoothed>(c)) {
      smoothed = c;
    } else {
      const PowerSum base{detail::fcip_exponents(c)};
      try {
        smoothed = smooth_power_sum(base, detail::number_or(fnode, "/fcip", "a", 0.25),
                                    detail::number_or(fnode, "/fcip", "b", 1.0));
      } catch (const Error& e) {
        throw ScenarioError("/fcip", e.what());
      }
    }
    FcipOptions fo;
    fo.half_width = detail::number_or(fnode, "/fcip", "half_width", fo.half_width);
    const FcipCertificate cert = fcip_certificate(sys, smoothed, fo);
    fcip = fcip_conclusion(cert);
    fcip_json = io::to_json(cert);
    fcip_json["surrogate"] = io::to_json(smoothed);
  }

  const StabilityConclusion conclusion = stability_conclusion(verdict, origin, fcip);
  res.exit_code = conclusion.conclusion == Conclusion::None ? kExitNotVerified : kExitOk;
  json report = detail::header(s, "classify");
  report["system"] = io::to_json(sys);
  report["origin"] = to_string(origin);
  report["candidate"] = io::to_json(c);
  report["verdict"] = io::to_json(verdict);
  report["plain_check"] = io::to_json(plain);
  report["fcip"] = fcip_json;
  report["conclusion"] = to_string(conclusion.conclusion);
  report["grid_evidence"] = conclusion.grid_evidence;
  report["exit_code"] = res.exit_code;
  res.report = report;

  detail::ensure_dir(opt.out_dir);
  detail::write_file(opt.out_dir / "classify.json", report.dump(2) + "\n", res);
  detail::write_file(opt.out_dir / "classify_margins.csv", io::margins_csv(verdict, sys.n), res);
  return res;
}

inline CommandResult cmd_lqg(const Scenario& s, const RunOptions& opt) {
  CommandResult res;
  const LqgProblem prob = s.lqg();
  LqgGridOptions go;
  if (s.has("grid")) go.half_width = detail::number_or(s.doc["grid"], "/grid", "half_width", go.half_width);
  const LqgCertificate cert = certify_nas(prob, go);
  res.exit_code = cert.nas ? kExitOk : kExitNotVerified;
  json report = detail::header(s, "lqg");
  report["certificate"] = io::to_json(cert);
  report["conclusion"] = cert.nas ? (cert.ascip_eligible ? "ASiP" : "NAS") : "None";
  report["exit_code"] = res.exit_code;
  res.report = report;
  detail::ensure_dir(opt.out_dir);
  detail::write_file(opt.out_dir / "lqg.json", report.dump(2) + "\n", res);
  return res;
}

inline CommandResult cmd_simulate(const Scenario& s, const RunOptions& opt) {
  CommandResult res;
  const SdeSystem sys = s.system();
  SimConfig cfg = s.sim_config();
  if (opt.seed) cfg.seed = *opt.seed;
  const auto starts = s.start_points(sys.n);
  json report = detail::header(s, "simulate");
  report["system"] = io::to_json(sys);
  detail::ensure_dir(opt.out_dir);

  if (starts.size() == 1) {
    const PathStats stats = simulate(sys, starts.front(), cfg);
    report["x0"] = io::vector(starts.front());
    report["stats"] = io::to_json(stats);
    detail::write_file(opt.out_dir / "simulate_envelope.csv", io::envelope_csv(stats), res);
    if (!stats.retained.empty()) detail::write_file(opt.out_dir / "simulate_paths.csv", io::paths_csv(stats), res);
    const json& node = s.doc["simulation"];
    if (node.contains("eta") && s.has("candidate")) {
      const Candidate c = s.candidate();
      const double eta = detail::as_number(node["eta"], "/simulation/eta");
      const ChebyshevReport cheb = check_chebyshev_bound(sys, c, starts.front(), eta, cfg);
      report["chebyshev"] = io::to_json(cheb);
    }
  } else {
    const StabilityProfile prof = estimate_stability_profile(sys, starts, cfg.thresholds, cfg);
    report["profile"] = io::to_json(prof);
  }
  report["config"] = {{"dt", io::number(cfg.dt)}, {"horizon", io::number(cfg.horizon)},
                      {"n_paths", cfg.n_paths}, {"seed", cfg.seed}, {"hit_eps", io::number(cfg.hit_eps)},
                      {"stopped", cfg.stopped}};
  report["exit_code"] = kExitOk;
  res.report = report;
  detail::write_file(opt.out_dir / "simulate.json", report.dump(2) + "\n", res);
  return res;
}

/// "smooth": {"a", "b", "p", "inner" (optional), "x_max", "samples"}. With a
/// system section the forward-completeness certificate of the smoothed
/// power sum is added.
inline CommandResult cmd_smooth(const Scenario& s, const RunOptions& opt) {
  CommandResult res;
  const json& node = detail::require(s.doc, "", "smooth");
  const std::string path = "/smooth";
  const double a = detail::as_number(detail::require(node, path, "a"), path + "/a");
  const double b = detail::as_number(detail::require(node, path, "b"), path + "/b");
  const double p = detail::as_number(detail::require(node, path, "p"), path + "/p");
  const Expr inner = node.contains("inner")
                         ? detail::parse_at(detail::as_string(node["inner"], path + "/inner"), 1, path + "/inner")
                         : default_inner(a, p);
  ConnectorFit fit;
  try {
    fit = fit_connector_report(a, b, p, inner);
  } catch (const Error& e) {
    throw ScenarioError(path, e.what());
  }
  const double x_max = detail::number_or(node, path, "x_max", 1.5 * b);
  const int samples = static_cast<int>(detail::number_or(node, path, "samples", 601));
  json report = detail::header(s, "smooth");
  report["connector"] = io::to_json(fit.spec);
  report["min_slope"] = io::number(fit.min_slope);
  res.exit_code = kExitOk;
  if (s.has("system")) {
    const SdeSystem sys = s.system();
    std::vector<ConnectorSpec> specs(static_cast<std::size_t>(sys.n), fit.spec);
    const Candidate smoothed = build_smoothed(PowerSum{std::vector<double>(static_cast<std::size_t>(sys.n), p)}, specs);
    const FcipCertificate cert = fcip_certificate(sys, smoothed);
    report["fcip"] = io::to_json(cert);
    if (!cert.verdict) res.exit_code = kExitNotVerified;
  }
  report["exit_code"] = res.exit_code;
  res.report = report;
  detail::ensure_dir(opt.out_dir);
  detail::write_file(opt.out_dir / "smooth.csv", io::connector_csv(connector_curve(fit.spec, x_max, samples)), res);
  detail::write_file(opt.out_dir / "smooth.json", report.dump(2) + "\n", res);
  return res;
}

/// Merges every *.json report in dir (except summary.json) into summary.json.
inline CommandResult cmd_report(const fs::path& dir) {
  CommandResult res;
  if (!fs::is_directory(dir)) throw Error("report: " + dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".json" && p.filename() != "summary.json") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  json reports = json::array();
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error("report: " + f.filename().string() + " is not valid JSON: " + e.what());
    }
    json entry{{"file", f.filename().string()}};
    for (const char* key : {"command", "scenario", "scenario_hash", "conclusion", "exit_code"})
      if (doc.is_object() && doc.contains(key)) entry[key] = doc[key];
    reports.push_back(entry);
  }
  res.report = {{"command", "report"}, {"count", reports.size()}, {"reports", reports}};
  detail::write_file(dir / "summary.json", res.report.dump(2) + "\n", res);
  return res;
}

}  // namespace slf::cli
