#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "slf/slf.hpp"

namespace {

std::optional<std::uint64_t> parse_seed(const std::string& text, const char* origin) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw slf::InvalidArgument(std::string(origin) + ": seed '" + text + "' is not an unsigned integer");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Lyapunov function certification"};
  app.require_subcommand(1);

  std::string scenario_file;
  std::string out_dir = ".";
  int threads = 0;
  std::string seed_text;

  auto add_common = [&](CLI::App* sub, bool needs_scenario) {
    auto* opt = sub->add_option("--scenario", scenario_file, "scenario JSON file");
    if (needs_scenario) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads (default: hardware parallelism)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed_text, "random seed, overrides SLFCERT_SEED and the scenario");
  };

  auto* classify = app.add_subcommand("classify", "classify a candidate and derive a stability conclusion");
  auto* lqg = app.add_subcommand("lqg", "certify the LQ closed loop");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo statistics of the stopped process");
  auto* smooth = app.add_subcommand("smooth", "fit a connector curve and export it");
  auto* report = app.add_subcommand("report", "merge the JSON reports in --out into summary.json");
  for (auto* sub : {classify, lqg, simulate, smooth}) add_common(sub, true);
  add_common(report, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : slf::cli::kExitError;
  }

  try {
    slf::set_thread_count(threads);
    slf::cli::RunOptions opt;
    opt.out_dir = out_dir;
    if (!seed_text.empty()) {
      opt.seed = parse_seed(seed_text, "--seed");
    } else if (const char* env = std::getenv("SLFCERT_SEED"); env && *env) {
      opt.seed = parse_seed(env, "SLFCERT_SEED");
    }

    slf::cli::CommandResult result;
    if (report->parsed()) {
      result = slf::cli::cmd_report(out_dir);
    } else {
      const auto scenario = slf::cli::Scenario::load(scenario_file);
      if (classify->parsed()) result = slf::cli::cmd_classify(scenario, opt);
      if (lqg->parsed()) result = slf::cli::cmd_lqg(scenario, opt);
      if (simulate->parsed()) result = slf::cli::cmd_simulate(scenario, opt);
      if (smooth->parsed()) result = slf::cli::cmd_smooth(scenario, opt);
    }
    for (const auto& f : result.written) std::cout << "wrote " << f.string() << "\n";
    if (result.report.contains("conclusion")) std::cout << "conclusion: " << result.report["conclusion"].get<std::string>() << "\n";
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return slf::cli::kExitError;
  }
}
