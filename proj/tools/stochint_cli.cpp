// stochint: batch runner for the verification scenarios.
//
//   stochint list
//   stochint validate <config.json>
//   stochint run <config.json> [--seed N] [--paths M] [--level L] [--out DIR] [--threads T]
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
// 3 inconclusive (a convergence report was rejected).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "stochint/stochint.hpp"

namespace {

constexpr int kExitConfig = 2;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<int> level;
  std::string out;
  unsigned threads = 1;
};

void print_errors(const stochint::ConfigResult& res) {
  for (const auto& e : res.errors) std::cerr << "config error: " << e << '\n';
  if (!res.suggestions.empty()) {
    std::cerr << "did you mean:";
    for (const auto& s : res.suggestions) std::cerr << ' ' << s;
    std::cerr << '\n';
  }
}

std::optional<stochint::json> load(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    std::cerr << "config error: " << path << ": cannot open\n";
    return std::nullopt;
  }
  try {
    return stochint::json::parse(f, nullptr, true, true);
  } catch (const stochint::json::parse_error& e) {
    std::cerr << "config error: " << path << ": " << e.what() << '\n';
    return std::nullopt;
  }
}

int cmd_validate(const std::string& path) {
  const auto raw = load(path);
  if (!raw) return kExitConfig;
  const auto res = stochint::resolve_config(*raw);
  if (!res.ok()) {
    print_errors(res);
    return kExitConfig;
  }
  std::cout << res.config->to_json().dump(2) << '\n';
  return 0;
}

int cmd_run(const RunFlags& flags) {
  auto raw = load(flags.config);
  if (!raw) return kExitConfig;
  if (flags.seed) (*raw)["seed"] = *flags.seed;
  if (flags.paths) (*raw)["paths"] = *flags.paths;
  if (flags.level) (*raw)["level"] = *flags.level;
  const auto res = stochint::resolve_config(*raw);
  if (!res.ok()) {
    print_errors(res);
    return kExitConfig;
  }
  const stochint::ScenarioConfig& cfg = *res.config;

  std::string out = flags.out;
  if (out.empty()) out = cfg.output_dir;
  if (out.empty())
    if (const char* env = std::getenv("STOCHINT_OUT_DIR")) out = env;
  if (out.empty()) out = "stochint_out";

  stochint::set_worker_count(flags.threads);
  stochint::RunReport report;
  try {
    report = stochint::run_scenario(cfg);
  } catch (const stochint::Error& e) {
    std::cerr << "config error: " << cfg.scenario << ": " << e.what() << '\n';
    return kExitConfig;
  }
  stochint::write_report(report, out);

  for (const auto& r : report.rows)
    if (r.verdict != stochint::Verdict::pass)
      std::cout << to_string(r.verdict) << ": " << r.check_id << " level " << r.level << ": " << r.metric << " = "
                << stochint::format_number(r.value) << " (tolerance " << stochint::format_number(r.tolerance) << ")\n";
  std::cout << cfg.scenario << ": " << to_string(report.overall) << " (" << report.rows.size() << " rows) -> " << out
            << '\n';
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification scenarios for integrals against general stochastic measures"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List scenario ids, anchors and default tolerances");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config and print it fully resolved");
  validate->add_option("config", validate_path, "JSON config file")->required();

  RunFlags flags;
  auto* run = app.add_subcommand("run", "Run a scenario and write report.csv and verdicts.csv");
  run->add_option("config", flags.config, "JSON config file")->required();
  run->add_option("--seed", flags.seed, "Override the seed");
  run->add_option("--paths", flags.paths, "Override the number of sample paths M");
  run->add_option("--level", flags.level, "Override the refinement level");
  run->add_option("--out", flags.out, "Output directory (default: config output_dir, $STOCHINT_OUT_DIR, ./stochint_out)");
  run->add_option("--threads", flags.threads, "Worker threads")->check(CLI::Range(1u, 256u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*list) {
    std::cout << stochint::list_scenarios();
    return 0;
  }
  if (*validate) return cmd_validate(validate_path);
  return cmd_run(flags);
}
