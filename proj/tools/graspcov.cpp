// graspcov command line: reference | evaluate | farthest | validate-config
//
// Exit codes: 0 ok, 1 invalid config or arguments, 2 runtime error,
// 3 budget exceeded.

#include "graspcov/pipeline/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace graspcov;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kRuntime = 2, kBudget = 3 };

struct Overrides {
  std::string config;
  std::string out;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
  std::vector<double> eps;
  std::vector<double> gamma;
  bool resume = false;
  bool quiet = false;
};

RunConfig load_with_overrides(const Overrides& o) {
  RunConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.eps.empty()) cfg.eps = o.eps;
  if (!o.gamma.empty()) cfg.gamma = o.gamma;
  cfg.validate();
  return cfg;
}

RunOptions run_options(const Overrides& o) {
  RunOptions opt;
  opt.jobs = std::max(1u, o.jobs);
  opt.resume = o.resume;
  if (!o.quiet) opt.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
  return opt;
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::BudgetExceeded ? kBudget : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grasp sampler coverage toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "run config (.toml or .json)")->required();
  };
  auto add_run_flags = [&](CLI::App* cmd) {
    add_config(cmd);
    cmd->add_option("--out", o.out, "output directory (overrides the config)");
    cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--resume", o.resume, "skip work whose outputs are complete and current");
    cmd->add_flag("--quiet", o.quiet, "no progress messages");
  };

  auto* reference = app.add_subcommand("reference", "enumerate and label reference grasp sets");
  add_run_flags(reference);

  auto* evaluate = app.add_subcommand("evaluate", "run samplers and report coverage against the references");
  add_run_flags(evaluate);
  std::string references;
  evaluate->add_option("--references", references, "reference directory (default <out>/references)");
  std::uint64_t seed = 0;
  auto* seed_opt = evaluate->add_option("--seed-override", seed, "run a single seed instead of the config's");
  evaluate->add_option("--eps", o.eps, "cov1 thresholds (override the config)");
  evaluate->add_option("--gamma", o.gamma, "robustness thresholds (override the config)");

  auto* farthest = app.add_subcommand("farthest", "pick k diverse robust grasps from a reference file");
  std::string ref_file, farthest_out;
  std::size_t k = 100;
  double gamma = 0.5;
  farthest->add_option("--reference", ref_file, "reference file (.gref)")->required();
  farthest->add_option("--k", k, "number of grasps")->default_val(100);
  farthest->add_option("--gamma", gamma, "robustness threshold")->default_val(0.5);
  farthest->add_option("--out", farthest_out, "output CSV")->required();

  auto* validate = app.add_subcommand("validate-config", "check a config and print its hash");
  add_config(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }
  if (*seed_opt) o.seed = seed;

  RunConfig cfg;
  try {
    if (!farthest->parsed()) cfg = load_with_overrides(o);
    if (farthest->parsed() && !(gamma >= 0.0 && gamma <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "--gamma must be in [0, 1]");
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kInvalid;
  }

  try {
    if (validate->parsed()) {
      std::cout << "ok " << config_hash(cfg) << '\n';
    } else if (reference->parsed()) {
      cmd_reference(cfg, run_options(o));
    } else if (evaluate->parsed()) {
      std::optional<std::filesystem::path> dir;
      if (!references.empty()) dir = references;
      const EvaluateResult r = cmd_evaluate(cfg, run_options(o), dir);
      std::cout << r.aggregate_csv.string() << '\n' << r.precision_csv.string() << '\n';
    } else if (farthest->parsed()) {
      const auto grasps = cmd_farthest(ref_file, k, gamma, farthest_out);
      std::cout << grasps.size() << " grasps written to " << farthest_out << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    if (e.code() == ErrorCode::InvalidK) return kInvalid;
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
