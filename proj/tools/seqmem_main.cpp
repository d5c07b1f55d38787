#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqmem/config.hpp"
#include "seqmem/errors.hpp"
#include "seqmem/report.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::string log_path;
  std::vector<std::string> log_paths;
  long long seed = -1;
  int n_checkpoints = -1;
  std::vector<int> horizons;
  long long replay_budget = -1;
  bool rank_based = false;
  bool seed_set = false;
  bool checkpoints_set = false;
  bool horizons_set = false;
  bool budget_set = false;
  bool out_set = false;
};

void add_run_options(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "override the run seed");
  cmd->add_option("--checkpoints", args.n_checkpoints,
                  "override the number of evaluation checkpoints");
  cmd->add_option("--horizons", args.horizons,
                  "override the horizon set, e.g. --horizons 1,2,5")
      ->delimiter(',');
  cmd->add_option("--replay-budget", args.replay_budget,
                  "override the retrospective replay budget");
}

seqmem::CliOverrides collect_overrides(const CLI::App* cmd, const CliArgs& args) {
  seqmem::CliOverrides ov;
  if (cmd->count("--seed") > 0) ov.seed = static_cast<std::uint64_t>(args.seed);
  if (cmd->count("--checkpoints") > 0) ov.n_checkpoints = args.n_checkpoints;
  if (cmd->count("--horizons") > 0) ov.horizons = args.horizons;
  if (cmd->count("--replay-budget") > 0)
    ov.replay_budget = static_cast<int>(args.replay_budget);
  if (cmd->count("--out") > 0) ov.out_dir = args.out_dir;
  return ov;
}

int dispatch(const CLI::App& app, CLI::App* run_cmd, CLI::App* resume_cmd,
             CLI::App* metrics_cmd, CLI::App* compare_cmd, const CliArgs& args) {
  if (run_cmd->parsed() || resume_cmd->parsed()) {
    CLI::App* cmd = run_cmd->parsed() ? run_cmd : resume_cmd;
    seqmem::RunConfig config = seqmem::parse_config(args.config_path);
    seqmem::apply_overrides(config, collect_overrides(cmd, args));
    seqmem::ReportBundle bundle = run_cmd->parsed() ? seqmem::cmd_run(config)
                                                    : seqmem::cmd_resume(config);
    std::printf("%s", seqmem::summary_text(bundle.report).c_str());
    std::printf("run log: %s\n", bundle.run_log_path.c_str());
    std::printf("metrics: %s\n", bundle.metrics_csv_path.c_str());
    return 0;
  }
  if (metrics_cmd->parsed()) {
    seqmem::ReportBundle bundle =
        seqmem::cmd_metrics(args.log_path, args.out_dir);
    std::printf("%s", seqmem::summary_text(bundle.report).c_str());
    std::printf("metrics: %s\n", bundle.metrics_csv_path.c_str());
    return 0;
  }
  if (compare_cmd->parsed()) {
    std::string text =
        seqmem::cmd_compare(args.log_paths, args.out_dir, args.rank_based);
    std::printf("%s", text.c_str());
    return 0;
  }
  std::fprintf(stderr, "%s", app.help().c_str());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential memory evaluation for LLM agents"};
  app.require_subcommand(0, 1);
  CliArgs args;

  CLI::App* run_cmd = app.add_subcommand("run", "execute a configured run");
  add_run_options(run_cmd, args);

  CLI::App* resume_cmd =
      app.add_subcommand("resume", "continue an interrupted run from its token");
  add_run_options(resume_cmd, args);

  CLI::App* metrics_cmd = app.add_subcommand(
      "metrics", "recompute diagnostics from an existing run log");
  metrics_cmd->add_option("log", args.log_path, "run log (JSONL)")->required();
  metrics_cmd->add_option("--out", args.out_dir,
                          "output directory (default: alongside the log)");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "rank methods across run logs");
  compare_cmd->add_option("logs", args.log_paths, "run logs (JSONL), two or more")
      ->expected(-2);
  compare_cmd->add_option("--out", args.out_dir, "write compare.txt here");
  compare_cmd->add_flag("--rank-based", args.rank_based,
                        "use rank normalization instead of min-max");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return dispatch(app, run_cmd, resume_cmd, metrics_cmd, compare_cmd, args);
  } catch (const seqmem::InvariantViolation& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return 4;
  } catch (const seqmem::RunAborted& e) {
    std::fprintf(stderr, "run aborted: %s\n", e.what());
    std::fprintf(stderr, "resume with: seqmem resume --config <same config>\n");
    return 3;
  } catch (const seqmem::GatewayError& e) {
    std::fprintf(stderr, "gateway failure: %s\n", e.what());
    return 3;
  } catch (const seqmem::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
