#include "gaze_attn_app/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "gaze_attn/error.hpp"
#include "gaze_attn_app/commands.hpp"

namespace gaze_attn::app {
namespace {

void configure_logging() {
  static bool configured = false;
  if (!configured) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("gaze-attn"));
    spdlog::set_pattern("[%l] %v");
    configured = true;
  }
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("GAZE_ATTN_LOG"); env != nullptr && *env != '\0') {
    level = spdlog::level::from_str(env);
  }
  spdlog::set_level(level);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  configure_logging();

  CLI::App app{"Attention/eye-movement comparison toolkit", "gaze-attn"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string format;
  std::size_t jobs = 0;
  app.add_option("--config", config_path, "Analysis config (JSON)");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const AnalysisConfig&);
  };
  const Command commands[] = {
      {"validate", "Validate corpus, runs, saccade bundles and the metrics sidecar", cmd_validate},
      {"divergence", "Attention divergence between model pairs and instruction sensitivity", cmd_divergence},
      {"resemblance", "Human resemblance per layer and inter-subject ceiling", cmd_resemblance},
      {"trivial", "Reliance on trivial attention patterns", cmd_trivial},
      {"stats", "Correlations, scaling fit and significance tests", cmd_stats},
      {"report", "Merge existing reports into one summary table", cmd_report},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  std::string spec_path;
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic workspace from a JSON spec");
  synth->add_option("spec,--spec", spec_path, "Synthetic workspace spec (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsageError;
  }

  try {
    if (synth->parsed()) {
      if (out_dir.empty()) throw UsageError("synth needs --out");
      return cmd_synth(spec_path, out_dir);
    }
    if (config_path.empty()) throw UsageError("--config is required");
    AnalysisConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!format.empty()) cfg.format = parse_report_format(format);
    if (jobs > 0) cfg.jobs = jobs;
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) return c.fn(cfg);
    }
    throw UsageError("no subcommand");
  } catch (const UsageError& e) {
    std::cerr << "gaze-attn: usage error: " << e.what() << '\n';
    return kExitUsageError;
  } catch (const DataError& e) {
    std::cerr << "gaze-attn: data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "gaze-attn: error: " << e.what() << '\n';
    return kExitDataError;
  }
}

}  // namespace gaze_attn::app
