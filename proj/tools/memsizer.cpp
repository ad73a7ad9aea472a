// memsizer: simulate, replay, analyze, and generate workflow memory-sizing
// experiments.
//
// Usage:
//   memsizer [--config FILE] [--seed N] [--out DIR] simulate [--trace FILE] [--sizer S]
//            [--scheduler S] [--repetitions N] [--set section.key=value ...]
//   memsizer replay TRACE [--sizer S] [--output FILE]
//   memsizer analyze TRACE [TRACE2]
//   memsizer generate [--pattern P] [-n N] [--output FILE]
//
// Exit status: 0 success, 1 runtime/IO error, 2 usage or configuration error,
// 3 a simulated run aborted (reports are still written).

#include <cstdlib>
#include <iostream>
#include <optional>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "memsizer/cli.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAborted = 3;

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("MEMSIZER_LOG")) {
    const std::string level(env);
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "warn") spdlog::set_level(spdlog::level::warn);
    else if (level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring unknown MEMSIZER_LOG level '{}'", level);
  }
}

void emit(const std::optional<std::string>& path, const std::string& contents) {
  if (path) {
    memsizer::cli::write_file(*path, contents);
  } else {
    std::cout << contents;
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  namespace ms = memsizer;

  CLI::App app{"Workflow task memory sizing experiments"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "INI-style experiment config");
  app.add_option("--seed", seed, "Base seed (runs and synthetic workloads)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--set", overrides, "Override a setting: section.key=value (repeatable)");
  app.fallthrough();

  auto* simulate = app.add_subcommand("simulate", "Run the cluster simulation");
  std::optional<std::string> sim_trace, sim_sizer, sim_scheduler;
  std::optional<std::size_t> repetitions;
  simulate->add_option("--trace", sim_trace, "Trace CSV (default: synthetic workload)");
  simulate->add_option("--sizer", sim_sizer, "user | witt-lr | percentile | ponder | oracle");
  simulate->add_option("--scheduler", sim_scheduler,
                       "original | rank | lff-min | lff-max | gs-min | gs-max");
  simulate->add_option("--repetitions", repetitions, "Number of seeded repetitions");

  auto* replay = app.add_subcommand("replay", "Replay an online sizer over a trace");
  std::string replay_trace;
  std::optional<std::string> replay_sizer, replay_output;
  replay->add_option("trace", replay_trace, "Trace CSV")->required();
  replay->add_option("--sizer", replay_sizer, "Sizer name");
  replay->add_option("--output", replay_output, "Write CSV here instead of stdout");

  auto* analyze = app.add_subcommand("analyze", "Memory pattern analysis of traces");
  std::string analyze_trace;
  std::optional<std::string> analyze_second;
  analyze->add_option("trace", analyze_trace, "Trace CSV")->required();
  analyze->add_option("trace2", analyze_second, "Second run of the same workflow");

  auto* generate = app.add_subcommand("generate", "Write a synthetic trace");
  std::optional<std::string> pattern, gen_output;
  std::optional<std::size_t> count;
  generate->add_option("--pattern", pattern, "linear | noisy-weak | bimodal | uncorrelated");
  generate->add_option("-n", count, "Number of task instances");
  generate->add_option("--output", gen_output, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  ms::cli::ExperimentConfig cfg;
  try {
    ms::cli::Settings settings;
    if (config_path) settings = ms::cli::parse_settings(ms::cli::read_file(*config_path));
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ms::ConfigError("--set expects section.key=value");
      settings[o.substr(0, eq)] = o.substr(eq + 1);
    }
    if (seed) {
      settings["experiment.seed"] = std::to_string(*seed);
      settings["synthetic.seed"] = std::to_string(*seed);
    }
    if (out_dir) settings["experiment.out"] = *out_dir;
    if (sim_trace) settings["workload.trace"] = *sim_trace;
    if (sim_sizer) settings["sizing.sizer"] = *sim_sizer;
    if (replay_sizer) settings["sizing.sizer"] = *replay_sizer;
    if (sim_scheduler) settings["scheduler.strategy"] = *sim_scheduler;
    if (repetitions) settings["experiment.repetitions"] = std::to_string(*repetitions);
    if (pattern) settings["synthetic.pattern"] = *pattern;
    if (count) settings["synthetic.n"] = std::to_string(*count);
    cfg = ms::cli::build_config(settings);
  } catch (const ms::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (*simulate) {
      const ms::WorkflowDag dag = ms::cli::load_workload(cfg);
      spdlog::info("simulating {} tasks, sizer {}, scheduler {}, {} repetition(s)", dag.size(),
                   ms::to_string(cfg.sizer), ms::to_string(cfg.scheduler), cfg.repetitions);
      const auto outcome = ms::cli::cmd_simulate(cfg, dag);
      for (std::size_t r = 0; r < outcome.reports.size(); ++r) {
        const auto& s = outcome.summaries[r];
        spdlog::info("run {}: makespan {} ms, MAQ {:.4f}, {} failed attempts", r,
                     s.makespan.count(), s.maq, s.failed_attempts);
        if (outcome.reports[r].aborted) spdlog::warn("run {} aborted: retry ladder exhausted", r);
      }
      const auto& med = outcome.summaries[outcome.median_index];
      std::cout << "median run " << outcome.median_index << ": makespan_ms=" << med.makespan.count()
                << " maq=" << med.maq << " failed_attempts=" << med.failed_attempts << "\n";
      return outcome.any_aborted ? kExitAborted : 0;
    }
    if (*replay) {
      const auto trace = ms::traceio::parse_trace(ms::cli::read_file(replay_trace));
      emit(replay_output, ms::cli::cmd_replay(trace, cfg.sizer, cfg.sim.sizing));
      return 0;
    }
    if (*analyze) {
      const auto trace = ms::traceio::parse_trace(ms::cli::read_file(analyze_trace));
      std::optional<ms::WorkflowDag> second;
      if (analyze_second) second = ms::traceio::parse_trace(ms::cli::read_file(*analyze_second));
      const auto files = ms::cli::cmd_analyze(trace, second ? &*second : nullptr);
      for (const auto& [name, contents] : files) {
        ms::cli::write_file(cfg.out_dir / name, contents);
        spdlog::info("wrote {}", (cfg.out_dir / name).string());
      }
      return 0;
    }
    if (*generate) {
      emit(gen_output, ms::cli::cmd_generate(cfg.synthetic));
      return 0;
    }
  } catch (const ms::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ms::traceio::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
