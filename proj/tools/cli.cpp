#include "cli.hpp"

#include "bellsim/errors.hpp"
#include "bellsim/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <thread>

namespace bellsim::cli {

namespace {

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "bellsim: " << kind << ": " << e.what() << '\n';
  return code;
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    return report("config error", e, kConfigError);
  } catch (const ResourceError& e) {
    return report("resource limit", e, kResourceError);
  } catch (const VerificationError& e) {
    return report("verification failure", e, kVerificationError);
  } catch (const ParseError& e) {
    return report("input error", e, kInputError);
  } catch (const InvalidArgument& e) {
    return report("invalid input", e, kConfigError);
  } catch (const std::exception& e) {
    return report("error", e, kInputError);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Bell-experiment event simulator and joint-feasibility analyzer", "bellsim"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "simulate, match, tabulate and analyze from a config file");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  run->add_option("config", config_path, "pipeline configuration (JSON)")->required();
  run->add_option("--seed", seed, "override schedule.seed");
  run->add_option("--threads", threads, "simulation worker threads (output is identical)")
      ->check(CLI::Range(1u, 1024u));

  auto* analyze = app.add_subcommand("analyze", "analyze a pair set or two arm event files");
  std::vector<std::string> inputs;
  std::optional<double> tau;
  std::string policy = "greedy-nearest";
  std::string out_dir = "out";
  AnalysisConfig analysis;
  analyze->add_option("inputs", inputs, "pairs.txt, or arm_A.events arm_B.events")
      ->required()
      ->expected(1, 2);
  analyze->add_option("--tau", tau, "coincidence window in seconds (arm inputs)");
  analyze->add_option("--policy", policy, "greedy-nearest | first-within-window | optimal");
  analyze->add_option("--out", out_dir, "output directory");
  analyze->add_option("--z-threshold", analysis.z_threshold, "no-signaling z threshold");
  analyze->add_option("--tolerance", analysis.tolerance, "feasibility tolerance");
  analyze->add_flag("--project-singles", analysis.project_singles,
                    "average inconsistent single-variable marginals before solving");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (run->parsed()) {
    return guarded([&] {
      PipelineConfig config = PipelineConfig::load(config_path);
      if (seed) config.schedule.seed = *seed;
      Artifacts artifacts = run_pipeline(config, threads);
      artifacts["manifest.txt"] = make_manifest("run", config.to_json(), config.schedule.seed);
      write_artifacts(config.output_dir, artifacts);
      std::cout << "wrote " << artifacts.size() << " files to " << config.output_dir << '\n';
      return static_cast<int>(kOk);
    });
  }

  return guarded([&] {
    if (!(analysis.z_threshold > 0.0)) throw ConfigError("--z-threshold must be positive");
    if (!(analysis.tolerance > 0.0)) throw ConfigError("--tolerance must be positive");
    MatchingConfig matching;
    Artifacts artifacts;
    Json resolved{{"inputs", inputs},
                  {"analysis", {{"z_threshold", analysis.z_threshold},
                                {"tolerance", analysis.tolerance},
                                {"project_singles", analysis.project_singles}}}};
    if (inputs.size() == 1) {
      PairSet pairs = read_pair_set_file(inputs[0]);
      artifacts = analyze_pairs(pairs, analysis);
    } else {
      if (!tau) throw ConfigError("--tau is required when matching arm files");
      if (!(*tau > 0.0)) throw ConfigError("--tau must be positive");
      try {
        matching.policy = parse_match_policy(policy);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      matching.tau = *tau;
      ArmRecord arm_a = read_arm_record_file(inputs[0]);
      ArmRecord arm_b = read_arm_record_file(inputs[1]);
      if (arm_a.num_outcomes() != arm_b.num_outcomes())
        throw ConfigError("dimension mismatch: " + inputs[0] + " declares num_outcomes=" +
                          std::to_string(arm_a.num_outcomes()) + " but " + inputs[1] +
                          " declares num_outcomes=" + std::to_string(arm_b.num_outcomes()));
      artifacts = analyze_arms(arm_a, arm_b, matching, analysis);
      resolved["matching"] = {{"tau", matching.tau},
                              {"policy", std::string(to_string(matching.policy))}};
    }
    artifacts["manifest.txt"] = make_manifest("analyze", resolved, std::nullopt);
    write_artifacts(out_dir, artifacts);
    std::cout << "wrote " << artifacts.size() << " files to " << out_dir << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace bellsim::cli
