#pragma once

#include "bellsim/coincidence.hpp"
#include "bellsim/models.hpp"
#include "bellsim/reports.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bellsim {

inline constexpr const char* kVersion = "1.0.0";

struct ModelConfig {
  std::string type = "singlet";  // singlet | pr | box | lhv
  std::vector<double> angles_a;
  std::vector<double> angles_b;
  std::string box_file;                   // box: path to a probability-table file
  std::optional<Json> box_table;          // box: inline {"dims": ..., "rows": [[...]]}
  std::string response = "sign";          // lhv: sign | table
  std::string lambda = "circle";          // lhv sign: circle | sphere
  std::vector<double> lambda_weights;     // lhv table
  std::vector<std::vector<int>> table_a;  // lhv table: [setting][lambda]
  std::vector<std::vector<int>> table_b;
  int outcomes_a = 2;
  int outcomes_b = 2;
};

struct MatchingConfig {
  double tau = 0.0;
  MatchPolicy policy = MatchPolicy::GreedyNearest;
};

struct AnalysisConfig {
  double z_threshold = 5.0;
  double tolerance = 1e-9;
  bool project_singles = false;
};

// Every field resolved; to_json() emits all of them including defaults.
struct PipelineConfig {
  ModelConfig model;
  TrialSchedule schedule;
  DetectorModel detector_a;
  DetectorModel detector_b;
  MatchingConfig matching;
  AnalysisConfig analysis;
  std::string output_dir = "out";

  // Throws ConfigError on any missing, unknown or out-of-range field.
  static PipelineConfig from_json(const Json& j);
  static PipelineConfig load(const std::filesystem::path& path);
  Json to_json() const;
};

// Output files keyed by name; the pipeline writes each atomically.
using Artifacts = std::map<std::string, std::string>;

// Match (when needed), tabulate, no-signaling check, CHSH for 2x2 binary data,
// and joint feasibility. Pure function of its inputs.
Artifacts analyze_pairs(const PairSet& pairs, const AnalysisConfig& analysis);
Artifacts analyze_arms(const ArmRecord& arm_a, const ArmRecord& arm_b,
                       const MatchingConfig& matching, const AnalysisConfig& analysis);

// Simulation stage only: the two detected arm records.
std::pair<ArmRecord, ArmRecord> simulate(const PipelineConfig& config, unsigned threads = 1);

// Full pipeline. Returns every artifact except the manifest, which is added by
// write_artifacts callers via make_manifest.
Artifacts run_pipeline(const PipelineConfig& config, unsigned threads = 1);

// Flat key=value text in a stable order; `created_at` is the only
// run-dependent line.
std::string make_manifest(const std::string& command, const Json& resolved_config,
                          std::optional<std::uint64_t> seed);

// Writes each artifact through a temporary file and rename.
void write_artifacts(const std::filesystem::path& dir, const Artifacts& artifacts);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace bellsim
