#include "bellsim/pipeline.hpp"

#include "bellsim/errors.hpp"
#include "bellsim/statistics.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace bellsim {

namespace {

namespace fs = std::filesystem;

void require_keys(const Json& j, const std::string& section, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(section + ": unknown key '" + key + "'");
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type");
  }
}

template <typename T>
T get_required(const Json& j, const char* key, const std::string& section) {
  if (!j.contains(key)) throw ConfigError(section + "." + key + " is required");
  return get_or<T>(j, key, T{}, section);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

DetectorModel parse_detector(const Json& j, const std::string& section) {
  require_keys(j, section, {"efficiency", "jitter_sigma", "dark_rate", "time_offset"});
  DetectorModel d;
  d.efficiency = get_or(j, "efficiency", 1.0, section);
  d.jitter_sigma = get_or(j, "jitter_sigma", 0.0, section);
  d.dark_rate = get_or(j, "dark_rate", 0.0, section);
  d.time_offset = get_or(j, "time_offset", 0.0, section);
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(section + ": " + e.what());
  }
  return d;
}

Json detector_json(const DetectorModel& d) {
  return Json{{"efficiency", d.efficiency},
              {"jitter_sigma", d.jitter_sigma},
              {"dark_rate", d.dark_rate},
              {"time_offset", d.time_offset}};
}

NoSignalingBox box_from_inline(const Json& j) {
  try {
    require_keys(j, "model.table", {"dims", "rows"});
    const auto& dj = j.at("dims");
    Dims d{dj.at("num_settings_A").get<int>(), dj.at("num_settings_B").get<int>(),
           dj.at("num_outcomes_A").get<int>(), dj.at("num_outcomes_B").get<int>()};
    std::vector<double> table;
    for (const auto& row : j.at("rows"))
      for (const auto& p : row) table.push_back(p.get<double>());
    return NoSignalingBox(d, std::move(table));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("model.table: ") + e.what());
  }
}

struct BuiltModel {
  std::optional<NoSignalingBox> box;
  std::optional<LhvModel> lhv;
  int settings_a = 0;
  int settings_b = 0;
};

BuiltModel build_model(const ModelConfig& m) {
  BuiltModel out;
  try {
    if (m.type == "singlet") {
      out.box = singlet_box(m.angles_a, m.angles_b);
    } else if (m.type == "pr") {
      out.box = pr_box();
    } else if (m.type == "box") {
      if (m.box_table) out.box = box_from_inline(*m.box_table);
      else if (!m.box_file.empty()) out.box = read_box_file(m.box_file);
      else throw ConfigError("model: box needs 'file' or 'table'");
    } else if (m.type == "lhv") {
      if (m.response == "sign") {
        HiddenVariableLaw law;
        if (m.lambda == "circle") law = UniformCircle{};
        else if (m.lambda == "sphere") law = UniformSphere{};
        else throw ConfigError("model.lambda must be 'circle' or 'sphere'");
        out.lhv = sign_model(m.angles_a, m.angles_b, law);
      } else if (m.response == "table") {
        out.lhv = table_model(m.lambda_weights, m.table_a, m.table_b, m.outcomes_a, m.outcomes_b);
      } else {
        throw ConfigError("model.response must be 'sign' or 'table'");
      }
    } else {
      throw ConfigError("model.type must be one of singlet, pr, box, lhv");
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (out.box) {
    out.settings_a = out.box->dims().settings_a;
    out.settings_b = out.box->dims().settings_b;
  } else {
    out.settings_a = out.lhv->response_a.num_settings;
    out.settings_b = out.lhv->response_b.num_settings;
  }
  return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void flatten(const Json& j, const std::string& prefix, std::vector<std::string>& lines) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items())
      flatten(value, prefix.empty() ? key : prefix + "." + key, lines);
  } else {
    lines.push_back(prefix + "=" + (j.is_string() ? j.get<std::string>() : j.dump()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

PipelineConfig PipelineConfig::from_json(const Json& j) {
  require_keys(j, "config", {"model", "schedule", "detectors", "matching", "analysis", "output_dir"});
  PipelineConfig c;

  if (!j.contains("model")) throw ConfigError("config.model is required");
  const Json& mj = j.at("model");
  require_keys(mj, "model", {"type", "angles_A", "angles_B", "file", "table", "response", "lambda",
                             "weights", "table_A", "table_B", "num_outcomes_A", "num_outcomes_B"});
  auto& m = c.model;
  m.type = get_required<std::string>(mj, "type", "model");
  m.angles_a = get_or(mj, "angles_A", std::vector<double>{}, "model");
  m.angles_b = get_or(mj, "angles_B", std::vector<double>{}, "model");
  m.box_file = get_or(mj, "file", std::string{}, "model");
  if (mj.contains("table")) m.box_table = mj.at("table");
  m.response = get_or(mj, "response", std::string("sign"), "model");
  m.lambda = get_or(mj, "lambda", std::string("circle"), "model");
  m.lambda_weights = get_or(mj, "weights", std::vector<double>{}, "model");
  m.table_a = get_or(mj, "table_A", std::vector<std::vector<int>>{}, "model");
  m.table_b = get_or(mj, "table_B", std::vector<std::vector<int>>{}, "model");
  m.outcomes_a = get_or(mj, "num_outcomes_A", 2, "model");
  m.outcomes_b = get_or(mj, "num_outcomes_B", 2, "model");
  BuiltModel built = build_model(m);

  if (!j.contains("schedule")) throw ConfigError("config.schedule is required");
  const Json& sj = j.at("schedule");
  require_keys(sj, "schedule", {"num_trials", "trial_period", "setting_law_A", "setting_law_B", "seed"});
  auto& s = c.schedule;
  s.num_trials = get_required<std::uint64_t>(sj, "num_trials", "schedule");
  s.trial_period = get_or(sj, "trial_period", 1.0, "schedule");
  s.setting_law_a = get_or(sj, "setting_law_A",
                           std::vector<double>(static_cast<std::size_t>(built.settings_a),
                                               1.0 / built.settings_a),
                           "schedule");
  s.setting_law_b = get_or(sj, "setting_law_B",
                           std::vector<double>(static_cast<std::size_t>(built.settings_b),
                                               1.0 / built.settings_b),
                           "schedule");
  s.seed = get_or<std::uint64_t>(sj, "seed", 0, "schedule");
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  if (s.setting_law_a.size() != static_cast<std::size_t>(built.settings_a) ||
      s.setting_law_b.size() != static_cast<std::size_t>(built.settings_b))
    throw ConfigError("schedule: setting law lengths must match the model's setting counts");

  if (j.contains("detectors")) {
    const Json& dj = j.at("detectors");
    require_keys(dj, "detectors", {"A", "B"});
    if (dj.contains("A")) c.detector_a = parse_detector(dj.at("A"), "detectors.A");
    if (dj.contains("B")) c.detector_b = parse_detector(dj.at("B"), "detectors.B");
  }

  if (!j.contains("matching")) throw ConfigError("config.matching is required");
  const Json& xj = j.at("matching");
  require_keys(xj, "matching", {"tau", "policy"});
  c.matching.tau = get_required<double>(xj, "tau", "matching");
  if (!(c.matching.tau > 0.0) || !std::isfinite(c.matching.tau))
    throw ConfigError("matching.tau must be positive");
  try {
    c.matching.policy =
        parse_match_policy(get_or(xj, "policy", std::string("greedy-nearest"), "matching"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("matching: ") + e.what());
  }

  if (j.contains("analysis")) {
    const Json& aj = j.at("analysis");
    require_keys(aj, "analysis", {"z_threshold", "tolerance", "project_singles"});
    c.analysis.z_threshold = get_or(aj, "z_threshold", 5.0, "analysis");
    c.analysis.tolerance = get_or(aj, "tolerance", 1e-9, "analysis");
    c.analysis.project_singles = get_or(aj, "project_singles", false, "analysis");
  }
  if (!(c.analysis.z_threshold > 0.0)) throw ConfigError("analysis.z_threshold must be positive");
  if (!(c.analysis.tolerance > 0.0)) throw ConfigError("analysis.tolerance must be positive");

  c.output_dir = get_or(j, "output_dir", std::string("out"), "config");
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Json PipelineConfig::to_json() const {
  Json m{{"type", model.type}};
  if (model.type == "singlet" || (model.type == "lhv" && model.response == "sign")) {
    m["angles_A"] = model.angles_a;
    m["angles_B"] = model.angles_b;
  }
  if (model.type == "box") {
    if (model.box_table) m["table"] = *model.box_table;
    else m["file"] = model.box_file;
  }
  if (model.type == "lhv") {
    m["response"] = model.response;
    if (model.response == "sign") {
      m["lambda"] = model.lambda;
    } else {
      m["weights"] = model.lambda_weights;
      m["table_A"] = model.table_a;
      m["table_B"] = model.table_b;
      m["num_outcomes_A"] = model.outcomes_a;
      m["num_outcomes_B"] = model.outcomes_b;
    }
  }
  return Json{{"model", std::move(m)},
              {"schedule", {{"num_trials", schedule.num_trials},
                            {"trial_period", schedule.trial_period},
                            {"setting_law_A", schedule.setting_law_a},
                            {"setting_law_B", schedule.setting_law_b},
                            {"seed", schedule.seed}}},
              {"detectors", {{"A", detector_json(detector_a)}, {"B", detector_json(detector_b)}}},
              {"matching", {{"tau", matching.tau},
                            {"policy", std::string(to_string(matching.policy))}}},
              {"analysis", {{"z_threshold", analysis.z_threshold},
                            {"tolerance", analysis.tolerance},
                            {"project_singles", analysis.project_singles}}},
              {"output_dir", output_dir}};
}

// ---------------------------------------------------------------------------

Artifacts analyze_pairs(const PairSet& pairs, const AnalysisConfig& analysis) {
  Artifacts out;
  SummaryTable table = tabulate(pairs);
  out["summary.json"] = dump(summary_report(table, &pairs.diagnostics));
  std::ostringstream csv;
  write_counts_csv(table, csv);
  out["counts.csv"] = csv.str();
  out["no_signaling.json"] = dump(to_json(no_signaling_check(table, analysis.z_threshold)));

  auto conds = conditionals(table);
  if (table.dims() == Dims{2, 2, 2, 2}) {
    try {
      out["chsh.json"] = dump(to_json(chsh(conds)));
    } catch (const InvalidArgument& e) {
      out["chsh.json"] = dump(Json{{"available", false}, {"reason", e.what()}});
    }
  } else {
    out["chsh.json"] = dump(Json{{"available", false},
                                 {"reason", "CHSH needs two binary settings per arm"}});
  }

  Json feasibility;
  try {
    auto problem =
        MarginalProblem::from_conditionals(conds, analysis.tolerance, analysis.project_singles);
    feasibility = to_json(solve_joint_feasibility(problem), analysis.tolerance);
  } catch (const InvalidArgument& e) {
    feasibility = Json{{"status", "not_run"}, {"reason", e.what()}};
  }
  out["feasibility.json"] = dump(feasibility);
  return out;
}

Artifacts analyze_arms(const ArmRecord& arm_a, const ArmRecord& arm_b,
                       const MatchingConfig& matching, const AnalysisConfig& analysis) {
  PairSet pairs = match_events(arm_a, arm_b, matching.tau, matching.policy);
  Artifacts out = analyze_pairs(pairs, analysis);
  std::ostringstream ps;
  write_pair_set(pairs, ps);
  out["pairs.txt"] = ps.str();
  return out;
}

std::pair<ArmRecord, ArmRecord> simulate(const PipelineConfig& config, unsigned threads) {
  BuiltModel built = build_model(config.model);
  auto raw = built.box ? simulate_box(*built.box, config.schedule, threads)
                       : simulate_lhv(*built.lhv, config.schedule, threads);
  const std::uint64_t seed = config.schedule.seed;
  return {apply_detector(raw.first, config.detector_a, derive_seed(seed, 0),
                         config.schedule.setting_law_a),
          apply_detector(raw.second, config.detector_b, derive_seed(seed, 1),
                         config.schedule.setting_law_b)};
}

Artifacts run_pipeline(const PipelineConfig& config, unsigned threads) {
  auto [arm_a, arm_b] = simulate(config, threads);
  Artifacts out = analyze_arms(arm_a, arm_b, config.matching, config.analysis);
  std::ostringstream a, b;
  write_arm_record(arm_a, a);
  write_arm_record(arm_b, b);
  out["arm_A.events"] = a.str();
  out["arm_B.events"] = b.str();
  return out;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string make_manifest(const std::string& command, const Json& resolved_config,
                          std::optional<std::uint64_t> seed) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(resolved_config.dump());

  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");

  std::vector<std::string> lines{"tool=bellsim", std::string("version=") + kVersion,
                                 "command=" + command, "created_at=" + stamp.str(),
                                 "config_hash=fnv1a64:" + hash.str()};
  if (seed) lines.push_back("seed=" + std::to_string(*seed));
  flatten(resolved_config, "config", lines);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  return text;
}

void write_artifacts(const fs::path& dir, const Artifacts& artifacts) {
  fs::create_directories(dir);
  for (const auto& [name, content] : artifacts) {
    fs::path target = dir / name;
    fs::path temp = dir / ("." + name + ".tmp");
    {
      std::ofstream f(temp, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + temp.string());
      f.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!f) throw std::runtime_error("write failure on " + temp.string());
    }
    fs::rename(temp, target);
  }
}

}  // namespace bellsim
