#include "bellsim/reports.hpp"

#include "bellsim/errors.hpp"

#include <ostream>

namespace bellsim {

Json to_json(const Dims& d) {
  return Json{{"num_settings_A", d.settings_a},
              {"num_settings_B", d.settings_b},
              {"num_outcomes_A", d.outcomes_a},
              {"num_outcomes_B", d.outcomes_b}};
}

Json to_json(const MatchDiagnostics& m) {
  return Json{{"tau", m.tau},
              {"policy", std::string(to_string(m.policy))},
              {"matched", m.matched},
              {"unmatched_A", m.unmatched_a},
              {"unmatched_B", m.unmatched_b},
              {"multi_candidate_events", m.multi_candidate_events}};
}

Json summary_report(const SummaryTable& table, const MatchDiagnostics* diagnostics) {
  const Dims& d = table.dims();
  Json j;
  j["dims"] = to_json(d);
  j["total"] = table.total();
  if (diagnostics) j["matching"] = to_json(*diagnostics);
  Json counts = Json::array();
  for (int a = 0; a < d.settings_a; ++a) {
    Json row_a = Json::array();
    for (int b = 0; b < d.settings_b; ++b) {
      Json block = Json::array();
      for (int A = 0; A < d.outcomes_a; ++A) {
        Json row = Json::array();
        for (int B = 0; B < d.outcomes_b; ++B) row.push_back(table.count(a, b, A, B));
        block.push_back(std::move(row));
      }
      row_a.push_back(std::move(block));
    }
    counts.push_back(std::move(row_a));
  }
  j["counts"] = std::move(counts);
  Json conds = Json::array();
  for (const auto& c : conditionals(table)) {
    Json probs = Json::array();
    for (int A = 0; A < c.outcomes_a; ++A) {
      Json row = Json::array();
      for (int B = 0; B < c.outcomes_b; ++B) row.push_back(c.p(A, B));
      probs.push_back(std::move(row));
    }
    conds.push_back(Json{{"a", c.setting_a},
                         {"b", c.setting_b},
                         {"n", c.n},
                         {"empty", c.empty()},
                         {"probs", std::move(probs)}});
  }
  j["conditionals"] = std::move(conds);
  return j;
}

Json to_json(const NoSignalingReport& r) {
  Json scores = Json::array();
  for (const auto& s : r.scores)
    scores.push_back(Json{{"arm", std::string(1, s.arm)},
                          {"setting", s.setting},
                          {"outcome", s.outcome},
                          {"foreign_settings", {s.foreign_first, s.foreign_second}},
                          {"z", s.z}});
  Json skipped = Json::array();
  for (auto [a, b] : r.skipped_pairs) skipped.push_back({a, b});
  return Json{{"threshold", r.threshold},
              {"max_abs_z", r.max_abs_z},
              {"pass", r.pass},
              {"skipped_setting_pairs", std::move(skipped)},
              {"scores", std::move(scores)}};
}

Json to_json(const ChshResult& r) {
  return Json{{"S", r.value},
              {"sigma", r.sigma},
              {"signs", r.signs},
              {"correlators", {{"E11", r.correlators[0]},
                               {"E12", r.correlators[1]},
                               {"E21", r.correlators[2]},
                               {"E22", r.correlators[3]}}},
              {"classical_bound", 2.0}};
}

Json to_json(const FeasibilityResult& r, double tolerance) {
  Json j;
  j["status"] = std::string(to_string(r.status));
  j["tolerance"] = tolerance;
  j["consistency"] = Json{{"max_discrepancy", r.consistency.max_discrepancy},
                          {"pass", r.consistency.pass},
                          {"arm", std::string(1, r.consistency.arm)},
                          {"setting", r.consistency.setting},
                          {"outcome", r.consistency.outcome}};
  j["projected_singles"] = r.projected;
  j["projection_noise"] = r.projection_noise;
  if (r.status == FeasibilityStatus::Feasible && r.certificate) {
    const auto& joint = *r.certificate;
    const Dims& d = joint.dims();
    Json entries = Json::array();
    for (std::size_t k = 0; k < joint.probs().size(); ++k) {
      if (joint.probs()[k] == 0.0) continue;
      Json outcomes_a = Json::array(), outcomes_b = Json::array();
      for (int a = 0; a < d.settings_a; ++a)
        outcomes_a.push_back(JointDistribution::outcome_a(d, k, a));
      for (int b = 0; b < d.settings_b; ++b)
        outcomes_b.push_back(JointDistribution::outcome_b(d, k, b));
      entries.push_back(Json{{"A", std::move(outcomes_a)},
                             {"B", std::move(outcomes_b)},
                             {"p", joint.probs()[k]}});
    }
    j["certificate"] = std::move(entries);
  }
  if (r.status == FeasibilityStatus::Infeasible && r.witness) {
    const Dims& d = r.witness->dims;
    Json rows = Json::array();
    for (int a = 0; a < d.settings_a; ++a)
      for (int b = 0; b < d.settings_b; ++b)
        for (int A = 0; A < d.outcomes_a; ++A)
          for (int B = 0; B < d.outcomes_b; ++B)
            rows.push_back(Json{{"a", a},
                                {"b", b},
                                {"A", A},
                                {"B", B},
                                {"coefficient", r.witness->coefficients[d.index(a, b, A, B)]}});
    j["witness"] = std::move(rows);
    j["witness_value"] = r.witness_value;
    j["classical_bound"] = r.classical_bound;
    j["local_visibility"] = r.local_visibility;
  }
  return j;
}

void write_counts_csv(const SummaryTable& table, std::ostream& out) {
  const Dims& d = table.dims();
  out << "a,b,A,B,count\n";
  for (int a = 0; a < d.settings_a; ++a)
    for (int b = 0; b < d.settings_b; ++b)
      for (int A = 0; A < d.outcomes_a; ++A)
        for (int B = 0; B < d.outcomes_b; ++B)
          out << a << ',' << b << ',' << A << ',' << B << ',' << table.count(a, b, A, B) << '\n';
}

MarginalProblem marginal_problem_from_report(const Json& summary, double tolerance,
                                             bool project_singles) {
  try {
    const auto& dims = summary.at("dims");
    int outcomes_a = dims.at("num_outcomes_A").get<int>();
    int outcomes_b = dims.at("num_outcomes_B").get<int>();
    std::vector<ConditionalTable> tables;
    for (const auto& c : summary.at("conditionals")) {
      ConditionalTable t;
      t.setting_a = c.at("a").get<int>();
      t.setting_b = c.at("b").get<int>();
      t.outcomes_a = outcomes_a;
      t.outcomes_b = outcomes_b;
      t.n = c.at("n").get<std::uint64_t>();
      const auto& probs = c.at("probs");
      if (probs.size() != static_cast<std::size_t>(outcomes_a))
        throw ParseError("conditional table has the wrong number of rows");
      for (const auto& row : probs) {
        if (row.size() != static_cast<std::size_t>(outcomes_b))
          throw ParseError("conditional table has the wrong number of columns");
        for (const auto& p : row) t.probs.push_back(p.get<double>());
      }
      tables.push_back(std::move(t));
    }
    return MarginalProblem::from_conditionals(tables, tolerance, project_singles);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed summary report: ") + e.what());
  }
}

}  // namespace bellsim
