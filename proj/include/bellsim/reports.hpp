#pragma once

#include "bellsim/events.hpp"
#include "bellsim/feasibility.hpp"
#include "bellsim/statistics.hpp"

#include <iosfwd>
#include <json.hpp>

namespace bellsim {

using Json = nlohmann::ordered_json;

Json to_json(const Dims& dims);
Json to_json(const MatchDiagnostics& diagnostics);
// Dimensions, counts, setting-pair totals and the conditional tables.
Json summary_report(const SummaryTable& table, const MatchDiagnostics* diagnostics = nullptr);
Json to_json(const NoSignalingReport& report);
Json to_json(const ChshResult& result);
// Witness rows are (a, b, A, B, coefficient); certificates list nonzero entries only.
Json to_json(const FeasibilityResult& result, double tolerance);

// Header `a,b,A,B,count`, one row per cell in Dims::index order.
void write_counts_csv(const SummaryTable& table, std::ostream& out);

// Rebuilds the marginal problem from the "conditionals" section of a summary report.
MarginalProblem marginal_problem_from_report(const Json& summary, double tolerance = 1e-9,
                                             bool project_singles = false);

}  // namespace bellsim
