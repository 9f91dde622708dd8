#pragma once

#include "bellsim/events.hpp"
#include "bellsim/statistics.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bellsim {

class NoSignalingBox;

// Upper bound on d_A^S_A * d_B^S_B for anything that enumerates assignments.
inline constexpr std::size_t kMaxAssignments = 10'000'000;
// Upper bound on dense simplex tableau entries.
inline constexpr std::size_t kMaxTableauEntries = 16'000'000;

// Observed pairwise marginals p(A_a, B_b) for every setting pair, flat in the
// Dims::index layout; each (a, b) block is a distribution.
struct MarginalProblem {
  Dims dims;
  std::vector<double> marginals;
  double tolerance = 1e-9;
  // Replace inconsistent single-variable marginals by their average over the
  // remote settings before solving.
  bool project_singles = false;

  // Throws InvalidArgument if a setting pair is missing or empty.
  static MarginalProblem from_conditionals(const std::vector<ConditionalTable>& tables,
                                           double tolerance = 1e-9,
                                           bool project_singles = false);
  static MarginalProblem from_box(const NoSignalingBox& box, double tolerance = 1e-9);
};

struct ConsistencyReport {
  double max_discrepancy = 0.0;
  bool pass = true;
  // Location of the worst discrepancy.
  char arm = 'A';
  int setting = 0;
  int outcome = 0;
};

// Deterministic strategy index: A outcomes in the low digits (radix d_A, one
// digit per A setting), then B outcomes (radix d_B).
class JointDistribution {
public:
  JointDistribution(Dims dims, std::vector<double> probs);

  static std::size_t assignment_count(const Dims& dims);  // throws ResourceError past the guard
  static int outcome_a(const Dims& dims, std::size_t assignment, int setting);
  static int outcome_b(const Dims& dims, std::size_t assignment, int setting);

  const Dims& dims() const noexcept { return dims_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  // Pairwise marginals in the Dims::index layout.
  std::vector<double> marginals() const;

private:
  Dims dims_;
  std::vector<double> probs_;
};

// Linear functional over marginal cells; value(q) = sum_c coefficient_c * q_c.
struct Witness {
  Dims dims;
  std::vector<double> coefficients;

  double evaluate(std::span<const double> marginals) const;
};

enum class FeasibilityStatus { Feasible, Infeasible, InconsistentMarginals };

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::InconsistentMarginals;
  ConsistencyReport consistency;           // of the raw input
  std::vector<double> marginals;           // what the solver saw (after projection)
  bool projected = false;
  double projection_noise = 0.0;           // uniform admixture used to keep cells >= 0
  std::optional<JointDistribution> certificate;
  std::optional<Witness> witness;
  double witness_value = 0.0;
  double classical_bound = 0.0;
  // Largest v with v * marginals + (1 - v) * uniform noise admitting a joint.
  double local_visibility = 1.0;
};

ConsistencyReport check_marginal_consistency(const MarginalProblem& problem);

// Exact maximum of the witness over all deterministic assignments.
double enumerate_deterministic_bound(const Witness& witness);

// Phase-one simplex over the joint distribution entries. Feasible verdicts carry
// a certificate replaying every marginal cell within 10 * tolerance; infeasible
// verdicts carry a witness whose value beats its enumerated deterministic bound.
// Both are re-checked before returning; a failed check throws VerificationError.
FeasibilityResult solve_joint_feasibility(const MarginalProblem& problem);

enum class FineVerdict { JointExists, JointDoesNotExist, NotApplicable };

// Two binary settings per arm with unbiased singles: a joint exists iff all
// eight CHSH combinations are at most 2 in absolute value.
FineVerdict fine_check(const std::array<double, 4>& correlators, bool singles_unbiased,
                       double tolerance = 1e-9);
// Same check read off a 2x2x2x2 problem; NotApplicable when singles are biased.
FineVerdict fine_check(const MarginalProblem& problem);

std::string_view to_string(FeasibilityStatus status);
std::string_view to_string(FineVerdict verdict);

}  // namespace bellsim
