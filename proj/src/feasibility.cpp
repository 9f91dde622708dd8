#include "bellsim/feasibility.hpp"

#include "bellsim/errors.hpp"
#include "bellsim/models.hpp"
#include "bellsim/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bellsim {

namespace {

std::size_t checked_power(std::size_t base, int exponent, std::size_t limit) {
  std::size_t r = 1;
  for (int i = 0; i < exponent; ++i) {
    if (r > limit / base) return limit + 1;
    r *= base;
  }
  return r;
}

std::size_t strategies_a(const Dims& d) {
  return checked_power(static_cast<std::size_t>(d.outcomes_a), d.settings_a, kMaxAssignments);
}

std::size_t block_size(const Dims& d) {
  return static_cast<std::size_t>(d.outcomes_a) * d.outcomes_b;
}

void validate_problem(const MarginalProblem& p) {
  const Dims& d = p.dims;
  if (d.settings_a < 1 || d.settings_b < 1 || d.outcomes_a < 2 || d.outcomes_b < 2)
    throw InvalidArgument("marginal problem has invalid dimensions");
  if (p.marginals.size() != d.cells())
    throw InvalidArgument("marginal problem needs one table per setting pair (" +
                          std::to_string(d.cells()) + " cells), got " +
                          std::to_string(p.marginals.size()));
  if (!(p.tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  const std::size_t w = block_size(d);
  for (std::size_t blk = 0; blk < d.cells() / w; ++blk) {
    double sum = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
      double q = p.marginals[blk * w + k];
      if (!(q >= 0.0) || !std::isfinite(q))
        throw InvalidArgument("marginal cell negative or non-finite");
      sum += q;
    }
    if (std::abs(sum - 1.0) > p.tolerance)
      throw InvalidArgument("marginal table for setting pair (" +
                            std::to_string(blk / static_cast<std::size_t>(d.settings_b)) + "," +
                            std::to_string(blk % static_cast<std::size_t>(d.settings_b)) +
                            ") does not sum to 1");
  }
}

// singles_a[a][A] for each b, and singles_b[b][B] for each a.
double row_marginal(const Dims& d, std::span<const double> m, int a, int b, int A) {
  double s = 0.0;
  for (int B = 0; B < d.outcomes_b; ++B) s += m[d.index(a, b, A, B)];
  return s;
}

double col_marginal(const Dims& d, std::span<const double> m, int a, int b, int B) {
  double s = 0.0;
  for (int A = 0; A < d.outcomes_a; ++A) s += m[d.index(a, b, A, B)];
  return s;
}

// Shifts every table onto the averaged singles, then mixes in the least
// uniform noise that restores nonnegativity. Returns the noise weight.
double project_onto_averaged_singles(const Dims& d, std::vector<double>& m) {
  std::vector<double> avg_a(static_cast<std::size_t>(d.settings_a) * d.outcomes_a, 0.0);
  std::vector<double> avg_b(static_cast<std::size_t>(d.settings_b) * d.outcomes_b, 0.0);
  for (int a = 0; a < d.settings_a; ++a)
    for (int A = 0; A < d.outcomes_a; ++A) {
      double s = 0.0;
      for (int b = 0; b < d.settings_b; ++b) s += row_marginal(d, m, a, b, A);
      avg_a[static_cast<std::size_t>(a) * d.outcomes_a + A] = s / d.settings_b;
    }
  for (int b = 0; b < d.settings_b; ++b)
    for (int B = 0; B < d.outcomes_b; ++B) {
      double s = 0.0;
      for (int a = 0; a < d.settings_a; ++a) s += col_marginal(d, m, a, b, B);
      avg_b[static_cast<std::size_t>(b) * d.outcomes_b + B] = s / d.settings_a;
    }
  std::vector<double> out(m.size());
  for (int a = 0; a < d.settings_a; ++a)
    for (int b = 0; b < d.settings_b; ++b) {
      std::vector<double> rows(static_cast<std::size_t>(d.outcomes_a));
      std::vector<double> cols(static_cast<std::size_t>(d.outcomes_b));
      for (int A = 0; A < d.outcomes_a; ++A) rows[A] = row_marginal(d, m, a, b, A);
      for (int B = 0; B < d.outcomes_b; ++B) cols[B] = col_marginal(d, m, a, b, B);
      for (int A = 0; A < d.outcomes_a; ++A)
        for (int B = 0; B < d.outcomes_b; ++B)
          out[d.index(a, b, A, B)] =
              m[d.index(a, b, A, B)] +
              (avg_a[static_cast<std::size_t>(a) * d.outcomes_a + A] - rows[A]) / d.outcomes_b +
              (avg_b[static_cast<std::size_t>(b) * d.outcomes_b + B] - cols[B]) / d.outcomes_a;
    }
  const double uniform = 1.0 / static_cast<double>(block_size(d));
  double noise = 0.0;
  for (double q : out)
    if (q < 0.0) noise = std::max(noise, -q / (uniform - q));
  for (double& q : out) q = std::max(0.0, (1.0 - noise) * q + noise * uniform);
  m = std::move(out);
  return noise;
}

// Row per marginal cell plus a normalization row; column per assignment.
LinearProgram joint_constraints(const Dims& d, std::span<const double> marginals,
                                std::size_t assignments) {
  LinearProgram lp;
  lp.rows = d.cells() + 1;
  lp.cols = assignments;
  lp.a.assign(lp.rows * lp.cols, 0.0);
  lp.b.assign(marginals.begin(), marginals.end());
  lp.b.push_back(1.0);
  for (std::size_t j = 0; j < assignments; ++j) {
    for (int a = 0; a < d.settings_a; ++a) {
      int A = JointDistribution::outcome_a(d, j, a);
      for (int b = 0; b < d.settings_b; ++b)
        lp.at(d.index(a, b, A, JointDistribution::outcome_b(d, j, b)), j) = 1.0;
    }
    lp.at(d.cells(), j) = 1.0;
  }
  return lp;
}

// Maximizes v such that v * p + (1 - v) * u is local, with u uniform noise.
// The optimal dual restricted to the cell rows is the most noise-robust witness.
std::optional<std::pair<Witness, double>> robust_witness(const Dims& d,
                                                         std::span<const double> marginals,
                                                         std::size_t assignments,
                                                         double tolerance) {
  const double uniform = 1.0 / static_cast<double>(block_size(d));
  LinearProgram base = joint_constraints(d, marginals, assignments);
  LinearProgram lp;
  lp.rows = base.rows + 1;
  lp.cols = assignments + 2;  // x..., v, slack for v <= 1
  lp.a.assign(lp.rows * lp.cols, 0.0);
  lp.b.assign(lp.rows, 0.0);
  lp.c.assign(lp.cols, 0.0);
  for (std::size_t r = 0; r < base.rows; ++r)
    for (std::size_t j = 0; j < assignments; ++j) lp.at(r, j) = base.at(r, j);
  const std::size_t v = assignments, s = assignments + 1;
  for (std::size_t cell = 0; cell < d.cells(); ++cell) {
    lp.at(cell, v) = -(marginals[cell] - uniform);
    lp.b[cell] = uniform;
  }
  lp.b[d.cells()] = 1.0;
  lp.at(base.rows, v) = 1.0;
  lp.at(base.rows, s) = 1.0;
  lp.b[base.rows] = 1.0;
  lp.c[v] = -1.0;

  LpSolution sol = solve_lp(lp, tolerance);
  if (sol.status != LpStatus::Optimal) return std::nullopt;
  Witness w{d, std::vector<double>(sol.dual.begin(), sol.dual.begin() + static_cast<std::ptrdiff_t>(d.cells()))};
  return std::make_pair(std::move(w), sol.x[v]);
}

// Orthogonal projection onto the span of the deterministic marginal vectors.
// Leaves the value on every no-signaling table unchanged and drops the
// components that only see signaling directions.
void project_onto_local_span(Witness& w, std::size_t assignments) {
  const Dims& d = w.dims;
  const std::size_t cells = d.cells();
  std::vector<std::vector<double>> basis;
  std::vector<double> v(cells);
  for (std::size_t j = 0; j < assignments && basis.size() < cells; ++j) {
    std::fill(v.begin(), v.end(), 0.0);
    for (int a = 0; a < d.settings_a; ++a)
      for (int b = 0; b < d.settings_b; ++b)
        v[d.index(a, b, JointDistribution::outcome_a(d, j, a),
                  JointDistribution::outcome_b(d, j, b))] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        double dot = 0.0;
        for (std::size_t i = 0; i < cells; ++i) dot += q[i] * v[i];
        for (std::size_t i = 0; i < cells; ++i) v[i] -= dot * q[i];
      }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-9) continue;
    for (double& x : v) x /= norm;
    basis.push_back(v);
  }
  std::vector<double> projected(cells, 0.0);
  for (const auto& q : basis) {
    double dot = 0.0;
    for (std::size_t i = 0; i < cells; ++i) dot += q[i] * w.coefficients[i];
    for (std::size_t i = 0; i < cells; ++i) projected[i] += dot * q[i];
  }
  for (double& x : projected)
    if (std::abs(x) < 1e-12) x = 0.0;
  w.coefficients = std::move(projected);
}

// Per-block centering makes the value on uniform noise zero; binary scenarios
// are then scaled to a deterministic bound of 2, others to unit max |coefficient|.
void normalize_witness(Witness& w, std::size_t assignments) {
  const Dims& d = w.dims;
  const std::size_t width = block_size(d);
  for (std::size_t blk = 0; blk < d.cells() / width; ++blk) {
    double mean = 0.0;
    for (std::size_t k = 0; k < width; ++k) mean += w.coefficients[blk * width + k];
    mean /= static_cast<double>(width);
    for (std::size_t k = 0; k < width; ++k) w.coefficients[blk * width + k] -= mean;
  }
  project_onto_local_span(w, assignments);
  double scale = 0.0;
  if (d.outcomes_a == 2 && d.outcomes_b == 2) {
    double bound = enumerate_deterministic_bound(w);
    if (bound > 1e-12) scale = 2.0 / bound;
  }
  if (scale == 0.0) {
    double largest = 0.0;
    for (double c : w.coefficients) largest = std::max(largest, std::abs(c));
    if (largest > 0.0) scale = 1.0 / largest;
  }
  if (scale > 0.0)
    for (double& c : w.coefficients) c *= scale;
}

}  // namespace

// ---------------------------------------------------------------------------

MarginalProblem MarginalProblem::from_conditionals(const std::vector<ConditionalTable>& tables,
                                                   double tolerance, bool project_singles) {
  if (tables.empty()) throw InvalidArgument("no conditional tables");
  Dims d{0, 0, tables.front().outcomes_a, tables.front().outcomes_b};
  for (const auto& t : tables) {
    d.settings_a = std::max(d.settings_a, t.setting_a + 1);
    d.settings_b = std::max(d.settings_b, t.setting_b + 1);
  }
  MarginalProblem p;
  p.dims = d;
  p.tolerance = tolerance;
  p.project_singles = project_singles;
  p.marginals.assign(d.cells(), 0.0);
  std::vector<char> seen(static_cast<std::size_t>(d.settings_a) * d.settings_b, 0);
  for (const auto& t : tables) {
    if (t.outcomes_a != d.outcomes_a || t.outcomes_b != d.outcomes_b)
      throw InvalidArgument("conditional tables disagree on outcome counts");
    if (t.empty())
      throw InvalidArgument("setting pair (" + std::to_string(t.setting_a) + "," +
                            std::to_string(t.setting_b) + ") has no data");
    seen[static_cast<std::size_t>(t.setting_a) * d.settings_b + t.setting_b] = 1;
    for (int A = 0; A < d.outcomes_a; ++A)
      for (int B = 0; B < d.outcomes_b; ++B)
        p.marginals[d.index(t.setting_a, t.setting_b, A, B)] = t.p(A, B);
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!seen[k])
      throw InvalidArgument("setting pair (" + std::to_string(k / d.settings_b) + "," +
                            std::to_string(k % d.settings_b) + ") missing");
  return p;
}

MarginalProblem MarginalProblem::from_box(const NoSignalingBox& box, double tolerance) {
  MarginalProblem p;
  p.dims = box.dims();
  p.marginals = box.table();
  p.tolerance = tolerance;
  return p;
}

JointDistribution::JointDistribution(Dims dims, std::vector<double> probs)
    : dims_(dims), probs_(std::move(probs)) {
  if (probs_.size() != assignment_count(dims_))
    throw InvalidArgument("joint distribution has the wrong number of entries");
}

std::size_t JointDistribution::assignment_count(const Dims& d) {
  std::size_t na = strategies_a(d);
  std::size_t nb = checked_power(static_cast<std::size_t>(d.outcomes_b), d.settings_b,
                                 kMaxAssignments);
  if (na > kMaxAssignments || nb > kMaxAssignments || na * nb > kMaxAssignments)
    throw ResourceError("more than " + std::to_string(kMaxAssignments) +
                        " deterministic assignments");
  return na * nb;
}

int JointDistribution::outcome_a(const Dims& d, std::size_t assignment, int setting) {
  for (int k = 0; k < setting; ++k) assignment /= static_cast<std::size_t>(d.outcomes_a);
  return static_cast<int>(assignment % static_cast<std::size_t>(d.outcomes_a));
}

int JointDistribution::outcome_b(const Dims& d, std::size_t assignment, int setting) {
  assignment /= strategies_a(d);
  for (int k = 0; k < setting; ++k) assignment /= static_cast<std::size_t>(d.outcomes_b);
  return static_cast<int>(assignment % static_cast<std::size_t>(d.outcomes_b));
}

std::vector<double> JointDistribution::marginals() const {
  std::vector<double> m(dims_.cells(), 0.0);
  for (std::size_t j = 0; j < probs_.size(); ++j) {
    if (probs_[j] == 0.0) continue;
    for (int a = 0; a < dims_.settings_a; ++a)
      for (int b = 0; b < dims_.settings_b; ++b)
        m[dims_.index(a, b, outcome_a(dims_, j, a), outcome_b(dims_, j, b))] += probs_[j];
  }
  return m;
}

double Witness::evaluate(std::span<const double> marginals) const {
  if (marginals.size() != coefficients.size())
    throw InvalidArgument("witness and marginals differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < marginals.size(); ++i) s += coefficients[i] * marginals[i];
  return s;
}

ConsistencyReport check_marginal_consistency(const MarginalProblem& problem) {
  validate_problem(problem);
  const Dims& d = problem.dims;
  const auto& m = problem.marginals;
  ConsistencyReport r;
  auto note = [&](double spread, char arm, int setting, int outcome) {
    if (spread > r.max_discrepancy) r = {spread, true, arm, setting, outcome};
  };
  for (int a = 0; a < d.settings_a; ++a)
    for (int A = 0; A < d.outcomes_a; ++A) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int b = 0; b < d.settings_b; ++b) {
        double x = row_marginal(d, m, a, b, A);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      note(hi - lo, 'A', a, A);
    }
  for (int b = 0; b < d.settings_b; ++b)
    for (int B = 0; B < d.outcomes_b; ++B) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int a = 0; a < d.settings_a; ++a) {
        double x = col_marginal(d, m, a, b, B);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      note(hi - lo, 'B', b, B);
    }
  r.pass = r.max_discrepancy <= problem.tolerance;
  return r;
}

double enumerate_deterministic_bound(const Witness& witness) {
  const Dims& d = witness.dims;
  if (witness.coefficients.size() != d.cells())
    throw InvalidArgument("witness has the wrong number of coefficients");
  const std::size_t na = strategies_a(d);
  JointDistribution::assignment_count(d);  // size guard

  // With A's strategy fixed, each B setting independently takes its best outcome.
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> outcomes(static_cast<std::size_t>(d.settings_a));
  for (std::size_t s = 0; s < na; ++s) {
    for (int a = 0; a < d.settings_a; ++a) outcomes[a] = JointDistribution::outcome_a(d, s, a);
    double total = 0.0;
    for (int b = 0; b < d.settings_b; ++b) {
      double best_b = -std::numeric_limits<double>::infinity();
      for (int B = 0; B < d.outcomes_b; ++B) {
        double v = 0.0;
        for (int a = 0; a < d.settings_a; ++a)
          v += witness.coefficients[d.index(a, b, outcomes[a], B)];
        best_b = std::max(best_b, v);
      }
      total += best_b;
    }
    best = std::max(best, total);
  }
  return best;
}

FeasibilityResult solve_joint_feasibility(const MarginalProblem& problem) {
  FeasibilityResult result;
  result.consistency = check_marginal_consistency(problem);
  const Dims& d = problem.dims;
  const double tol = problem.tolerance;
  result.marginals = problem.marginals;
  if (!result.consistency.pass) {
    if (!problem.project_singles) {
      result.status = FeasibilityStatus::InconsistentMarginals;
      return result;
    }
    result.projection_noise = project_onto_averaged_singles(d, result.marginals);
    result.projected = true;
  }

  const std::size_t assignments = JointDistribution::assignment_count(d);
  if ((d.cells() + 2) * (assignments + d.cells() + 4) > kMaxTableauEntries)
    throw ResourceError("marginal problem too large for the dense simplex");

  LpSolution sol = solve_lp(joint_constraints(d, result.marginals, assignments), tol);

  if (sol.status != LpStatus::Infeasible) {
    std::vector<double> x = sol.x;
    double total = 0.0;
    for (double& p : x) {
      if (p < 0.0) {
        if (p < -10.0 * tol) throw VerificationError("certificate has a negative entry");
        p = 0.0;
      }
      total += p;
    }
    JointDistribution joint(d, std::move(x));
    auto replay = joint.marginals();
    for (std::size_t c = 0; c < replay.size(); ++c)
      if (std::abs(replay[c] - result.marginals[c]) > 10.0 * tol)
        throw VerificationError("certificate fails to reproduce marginal cell " +
                                std::to_string(c));
    if (std::abs(total - 1.0) > 10.0 * tol)
      throw VerificationError("certificate is not normalized");
    result.status = FeasibilityStatus::Feasible;
    result.certificate = std::move(joint);
    result.local_visibility = 1.0;
    return result;
  }

  // Infeasible. Prefer the noise-robust witness; fall back to the raw Farkas ray.
  std::vector<Witness> candidates;
  double visibility = 0.0;
  if (auto robust = robust_witness(d, result.marginals, assignments, tol)) {
    candidates.push_back(std::move(robust->first));
    visibility = robust->second;
  }
  candidates.push_back(Witness{d, std::vector<double>(sol.farkas.begin(),
                                                      sol.farkas.begin() + static_cast<std::ptrdiff_t>(d.cells()))});
  for (auto& w : candidates) {
    normalize_witness(w, assignments);
    double bound = enumerate_deterministic_bound(w);
    double value = w.evaluate(result.marginals);
    if (value - bound > tol) {
      result.status = FeasibilityStatus::Infeasible;
      result.witness = std::move(w);
      result.witness_value = value;
      result.classical_bound = bound;
      result.local_visibility = visibility;
      return result;
    }
  }
  throw VerificationError("infeasibility could not be certified by a violated witness");
}

FineVerdict fine_check(const std::array<double, 4>& correlators, bool singles_unbiased,
                       double tolerance) {
  if (!singles_unbiased) return FineVerdict::NotApplicable;
  return chsh(correlators).value <= 2.0 + tolerance ? FineVerdict::JointExists
                                                     : FineVerdict::JointDoesNotExist;
}

FineVerdict fine_check(const MarginalProblem& problem) {
  const Dims& d = problem.dims;
  if (!(d == Dims{2, 2, 2, 2})) return FineVerdict::NotApplicable;
  validate_problem(problem);
  const auto& m = problem.marginals;
  bool unbiased = true;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      if (std::abs(row_marginal(d, m, a, b, 0) - 0.5) > problem.tolerance) unbiased = false;
      if (std::abs(col_marginal(d, m, a, b, 0) - 0.5) > problem.tolerance) unbiased = false;
    }
  std::array<double, 4> e{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      e[a * 2 + b] = m[d.index(a, b, 0, 0)] - m[d.index(a, b, 0, 1)] -
                     m[d.index(a, b, 1, 0)] + m[d.index(a, b, 1, 1)];
  return fine_check(e, unbiased, problem.tolerance);
}

std::string_view to_string(FeasibilityStatus status) {
  switch (status) {
    case FeasibilityStatus::Feasible: return "feasible";
    case FeasibilityStatus::Infeasible: return "infeasible";
    case FeasibilityStatus::InconsistentMarginals: return "inconsistent_marginals";
  }
  return "unknown";
}

std::string_view to_string(FineVerdict verdict) {
  switch (verdict) {
    case FineVerdict::JointExists: return "joint-exists";
    case FineVerdict::JointDoesNotExist: return "joint-does-not-exist";
    case FineVerdict::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

}  // namespace bellsim
