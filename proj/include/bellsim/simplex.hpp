#pragma once

#include <cstddef>
#include <vector>

namespace bellsim {

// minimize c.x  subject to  A x = b,  x >= 0.  A is row-major rows x cols.
struct LinearProgram {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;  // empty means the zero objective (pure feasibility)

  double& at(std::size_t r, std::size_t col) { return a[r * cols + col]; }
  double at(std::size_t r, std::size_t col) const { return a[r * cols + col]; }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  // Optimal: A^T y <= c and b.y == objective (up to round-off).
  std::vector<double> dual;
  // Infeasible: A^T y <= 0 and b.y > 0, a Farkas certificate.
  std::vector<double> farkas;
  // Sum of artificial variables at the end of phase one.
  double infeasibility = 0.0;
  std::size_t pivots = 0;
};

// Dense two-phase tableau simplex with Bland's rule. Phase one starts from an
// all-artificial basis; redundant equality rows keep a zero-level artificial
// in the basis instead of being removed. Declares infeasibility when the
// phase-one optimum exceeds `tolerance`. Throws VerificationError if the pivot
// budget runs out.
LpSolution solve_lp(const LinearProgram& lp, double tolerance = 1e-9);

}  // namespace bellsim
