#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bellsim/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace bellsim;

namespace {

LinearProgram make(std::size_t rows, std::size_t cols, std::vector<double> a, std::vector<double> b,
                   std::vector<double> c = {}) {
  return {rows, cols, std::move(a), std::move(b), std::move(c)};
}

double max_residual(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t r = 0; r < lp.rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < lp.cols; ++c) s += lp.at(r, c) * x[c];
    worst = std::max(worst, std::abs(s - lp.b[r]));
  }
  return worst;
}

}  // namespace

TEST_CASE("small optimum with duality") {
  // min -x - y  s.t. x + s1 = 2, y + s2 = 3, x + y + s3 = 4
  auto lp = make(3, 5, {1, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 1, 0, 0, 1}, {2, 3, 4},
                 {-1, -1, 0, 0, 0});
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-4.0));
  CHECK(max_residual(lp, sol.x) < 1e-12);
  double by = 0.0;
  for (std::size_t r = 0; r < 3; ++r) by += lp.b[r] * sol.dual[r];
  CHECK(by == doctest::Approx(sol.objective));
  for (std::size_t c = 0; c < 5; ++c) {
    double aty = 0.0;
    for (std::size_t r = 0; r < 3; ++r) aty += lp.at(r, c) * sol.dual[r];
    CHECK(aty <= lp.c[c] + 1e-9);
  }
}

TEST_CASE("infeasible system yields a Farkas certificate") {
  // x + y = 1, x + y = 2
  auto lp = make(2, 2, {1, 1, 1, 1}, {1, 2});
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Infeasible);
  CHECK(sol.infeasibility > 0.5);
  const auto& y = sol.farkas;
  CHECK(lp.b[0] * y[0] + lp.b[1] * y[1] > 1e-9);
  for (std::size_t c = 0; c < 2; ++c) CHECK(lp.at(0, c) * y[0] + lp.at(1, c) * y[1] <= 1e-9);
}

TEST_CASE("negative right-hand sides and redundant rows") {
  // -x = -1 twice, plus x + y = 3
  auto lp = make(3, 2, {-1, 0, -1, 0, 1, 1}, {-1, -1, 3}, {0, 1});
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.x[1] == doctest::Approx(2.0));
  CHECK(sol.objective == doctest::Approx(2.0));
}

TEST_CASE("unbounded objective") {
  // min -x  s.t. x - y = 0
  auto lp = make(1, 2, {1, -1}, {0}, {-1, 0});
  CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("degenerate cycling example terminates under Bland's rule") {
  // Beale's example in equality form with slacks.
  auto lp = make(3, 7,
                 {0.25, -60, -1.0 / 25, 9, 1, 0, 0,
                  0.5, -90, -1.0 / 50, 3, 0, 1, 0,
                  0, 0, 1, 0, 0, 0, 1},
                 {0, 0, 1}, {-0.75, 150, -1.0 / 50, 6, 0, 0, 0});
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-0.05));
}

TEST_CASE("random feasibility problems: verdicts match constructed truth") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t rows = 2 + gen() % 5, cols = 3 + gen() % 8;
    LinearProgram lp{rows, cols, std::vector<double>(rows * cols), std::vector<double>(rows), {}};
    for (auto& v : lp.a) v = u(gen) - 0.3;
    bool feasible = trial % 2 == 0;
    if (feasible) {
      std::vector<double> x(cols);
      for (auto& v : x) v = u(gen);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) lp.b[r] += lp.at(r, c) * x[c];
    } else {
      // Row 0 has strictly positive coefficients but a negative right-hand side.
      for (std::size_t c = 0; c < cols; ++c) lp.at(0, c) = 0.1 + u(gen);
      lp.b[0] = -1.0;
      for (std::size_t r = 1; r < rows; ++r) lp.b[r] = u(gen);
    }
    auto sol = solve_lp(lp);
    if (feasible) {
      REQUIRE(sol.status == LpStatus::Optimal);
      CHECK(max_residual(lp, sol.x) < 1e-8);
      for (double v : sol.x) CHECK(v >= -1e-12);
    } else {
      REQUIRE(sol.status == LpStatus::Infeasible);
      double by = 0.0;
      for (std::size_t r = 0; r < rows; ++r) by += lp.b[r] * sol.farkas[r];
      CHECK(by > 0.0);
      for (std::size_t c = 0; c < cols; ++c) {
        double aty = 0.0;
        for (std::size_t r = 0; r < rows; ++r) aty += lp.at(r, c) * sol.farkas[r];
        CHECK(aty <= 1e-9);
      }
    }
  }
}
